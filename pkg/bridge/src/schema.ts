/**
 * Wire and file formats shared with the conversion/decoding toolkit:
 * scoring requests, logit records (JSON Lines), and SQuAD 2.0 files.
 */

import { z } from "zod";

export const scoringRequestSchema = z.object({
  qa_id: z.string(),
  sentence_id: z.string(),
  entity_type: z.string(),
  question: z.string(),
  context: z.string(),
});

export type ScoringRequest = z.infer<typeof scoringRequestSchema>;

export const positionSchema = z.object({
  index: z.number().int().nonnegative(),
  char_start: z.number().int().nonnegative().nullable(),
  char_end: z.number().int().nonnegative().nullable(),
  is_null: z.boolean(),
});

export type Position = z.infer<typeof positionSchema>;

export const logitRecordSchema = z.object({
  qa_id: z.string(),
  sentence_id: z.string(),
  entity_type: z.string(),
  question: z.string(),
  context: z.string(),
  positions: z.array(positionSchema),
  start_logits: z.array(z.number()),
  end_logits: z.array(z.number()),
});

export type LogitRecord = z.infer<typeof logitRecordSchema>;

/** Structural checks beyond the field types; throws on violation. */
export function validateRecord(record: LogitRecord): LogitRecord {
  const n = record.positions.length;
  if (record.start_logits.length !== n || record.end_logits.length !== n) {
    throw new Error(`record ${record.qa_id}: positions/logits lengths differ`);
  }
  const nulls = record.positions.filter((p) => p.is_null);
  if (nulls.length !== 1) {
    throw new Error(`record ${record.qa_id}: expected exactly one null slot, got ${nulls.length}`);
  }
  if (nulls[0].char_start !== null || nulls[0].char_end !== null) {
    throw new Error(`record ${record.qa_id}: null slot must carry null offsets`);
  }
  let lastStart = -1;
  record.positions.forEach((p, i) => {
    if (p.index !== i) {
      throw new Error(`record ${record.qa_id}: position index ${p.index} at slot ${i}`);
    }
    if (p.char_start === null || p.char_end === null) return;
    if (!(p.char_start < p.char_end && p.char_end <= record.context.length)) {
      throw new Error(`record ${record.qa_id}: position ${i} offsets out of range`);
    }
    if (p.char_start < lastStart) {
      throw new Error(`record ${record.qa_id}: char_start not non-decreasing`);
    }
    lastStart = p.char_start;
  });
  return record;
}

const squadAnswerSchema = z.object({
  text: z.string(),
  answer_start: z.number().int().nonnegative(),
});

const squadQaSchema = z.object({
  id: z.string(),
  question: z.string(),
  is_impossible: z.boolean(),
  answers: z.array(squadAnswerSchema),
});

const squadParagraphSchema = z.object({
  context: z.string(),
  qas: z.array(squadQaSchema),
});

export const squadFileSchema = z.object({
  version: z.string(),
  data: z.array(
    z.object({
      title: z.string(),
      paragraphs: z.array(squadParagraphSchema),
    })
  ),
});

export type SquadFile = z.infer<typeof squadFileSchema>;

export interface QaItem {
  qaId: string;
  sentenceId: string;
  entityType: string;
  question: string;
  context: string;
  isImpossible: boolean;
  answers: { text: string; answerStart: number }[];
}

export const scoreBodySchema = z.object({
  requests: z.array(scoringRequestSchema),
});

export const fillBodySchema = z.object({
  text: z.string().min(1),
});
