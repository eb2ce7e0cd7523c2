/** Turn scored axes into validated logit records and JSON Lines files. */

import { createWriteStream } from "node:fs";
import { once } from "node:events";

import { LogitRecord, QaItem, ScoringRequest, validateRecord } from "./schema.js";
import { QaScorer, ScoredAxes } from "./scorer.js";

export function recordFromScores(request: ScoringRequest, scored: ScoredAxes): LogitRecord {
  return validateRecord({
    qa_id: request.qa_id,
    sentence_id: request.sentence_id,
    entity_type: request.entity_type,
    question: request.question,
    context: request.context,
    positions: scored.positions,
    start_logits: scored.startLogits,
    end_logits: scored.endLogits,
  });
}

export function requestFromItem(item: QaItem): ScoringRequest {
  return {
    qa_id: item.qaId,
    sentence_id: item.sentenceId,
    entity_type: item.entityType,
    question: item.question,
    context: item.context,
  };
}

export async function scoreRequests(
  requests: ScoringRequest[],
  scorer: QaScorer
): Promise<LogitRecord[]> {
  const records: LogitRecord[] = [];
  for (const request of requests) {
    records.push(recordFromScores(request, await scorer.score(request.question, request.context)));
  }
  return records;
}

/** Score every QA item and stream records to a JSON Lines file. */
export async function exportLogits(
  items: QaItem[],
  scorer: QaScorer,
  outPath: string
): Promise<number> {
  const stream = createWriteStream(outPath, { encoding: "utf-8" });
  let count = 0;
  for (const item of items) {
    const record = recordFromScores(
      requestFromItem(item),
      await scorer.score(item.question, item.context)
    );
    if (!stream.write(JSON.stringify(record) + "\n")) {
      await once(stream, "drain");
    }
    count += 1;
  }
  stream.end();
  await once(stream, "finish");
  return count;
}
