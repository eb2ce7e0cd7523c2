/**
 * transformers.js backend: a real extractive-QA checkpoint scored through
 * @huggingface/transformers (installed separately; weights are fetched
 * from the hub on first use). Inference only; the trainable path is the
 * lexical backend.
 *
 * Sequence positions map to record positions one to one: position 0 must
 * be the model's sequence-start classification token and becomes the
 * null slot; context tokens carry character offsets recovered by
 * incrementally matching decoded tokens against the context; question
 * and special tokens keep null offsets and never form spans.
 */

import { Position } from "./schema.js";
import { QaScorer, ScoredAxes } from "./scorer.js";

interface TokenizedSequence {
  ids: number[];
  /** token index -> [charStart, charEnd] into the context, or null. */
  offsets: ([number, number] | null)[];
}

export class TransformersQaScorer implements QaScorer {
  private constructor(
    private readonly tokenizer: any,
    private readonly model: any
  ) {}

  static async load(modelId: string): Promise<TransformersQaScorer> {
    let transformers: any;
    try {
      transformers = await import("@huggingface/transformers" as string);
    } catch (error) {
      throw new Error(
        "the transformers backend needs @huggingface/transformers " +
          `(npm install @huggingface/transformers): ${error}`
      );
    }
    const tokenizer = await transformers.AutoTokenizer.from_pretrained(modelId);
    const model = await transformers.AutoModelForQuestionAnswering.from_pretrained(modelId);
    return new TransformersQaScorer(tokenizer, model);
  }

  /** Recover per-token char offsets by walking decoded tokens through the
   * context (the tokenizers build in transformers.js does not expose an
   * offset mapping directly). */
  private alignToContext(ids: number[], question: string, context: string): TokenizedSequence {
    const offsets: ([number, number] | null)[] = new Array(ids.length).fill(null);
    const specialIds = new Set<number>(
      (this.tokenizer.all_special_ids ?? []).map((x: any) => Number(x))
    );
    // context tokens come after the first separator token
    const sepId = Number(this.tokenizer.sep_token_id ?? -1);
    let inContext = false;
    let cursor = 0;
    const haystack = context.toLowerCase();
    ids.forEach((id, position) => {
      if (id === sepId) {
        inContext = !inContext ? true : inContext;
        return;
      }
      if (!inContext || specialIds.has(id)) return;
      let piece: string = this.tokenizer.decode([id], { skip_special_tokens: true });
      piece = piece.replace(/^##/, "").trim().toLowerCase();
      if (!piece) return;
      const found = haystack.indexOf(piece, cursor);
      if (found < 0) return; // unknown-token pieces stay offset-less
      offsets[position] = [found, found + piece.length];
      cursor = found + piece.length;
    });
    return { ids, offsets };
  }

  async score(question: string, context: string): Promise<ScoredAxes> {
    const encoded = await this.tokenizer(question, { text_pair: context });
    const output = await this.model(encoded);
    const startLogits = Array.from(output.start_logits.data as Float32Array, Number);
    const endLogits = Array.from(output.end_logits.data as Float32Array, Number);
    const ids = Array.from(encoded.input_ids.data as BigInt64Array, (x) => Number(x));
    const aligned = this.alignToContext(ids, question, context);

    // Every sequence position stays in the record (and the softmax domain):
    // position 0 is the null slot, question/special tokens keep null offsets.
    const positions: Position[] = aligned.offsets.map((offset, position) => ({
      index: position,
      char_start: position === 0 ? null : offset?.[0] ?? null,
      char_end: position === 0 ? null : offset?.[1] ?? null,
      is_null: position === 0,
    }));
    return { positions, startLogits, endLogits };
  }
}

/** Fill-mask through the same ecosystem, for generated prompts. */
export async function transformersFillMask(
  modelId: string,
  text: string
): Promise<{ token: string; score: number }[]> {
  const transformers: any = await import("@huggingface/transformers" as string);
  const fill = await transformers.pipeline("fill-mask", modelId);
  const results = await fill(text.replace("[MASK]", fill.tokenizer.mask_token));
  return results.map((r: any) => ({ token: String(r.token_str).trim(), score: Number(r.score) }));
}
