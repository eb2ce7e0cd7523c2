/** Scoring backends: the offline lexical model or a transformers checkpoint. */

import { LexicalScorer } from "./lexical.js";
import { Position } from "./schema.js";

/** One scored (question, context) pair: a full position axis (exactly one
 * null slot; offset-less non-null positions are legal and never form
 * spans) plus parallel start/end logit vectors. */
export interface ScoredAxes {
  positions: Position[];
  startLogits: number[];
  endLogits: number[];
}

export interface QaScorer {
  score(question: string, context: string): Promise<ScoredAxes>;
}

export interface ScorerConfig {
  backend: "lexical" | "transformers";
  /** lexical: path to a weights JSON (omit for an untrained scorer). */
  weightsPath?: string;
  /** transformers: model identifier of a SQuAD 2.0 QA checkpoint. */
  model?: string;
}

export class LexicalQaScorer implements QaScorer {
  constructor(readonly inner: LexicalScorer) {}

  async score(question: string, context: string): Promise<ScoredAxes> {
    const axes = this.inner.axisScores(question, context);
    const positions: Position[] = [
      { index: 0, char_start: null, char_end: null, is_null: true },
      ...axes.words.map((span, i) => ({
        index: i + 1,
        char_start: span.start,
        char_end: span.end,
        is_null: false,
      })),
    ];
    return { positions, startLogits: axes.startLogits, endLogits: axes.endLogits };
  }
}

export async function makeScorer(config: ScorerConfig): Promise<QaScorer> {
  if (config.backend === "lexical") {
    const inner = config.weightsPath ? LexicalScorer.load(config.weightsPath) : new LexicalScorer();
    return new LexicalQaScorer(inner);
  }
  if (!config.model) {
    throw new Error("transformers backend requires a model identifier");
  }
  const { TransformersQaScorer } = await import("./transformers.js");
  return TransformersQaScorer.load(config.model);
}
