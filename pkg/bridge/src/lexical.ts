/**
 * A small trainable start/end span scorer that runs without model
 * downloads: hashed lexical features (word identity, neighbors, and
 * question-word conjunctions) feed two linear heads scored per position.
 * Position 0 is the trainable no-answer slot, matching the record
 * format's null position. Training is per-example SGD on softmax
 * cross-entropy over each axis, deterministic under a fixed seed.
 *
 * This backend exists so the export/serve/finetune loop is exercisable
 * offline; swap in the transformers backend for real checkpoints.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { QaItem } from "./schema.js";
import { WordSpan, charRangeToWords, wordSpans } from "./tokenize.js";

export interface AxisScores {
  words: WordSpan[];
  startLogits: number[];
  endLogits: number[];
}

const DEFAULT_DIM = 1 << 16;

function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

/** Deterministic float PRNG for epoch shuffles. */
export function mulberry32(seed: number): () => number {
  let state = seed | 0;
  return () => {
    state = (state + 0x6d2b79f5) | 0;
    let t = Math.imul(state ^ (state >>> 15), 1 | state);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function softmax(logits: number[]): number[] {
  const peak = Math.max(...logits);
  const exps = logits.map((x) => Math.exp(x - peak));
  const total = exps.reduce((a, b) => a + b, 0);
  return exps.map((e) => e / total);
}

export class LexicalScorer {
  readonly dim: number;
  readonly startWeights: Float64Array;
  readonly endWeights: Float64Array;

  constructor(dim: number = DEFAULT_DIM, startWeights?: Float64Array, endWeights?: Float64Array) {
    this.dim = dim;
    this.startWeights = startWeights ?? new Float64Array(dim);
    this.endWeights = endWeights ?? new Float64Array(dim);
  }

  /** Active feature buckets for every position; index 0 is the null slot. */
  private features(question: string, words: WordSpan[]): number[][] {
    const q = question.toLowerCase();
    const perPosition: number[][] = [
      [this.bucket("null"), this.bucket(`q|null:${q}`)],
    ];
    words.forEach((span, i) => {
      const word = span.word.toLowerCase();
      const previous = i > 0 ? words[i - 1].word.toLowerCase() : "<s>";
      const next = i + 1 < words.length ? words[i + 1].word.toLowerCase() : "</s>";
      perPosition.push([
        this.bucket(`w:${word}`),
        this.bucket(`p:${previous}`),
        this.bucket(`n:${next}`),
        this.bucket(`q|w:${q}|${word}`),
        this.bucket(`q|p:${q}|${previous}`),
      ]);
    });
    return perPosition;
  }

  private bucket(feature: string): number {
    return fnv1a(feature) % this.dim;
  }

  private scoreAxis(weights: Float64Array, perPosition: number[][]): number[] {
    return perPosition.map((buckets) => {
      let total = 0;
      for (const bucket of buckets) total += weights[bucket];
      return total;
    });
  }

  axisScores(question: string, context: string): AxisScores {
    const words = wordSpans(context);
    const perPosition = this.features(question, words);
    return {
      words,
      startLogits: this.scoreAxis(this.startWeights, perPosition),
      endLogits: this.scoreAxis(this.endWeights, perPosition),
    };
  }

  /** Gold (start, end) position-index targets; the null slot for negatives. */
  static targets(item: QaItem): { start: number; end: number }[] {
    if (item.isImpossible) return [{ start: 0, end: 0 }];
    const spans = wordSpans(item.context);
    return item.answers.map((answer) => {
      const range = charRangeToWords(spans, answer.answerStart, answer.answerStart + answer.text.length);
      return { start: range.startWord + 1, end: range.endWord + 1 };
    });
  }

  /** One SGD pass over the items (seeded shuffle); returns the mean loss. */
  trainEpoch(items: QaItem[], learningRate: number, rng: () => number): number {
    const order = items.map((_, i) => i);
    for (let i = order.length - 1; i > 0; i--) {
      const j = Math.floor(rng() * (i + 1));
      [order[i], order[j]] = [order[j], order[i]];
    }
    let loss = 0;
    let examples = 0;
    for (const index of order) {
      const item = items[index];
      const words = wordSpans(item.context);
      const perPosition = this.features(item.question, words);
      for (const target of LexicalScorer.targets(item)) {
        loss += this.sgdStep(this.startWeights, perPosition, target.start, learningRate);
        loss += this.sgdStep(this.endWeights, perPosition, target.end, learningRate);
        examples += 2;
      }
    }
    return examples ? loss / examples : 0;
  }

  private sgdStep(
    weights: Float64Array,
    perPosition: number[][],
    target: number,
    learningRate: number
  ): number {
    const logits = this.scoreAxis(weights, perPosition);
    const probs = softmax(logits);
    probs.forEach((p, position) => {
      const gradient = p - (position === target ? 1 : 0);
      if (gradient === 0) return;
      for (const bucket of perPosition[position]) {
        weights[bucket] -= learningRate * gradient;
      }
    });
    return -Math.log(Math.max(probs[target], 1e-300));
  }

  toJSON(): object {
    const sparse = (weights: Float64Array) => {
      const entries: Record<string, number> = {};
      weights.forEach((value, i) => {
        if (value !== 0) entries[i] = value;
      });
      return entries;
    };
    return {
      kind: "lexical",
      dim: this.dim,
      start: sparse(this.startWeights),
      end: sparse(this.endWeights),
    };
  }

  static fromJSON(payload: any): LexicalScorer {
    if (payload?.kind !== "lexical" || typeof payload.dim !== "number") {
      throw new Error("not a lexical scorer weights file");
    }
    const scorer = new LexicalScorer(payload.dim);
    for (const [index, value] of Object.entries(payload.start as Record<string, number>)) {
      scorer.startWeights[Number(index)] = value as number;
    }
    for (const [index, value] of Object.entries(payload.end as Record<string, number>)) {
      scorer.endWeights[Number(index)] = value as number;
    }
    return scorer;
  }

  save(path: string): void {
    writeFileSync(path, JSON.stringify(this.toJSON()) + "\n", "utf-8");
  }

  static load(path: string): LexicalScorer {
    return LexicalScorer.fromJSON(JSON.parse(readFileSync(path, "utf-8")));
  }
}

export interface FinetuneOptions {
  epochs: number;
  learningRate: number;
  seed: number;
}

export interface EpochLog {
  epoch: number;
  meanLoss: number;
}

export function finetuneLexical(
  scorer: LexicalScorer,
  items: QaItem[],
  options: FinetuneOptions
): EpochLog[] {
  const rng = mulberry32(options.seed);
  const log: EpochLog[] = [];
  for (let epoch = 0; epoch < options.epochs; epoch++) {
    const meanLoss = scorer.trainEpoch(items, options.learningRate, rng);
    log.push({ epoch, meanLoss });
  }
  return log;
}
