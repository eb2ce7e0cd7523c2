/**
 * Mask filling for generated prompts. The real path runs an MLM through
 * transformers.js; the builtin backend is a deterministic stand-in that
 * ranks question words against cue nouns in the masked text, so offline
 * runs and tests still get a sensible ranking.
 */

export interface FillCandidate {
  token: string;
  score: number;
}

export interface MaskFiller {
  fill(text: string): Promise<FillCandidate[]>;
}

const CUE_WORDS: Record<string, string> = {
  location: "Where",
  place: "Where",
  city: "Where",
  country: "Where",
  area: "Where",
  person: "Who",
  people: "Who",
  actor: "Who",
  director: "Who",
  character: "Who",
  name: "Who",
  year: "When",
  date: "When",
  time: "When",
  hours: "When",
  reason: "Why",
};

const WH_ORDER = ["What", "Where", "Who", "When", "Why"];

export class BuiltinMaskFiller implements MaskFiller {
  async fill(text: string): Promise<FillCandidate[]> {
    const words = text.toLowerCase().split(/\W+/);
    let preferred = "What";
    for (const word of words) {
      if (CUE_WORDS[word]) {
        preferred = CUE_WORDS[word];
        break;
      }
    }
    const ranked = [preferred, ...WH_ORDER.filter((w) => w !== preferred)];
    return ranked.map((token, i) => ({ token, score: 0.6 / Math.pow(2, i) }));
  }
}

export class TransformersMaskFiller implements MaskFiller {
  constructor(private readonly model: string) {}

  async fill(text: string): Promise<FillCandidate[]> {
    const { transformersFillMask } = await import("./transformers.js");
    return transformersFillMask(this.model, text);
  }
}
