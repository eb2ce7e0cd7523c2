/** Whitespace word tokenization with character offsets into the context. */

export interface WordSpan {
  word: string;
  start: number;
  end: number;
}

export function wordSpans(context: string): WordSpan[] {
  const spans: WordSpan[] = [];
  const pattern = /\S+/g;
  let match: RegExpExecArray | null;
  while ((match = pattern.exec(context)) !== null) {
    spans.push({ word: match[0], start: match.index, end: match.index + match[0].length });
  }
  return spans;
}

/** Map a character range to the covering word index range; answers in the
 * converted corpora are word-aligned, so mismatches are hard errors. */
export function charRangeToWords(
  spans: WordSpan[],
  charStart: number,
  charEnd: number
): { startWord: number; endWord: number } {
  let startWord = -1;
  let endWord = -1;
  spans.forEach((span, i) => {
    if (span.start < charEnd && charStart < span.end) {
      if (startWord < 0) startWord = i;
      endWord = i;
    }
  });
  if (startWord < 0) {
    throw new Error(`char range [${charStart}, ${charEnd}) covers no word`);
  }
  return { startWord, endWord };
}
