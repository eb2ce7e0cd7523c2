/** SQuAD 2.0 file reader: flattens paragraphs into scoreable QA items. */

import { readFileSync } from "node:fs";

import { QaItem, squadFileSchema } from "./schema.js";

export function parseSquad(text: string): QaItem[] {
  const file = squadFileSchema.parse(JSON.parse(text));
  const items: QaItem[] = [];
  for (const article of file.data) {
    for (const paragraph of article.paragraphs) {
      for (const qa of paragraph.qas) {
        const parts = qa.id.split("::");
        if (parts.length !== 3) {
          throw new Error(`qa id ${qa.id} is not sentence::type::index shaped`);
        }
        if (qa.is_impossible !== (qa.answers.length === 0)) {
          throw new Error(`qa ${qa.id}: is_impossible inconsistent with answers`);
        }
        for (const answer of qa.answers) {
          const got = paragraph.context.slice(
            answer.answer_start,
            answer.answer_start + answer.text.length
          );
          if (got !== answer.text) {
            throw new Error(`qa ${qa.id}: answer ${answer.text} not at offset ${answer.answer_start}`);
          }
        }
        items.push({
          qaId: qa.id,
          sentenceId: parts[0],
          entityType: parts[1],
          question: qa.question,
          context: paragraph.context,
          isImpossible: qa.is_impossible,
          answers: qa.answers.map((a) => ({ text: a.text, answerStart: a.answer_start })),
        });
      }
    }
  }
  return items;
}

export function loadSquad(path: string): QaItem[] {
  return parseSquad(readFileSync(path, "utf-8"));
}
