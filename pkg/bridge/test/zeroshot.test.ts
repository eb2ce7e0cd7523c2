/**
 * Real-checkpoint smoke runs. These need a SQuAD-2.0 QA model from the
 * hub and a CoNLL03-format corpus, neither of which ships with the repo,
 * so they only run when the environment provides both:
 *
 *   QANER_BRIDGE_ZEROSHOT_MODEL  e.g. a BERT-large SQuAD2 ONNX checkpoint
 *   QANER_BRIDGE_CONLL           path to a BIO-format corpus sample
 *
 * Expected zero-shot micro F1 with a BERT-large SQuAD2 checkpoint on a
 * CoNLL03 sample falls in (0.15, 0.60). Also requires the `qaner` CLI.
 */

import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { exportLogits } from "../src/records.js";
import { makeScorer } from "../src/scorer.js";
import { loadSquad } from "../src/squad.js";

const MODEL = process.env.QANER_BRIDGE_ZEROSHOT_MODEL;
const CONLL = process.env.QANER_BRIDGE_CONLL;

describe.skipIf(!MODEL || !CONLL)("zero-shot smoke with a real checkpoint", () => {
  it("decodes a CoNLL03 sample to micro F1 in (0.15, 0.60)", async () => {
    const workDir = mkdtempSync(join(tmpdir(), "bridge-zeroshot-"));
    const config = {
      dataset: { path: CONLL, name: "conll-sample" },
      template: {
        kind: "handcraft",
        handcrafted_map: {
          PER: "Who is the person?",
          LOC: "Where is the location?",
          ORG: "What is the organization?",
          MISC: "What is the miscellaneous entity?",
        },
      },
      decode: { n_best: 20, max_answer_positions: 30, prob_threshold: 1.0 },
      scoring: { mode: "oracle" },
    };
    const configPath = join(workDir, "config.json");
    writeFileSync(configPath, JSON.stringify(config));

    execFileSync(
      "qaner",
      ["convert", "--config", configPath, "--out", workDir, "--mode", "eval"],
      { stdio: "pipe" }
    );
    const items = loadSquad(join(workDir, "squad.json"));
    const scorer = await makeScorer({ backend: "transformers", model: MODEL });
    const logitsPath = join(workDir, "records.jsonl");
    await exportLogits(items, scorer, logitsPath);

    execFileSync(
      "qaner",
      ["decode", "--config", configPath, "--out", workDir, "--logits", logitsPath],
      { stdio: "pipe" }
    );
    execFileSync(
      "qaner",
      [
        "eval",
        "--config", configPath,
        "--out", workDir,
        "--predictions", join(workDir, "predictions.json"),
      ],
      { stdio: "pipe" }
    );
    const report = JSON.parse(readFileSync(join(workDir, "eval_report.json"), "utf-8"));
    expect(report.micro_f1).toBeGreaterThan(0.15);
    expect(report.micro_f1).toBeLessThan(0.6);
  }, 900_000);
});
