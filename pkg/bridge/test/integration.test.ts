/**
 * End-to-end against the conversion/decoding toolkit's CLI: exported
 * logits are decoded and scored by `qaner`, and fine-tuning must strictly
 * improve held-out micro F1 over the untrained scorer.
 */

import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";

import { describe, expect, it } from "vitest";

import { LexicalScorer, finetuneLexical } from "../src/lexical.js";
import { exportLogits } from "../src/records.js";
import { LexicalQaScorer } from "../src/scorer.js";
import { loadSquad } from "../src/squad.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

function hasQanerCli(): boolean {
  try {
    execFileSync("qaner", ["--help"], { stdio: "ignore" });
    return true;
  } catch {
    return false;
  }
}

function microF1(logitsPath: string, workDir: string): number {
  const config = join(FIXTURES, "decode_config.json");
  execFileSync(
    "qaner",
    ["decode", "--config", config, "--out", workDir, "--logits", logitsPath],
    { stdio: "pipe" }
  );
  execFileSync(
    "qaner",
    [
      "eval",
      "--config", config,
      "--out", workDir,
      "--predictions", join(workDir, "predictions.json"),
    ],
    { stdio: "pipe" }
  );
  const report = JSON.parse(readFileSync(join(workDir, "eval_report.json"), "utf-8"));
  return report.micro_f1 as number;
}

describe.skipIf(!hasQanerCli())("integration with the decoding toolkit", () => {
  it("fine-tuning strictly improves held-out micro F1 over the untrained scorer", async () => {
    const heldout = loadSquad(join(FIXTURES, "heldout_squad.json"));
    const train = loadSquad(join(FIXTURES, "train_squad.json"));
    const workDir = mkdtempSync(join(tmpdir(), "bridge-integration-"));

    const untrainedPath = join(workDir, "untrained.jsonl");
    await exportLogits(heldout, new LexicalQaScorer(new LexicalScorer()), untrainedPath);
    const untrainedF1 = microF1(untrainedPath, join(workDir, "untrained"));

    const tuned = new LexicalScorer();
    finetuneLexical(tuned, train, { epochs: 4, learningRate: 0.5, seed: 13 });
    const tunedPath = join(workDir, "tuned.jsonl");
    await exportLogits(heldout, new LexicalQaScorer(tuned), tunedPath);
    const tunedF1 = microF1(tunedPath, join(workDir, "tuned"));

    expect(tunedF1).toBeGreaterThan(untrainedF1);
    expect(tunedF1).toBeGreaterThan(0.5);
    expect(untrainedF1).toBeLessThan(0.1);
  }, 60_000);
});
