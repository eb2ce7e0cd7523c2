/**
 * Bridge commands:
 *   export-logits --squad FILE --out FILE [--backend lexical|transformers]
 *                 [--weights FILE] [--model ID]
 *   finetune      --squad FILE --out FILE [--weights FILE] [--epochs N]
 *                 [--learning-rate F] [--batch-size N] [--seed N]
 *   serve         [--port N] [--host H] [--backend ...] [--weights FILE]
 *                 [--model ID] [--fill-model ID]
 *
 * The fixed defaults for finetuning (learning rate 2e-5, batch size 16,
 * 4 epochs) describe the intended BERT-checkpoint regime; the lexical
 * backend is linear and wants a larger step, so pass --learning-rate
 * explicitly when training it (its own default is 0.5).
 */

import { parseArgs } from "node:util";

import { BuiltinMaskFiller, TransformersMaskFiller } from "./fill.js";
import { LexicalScorer, finetuneLexical } from "./lexical.js";
import { exportLogits } from "./records.js";
import { makeScorer, ScorerConfig } from "./scorer.js";
import { makeApp, serve } from "./server.js";
import { loadSquad } from "./squad.js";

function usage(): never {
  console.error("usage: cli.js <export-logits|finetune|serve> [options]");
  process.exit(2);
}

function scorerConfig(values: Record<string, unknown>): ScorerConfig {
  return {
    backend: (values.backend as "lexical" | "transformers") ?? "lexical",
    weightsPath: values.weights as string | undefined,
    model: values.model as string | undefined,
  };
}

async function runExport(args: string[]) {
  const { values } = parseArgs({
    args,
    options: {
      squad: { type: "string" },
      out: { type: "string" },
      backend: { type: "string", default: "lexical" },
      weights: { type: "string" },
      model: { type: "string" },
    },
  });
  if (!values.squad || !values.out) usage();
  const items = loadSquad(values.squad);
  const scorer = await makeScorer(scorerConfig(values));
  const count = await exportLogits(items, scorer, values.out);
  console.log(`exported ${count} records to ${values.out}`);
}

async function runFinetune(args: string[]) {
  const { values } = parseArgs({
    args,
    options: {
      squad: { type: "string" },
      out: { type: "string" },
      weights: { type: "string" },
      epochs: { type: "string", default: "4" },
      "learning-rate": { type: "string", default: "0.5" },
      "batch-size": { type: "string", default: "16" },
      seed: { type: "string", default: "13" },
    },
  });
  if (!values.squad || !values.out) usage();
  const items = loadSquad(values.squad);
  const scorer = values.weights ? LexicalScorer.load(values.weights) : new LexicalScorer();
  const log = finetuneLexical(scorer, items, {
    epochs: Number(values.epochs),
    learningRate: Number(values["learning-rate"]),
    seed: Number(values.seed),
  });
  for (const entry of log) {
    console.log(`epoch ${entry.epoch}: mean loss ${entry.meanLoss.toFixed(4)}`);
  }
  scorer.save(values.out);
  console.log(`saved weights to ${values.out}`);
}

async function runServe(args: string[]) {
  const { values } = parseArgs({
    args,
    options: {
      port: { type: "string", default: "8500" },
      host: { type: "string", default: "127.0.0.1" },
      backend: { type: "string", default: "lexical" },
      weights: { type: "string" },
      model: { type: "string" },
      "fill-model": { type: "string" },
    },
  });
  const scorer = await makeScorer(scorerConfig(values));
  const filler = values["fill-model"]
    ? new TransformersMaskFiller(values["fill-model"] as string)
    : new BuiltinMaskFiller();
  const app = makeApp(scorer, filler);
  await serve(app, Number(values.port), values.host as string);
  console.log(`bridge listening on http://${values.host}:${values.port}`);
}

const [command, ...rest] = process.argv.slice(2);
const handlers: Record<string, (args: string[]) => Promise<void>> = {
  "export-logits": runExport,
  finetune: runFinetune,
  serve: runServe,
};

const handler = command ? handlers[command] : undefined;
if (!handler) usage();
handler(rest).catch((error) => {
  console.error(`error: ${error instanceof Error ? error.message : error}`);
  process.exit(1);
});
