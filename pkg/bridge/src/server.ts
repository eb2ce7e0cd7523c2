/**
 * HTTP surface of the bridge: POST /score turns scoring-request batches
 * into logit records, POST /fill ranks mask-fill candidates. Request
 * bodies are schema-validated; malformed input is a 400 with a category.
 */

import express, { Express } from "express";
import { ZodError } from "zod";

import { MaskFiller } from "./fill.js";
import { scoreRequests } from "./records.js";
import { fillBodySchema, scoreBodySchema } from "./schema.js";
import { QaScorer } from "./scorer.js";

export function makeApp(scorer: QaScorer, filler: MaskFiller): Express {
  const app = express();
  app.use(express.json({ limit: "50mb" }));

  app.get("/health", (_req, res) => {
    res.json({ status: "ok" });
  });

  app.post("/score", async (req, res) => {
    let body;
    try {
      body = scoreBodySchema.parse(req.body);
    } catch (error) {
      res.status(400).json({ category: "protocol-error", detail: describe(error) });
      return;
    }
    try {
      const records = await scoreRequests(body.requests, scorer);
      res.json({ records });
    } catch (error) {
      res.status(500).json({ category: "scoring-error", detail: describe(error) });
    }
  });

  app.post("/fill", async (req, res) => {
    let body;
    try {
      body = fillBodySchema.parse(req.body);
      if (!body.text.includes("[MASK]")) {
        throw new Error("text must contain [MASK]");
      }
    } catch (error) {
      res.status(400).json({ category: "protocol-error", detail: describe(error) });
      return;
    }
    try {
      const candidates = await filler.fill(body.text);
      res.json({ candidates });
    } catch (error) {
      res.status(500).json({ category: "fill-error", detail: describe(error) });
    }
  });

  return app;
}

function describe(error: unknown): string {
  if (error instanceof ZodError) {
    return error.issues.map((i) => `${i.path.join(".")}: ${i.message}`).join("; ");
  }
  return String(error instanceof Error ? error.message : error);
}

export async function serve(app: Express, port: number, host = "127.0.0.1") {
  return new Promise<ReturnType<Express["listen"]>>((resolve) => {
    const server = app.listen(port, host, () => resolve(server));
  });
}
