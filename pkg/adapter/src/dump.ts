import { renameSync, writeFileSync } from "fs";

import { Vocab, quantize } from "./vocab.js";

/**
 * ucd-v1 writer. One header line, then one row per step with dense
 * log-probabilities (9 significant digits, floored at ln(1e-300)) and
 * the observed token. Written atomically (temp file + rename).
 */

const LOGPROB_FLOOR = Math.log(1e-300);

export interface DumpInput {
  vocab: Vocab;
  modelName: string;
  rows: Float64Array[];
  observed: number[];
}

function formatLogProb(p: number): string {
  const lp = Math.max(Math.log(p), LOGPROB_FLOOR);
  // toPrecision(9) may produce exponent notation; both forms are valid JSON
  return Number(lp.toPrecision(9)).toString();
}

export function renderDump(input: DumpInput): string {
  const { vocab, modelName, rows, observed } = input;
  if (rows.length !== observed.length || rows.length === 0) {
    throw new Error("rows and observed tokens must align and be nonempty");
  }
  const header = JSON.stringify({
    format: "ucd-v1",
    vocab_size: vocab.size,
    delta: vocab.delta,
    v_min: vocab.vMin,
    len: rows.length,
    model: modelName,
  });
  const lines = [header];
  rows.forEach((row, i) => {
    if (row.length !== vocab.size) {
      throw new Error(`row ${i + 1} has ${row.length} entries, expected ${vocab.size}`);
    }
    const body = Array.from(row, formatLogProb).join(",");
    lines.push(`{"t":${i + 1},"observed":${observed[i]},"logprobs":[${body}]}`);
  });
  return lines.join("\n") + "\n";
}

export function writeAtomically(path: string, content: string): void {
  const tmp = `${path}.tmp`;
  writeFileSync(tmp, content, "utf-8");
  renameSync(tmp, path);
}

export function writeDump(input: DumpInput, path: string): void {
  writeAtomically(path, renderDump(input));
}

export interface EmbeddingInput {
  modelName: string;
  embeddings: number[][];
}

export function renderEmbeddings(input: EmbeddingInput): string {
  const dim = input.embeddings[0]?.length ?? 0;
  if (dim === 0) throw new Error("embeddings must be nonempty");
  for (const e of input.embeddings) {
    if (e.length !== dim) throw new Error("embedding dimension must be constant");
  }
  const header = JSON.stringify({
    format: "uce-emb-v1",
    dim,
    len: input.embeddings.length,
    model: input.modelName,
  });
  const lines = [header];
  input.embeddings.forEach((embedding, i) => {
    const body = embedding.map((x) => Number(x.toPrecision(9)).toString()).join(",");
    lines.push(`{"t":${i + 1},"embedding":[${body}]}`);
  });
  return lines.join("\n") + "\n";
}

export function observedTokens(scaled: number[], vocab: Vocab): number[] {
  return scaled.map((v) => quantize(v, vocab));
}
