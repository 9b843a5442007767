import { mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { renderDump, renderEmbeddings, observedTokens } from "../src/dump.js";
import {
  distributionRows,
  localLevelModel,
  prefixEmbedding,
  resolveModel,
  standardize,
} from "../src/model.js";
import { readSeriesFile } from "../src/series.js";
import { discretizeGaussian, makeVocab, quantize } from "../src/vocab.js";

function demoSeries(n = 48): number[] {
  // deterministic pseudo-noise so tests never depend on Math.random
  return Array.from({ length: n }, (_, t) => 5 + 2 * Math.sin(t / 4) + 0.3 * Math.sin(t * 12.9898));
}

describe("vocab", () => {
  const vocab = makeVocab(10, 0, 9); // delta 1, values 0..9

  it("quantizes to the nearest token", () => {
    expect(quantize(3.2, vocab)).toBe(3);
    expect(quantize(3.7, vocab)).toBe(4);
  });

  it("rounds midpoints toward the lower index", () => {
    expect(quantize(3.5, vocab)).toBe(3);
  });

  it("clips out-of-range values", () => {
    expect(quantize(99, vocab)).toBe(9);
    expect(quantize(-99, vocab)).toBe(0);
  });

  it("rejects NaN", () => {
    expect(() => quantize(Number.NaN, vocab)).toThrow();
  });
});

describe("discretizeGaussian", () => {
  it("masses sum to one", () => {
    const vocab = makeVocab(512, -10, 10);
    for (const [mean, variance] of [
      [0, 1],
      [3.3, 0.04],
      [-9.5, 4],
    ] as const) {
      const probs = discretizeGaussian(mean, variance, vocab);
      const total = probs.reduce((a, b) => a + b, 0);
      expect(Math.abs(total - 1)).toBeLessThan(1e-9);
      expect(Math.min(...probs)).toBeGreaterThanOrEqual(0);
    }
  });

  it("zero variance is a point mass at the quantized mean", () => {
    const vocab = makeVocab(64, -4, 4);
    const probs = discretizeGaussian(1.3, 0, vocab);
    expect(probs[quantize(1.3, vocab)]).toBe(1);
  });

  it("is symmetric around an on-grid mean", () => {
    const vocab = makeVocab(401, -2, 2); // token 200 sits at 0
    const probs = discretizeGaussian(0, 0.25, vocab);
    for (const k of [1, 10, 100]) {
      expect(Math.abs(probs[200 + k] - probs[200 - k])).toBeLessThan(1e-9);
    }
  });
});

describe("standardize", () => {
  it("produces zero mean and unit deviation", () => {
    const { scaled } = standardize(demoSeries());
    const mean = scaled.reduce((a, b) => a + b, 0) / scaled.length;
    const variance = scaled.reduce((a, b) => a + (b - mean) * (b - mean), 0) / scaled.length;
    expect(Math.abs(mean)).toBeLessThan(1e-12);
    expect(Math.abs(variance - 1)).toBeLessThan(1e-12);
  });

  it("guards constant series", () => {
    const { scaled, scaling } = standardize([2, 2, 2, 2]);
    expect(scaling.std).toBe(1);
    expect(scaled.every((v) => v === 0)).toBe(true);
  });
});

describe("renderDump", () => {
  const vocab = makeVocab(128, -8, 8);
  const { scaled } = standardize(demoSeries(24));
  const rows = distributionRows(localLevelModel, scaled, vocab);
  const observed = observedTokens(scaled, vocab);
  const text = renderDump({ vocab, modelName: "locallevel(test)", rows, observed });
  const lines = text.trimEnd().split("\n");

  it("writes a conformant header", () => {
    const header = JSON.parse(lines[0]);
    expect(header.format).toBe("ucd-v1");
    expect(header.vocab_size).toBe(128);
    expect(header.len).toBe(24);
    expect(header.delta).toBeCloseTo(16 / 127, 12);
    expect(header.v_min).toBe(-8);
    expect(header.model).toBe("locallevel(test)");
  });

  it("writes one row per step with consecutive t", () => {
    expect(lines.length).toBe(25);
    lines.slice(1).forEach((line, i) => {
      const row = JSON.parse(line);
      expect(row.t).toBe(i + 1);
      expect(row.logprobs.length).toBe(128);
      expect(row.observed).toBeGreaterThanOrEqual(0);
      expect(row.observed).toBeLessThan(128);
    });
  });

  it("rows exponentiate to probability vectors within 1e-6", () => {
    for (const line of lines.slice(1)) {
      const row = JSON.parse(line);
      const total = row.logprobs.reduce((a: number, lp: number) => a + Math.exp(lp), 0);
      expect(Math.abs(total - 1)).toBeLessThan(1e-6);
    }
  });

  it("is deterministic", () => {
    const again = renderDump({ vocab, modelName: "locallevel(test)", rows, observed });
    expect(again).toBe(text);
  });
});

describe("embeddings", () => {
  it("have constant dimension", () => {
    const { scaled } = standardize(demoSeries(20));
    const embeddings = scaled.map((_, i) => prefixEmbedding(scaled.slice(0, i + 1)));
    const dims = new Set(embeddings.map((e) => e.length));
    expect(dims.size).toBe(1);
    const text = renderEmbeddings({ modelName: "m", embeddings });
    const header = JSON.parse(text.split("\n")[0]);
    expect(header.format).toBe("uce-emb-v1");
    expect(header.len).toBe(20);
  });

  it("duplicated prefixes embed with cosine similarity one", () => {
    const { scaled } = standardize(demoSeries(16));
    const a = prefixEmbedding(scaled.slice(0, 9));
    const b = prefixEmbedding([...scaled.slice(0, 9)]);
    const dot = a.reduce((s, x, i) => s + x * b[i], 0);
    const norm = Math.sqrt(a.reduce((s, x) => s + x * x, 0));
    expect(dot / (norm * norm)).toBeCloseTo(1, 12);
  });
});

describe("series files", () => {
  it("reads JSONL records", () => {
    const dir = mkdtempSync(join(tmpdir(), "adapter-"));
    const path = join(dir, "s.jsonl");
    writeFileSync(
      path,
      JSON.stringify({ id: "a", label: "real", values: [1, 2, 3], meta: {} }) + "\n",
    );
    const records = readSeriesFile(path);
    expect(records).toHaveLength(1);
    expect(records[0].values).toEqual([1, 2, 3]);
  });

  it("reads one-column CSV with a header", () => {
    const dir = mkdtempSync(join(tmpdir(), "adapter-"));
    const path = join(dir, "vals.csv");
    writeFileSync(path, "value\n1.5\n2.5\n3.5\n");
    const records = readSeriesFile(path);
    expect(records[0].values).toEqual([1.5, 2.5, 3.5]);
    expect(records[0].id).toBe("vals");
  });

  it("rejects unknown model ids", () => {
    expect(() => resolveModel("nope")).toThrow(/unknown model/);
  });
});
