import { normalCdf } from "./gaussian.js";

/** Equidistant token grid: token i carries the value vMin + i * delta. */
export interface Vocab {
  size: number;
  delta: number;
  vMin: number;
}

export function makeVocab(size = 4096, lo = -15, hi = 15): Vocab {
  if (size < 2 || !(hi > lo)) {
    throw new Error(`invalid vocabulary: size=${size} span=[${lo}, ${hi}]`);
  }
  return { size, delta: (hi - lo) / (size - 1), vMin: lo };
}

/** Nearest token index, clipped; exact midpoints round to the lower index. */
export function quantize(value: number, vocab: Vocab): number {
  if (Number.isNaN(value)) throw new Error("cannot quantize NaN");
  const x = (value - vocab.vMin) / vocab.delta;
  const index = Math.ceil(x - 0.5);
  return Math.min(Math.max(index, 0), vocab.size - 1);
}

/**
 * Integrate a Gaussian over the token cells: mass(v) = CDF(v + d/2) -
 * CDF(v - d/2), tails folded into the edge tokens, renormalized.
 */
export function discretizeGaussian(mean: number, variance: number, vocab: Vocab): Float64Array {
  const probs = new Float64Array(vocab.size);
  if (variance <= 0) {
    probs[quantize(mean, vocab)] = 1;
    return probs;
  }
  const std = Math.sqrt(variance);
  let prev = normalCdf(vocab.vMin - vocab.delta / 2, mean, std);
  const leftTail = prev;
  let total = 0;
  for (let i = 0; i < vocab.size; i++) {
    const next = normalCdf(vocab.vMin + (i + 0.5) * vocab.delta, mean, std);
    probs[i] = Math.max(next - prev, 0);
    prev = next;
  }
  probs[0] += leftTail;
  probs[vocab.size - 1] += Math.max(1 - prev, 0);
  for (let i = 0; i < vocab.size; i++) total += probs[i];
  if (total <= 0) throw new Error("discretized density has no mass on the grid");
  for (let i = 0; i < vocab.size; i++) probs[i] /= total;
  return probs;
}
