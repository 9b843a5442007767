import { Vocab, discretizeGaussian } from "./vocab.js";

/**
 * Local probabilistic forecasters used as the white-box distribution
 * source. Both are deterministic functions of the prefix, which makes
 * repeated dumps of the same series byte-identical.
 *
 * The adapter standardizes each series to zero mean / unit deviation
 * before tokenizing; the scaling is recorded in the header model string
 * and never undone by the detection core.
 */

export interface SeriesScaling {
  mean: number;
  std: number;
}

export function standardize(values: number[]): { scaled: number[]; scaling: SeriesScaling } {
  const n = values.length;
  const mean = values.reduce((a, b) => a + b, 0) / n;
  const variance = values.reduce((a, b) => a + (b - mean) * (b - mean), 0) / n;
  const std = Math.sqrt(variance) > 1e-12 ? Math.sqrt(variance) : 1;
  return {
    scaled: values.map((v) => (v - mean) / std),
    scaling: { mean, std },
  };
}

export interface ProxyModel {
  id: string;
  /** Gaussian predictive law for step t (1-based) given scaled prefix. */
  predict(prefix: number[]): { mean: number; variance: number };
}

const VARIANCE_FLOOR = 1e-4;
const VARIANCE_CAP = 25;

function innovationVariance(prefix: number[]): number {
  // mean squared one-step difference of the prefix; the random-walk
  // innovation variance estimate
  if (prefix.length < 2) return 1;
  let sum = 0;
  for (let i = 1; i < prefix.length; i++) {
    const d = prefix[i] - prefix[i - 1];
    sum += d * d;
  }
  return Math.min(Math.max(sum / (prefix.length - 1), VARIANCE_FLOOR), VARIANCE_CAP);
}

/** Random-walk level: next value centered on the last observation. */
export const localLevelModel: ProxyModel = {
  id: "locallevel",
  predict(prefix) {
    if (prefix.length === 0) return { mean: 0, variance: 1 };
    return { mean: prefix[prefix.length - 1], variance: innovationVariance(prefix) };
  },
};

/** Local level plus the average one-step drift of the prefix. */
export const driftModel: ProxyModel = {
  id: "drift",
  predict(prefix) {
    if (prefix.length === 0) return { mean: 0, variance: 1 };
    if (prefix.length === 1) return { mean: prefix[0], variance: 1 };
    const drift = (prefix[prefix.length - 1] - prefix[0]) / (prefix.length - 1);
    return {
      mean: prefix[prefix.length - 1] + drift,
      variance: innovationVariance(prefix),
    };
  },
};

const MODELS: Record<string, ProxyModel> = {
  locallevel: localLevelModel,
  drift: driftModel,
};

export function resolveModel(id: string): ProxyModel {
  const model = MODELS[id];
  if (!model) {
    throw new Error(
      `unknown model '${id}'; available: ${Object.keys(MODELS).join(", ")}`,
    );
  }
  return model;
}

/** Dense per-step rows over the scaled series: one row per step t=1..n. */
export function distributionRows(
  model: ProxyModel,
  scaled: number[],
  vocab: Vocab,
): Float64Array[] {
  const rows: Float64Array[] = [];
  for (let t = 1; t <= scaled.length; t++) {
    const { mean, variance } = model.predict(scaled.slice(0, t - 1));
    rows.push(discretizeGaussian(mean, variance, vocab));
  }
  return rows;
}

const EMBEDDING_LAGS = 8;

/**
 * Pooled fixed-dimension embedding of a prefix: moment summary plus the
 * last few scaled values (padded with the first value). Deterministic,
 * so duplicated prefixes embed identically.
 */
export function prefixEmbedding(prefix: number[]): number[] {
  const n = prefix.length;
  const mean = prefix.reduce((a, b) => a + b, 0) / n;
  const variance = prefix.reduce((a, b) => a + (b - mean) * (b - mean), 0) / n;
  const last = prefix[n - 1];
  const min = Math.min(...prefix);
  const max = Math.max(...prefix);
  const slope = n > 1 ? (prefix[n - 1] - prefix[0]) / (n - 1) : 0;
  const lags: number[] = [];
  for (let k = 0; k < EMBEDDING_LAGS; k++) {
    lags.push(n - 1 - k >= 0 ? prefix[n - 1 - k] : prefix[0]);
  }
  return [mean, Math.sqrt(variance), last, min, max, slope, n, ...lags];
}
