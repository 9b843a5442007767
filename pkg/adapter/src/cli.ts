#!/usr/bin/env node
/**
 * tslm-dump-adapter dump --model <id> --series <path> --out <path>
 *                         [--every-step] [--embeddings <path>]
 *                         [--vocab-size N] [--span LO,HI]
 *
 * Standardizes the input series, queries the chosen local probabilistic
 * model for every prefix, and writes a ucd-v1 distribution dump (plus
 * optional per-prefix embedding vectors). Rows are emitted for every
 * step regardless of --every-step: the dump format requires one row per
 * series value, so the flag simply confirms the default.
 */

import { renderEmbeddings, observedTokens, writeAtomically, writeDump } from "./dump.js";
import { distributionRows, prefixEmbedding, resolveModel, standardize } from "./model.js";
import { readSeriesFile } from "./series.js";
import { makeVocab } from "./vocab.js";

interface Args {
  model: string;
  series: string;
  out: string;
  embeddings?: string;
  vocabSize: number;
  span: [number, number];
}

function parseArgs(argv: string[]): Args {
  if (argv[0] !== "dump") {
    throw new Error("usage: tslm-dump-adapter dump --model <id> --series <path> --out <path>");
  }
  const args: Partial<Args> = { vocabSize: 4096, span: [-15, 15] };
  for (let i = 1; i < argv.length; i++) {
    const flag = argv[i];
    const next = () => {
      const value = argv[++i];
      if (value === undefined) throw new Error(`flag ${flag} needs a value`);
      return value;
    };
    switch (flag) {
      case "--model":
        args.model = next();
        break;
      case "--series":
        args.series = next();
        break;
      case "--out":
        args.out = next();
        break;
      case "--embeddings":
        args.embeddings = next();
        break;
      case "--vocab-size":
        args.vocabSize = Number(next());
        break;
      case "--span": {
        const [lo, hi] = next().split(",").map(Number);
        args.span = [lo, hi];
        break;
      }
      case "--every-step":
        break; // dense rows are the default and only mode
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  for (const key of ["model", "series", "out"] as const) {
    if (!args[key]) throw new Error(`missing required flag --${key}`);
  }
  return args as Args;
}

export function runDump(args: Args): string {
  const records = readSeriesFile(args.series);
  if (records.length !== 1) {
    throw new Error(
      `a dump backs exactly one series; ${args.series} holds ${records.length}`,
    );
  }
  const record = records[0];
  const model = resolveModel(args.model);
  const vocab = makeVocab(args.vocabSize, args.span[0], args.span[1]);
  const { scaled, scaling } = standardize(record.values);
  const modelName =
    `${model.id}(series=${record.id},mean=${scaling.mean.toPrecision(9)},` +
    `std=${scaling.std.toPrecision(9)})`;
  writeDump(
    {
      vocab,
      modelName,
      rows: distributionRows(model, scaled, vocab),
      observed: observedTokens(scaled, vocab),
    },
    args.out,
  );
  if (args.embeddings) {
    const embeddings = scaled.map((_, i) => prefixEmbedding(scaled.slice(0, i + 1)));
    writeAtomically(args.embeddings, renderEmbeddings({ modelName, embeddings }));
  }
  return modelName;
}

export function main(argv: string[]): number {
  try {
    const args = parseArgs(argv);
    const modelName = runDump(args);
    console.log(`wrote ${args.out} (${modelName})`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
