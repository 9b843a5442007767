import { readFileSync } from "fs";
import { basename, extname } from "path";

export interface SeriesRecord {
  id: string;
  label: string;
  values: number[];
}

/** Series JSONL ({id, label, values, meta}) or a one-column CSV of values. */
export function readSeriesFile(path: string): SeriesRecord[] {
  if (extname(path).toLowerCase() === ".csv") {
    return [readCsv(path)];
  }
  const records: SeriesRecord[] = [];
  const lines = readFileSync(path, "utf-8").split("\n");
  lines.forEach((line, i) => {
    if (!line.trim()) return;
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch (err) {
      throw new Error(`${path}: line ${i + 1} is not valid JSON (${err})`);
    }
    const rec = obj as Partial<SeriesRecord>;
    if (typeof rec.id !== "string" || !Array.isArray(rec.values)) {
      throw new Error(`${path}: line ${i + 1} is missing id or values`);
    }
    records.push({
      id: rec.id,
      label: typeof rec.label === "string" ? rec.label : "real",
      values: rec.values.map(Number),
    });
  });
  if (records.length === 0) throw new Error(`${path}: no series records found`);
  return records;
}

function readCsv(path: string): SeriesRecord {
  const values: number[] = [];
  const lines = readFileSync(path, "utf-8").split("\n");
  lines.forEach((line, i) => {
    const cell = line.split(",")[0]?.trim();
    if (!cell) return;
    const value = Number(cell);
    if (Number.isNaN(value)) {
      if (i === 0) return; // header row
      throw new Error(`${path}: row ${i + 1} is not numeric: '${cell}'`);
    }
    values.push(value);
  });
  if (values.length === 0) throw new Error(`${path}: no numeric values found`);
  return { id: basename(path, extname(path)), label: "real", values };
}
