/**
 * CSV access for the solver's output schema.
 *
 * Every file carries a header row; numeric cells use up to 17 significant
 * digits.  Row order on disk is not trusted: consumers sort explicitly, so
 * shuffled inputs produce identical figures.
 */

import { readFileSync } from "fs";

export interface Table {
  header: string[];
  rows: (number | string)[][];
}

export function parseCsv(text: string): Table {
  const lines = text.trim().split(/\r?\n/);
  if (lines.length === 0 || lines[0].length === 0) {
    throw new Error("empty CSV");
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line) =>
    line.split(",").map((tok) => {
      const v = Number(tok);
      return tok !== "" && Number.isFinite(v) ? v : tok;
    })
  );
  for (const r of rows) {
    if (r.length !== header.length) {
      throw new Error(`row with ${r.length} cells, expected ${header.length}`);
    }
  }
  return { header, rows };
}

export function readCsv(path: string): Table {
  return parseCsv(readFileSync(path, "utf-8"));
}

export function column(t: Table, name: string): number[] {
  const i = t.header.indexOf(name);
  if (i < 0) throw new Error(`missing column '${name}' (have ${t.header})`);
  return t.rows.map((r) => {
    const v = r[i];
    if (typeof v !== "number") throw new Error(`non-numeric cell in '${name}'`);
    return v;
  });
}

/** Sort rows by one or two numeric columns (ascending, stable). */
export function sortRows(t: Table, ...names: string[]): Table {
  const idx = names.map((n) => {
    const i = t.header.indexOf(n);
    if (i < 0) throw new Error(`missing sort column '${n}'`);
    return i;
  });
  const rows = [...t.rows].sort((a, b) => {
    for (const i of idx) {
      const d = (a[i] as number) - (b[i] as number);
      if (d !== 0) return d;
    }
    return 0;
  });
  return { header: t.header, rows };
}

/**
 * A (t, z, value) series file reshaped to time slices.
 * Rows are sorted before use so on-disk order is irrelevant.
 */
export interface Series {
  times: number[];
  zs: number[];
  values: number[][]; // [time][z]
}

export function reshapeSeries(t: Table, valueName: string): Series {
  const sorted = sortRows(t, "t", "z");
  const ts = column(sorted, "t");
  const zs = column(sorted, "z");
  const vals = column(sorted, valueName);
  const times = [...new Set(ts)];
  const zAxis = [...new Set(zs)];
  if (times.length * zAxis.length !== vals.length) {
    throw new Error("series is not a full (t, z) grid");
  }
  const values: number[][] = [];
  for (let i = 0; i < times.length; i++) {
    values.push(vals.slice(i * zAxis.length, (i + 1) * zAxis.length));
  }
  return { times, zs: zAxis, values };
}
