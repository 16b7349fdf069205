/**
 * Figure builders over the solver's CSV schema.
 *
 * Nothing here recomputes physics: every plotted number comes from a CSV
 * cell.  The log-log slope annotation prints the file's fitted_slope
 * column verbatim; an independent least-squares fit of the plotted points
 * is computed only to cross-check that annotation.
 */

import { readFileSync, writeFileSync } from "fs";
import { Table, column, parseCsv, reshapeSeries, sortRows } from "./csv.js";
import { Annotation, Curve, buildChart, paletteColor } from "./svg.js";

export interface SweepSpec {
  kind: "sweep-overlay";
  inputs: string[];          // one series CSV per sweep member
  labels: string[];          // legend entry per member
  valueColumn: string;       // flowrate | mean_pressure | eta_r | eta_z
  sliceTimeMs?: number;      // profile vs z at this time (default 8 ms)
  view?: "profile" | "history";
  sliceZ?: number;           // for the history view (default mid-channel)
  title?: string;
  output: string;
}

export interface LoglogSpec {
  kind: "loglog";
  input: string;             // convergence.csv
  output: string;
  title?: string;
}

function nearestIndex(xs: number[], target: number): number {
  let best = 0;
  for (let i = 1; i < xs.length; i++) {
    if (Math.abs(xs[i] - target) < Math.abs(xs[best] - target)) best = i;
  }
  return best;
}

export function plotSweep(spec: SweepSpec): string {
  if (spec.inputs.length === 0) throw new Error("no sweep inputs");
  if (spec.labels.length !== spec.inputs.length) {
    throw new Error("labels must match inputs");
  }
  const view = spec.view ?? "profile";
  const curves: Curve[] = [];
  spec.inputs.forEach((path, i) => {
    const series = reshapeSeries(parseCsv(readFileSync(path, "utf-8")),
      spec.valueColumn);
    if (view === "profile") {
      const it = nearestIndex(series.times, 1e-3 * (spec.sliceTimeMs ?? 8));
      curves.push({
        x: series.zs, y: series.values[it],
        color: paletteColor(i), label: spec.labels[i],
      });
    } else {
      const iz = spec.sliceZ !== undefined
        ? nearestIndex(series.zs, spec.sliceZ)
        : Math.floor(series.zs.length / 2);
      curves.push({
        x: series.times.map((t) => 1e3 * t),
        y: series.values.map((row) => row[iz]),
        color: paletteColor(i), label: spec.labels[i],
      });
    }
  });
  const xLabel = view === "profile" ? "z (cm)" : "t (ms)";
  const svg = buildChart({
    title: spec.title ?? `${spec.valueColumn} overlay`,
    xLabel, yLabel: spec.valueColumn, curves,
  });
  writeFileSync(spec.output, svg);
  return svg;
}

/** Least squares slope of log10(err) vs log10(dt); mirrors the solver's fit. */
export function fitSlope(dts: number[], errs: number[]): number {
  const x = dts.map(Math.log10);
  const y = errs.map(Math.log10);
  const n = x.length;
  const mx = x.reduce((a, b) => a + b, 0) / n;
  const my = y.reduce((a, b) => a + b, 0) / n;
  let num = 0, den = 0;
  for (let i = 0; i < n; i++) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return num / den;
}

export interface LoglogResult {
  svg: string;
  /** per quantity: the file's slope column and this module's cross-check fit */
  slopes: Record<string, { annotated: number; refit: number }>;
}

export function plotLoglog(spec: LoglogSpec): LoglogResult {
  const table = sortRows(parseCsv(readFileSync(spec.input, "utf-8")),
    "dt");
  const qcol = table.header.indexOf("quantity");
  if (qcol < 0) throw new Error("convergence.csv needs a quantity column");
  const quantities = [...new Set(table.rows.map((r) => String(r[qcol])))].sort();

  const curves: Curve[] = [];
  const annotations: Annotation[] = [];
  const slopes: LoglogResult["slopes"] = {};
  let guideAnchor: { dt: number[]; err: number[] } | null = null;

  quantities.forEach((q, i) => {
    const rows = table.rows.filter((r) => r[qcol] === q);
    const sub: Table = { header: table.header, rows };
    const dts = column(sub, "dt");
    const errs = column(sub, "error");
    const annotated = column(sub, "fitted_slope")[0];
    if (dts.length < 2) {
      throw new Error(`quantity '${q}' has fewer than 2 points`);
    }
    const color = paletteColor(i);
    curves.push({ x: dts, y: errs, color, label: q, markers: true });
    annotations.push({ text: `${q} slope ${annotated}`, color });
    slopes[q] = { annotated, refit: fitSlope(dts, errs) };
    if (!guideAnchor) guideAnchor = { dt: dts, err: errs };
  });

  // unit-slope reference line anchored at the first quantity's last point
  const anchor = guideAnchor!;
  const dtRange = [Math.min(...anchor.dt), Math.max(...anchor.dt)];
  const eAnchor = anchor.err[anchor.dt.indexOf(dtRange[1])];
  curves.push({
    x: dtRange,
    y: dtRange.map((dt) => (eAnchor * dt) / dtRange[1]),
    color: "#d62728", label: "first-order guide", dash: "6,3", width: 1.0,
  });

  const svg = buildChart({
    title: spec.title ?? "temporal self-convergence",
    xLabel: "dt (s)", yLabel: "L2 error", curves, logLog: true, annotations,
  });
  writeFileSync(spec.output, svg);
  return { svg, slopes };
}
