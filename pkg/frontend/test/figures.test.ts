import { createHash } from "crypto";
import { mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { beforeAll, describe, expect, it } from "vitest";

import { column, parseCsv, reshapeSeries, sortRows } from "../src/csv.js";
import { fitSlope, plotLoglog, plotSweep } from "../src/figures.js";

let dir: string;

beforeAll(() => {
  dir = mkdtempSync(join(tmpdir(), "figs-"));
});

function sha(s: string): string {
  return createHash("sha256").update(s).digest("hex");
}

/** Least-squares fit identical to the solver's reported slope. */
function solverSlope(dts: number[], errs: number[]): number {
  return fitSlope(dts, errs);
}

function writeConvergenceCsv(path: string, shuffle = false): {
  dts: number[]; errs: Record<string, number[]>; slopes: Record<string, number>;
} {
  const dts = [4e-4, 2e-4, 1e-4, 5e-5];
  const errs: Record<string, number[]> = {
    displacement: dts.map((dt) => 12.3 * Math.pow(dt, 1.07)),
    velocity: dts.map((dt) => 900 * Math.pow(dt, 1.21)),
    pressure: dts.map((dt) => 5e4 * Math.pow(dt, 1.02)),
  };
  const slopes: Record<string, number> = {};
  const rows: string[] = [];
  for (const q of Object.keys(errs)) {
    slopes[q] = solverSlope(dts, errs[q]);
    dts.forEach((dt, i) => {
      rows.push(`${q},${dt},${errs[q][i].toExponential(17)},${slopes[q]}`);
    });
  }
  if (shuffle) {
    // deterministic shuffle
    for (let i = rows.length - 1; i > 0; i--) {
      const j = (i * 7 + 3) % (i + 1);
      [rows[i], rows[j]] = [rows[j], rows[i]];
    }
  }
  writeFileSync(path, "quantity,dt,error,fitted_slope\n" + rows.join("\n") + "\n");
  return { dts, errs, slopes };
}

function writeSeriesCsv(path: string, scale: number, shuffle = false): void {
  const times = [0, 1e-3, 2e-3, 3e-3];
  const zs = [0, 2, 4, 6];
  const rows: string[] = [];
  for (const t of times) {
    for (const z of zs) {
      const v = scale * Math.sin(z + 1e3 * t);
      rows.push(`${t},${z},${v}`);
    }
  }
  if (shuffle) rows.reverse();
  writeFileSync(path, "t,z,flowrate\n" + rows.join("\n") + "\n");
}

describe("csv", () => {
  it("parses and sorts", () => {
    const t = parseCsv("a,b\n3,x\n1,y\n2,z\n");
    expect(column(t, "a")).toEqual([3, 1, 2]);
    expect(sortRows(t, "a").rows.map((r) => r[1])).toEqual(["y", "z", "x"]);
    expect(() => column(t, "missing")).toThrow();
  });

  it("reshapes a full series grid", () => {
    const p = join(dir, "grid.csv");
    writeSeriesCsv(p, 1.0);
    const s = reshapeSeries(parseCsv(readFileSync(p, "utf-8")), "flowrate");
    expect(s.times).toHaveLength(4);
    expect(s.zs).toEqual([0, 2, 4, 6]);
    expect(s.values[2][1]).toBeCloseTo(Math.sin(2 + 2), 12);
  });
});

describe("plotLoglog", () => {
  it("annotates exactly the slope stored in the csv", () => {
    const input = join(dir, "conv.csv");
    const { slopes } = writeConvergenceCsv(input);
    const out = join(dir, "conv.svg");
    const res = plotLoglog({ kind: "loglog", input, output: out });
    for (const q of Object.keys(slopes)) {
      expect(res.slopes[q].annotated).toBe(slopes[q]); // exact float equality
      expect(res.svg).toContain(`${q} slope ${slopes[q]}`);
    }
  });

  it("refit matches the stored slope to 1e-12 (same formula)", () => {
    const input = join(dir, "conv2.csv");
    const { slopes } = writeConvergenceCsv(input);
    const res = plotLoglog({ kind: "loglog", input, output: join(dir, "c2.svg") });
    for (const q of Object.keys(slopes)) {
      expect(Math.abs(res.slopes[q].refit - slopes[q])).toBeLessThan(1e-12);
    }
  });

  it("recovers slope 1.000 from synthetic first-order data", () => {
    const dts = [4e-4, 2e-4, 1e-4, 5e-5];
    const errs = dts.map((dt) => 0.37 * dt);
    expect(fitSlope(dts, errs)).toBeCloseTo(1.0, 12);
  });

  it("draws a unit-slope guide line", () => {
    const input = join(dir, "conv3.csv");
    writeConvergenceCsv(input);
    const res = plotLoglog({ kind: "loglog", input, output: join(dir, "c3.svg") });
    expect(res.svg).toContain("first-order guide");
  });

  it("errors with fewer than 2 points", () => {
    const input = join(dir, "short.csv");
    writeFileSync(input, "quantity,dt,error,fitted_slope\nvelocity,1e-4,0.1,1\n");
    expect(() =>
      plotLoglog({ kind: "loglog", input, output: join(dir, "never.svg") })
    ).toThrow(/fewer than 2/);
  });

  it("is invariant to row shuffling", () => {
    const a = join(dir, "conv_a.csv");
    const b = join(dir, "conv_b.csv");
    writeConvergenceCsv(a, false);
    writeConvergenceCsv(b, true);
    const ra = plotLoglog({ kind: "loglog", input: a, output: join(dir, "a.svg") });
    const rb = plotLoglog({ kind: "loglog", input: b, output: join(dir, "b.svg") });
    expect(sha(ra.svg)).toBe(sha(rb.svg));
  });
});

describe("plotSweep", () => {
  it("renders one curve per sweep member", () => {
    const inputs = [0.02, 0.01, 0.005, 0.0025].map((h, i) => {
      const p = join(dir, `m${i}.csv`);
      writeSeriesCsv(p, 1 + i * 0.1);
      return p;
    });
    const svg = plotSweep({
      kind: "sweep-overlay", inputs,
      labels: inputs.map((_, i) => `h=${[0.02, 0.01, 0.005, 0.0025][i]}`),
      valueColumn: "flowrate", sliceTimeMs: 2,
      output: join(dir, "sweep.svg"),
    });
    expect((svg.match(/<polyline/g) ?? []).length).toBe(4);
    expect(svg).toContain("h=0.0025");
  });

  it("handles a single member without crashing", () => {
    const p = join(dir, "solo.csv");
    writeSeriesCsv(p, 1.0);
    const svg = plotSweep({
      kind: "sweep-overlay", inputs: [p], labels: ["h=0.02"],
      valueColumn: "flowrate", output: join(dir, "solo.svg"),
    });
    expect((svg.match(/<polyline/g) ?? []).length).toBe(1);
  });

  it("is invariant to row shuffling of inputs", () => {
    const a = join(dir, "sw_a.csv");
    const b = join(dir, "sw_b.csv");
    writeSeriesCsv(a, 2.0, false);
    writeSeriesCsv(b, 2.0, true);
    const sa = plotSweep({
      kind: "sweep-overlay", inputs: [a], labels: ["x"],
      valueColumn: "flowrate", output: join(dir, "sa.svg"),
    });
    const sb = plotSweep({
      kind: "sweep-overlay", inputs: [b], labels: ["x"],
      valueColumn: "flowrate", output: join(dir, "sb.svg"),
    });
    expect(sha(sa)).toBe(sha(sb));
  });

  it("supports the history view at a z slice", () => {
    const p = join(dir, "hist.csv");
    writeSeriesCsv(p, 1.0);
    const svg = plotSweep({
      kind: "sweep-overlay", inputs: [p], labels: ["x"],
      valueColumn: "flowrate", view: "history", sliceZ: 4.0,
      output: join(dir, "hist.svg"),
    });
    expect(svg).toContain("t (ms)");
  });

  it("rejects mismatched labels", () => {
    const p = join(dir, "mm.csv");
    writeSeriesCsv(p, 1.0);
    expect(() =>
      plotSweep({
        kind: "sweep-overlay", inputs: [p], labels: [],
        valueColumn: "flowrate", output: join(dir, "never2.svg"),
      })
    ).toThrow(/labels/);
  });
});
