#!/usr/bin/env node
/**
 * Figure CLI over the solver's CSV outputs.
 *
 * Usage:
 *   channelfsi-figures loglog --input convergence.csv --out fig.svg
 *   channelfsi-figures sweep --value flowrate --out fig.svg \
 *       --inputs a.csv,b.csv --labels "h=0.02,h=0.01" [--time-ms 8]
 *       [--view history] [--z 3.0]
 */

import { plotLoglog, plotSweep } from "./figures.js";

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`expected --flag value pairs, got '${key}'`);
    }
    flags.set(key.slice(2), argv[i + 1]);
  }
  return flags;
}

function need(flags: Map<string, string>, key: string): string {
  const v = flags.get(key);
  if (v === undefined) throw new Error(`missing --${key}`);
  return v;
}

export function main(argv: string[]): number {
  const [cmd, ...rest] = argv;
  try {
    if (cmd === "loglog") {
      const flags = parseFlags(rest);
      const res = plotLoglog({
        kind: "loglog",
        input: need(flags, "input"),
        output: need(flags, "out"),
      });
      for (const [q, s] of Object.entries(res.slopes)) {
        console.log(`${q}: annotated slope ${s.annotated} (refit ${s.refit})`);
      }
      return 0;
    }
    if (cmd === "sweep") {
      const flags = parseFlags(rest);
      plotSweep({
        kind: "sweep-overlay",
        inputs: need(flags, "inputs").split(","),
        labels: need(flags, "labels").split(","),
        valueColumn: need(flags, "value"),
        sliceTimeMs: flags.has("time-ms") ? Number(flags.get("time-ms")) : undefined,
        view: (flags.get("view") as "profile" | "history") ?? "profile",
        sliceZ: flags.has("z") ? Number(flags.get("z")) : undefined,
        output: need(flags, "out"),
      });
      console.log(`wrote ${flags.get("out")}`);
      return 0;
    }
    console.error("usage: channelfsi-figures <loglog|sweep> --flags ...");
    return 2;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
