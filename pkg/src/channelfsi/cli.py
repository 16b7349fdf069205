# -*- coding: utf-8 -*-
"""
Command-line surface.

Subcommands: run <config>, example1, example2, sweep-h, convergence-dt,
stability-test.  Global flags: --out DIR, --param k=v (repeatable),
--mesh nz,nr_f,nr_s, --dt, --beta.

Exit codes: 0 success, 2 configuration error, 3 solver failure (the
failing step index is printed).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import bench, energy, output
from .linsolve import SolverError
from .params import (ConfigError, PressureData, RunSettings, apply_overrides,
                     load_config, serialize, table_example1, table_example2)
from .scheme import Simulator, StepFailure


def _parse_args(argv):
    ap = argparse.ArgumentParser(prog="channelfsi")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", default="fsi_out")
        sp.add_argument("--param", action="append", default=[],
                        metavar="K=V")
        sp.add_argument("--mesh", default=None, metavar="NZ,NRF,NRS")
        sp.add_argument("--dt", type=float, default=None)
        sp.add_argument("--beta", type=float, default=None)
        sp.add_argument("--snapshots", action="store_true")

    sp = sub.add_parser("run", help="run a configuration file")
    sp.add_argument("config")
    common(sp)
    for name in ("example1", "example2", "sweep-h", "convergence-dt",
                 "stability-test"):
        common(sub.add_parser(name))
    return ap.parse_args(argv)


def _overrides(args):
    out = {}
    for item in args.param:
        if "=" not in item:
            raise ConfigError("--param expects key=value (got %r)" % item)
        k, v = item.split("=", 1)
        out[k] = v
    return out


def _apply_flags(phys, run, args):
    phys, run = apply_overrides(phys, run, _overrides(args))
    if args.mesh:
        try:
            nz, nrf, nrs = (int(x) for x in args.mesh.split(","))
        except ValueError as exc:
            raise ConfigError("--mesh expects nz,nr_f,nr_s") from exc
        run = replace(run, nz=nz, nr_f=nrf, nr_s=nrs)
    if args.dt:
        run = replace(run, dt=args.dt, t_end=max(run.t_end, args.dt))
    if args.beta is not None:
        phys = replace(phys, beta=args.beta)
    return phys, run


def _write_example2_outputs(man, res, snapshots=False, mesh=None, state=None):
    output.write_series_csv(man.path("series_flowrate.csv"), res.times,
                            res.column_z, res.flowrate, names=("flowrate",))
    output.write_series_csv(man.path("series_pressure.csv"), res.times,
                            res.column_z, res.mean_pressure,
                            names=("mean_pressure",))
    output.write_series_csv(man.path("series_displacement.csv"), res.times,
                            res.trace_z, res.eta_z, res.eta_r,
                            names=("eta_z", "eta_r"))
    for t_ms in (1, 6, 8, 12):
        if res.times[-1] < 1e-3 * t_ms - 1e-12:
            continue
        prof = res.profile_at(t_ms)
        rows = [[z, ez, er, xz, xr] for z, ez, er, xz, xr in
                zip(prof["z"], prof["eta_z"], prof["eta_r"],
                    prof["xi_z"], prof["xi_r"])]
        output.write_csv(["z", "eta_z", "eta_r", "xi_z", "xi_r"], rows,
                         man.path("profiles_t%dms.csv" % t_ms))
    output.write_ledger_csv(res.ledger, man.path("ledger.csv"))
    if snapshots and mesh is not None and state is not None:
        output.write_vtk(man.path("snapshot_final.vtk"), mesh, state.v,
                         state.p, state.d_vert, state.U)


def main(argv=None) -> int:
    try:
        args = _parse_args(argv if argv is not None else sys.argv[1:])
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return 2
    except StepFailure as exc:
        print("solver failure at %s" % exc, file=sys.stderr)
        return 3
    except SolverError as exc:
        print("solver failure: %s" % exc, file=sys.stderr)
        return 3


def _dispatch(args) -> int:
    cmd = args.command

    if cmd == "run":
        with open(args.config) as f:
            phys, run = load_config(f.read())
        phys, run = _apply_flags(phys, run, args)
        man = output.RunManifest(args.out, serialize(phys, run),
                                 "%dx%d+%d" % (run.nz, run.nr_f, run.nr_s))
        sim = Simulator(phys, run)
        state = sim.run()
        output.write_ledger_csv(sim.ledger, man.path("ledger.csv"))
        if args.snapshots:
            output.write_vtk(man.path("snapshot_final.vtk"), sim.mesh,
                             state.v, state.p, state.d_vert, state.U)
        man.write()
        print("run finished at t=%.6g after %d steps" % (state.t, state.n))
        return 0

    if cmd == "example1":
        phys = table_example1()
        press = PressureData(kind="constant", p_in=250.0, p_out=0.0)
        run = RunSettings(dt=1e-5, t_end=0.02, nz=60, nr_f=10, nr_s=4,
                          pressure=press)
        phys, run = _apply_flags(phys, run, args)
        man = output.RunManifest(args.out, serialize(phys, run),
                                 "%dx%d+%d" % (run.nz, run.nr_f, run.nr_s))
        rep = bench.run_example1(phys, run)
        output.write_csv(
            ["quantity", "rel_l2_error", "ceiling", "reported", "verdict"],
            rep.as_rows(), man.path("errors.csv"))
        man.write()
        ok = all(r[-1] == "PASS" for r in rep.as_rows())
        for row in rep.as_rows():
            print("%-10s error %.3e (ceiling %.1e, reported %.2e) %s"
                  % tuple(row))
        print("steady after %d iterations (reported alongside: %d)"
              % (rep.iterations, bench.EXAMPLE1_REPORTED["iterations"]))
        return 0 if ok else 3

    if cmd == "example2":
        phys = table_example2()
        run = bench.default_example2_settings()
        phys, run = _apply_flags(phys, run, args)
        man = output.RunManifest(args.out, serialize(phys, run),
                                 "%dx%d+%d" % (run.nz, run.nr_f, run.nr_s))
        res = bench.run_example2(phys, run)
        _write_example2_outputs(man, res, args.snapshots, None,
                                res.final_state)
        man.write()
        print("pulse run finished; max |eta_r| = %.4g cm"
              % np.max(np.abs(res.eta_r)))
        return 0

    if cmd == "sweep-h":
        phys = table_example2()
        run = bench.default_sweep_settings()
        phys, run = _apply_flags(phys, run, args)
        man = output.RunManifest(args.out, serialize(phys, run),
                                 "%dx%d+%d" % (run.nz, run.nr_f, run.nr_s))
        rep = bench.h_sweep(phys, run)
        output.write_csv(["observable", "h_coarse", "h_fine", "cauchy_l2"],
                         rep.rows(), man.path("sweep_report.csv"))
        for h, res in zip(rep.hs, rep.results):
            tag = ("%g" % h).replace(".", "p")
            output.write_series_csv(man.path("series_flowrate_h%s.csv" % tag),
                                    res.times, res.column_z, res.flowrate,
                                    names=("flowrate",))
            output.write_series_csv(man.path("series_pressure_h%s.csv" % tag),
                                    res.times, res.column_z, res.mean_pressure,
                                    names=("mean_pressure",))
            output.write_series_csv(
                man.path("series_displacement_h%s.csv" % tag),
                res.times, res.trace_z, res.eta_z, res.eta_r,
                names=("eta_z", "eta_r"))
        man.write()
        for name in rep.diffs:
            print("%s: cauchy diffs %s (last/first %.3f)"
                  % (name, ["%.3e" % d for d in rep.diffs[name]],
                     rep.contraction(name)))
        return 0

    if cmd == "convergence-dt":
        phys, run = bench.default_convergence_config()
        phys, run = _apply_flags(phys, run, args)
        man = output.RunManifest(args.out, serialize(phys, run),
                                 "%dx%d+%d" % (run.nz, run.nr_f, run.nr_s))
        rep = bench.dt_convergence(phys, run)
        output.write_csv(["quantity", "dt", "error", "fitted_slope"],
                         rep.rows(), man.path("convergence.csv"))
        man.write()
        for name, slope in rep.slopes.items():
            print("%s slope %.3f" % (name, slope))
        return 0

    if cmd == "stability-test":
        phys = table_example2(beta=0.0)
        dt = args.dt or 5e-3
        run = bench.default_stability_settings(dt)
        phys, run = _apply_flags(phys, run, args)
        man = output.RunManifest(args.out, serialize(phys, run),
                                 "%dx%d+%d" % (run.nz, run.nr_f, run.nr_s))
        sim = Simulator(phys, run)
        sim.run()
        report = energy.check_energy_inequality(sim.ledger, run.pressure,
                                                phys, run.dt, phys.R)
        output.write_ledger_csv(sim.ledger, man.path("ledger.csv"))
        rows = [["pass", report["pass"]],
                ["min_slack_rel", report["min_slack_rel"]],
                ["c_min", report["c_min"] if report["c_min"] is not None else "na"],
                ["n_steps", report["n_steps"]],
                ["violations", len(report["violations"])]]
        output.write_csv(["key", "value"], rows, man.path("inequality_report.csv"))
        man.write()
        print("stability audit: %s (min relative slack %.3e over %d steps)"
              % ("PASS" if report["pass"] else "FAIL",
                 report["min_slack_rel"], report["n_steps"]))
        return 0 if report["pass"] else 3

    raise ConfigError("unknown subcommand %r" % cmd)


if __name__ == "__main__":
    sys.exit(main())
