# -*- coding: utf-8 -*-
"""
CSV/VTK writers and the reproducibility manifest.

CSV files carry a documented header row, 17-significant-digit decimal
values, and deterministic row order (time ascending, then z ascending),
so two single-threaded runs with the same configuration produce
byte-identical output.

File map of a run directory:
    errors.csv                quantity, rel_l2_error, ceiling, reported, verdict
    ledger.csv                one audited energy record per step
    series_flowrate.csv       t, z, flowrate
    series_pressure.csv       t, z, mean_pressure
    series_displacement.csv   t, z, eta_z, eta_r
    profiles_t{ms}ms.csv      z, eta_z, eta_r, xi_z, xi_r
    sweep_report.csv          observable, h_coarse, h_fine, cauchy_l2
    convergence.csv           quantity, dt, error, fitted_slope
    manifest.txt              config snapshot, version, outputs, wall time
"""

from __future__ import annotations

import os
import time

import numpy as np

from .mesh import Mesh

VERSION = "0.1.0"


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % x
    return str(x)


def write_csv(header, rows, path):
    """Write a header plus rows with 17 significant digits per number."""
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(x) for x in row) + "\n")


def read_csv(path):
    """Read back a CSV written by write_csv (floats where possible)."""
    with open(path) as f:
        header = f.readline().strip().split(",")
        rows = []
        for line in f:
            vals = []
            for tok in line.strip().split(","):
                try:
                    vals.append(float(tok))
                except ValueError:
                    vals.append(tok)
            rows.append(vals)
    return header, rows


def write_series_csv(path, times, zs, *columns, names=("value",)):
    """Time/space series in (t asc, z asc) row order."""
    header = ["t", "z"] + list(names)
    rows = []
    for it, t in enumerate(times):
        for iz, z in enumerate(zs):
            rows.append([t, z] + [col[it, iz] for col in columns])
    write_csv(header, rows, path)


def write_ledger_csv(ledger, path):
    names, rows = ledger.rows()
    write_csv(names, rows, path)


def write_vtk(path, m: Mesh, v=None, p=None, d=None, U=None):
    """Legacy ASCII unstructured-grid snapshot of both sub-meshes.

    Point data: velocity vector, pressure, displacement vector; vertex
    values only (straight triangles).
    """
    nf, ns = m.fluid.n_vert, m.solid.n_vert
    pts = np.vstack([m.fluid_verts_cur, m.solid.verts])
    tris = np.vstack([m.fluid.tris, m.solid.tris + nf])
    npts, ntri = len(pts), len(tris)

    vel = np.zeros((npts, 2))
    if v is not None:
        vel[:nf, 0] = v[:m.fluid.n_p2][:nf]
        vel[:nf, 1] = v[m.fluid.n_p2:][:nf]
    pres = np.zeros(npts)
    if p is not None:
        pres[:nf] = p
    disp = np.zeros((npts, 2))
    if d is not None:
        disp[:nf] = d
    if U is not None:
        disp[nf:, 0] = U[:m.solid.n_p2][:ns]
        disp[nf:, 1] = U[m.solid.n_p2:][:ns]

    with open(path, "w") as f:
        f.write("# vtk DataFile Version 3.0\n")
        f.write("channel fsi snapshot\n")
        f.write("ASCII\n")
        f.write("DATASET UNSTRUCTURED_GRID\n")
        f.write("POINTS %d float\n" % npts)
        for x, y in pts:
            f.write("%.17g %.17g 0\n" % (x, y))
        f.write("CELLS %d %d\n" % (ntri, 4 * ntri))
        for a, b, c in tris:
            f.write("3 %d %d %d\n" % (a, b, c))
        f.write("CELL_TYPES %d\n" % ntri)
        f.write("5\n" * ntri)
        f.write("POINT_DATA %d\n" % npts)
        f.write("VECTORS velocity float\n")
        for a, b in vel:
            f.write("%.17g %.17g 0\n" % (a, b))
        f.write("SCALARS pressure float 1\n")
        f.write("LOOKUP_TABLE default\n")
        for a in pres:
            f.write("%.17g\n" % a)
        f.write("VECTORS displacement float\n")
        for a, b in disp:
            f.write("%.17g %.17g 0\n" % (a, b))


class RunManifest:
    """Tracks outputs of one run and writes a manifest text file."""

    def __init__(self, out_dir, config_text, mesh_info=""):
        self.out_dir = out_dir
        self.config_text = config_text
        self.mesh_info = mesh_info
        self.files = []
        self._t0 = time.perf_counter()
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name):
        p = os.path.join(self.out_dir, name)
        self.files.append(p)
        return p

    def write(self):
        wall = time.perf_counter() - self._t0
        path = os.path.join(self.out_dir, "manifest.txt")
        with open(path, "w") as f:
            f.write("channelfsi version %s\n" % VERSION)
            f.write("wall_clock_s %.3f\n" % wall)
            f.write("mesh %s\n" % self.mesh_info)
            f.write("outputs:\n")
            for p in self.files:
                f.write("  %s\n" % os.path.basename(p))
            f.write("config:\n")
            for line in self.config_text.splitlines():
                f.write("  %s\n" % line)
        missing = [p for p in self.files if not os.path.exists(p)]
        if missing:
            raise IOError("manifest lists missing outputs: %s" % missing)
        return path
