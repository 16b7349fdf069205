# -*- coding: utf-8 -*-
"""
Moving-mesh machinery: harmonic extension of the interface displacement
into the fluid mesh, domain velocity, and the closed-form radial map of
the stability mode.

The extension solves the componentwise P1 Laplace problem on the
*reference* fluid mesh each step; mesh geometry is placed by vertices, so
the extension acts on vertex displacements and quadratic field nodes at
edge midpoints follow as endpoint averages.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse as sp
from scipy.sparse import linalg as spla

from .mesh import Mesh, triangle_areas


def _p1_stiffness(verts, tris, n_vert):
    p0, p1, p2 = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
    det = ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
           - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))
    # constant P1 gradients: grad lambda_k = rot(edge_opposite)/det
    g = np.empty((len(tris), 3, 2))
    g[:, 0, 0] = p1[:, 1] - p2[:, 1]
    g[:, 0, 1] = p2[:, 0] - p1[:, 0]
    g[:, 1, 0] = p2[:, 1] - p0[:, 1]
    g[:, 1, 1] = p0[:, 0] - p2[:, 0]
    g[:, 2, 0] = p0[:, 1] - p1[:, 1]
    g[:, 2, 1] = p1[:, 0] - p0[:, 0]
    g /= det[:, None, None]
    elem = 0.5 * np.abs(det)[:, None, None] * np.einsum("tia,tja->tij", g, g)
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    return sp.coo_matrix((elem.ravel(), (rows, cols)),
                         shape=(n_vert, n_vert)).tocsr()


class HarmonicExtension:
    """Factorized discrete-harmonic lift of interface vertex displacements."""

    def __init__(self, m: Mesh):
        self.mesh = m
        grid = m.fluid
        A = _p1_stiffness(grid.verts, grid.tris, grid.n_vert)
        fixed = np.concatenate([m.interface_verts, m.fixed_boundary_verts])
        self.fixed = np.unique(fixed)
        mask = np.ones(grid.n_vert, dtype=bool)
        mask[self.fixed] = False
        self.free = np.flatnonzero(mask)
        self.A = A
        self.A_ff = A[self.free][:, self.free].tocsc()
        self.A_fc = A[self.free][:, self.fixed].tocsr()
        self._lu = spla.splu(self.A_ff)

    def extend(self, eta_trace):
        """Lift a trace displacement [z | r] (size 2 n_trace) to fluid vertices.

        Interface values are taken at the trace vertex entries (even trace
        indices); the remaining fluid boundary is clamped to zero.
        """
        m = self.mesh
        n_t = m.n_trace
        eta_vert = np.column_stack([eta_trace[:n_t][::2], eta_trace[n_t:][::2]])
        d = np.zeros((m.fluid.n_vert, 2))
        for comp in range(2):
            g = np.zeros(len(self.fixed))
            sel = np.searchsorted(self.fixed, m.interface_verts)
            g[sel] = eta_vert[:, comp]
            rhs = -self.A_fc @ g
            d_free = self._lu.solve(rhs)
            d[self.free, comp] = d_free
            d[self.fixed, comp] = g
        return d


def harmonic_extension(m: Mesh, eta_trace):
    """One-shot componentwise harmonic extension (see HarmonicExtension)."""
    return HarmonicExtension(m).extend(eta_trace)


def domain_velocity(d_new, d_old, dt):
    """Nodal finite-difference domain velocity w = (d_new - d_old)/dt."""
    return (np.asarray(d_new) - np.asarray(d_old)) / dt


def radial_ale(eta_n, eta_np1, R, dt, coords):
    """Closed-form radial map of the stability mode.

    Maps (z, r) on the current domain (radius R + eta_n) to
    (z, r (R + eta_np1)/(R + eta_n)); eta arrays hold the radial interface
    displacement per axial node column matching coords' columns.  Returns
    (mapped coords, pointwise Jacobian J per column, nodal velocity w).
    """
    eta_n = np.asarray(eta_n, dtype=float)
    eta_np1 = np.asarray(eta_np1, dtype=float)
    if np.any(R + eta_n <= 0.0) or np.any(R + eta_np1 <= 0.0):
        raise ValueError("radial map: nonpositive radius R + eta")
    J = (R + eta_np1) / (R + eta_n)
    rate = (eta_np1 - eta_n) / (dt * (R + eta_n))
    mapped = np.array(coords, dtype=float)
    mapped[:, 1] = coords[:, 1] * J
    w = np.zeros_like(mapped)
    w[:, 1] = rate * coords[:, 1]
    return mapped, J, w


def column_values(m: Mesh, eta_r_trace):
    """Per-vertex radial interface value for each fluid vertex's column."""
    nz = m.fluid.nz
    vals_col = eta_r_trace[::2]              # trace vertices, one per column
    cols = np.tile(np.arange(nz + 1), m.fluid.nr + 1)
    return vals_col[cols]


def element_area_ratio(m: Mesh, verts_new):
    """Per-element area ratio between moved and current fluid coordinates."""
    a_new = triangle_areas(verts_new, m.fluid.tris)
    a_old = triangle_areas(m.fluid_verts_cur, m.fluid.tris)
    return a_new / a_old
