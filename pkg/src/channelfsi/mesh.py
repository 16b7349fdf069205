# -*- coding: utf-8 -*-
"""
Structured triangulations of the fluid and wall rectangles with a shared
1D interface, boundary tags, and mesh motion.

The fluid occupies (0,L) x (0,R) with nz x nr_f cells and the thick wall
(0,L) x (R,R+H) with nz x nr_s cells.  Each quad is split into two
triangles with the diagonal direction alternating by cell parity, so the
triangles are right triangles (non-obtuse) and the P1 Laplacian used for
mesh motion is an M-matrix.

Geometry is piecewise linear (straight-sided triangles placed by their
vertices); quadratic field nodes sit at edge midpoints of the reference
mesh and midpoint positions under motion are the averages of the moved
edge endpoints.  Only fluid vertex coordinates move; the wall mesh and
the 1D interface reference coordinates are fixed.
"""

from __future__ import annotations

import numpy as np


class InvertedElementError(RuntimeError):
    """A mesh motion produced a non-positive triangle area."""


class MeshAuditError(AssertionError):
    """A mesh invariant (orientation, tags, trace conformity) failed."""


class TriGrid:
    """One structured triangulated rectangle with P2 node numbering."""

    def __init__(self, z0, z1, r0, r1, nz, nr):
        self.nz, self.nr = nz, nr
        self.z0, self.z1, self.r0, self.r1 = z0, z1, r0, r1
        zs = np.linspace(z0, z1, nz + 1)
        rs = np.linspace(r0, r1, nr + 1)
        zz, rr = np.meshgrid(zs, rs)           # shape (nr+1, nz+1)
        self.verts = np.column_stack([zz.ravel(), rr.ravel()])
        self.n_vert = (nz + 1) * (nr + 1)

        tris = []
        vid = lambda i, j: j * (nz + 1) + i
        for j in range(nr):
            for i in range(nz):
                a, b = vid(i, j), vid(i + 1, j)
                c, d = vid(i + 1, j + 1), vid(i, j + 1)
                if (i + j) % 2 == 0:
                    tris.append((a, b, c))
                    tris.append((a, c, d))
                else:
                    tris.append((a, b, d))
                    tris.append((b, c, d))
        self.tris = np.array(tris, dtype=np.int64)
        self.n_tri = len(self.tris)

        # unique edges, deterministic first-seen order
        edge_ids = {}
        edges = []
        tri_edges = np.empty((self.n_tri, 3), dtype=np.int64)
        for t, (a, b, c) in enumerate(self.tris):
            for k, (u, v) in enumerate(((a, b), (b, c), (a, c))):
                key = (u, v) if u < v else (v, u)
                e = edge_ids.get(key)
                if e is None:
                    e = len(edges)
                    edge_ids[key] = e
                    edges.append(key)
                tri_edges[t, k] = e
        self.edges = np.array(edges, dtype=np.int64)
        self.n_edge = len(edges)
        self.tri_edges = tri_edges
        self._edge_ids = edge_ids

        # P2 connectivity: locals (v0, v1, v2, m01, m12, m02)
        self.n_p2 = self.n_vert + self.n_edge
        self.p2 = np.hstack([self.tris, self.n_vert + tri_edges])
        self.p2_ref = np.vstack([
            self.verts,
            0.5 * (self.verts[self.edges[:, 0]] + self.verts[self.edges[:, 1]]),
        ])

    def vid(self, i, j):
        return j * (self.nz + 1) + i

    def edge_p2(self, u, v):
        """P2 node id of the midpoint of vertex pair (u, v)."""
        key = (u, v) if u < v else (v, u)
        return self.n_vert + self._edge_ids[key]

    def boundary_edges(self, side):
        """Boundary edge triples (va, vb, mid_p2) along one side.

        side: 'left' (z=z0), 'right' (z=z1), 'bottom' (r=r0), 'top' (r=r1).
        Triples are ordered by increasing coordinate along the side.
        """
        out = []
        if side in ("bottom", "top"):
            j = 0 if side == "bottom" else self.nr
            for i in range(self.nz):
                u, v = self.vid(i, j), self.vid(i + 1, j)
                out.append((u, v, self.edge_p2(u, v)))
        else:
            i = 0 if side == "left" else self.nz
            for j in range(self.nr):
                u, v = self.vid(i, j), self.vid(i, j + 1)
                out.append((u, v, self.edge_p2(u, v)))
        return np.array(out, dtype=np.int64)

    def side_p2_nodes(self, side):
        """All P2 node ids on one side, ordered along the side."""
        edges = self.boundary_edges(side)
        nodes = [edges[0, 0]]
        for va, vb, mid in edges:
            nodes.extend([mid, vb])
        return np.array(nodes, dtype=np.int64)


def triangle_areas(verts, tris):
    p0, p1, p2 = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
    return 0.5 * ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
                  - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))


class Mesh:
    """Conforming fluid + wall triangulations with tagged boundaries.

    Attributes
    ----------
    fluid, solid : TriGrid
    fluid_verts_cur : (n_vert_f, 2) current fluid vertex coordinates
    trace_* : 1D interface numbering of size n_trace = 2 nz + 1, ordered by z,
        with even entries at vertices and odd entries at edge midpoints.
    """

    def __init__(self, R, L, H, nz, nr_f, nr_s):
        if min(R, L, H) <= 0.0:
            raise ValueError("degenerate geometry: R, L, H must be positive")
        if min(nz, nr_f, nr_s) < 2:
            raise ValueError("subdivisions must be >= 2")
        self.R, self.L, self.H = R, L, H
        self.nz = nz
        self.fluid = TriGrid(0.0, L, 0.0, R, nz, nr_f)
        self.solid = TriGrid(0.0, L, R, R + H, nz, nr_s)
        self.fluid_verts_cur = self.fluid.verts.copy()

        # interface trace numbering shared by both sides
        self.n_trace = 2 * nz + 1
        self.trace_fluid_p2 = self.fluid.side_p2_nodes("top")
        self.trace_solid_p2 = self.solid.side_p2_nodes("bottom")
        self.trace_z = self.fluid.p2_ref[self.trace_fluid_p2, 0].copy()
        # per interface edge: trace-local (left, right, mid)
        self.trace_edges = np.array([(2 * k, 2 * k + 2, 2 * k + 1)
                                     for k in range(nz)], dtype=np.int64)
        self.trace_ref_h = np.full(nz, L / nz)

        # fluid boundary tags
        self.inlet_edges = self.fluid.boundary_edges("left")
        self.outlet_edges = self.fluid.boundary_edges("right")
        self.symmetry_edges = self.fluid.boundary_edges("bottom")
        self.interface_edges_f = self.fluid.boundary_edges("top")
        self.inlet_p2 = self.fluid.side_p2_nodes("left")
        self.outlet_p2 = self.fluid.side_p2_nodes("right")
        self.symmetry_p2 = self.fluid.side_p2_nodes("bottom")
        self.interface_p2 = self.trace_fluid_p2
        self.corner_p2 = np.array([self.trace_fluid_p2[0], self.trace_fluid_p2[-1]],
                                  dtype=np.int64)

        # wall boundary tags
        ends = np.concatenate([self.solid.side_p2_nodes("left"),
                               self.solid.side_p2_nodes("right")])
        self.solid_end_p2 = np.unique(ends)
        self.solid_ext_p2 = self.solid.side_p2_nodes("top")
        self.solid_interface_p2 = self.trace_solid_p2

        # interface vertices (for the P1 mesh-motion problem)
        self.interface_verts = self.fluid.boundary_edges("top")[:, 0]
        self.interface_verts = np.append(self.interface_verts,
                                         self.fluid.vid(nz, self.fluid.nr))
        other = [self.fluid.side_p2_nodes(s) for s in ("left", "right", "bottom")]
        other_vert = np.unique(np.concatenate(other))
        self.fixed_boundary_verts = other_vert[other_vert < self.fluid.n_vert]
        self.fixed_boundary_verts = np.setdiff1d(self.fixed_boundary_verts,
                                                 self.interface_verts)

        audit(self)

    # ---- degrees of freedom ------------------------------------------------
    @property
    def n_vdof(self):
        """Fluid velocity dofs; z-block then r-block."""
        return 2 * self.fluid.n_p2

    @property
    def n_pdof(self):
        return self.fluid.n_vert

    @property
    def n_sdof(self):
        return 2 * self.solid.n_p2

    def vdof(self, nodes, comp):
        """Velocity dof ids of component comp ('z' -> 0, 'r' -> 1) at nodes."""
        off = 0 if comp == "z" else self.fluid.n_p2
        return np.asarray(nodes) + off

    def sdof(self, nodes, comp):
        off = 0 if comp == "z" else self.solid.n_p2
        return np.asarray(nodes) + off

    def trace_dof(self, comp):
        """Trace dof ids of one displacement component in the 2*n_trace layout."""
        off = 0 if comp == "z" else self.n_trace
        return np.arange(self.n_trace) + off

    # ---- motion -------------------------------------------------------------
    def with_fluid_coords(self, verts_cur):
        """Return a view of this mesh with new current fluid coordinates.

        Raises InvertedElementError if any current triangle area is <= 0,
        signalling that the time step must be rejected.
        """
        areas = triangle_areas(verts_cur, self.fluid.tris)
        if np.any(areas <= 0.0):
            bad = int(np.argmin(areas))
            raise InvertedElementError(
                "inverted fluid element %d (area %.3e)" % (bad, areas[bad]))
        import copy
        m = copy.copy(self)
        m.fluid_verts_cur = np.array(verts_cur, dtype=float)
        return m


def build_rect_mesh(p, nz, nr_f, nr_s) -> Mesh:
    """Mesh the fluid and wall rectangles of a parameter record."""
    return Mesh(R=p.R, L=p.L, H=p.H, nz=nz, nr_f=nr_f, nr_s=nr_s)


def apply_mesh_motion(m: Mesh, d_vert) -> Mesh:
    """Move fluid vertices by the displacement field d_vert (n_vert_f, 2).

    The harmonic-extension motion vanishes on inlet, outlet and symmetry
    edges; the radial map of the stability variant moves inlet/outlet
    vertices radially, so only element validity is enforced here.
    """
    d_vert = np.asarray(d_vert, dtype=float)
    if d_vert.shape != m.fluid.verts.shape:
        raise ValueError("displacement shape mismatch")
    return m.with_fluid_coords(m.fluid.verts + d_vert)


def p2_from_vertex_field(grid: TriGrid, vert_vals):
    """Extend per-vertex values to all P2 nodes (midpoints take endpoint means)."""
    vert_vals = np.asarray(vert_vals, dtype=float)
    mids = 0.5 * (vert_vals[grid.edges[:, 0]] + vert_vals[grid.edges[:, 1]])
    return np.concatenate([vert_vals, mids], axis=0)


def fluid_p2_coords(m: Mesh):
    """Current coordinates of all fluid P2 nodes."""
    return p2_from_vertex_field(m.fluid, m.fluid_verts_cur)


def audit(m: Mesh):
    """Exhaustive mesh audit: orientation, tag partition, trace conformity."""
    for verts, tris, label in ((m.fluid.verts, m.fluid.tris, "fluid ref"),
                               (m.fluid_verts_cur, m.fluid.tris, "fluid cur"),
                               (m.solid.verts, m.solid.tris, "solid")):
        if np.any(triangle_areas(verts, tris) <= 0.0):
            raise MeshAuditError("non-positive triangle area in %s mesh" % label)

    # boundary edges are those used by exactly one triangle
    for grid, tags in (
            (m.fluid, [m.inlet_edges, m.outlet_edges, m.symmetry_edges,
                       m.interface_edges_f]),
            (m.solid, [m.solid.boundary_edges("left"),
                       m.solid.boundary_edges("right"),
                       m.solid.boundary_edges("top"),
                       m.solid.boundary_edges("bottom")])):
        counts = np.bincount(grid.tri_edges.ravel(), minlength=grid.n_edge)
        boundary = set(np.flatnonzero(counts == 1).tolist())
        tagged = []
        for tag in tags:
            for va, vb, mid in tag:
                tagged.append(grid._edge_ids[(va, vb) if va < vb else (vb, va)])
        if sorted(tagged) != sorted(boundary) or len(tagged) != len(set(tagged)):
            raise MeshAuditError("boundary tags do not partition the boundary")

    # trace maps: injective, coordinate-conforming
    if (len(np.unique(m.trace_fluid_p2)) != m.n_trace
            or len(np.unique(m.trace_solid_p2)) != m.n_trace):
        raise MeshAuditError("trace maps are not injective")
    cf = m.fluid.p2_ref[m.trace_fluid_p2]
    cs = m.solid.p2_ref[m.trace_solid_p2]
    if not np.allclose(cf, cs, rtol=0.0, atol=1e-14 * max(m.L, m.R)):
        raise MeshAuditError("interface reference coordinates do not conform")
    if np.any(np.diff(m.trace_z) <= 0.0):
        raise MeshAuditError("trace nodes are not ordered by z")
    return True
