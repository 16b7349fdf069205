# -*- coding: utf-8 -*-
"""
Mixed finite elements and assembly of every bilinear/linear form of
the scheme.

Spaces: continuous vector quadratic velocity / continuous linear pressure
(Taylor-Hood) on the fluid mesh, vector quadratic displacement on the wall
mesh, and quadratic traces on the 1D interface.  Quadrature is a 7-point
degree-5 rule on triangles and 3-point Gauss on interface edges, which is
exact for all mass/stiffness integrands of these spaces.

Velocity/displacement coefficient vectors are component-blocked:
x = [all z-components, all r-components].
"""

from __future__ import annotations

import numpy as np
from scipy import sparse as sp

from .mesh import Mesh, triangle_areas


# ---------------------------------------------------------------------------
# quadrature rules
# ---------------------------------------------------------------------------

def tri_rule_deg5():
    """7-point degree-5 rule on the unit triangle; weights sum to 1/2."""
    s15 = np.sqrt(15.0)
    a1 = (6.0 - s15) / 21.0
    a2 = (6.0 + s15) / 21.0
    w0 = 9.0 / 40.0
    w1 = (155.0 - s15) / 1200.0
    w2 = (155.0 + s15) / 1200.0
    bary = [(1 / 3, 1 / 3, 1 / 3)]
    wts = [w0]
    for a, w in ((a1, w1), (a2, w2)):
        b = 1.0 - 2.0 * a
        bary += [(b, a, a), (a, b, a), (a, a, b)]
        wts += [w, w, w]
    bary = np.array(bary)
    pts = bary[:, 1:]                     # (x, y) = (lambda1, lambda2)
    return pts, 0.5 * np.array(wts)


def tri_rule_collapsed(deg):
    """Tensor Gauss rule on the collapsed square, exact to given degree.

    Used only as an independent high-order oracle for quadrature audits.
    """
    nx = deg + 1
    ny = (deg + 2) // 2 + 1
    gx, wx = np.polynomial.legendre.leggauss(nx)
    gy, wy = np.polynomial.legendre.leggauss(ny)
    gx = 0.5 * (gx + 1.0)
    gy = 0.5 * (gy + 1.0)
    wx *= 0.5
    wy *= 0.5
    X, Y = np.meshgrid(gx, gy)
    W = np.outer(wy, wx) * (1.0 - X)
    pts = np.column_stack([X.ravel(), (Y * (1.0 - X)).ravel()])
    return pts, W.ravel()


def gauss3():
    """3-point Gauss on [0,1] (degree 5)."""
    a = np.sqrt(3.0 / 20.0)
    pts = np.array([0.5 - a, 0.5, 0.5 + a])
    wts = np.array([5.0, 8.0, 5.0]) / 18.0
    return pts, wts


# ---------------------------------------------------------------------------
# reference bases
# ---------------------------------------------------------------------------

def p2_basis(pts):
    """P2 values (nq,6) and reference gradients (nq,6,2).

    Local node order: vertices 0,1,2 then midpoints m01, m12, m02.
    """
    x, y = pts[:, 0], pts[:, 1]
    l0, l1, l2 = 1.0 - x - y, x, y
    vals = np.column_stack([
        l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
        4 * l0 * l1, 4 * l1 * l2, 4 * l0 * l2,
    ])
    dl = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    grads = np.empty((len(pts), 6, 2))
    for d in range(2):
        grads[:, 0, d] = (4 * l0 - 1) * dl[0, d]
        grads[:, 1, d] = (4 * l1 - 1) * dl[1, d]
        grads[:, 2, d] = (4 * l2 - 1) * dl[2, d]
        grads[:, 3, d] = 4 * (l0 * dl[1, d] + l1 * dl[0, d])
        grads[:, 4, d] = 4 * (l1 * dl[2, d] + l2 * dl[1, d])
        grads[:, 5, d] = 4 * (l0 * dl[2, d] + l2 * dl[0, d])
    return vals, grads


def p1_basis(pts):
    x, y = pts[:, 0], pts[:, 1]
    vals = np.column_stack([1.0 - x - y, x, y])
    grads = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    return vals, grads


def p2_line_basis(t):
    """1D quadratic basis on [0,1]; node order (end0, end1, mid)."""
    t = np.asarray(t)
    vals = np.column_stack([(1 - t) * (1 - 2 * t), t * (2 * t - 1), 4 * t * (1 - t)])
    ders = np.column_stack([4 * t - 3, 4 * t - 1, 4 - 8 * t])
    return vals, ders


_TRI_PTS, _TRI_W = tri_rule_deg5()
_P2V, _P2G = p2_basis(_TRI_PTS)
_P1V, _P1G = p1_basis(_TRI_PTS)
_G3_PTS, _G3_W = gauss3()
_L2V, _L2D = p2_line_basis(_G3_PTS)


# ---------------------------------------------------------------------------
# element geometry and scatter helpers
# ---------------------------------------------------------------------------

def _geometry(verts, tris):
    """Per-element |det J| and physical P2 gradients at quadrature points."""
    p0 = verts[tris[:, 0]]
    e1 = verts[tris[:, 1]] - p0
    e2 = verts[tris[:, 2]] - p0
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    inv = np.empty((len(tris), 2, 2))
    inv[:, 0, 0] = e2[:, 1] / det
    inv[:, 0, 1] = -e2[:, 0] / det
    inv[:, 1, 0] = -e1[:, 1] / det
    inv[:, 1, 1] = e1[:, 0] / det
    # grad_x N = J^-T grad_ref N
    G = np.einsum("tda,qid->tqia", inv, _P2G)
    GP1 = np.einsum("tda,id->tia", inv, _P1G)
    return np.abs(det), G, GP1


def _scatter(elem, rows_conn, cols_conn, shape):
    nt, ni, nj = elem.shape
    rows = np.repeat(rows_conn, nj, axis=1).ravel()
    cols = np.tile(cols_conn, (1, ni)).ravel()
    return sp.coo_matrix((elem.ravel(), (rows, cols)), shape=shape).tocsr()


def _scatter_blocks(blocks, conn, n_scalar, offsets):
    """Assemble 2x2 component-block element matrices into a 2n x 2n matrix."""
    mats = []
    for (bi, bj), elem in blocks.items():
        mats.append(_scatter(elem, conn + offsets[bi], conn + offsets[bj],
                             (2 * n_scalar, 2 * n_scalar)))
    out = mats[0]
    for m in mats[1:]:
        out = out + m
    return out.tocsr()


# ---------------------------------------------------------------------------
# volume forms
# ---------------------------------------------------------------------------

def assemble_scalar_mass(grid, verts):
    det, _, _ = _geometry(verts, grid.tris)
    elem = np.einsum("q,t,qi,qj->tij", _TRI_W, det, _P2V, _P2V)
    return _scatter(elem, grid.p2, grid.p2, (grid.n_p2, grid.n_p2))


def assemble_scalar_stiffness(grid, verts):
    det, G, _ = _geometry(verts, grid.tris)
    elem = np.einsum("q,t,tqia,tqja->tij", _TRI_W, det, G, G)
    return _scatter(elem, grid.p2, grid.p2, (grid.n_p2, grid.n_p2))


def assemble_p1_mass(grid, verts):
    det, _, _ = _geometry(verts, grid.tris)
    elem = np.einsum("q,t,qi,qj->tij", _TRI_W, det, _P1V, _P1V)
    return _scatter(elem, grid.tris, grid.tris, (grid.n_vert, grid.n_vert))


def assemble_vector_mass(grid, verts):
    det, _, _ = _geometry(verts, grid.tris)
    elem = np.einsum("q,t,qi,qj->tij", _TRI_W, det, _P2V, _P2V)
    return _scatter_blocks({(0, 0): elem, (1, 1): elem}, grid.p2, grid.n_p2,
                           (0, grid.n_p2))


def assemble_fluid_stiffness(m: Mesh, mu):
    """a_f(v, phi) = 2 mu int D(v):D(phi) on the current fluid mesh."""
    grid = m.fluid
    det, G, _ = _geometry(m.fluid_verts_cur, grid.tris)
    gz = G[:, :, :, 0]
    gr = G[:, :, :, 1]

    def form(ai, aj):
        return np.einsum("q,t,tqi,tqj->tij", _TRI_W, det, ai, aj)

    blocks = {
        (0, 0): mu * (2.0 * form(gz, gz) + form(gr, gr)),
        (0, 1): mu * form(gr, gz),
        (1, 0): mu * form(gz, gr),
        (1, 1): mu * (2.0 * form(gr, gr) + form(gz, gz)),
    }
    return _scatter_blocks(blocks, grid.p2, grid.n_p2, (0, grid.n_p2))


def assemble_elasticity(m: Mesh, p):
    """a_e = 2 mu_s int D(U):D(psi) + lambda_s int (div U)(div psi) + gamma int U.psi."""
    grid = m.solid
    det, G, _ = _geometry(grid.verts, grid.tris)
    gz = G[:, :, :, 0]
    gr = G[:, :, :, 1]
    mu, lam, gamma = p.mu_s, p.lambda_s, p.gamma

    def form(ai, aj):
        return np.einsum("q,t,tqi,tqj->tij", _TRI_W, det, ai, aj)

    mass = np.einsum("q,t,qi,qj->tij", _TRI_W, det, _P2V, _P2V)
    blocks = {
        (0, 0): (2 * mu + lam) * form(gz, gz) + mu * form(gr, gr) + gamma * mass,
        (0, 1): mu * form(gr, gz) + lam * form(gz, gr),
        (1, 0): mu * form(gz, gr) + lam * form(gr, gz),
        (1, 1): (2 * mu + lam) * form(gr, gr) + mu * form(gz, gz) + gamma * mass,
    }
    return _scatter_blocks(blocks, grid.p2, grid.n_p2, (0, grid.n_p2))


def assemble_divergence(m: Mesh):
    """b_f(q, v) = int q div v; rows are pressure dofs, columns velocity dofs."""
    grid = m.fluid
    det, G, _ = _geometry(m.fluid_verts_cur, grid.tris)
    bz = np.einsum("q,t,qi,tqj->tij", _TRI_W, det, _P1V, G[:, :, :, 0])
    br = np.einsum("q,t,qi,tqj->tij", _TRI_W, det, _P1V, G[:, :, :, 1])
    shape = (m.n_pdof, m.n_vdof)
    B = _scatter(bz, grid.tris, grid.p2, shape)
    B = B + _scatter(br, grid.tris, grid.p2 + grid.n_p2, shape)
    return B.tocsr()


def field_at_quad(m: Mesh, coefs):
    """Evaluate a vector P2 fluid field at all volume quadrature points."""
    grid = m.fluid
    n = grid.n_p2
    uz = np.einsum("ti,qi->tq", coefs[:n][grid.p2], _P2V)
    ur = np.einsum("ti,qi->tq", coefs[n:][grid.p2], _P2V)
    return uz, ur


def assemble_advection(m: Mesh, v_adv, symmetrized=False, w=None, div_weights=None):
    """Convection matrices on the current fluid mesh.

    Plain variant: C[i,j] = int ((v_adv . grad) phi_j) . phi_i, acting
    componentwise.  Symmetrized variant returns
        (1/2) int (div w) phi_j . phi_i + (1/2) (C - C^T)
    whose quadratic form reduces to the (div w) term; the divergence weight
    is taken per element from div_weights when given (the geometric
    change-of-area ratio), otherwise pointwise from the field w.
    """
    grid = m.fluid
    det, G, _ = _geometry(m.fluid_verts_cur, grid.tris)
    uz, ur = field_at_quad(m, v_adv)
    conv = np.einsum("q,t,tq,tqj,qi->tij", _TRI_W, det, uz, G[:, :, :, 0], _P2V)
    conv += np.einsum("q,t,tq,tqj,qi->tij", _TRI_W, det, ur, G[:, :, :, 1], _P2V)
    shape = (m.n_vdof, m.n_vdof)
    C = _scatter_blocks({(0, 0): conv, (1, 1): conv}, grid.p2, grid.n_p2,
                        (0, grid.n_p2))
    if not symmetrized:
        return C

    if div_weights is not None:
        divw = np.asarray(div_weights)[:, None] * np.ones((1, len(_TRI_W)))
    else:
        if w is None:
            raise ValueError("symmetrized advection needs w or div_weights")
        n = grid.n_p2
        divw = np.einsum("ti,tqi->tq", w[:n][grid.p2], G[:, :, :, 0])
        divw += np.einsum("ti,tqi->tq", w[n:][grid.p2], G[:, :, :, 1])
    mdiv = np.einsum("q,t,tq,qi,qj->tij", _TRI_W, det, divw, _P2V, _P2V)
    Mdiv = _scatter_blocks({(0, 0): mdiv, (1, 1): mdiv}, grid.p2, grid.n_p2,
                           (0, grid.n_p2))
    return (0.5 * Mdiv + 0.5 * (C - C.T)).tocsr()


def assemble_mass(m: Mesh, which):
    """Unscaled mass matrix of one space (density factors applied by caller)."""
    if which == "fluid-velocity":
        return assemble_vector_mass(m.fluid, m.fluid_verts_cur)
    if which == "structure-displacement":
        return assemble_vector_mass(m.solid, m.solid.verts)
    if which == "interface-trace":
        return trace_mass(m)
    raise ValueError("unknown mass space %r" % which)


# ---------------------------------------------------------------------------
# interface (1D) forms
# ---------------------------------------------------------------------------

def _trace_1d(m: Mesh):
    """Element mass/stiffness/derivative-pairing matrices on the reference trace."""
    n = m.n_trace
    Ml = np.einsum("q,qi,qj->ij", _G3_W, _L2V, _L2V)
    Al = np.einsum("q,qi,qj->ij", _G3_W, _L2D, _L2D)
    # K[i,j] = int phi_j' phi_i dz; the edge length cancels
    Kl = np.einsum("q,qj,qi->ij", _G3_W, _L2D, _L2V)
    M = sp.lil_matrix((n, n))
    A = sp.lil_matrix((n, n))
    K = sp.lil_matrix((n, n))
    for k, conn in enumerate(m.trace_edges):
        h = m.trace_ref_h[k]
        ix = np.ix_(conn, conn)
        M[ix] += h * Ml
        A[ix] += Al / h
        K[ix] += Kl
    return M.tocsr(), A.tocsr(), K.tocsr()


def trace_mass(m: Mesh):
    return _trace_1d(m)[0]


def assemble_membrane(m: Mesh, c):
    """Membrane form on trace dofs [z-block | r-block]:

    a_m(eta, zeta) = C1 int eta_z' zeta_z' + C0 int eta_r zeta_r
                     + C2 int eta_z' zeta_r - C2 int eta_r' zeta_z
    """
    M1, A1, K1 = _trace_1d(m)
    zz = c.C1 * A1
    rr = c.C0 * M1
    rz = c.C2 * K1       # test r, trial z
    zr = -c.C2 * K1      # test z, trial r
    return sp.bmat([[zz, zr], [rz, rr]], format="csr")


def membrane_radial(m: Mesh, c):
    """Radial-only membrane form C0 int eta_r zeta_r on the r trace block."""
    M1, _, _ = _trace_1d(m)
    n = m.n_trace
    Z = sp.csr_matrix((n, n))
    return sp.bmat([[Z, None], [None, (c.C0 * M1).tocsr()]], format="csr")


def embed_trace_matrix(m: Mesh, M_scalar, side, comps=("z", "r")):
    """Lift a scalar trace matrix onto fluid or wall vector dofs."""
    if side == "fluid":
        p2map, n_scalar = m.trace_fluid_p2, m.fluid.n_p2
    else:
        p2map, n_scalar = m.trace_solid_p2, m.solid.n_p2
    coo = M_scalar.tocoo()
    rows, cols, data = [], [], []
    for comp in comps:
        off = 0 if comp == "z" else n_scalar
        rows.append(p2map[coo.row] + off)
        cols.append(p2map[coo.col] + off)
        data.append(coo.data)
    return sp.coo_matrix((np.concatenate(data),
                          (np.concatenate(rows), np.concatenate(cols))),
                         shape=(2 * n_scalar, 2 * n_scalar)).tocsr()


def embed_trace_matrix2(m: Mesh, M_trace, side):
    """Lift a full [z | r] trace matrix (2 n_t square) onto vector dofs."""
    if side == "fluid":
        p2map, n_scalar = m.trace_fluid_p2, m.fluid.n_p2
    else:
        p2map, n_scalar = m.trace_solid_p2, m.solid.n_p2
    dof_map = np.concatenate([p2map, p2map + n_scalar])
    coo = M_trace.tocoo()
    return sp.coo_matrix((coo.data, (dof_map[coo.row], dof_map[coo.col])),
                         shape=(2 * n_scalar, 2 * n_scalar)).tocsr()


def embed_trace_vector(m: Mesh, vec, side):
    """Lift a trace-numbered vector [z | r] onto fluid or wall vector dofs."""
    if side == "fluid":
        p2map, n_scalar = m.trace_fluid_p2, m.fluid.n_p2
    else:
        p2map, n_scalar = m.trace_solid_p2, m.solid.n_p2
    out = np.zeros(2 * n_scalar)
    n = m.n_trace
    out[p2map] = vec[:n]
    out[p2map + n_scalar] = vec[n:]
    return out


def restrict_to_trace(m: Mesh, x, side):
    """Extract the trace-numbered [z | r] values of a vector field."""
    if side == "fluid":
        p2map, n_scalar = m.trace_fluid_p2, m.fluid.n_p2
    else:
        p2map, n_scalar = m.trace_solid_p2, m.solid.n_p2
    return np.concatenate([x[p2map], x[p2map + n_scalar]])


# ---------------------------------------------------------------------------
# boundary loads
# ---------------------------------------------------------------------------

def assemble_boundary_load(m: Mesh, p_in, p_out):
    """Normal-stress inlet/outlet data as a velocity load vector.

    + int_0^R p_in phi_z at z=0 and - int_0^R p_out phi_z at z=L.
    """
    load = np.zeros(m.n_vdof)
    for edges, pval, sign in ((m.inlet_edges, p_in, 1.0),
                              (m.outlet_edges, p_out, -1.0)):
        if pval == 0.0:
            continue
        for va, vb, mid in edges:
            length = np.linalg.norm(m.fluid_verts_cur[vb] - m.fluid_verts_cur[va])
            contrib = sign * pval * length * (_G3_W @ _L2V)
            load[np.array([va, vb, mid])] += contrib
    return load


def assemble_interface_pressure_load(m: Mesh, p_vert, beta):
    """Trace load beta int J^n p^n n^f . phi over the reference interface.

    p_vert holds the P1 pressure coefficients of the previous step; the
    outward fluid normal and the length Jacobian are edge-wise constants of
    the current interface polyline, so J n^f = (-dr, dz)/h_ref per edge and
    the reference length cancels in the integral.
    """
    out = np.zeros(2 * m.n_trace)
    if beta == 0.0:
        return out
    for k, (va, vb, mid) in enumerate(m.interface_edges_f):
        d = m.fluid_verts_cur[vb] - m.fluid_verts_cur[va]
        jn = np.array([-d[1], d[0]])
        pq = (1.0 - _G3_PTS) * p_vert[va] + _G3_PTS * p_vert[vb]
        w = beta * np.einsum("q,q,qi->i", _G3_W, pq, _L2V)
        conn = m.trace_edges[k]
        out[conn] += w * jn[0]
        out[conn + m.n_trace] += w * jn[1]
    return out


def interface_pressure_operator(m: Mesh, beta):
    """Sparse operator mapping vertex pressures to the trace load of
    assemble_interface_pressure_load; geometry frozen at the current
    interface polyline (for fixed-mesh runs)."""
    rows, cols, data = [], [], []
    for k, (va, vb, mid) in enumerate(m.interface_edges_f):
        d = m.fluid_verts_cur[vb] - m.fluid_verts_cur[va]
        jn = np.array([-d[1], d[0]])
        conn = m.trace_edges[k]
        wA = beta * np.einsum("q,q,qi->i", _G3_W, 1.0 - _G3_PTS, _L2V)
        wB = beta * np.einsum("q,q,qi->i", _G3_W, _G3_PTS, _L2V)
        for comp, off in ((0, 0), (1, m.n_trace)):
            for i in range(3):
                rows += [conn[i] + off, conn[i] + off]
                cols += [va, vb]
                data += [wA[i] * jn[comp], wB[i] * jn[comp]]
    return sp.coo_matrix((data, (rows, cols)),
                         shape=(2 * m.n_trace, m.n_pdof)).tocsr()


def interface_jacobian(m: Mesh):
    """Edge length ratio current/reference along the interface polyline."""
    d = (m.fluid_verts_cur[m.interface_edges_f[:, 1]]
         - m.fluid_verts_cur[m.interface_edges_f[:, 0]])
    return np.hypot(d[:, 0], d[:, 1]) / m.trace_ref_h


# ---------------------------------------------------------------------------
# probes and norms
# ---------------------------------------------------------------------------

def flowrate_columns(m: Mesh, v):
    """Q(z_i) = int v_z dr along each vertical node column (Simpson, exact)."""
    grid = m.fluid
    nz, nr = grid.nz, grid.nr
    vz = v[:grid.n_p2]
    q = np.zeros(nz + 1)
    for i in range(nz + 1):
        for j in range(nr):
            a, b = grid.vid(i, j), grid.vid(i, j + 1)
            mid = grid.edge_p2(a, b)
            dr = m.fluid_verts_cur[b, 1] - m.fluid_verts_cur[a, 1]
            q[i] += dr * (vz[a] + 4.0 * vz[mid] + vz[b]) / 6.0
    return q


def mean_pressure_columns(m: Mesh, p):
    """Cross-section average of the P1 pressure along each node column."""
    grid = m.fluid
    nz, nr = grid.nz, grid.nr
    out = np.zeros(nz + 1)
    for i in range(nz + 1):
        total, height = 0.0, 0.0
        for j in range(nr):
            a, b = grid.vid(i, j), grid.vid(i, j + 1)
            dr = m.fluid_verts_cur[b, 1] - m.fluid_verts_cur[a, 1]
            total += dr * 0.5 * (p[a] + p[b])
            height += dr
        out[i] = total / height
    return out


def quad_points_phys(verts, tris):
    p0 = verts[tris[:, 0]]
    e1 = verts[tris[:, 1]] - p0
    e2 = verts[tris[:, 2]] - p0
    x = (p0[:, None, 0] + np.outer(e1[:, 0], _TRI_PTS[:, 0])
         + np.outer(e2[:, 0], _TRI_PTS[:, 1]))
    y = (p0[:, None, 1] + np.outer(e1[:, 1], _TRI_PTS[:, 0])
         + np.outer(e2[:, 1], _TRI_PTS[:, 1]))
    return x, y


def fluid_l2_errors(m: Mesh, v, p, exact_v, exact_p):
    """Relative L2 errors of velocity and pressure against callables (z, r)."""
    grid = m.fluid
    det = np.abs(2.0 * triangle_areas(m.fluid_verts_cur, grid.tris))
    x, y = quad_points_phys(m.fluid_verts_cur, grid.tris)
    uz, ur = field_at_quad(m, v)
    ez, er = exact_v(x, y)
    pq = np.einsum("ti,qi->tq", p[grid.tris], _P1V)
    pe = exact_p(x, y)

    def norm2(f):
        return np.einsum("q,t,tq->", _TRI_W, det, f)

    err_v = np.sqrt(norm2((uz - ez) ** 2 + (ur - er) ** 2))
    ref_v = np.sqrt(norm2(ez ** 2 + er ** 2))
    err_p = np.sqrt(norm2((pq - pe) ** 2))
    ref_p = np.sqrt(norm2(pe ** 2))
    return err_v / ref_v, err_p / ref_p


def solid_l2_error(m: Mesh, U, exact_u):
    """Relative L2 error of a vector wall field against a callable (z, r)."""
    grid = m.solid
    det = np.abs(2.0 * triangle_areas(grid.verts, grid.tris))
    x, y = quad_points_phys(grid.verts, grid.tris)
    n = grid.n_p2
    uz = np.einsum("ti,qi->tq", U[:n][grid.p2], _P2V)
    ur = np.einsum("ti,qi->tq", U[n:][grid.p2], _P2V)
    ez, er = exact_u(x, y)

    def norm2(f):
        return np.einsum("q,t,tq->", _TRI_W, det, f)

    err = np.sqrt(norm2((uz - ez) ** 2 + (ur - er) ** 2))
    ref = np.sqrt(norm2(ez ** 2 + er ** 2))
    return err / ref


def trace_l2_error(m: Mesh, eta_r, exact_fn):
    """Relative L2(0,L) error of a scalar trace field against a callable z."""
    err2, ref2 = 0.0, 0.0
    for k, conn in enumerate(m.trace_edges):
        h = m.trace_ref_h[k]
        z0 = m.trace_z[conn[0]]
        zq = z0 + h * _G3_PTS
        vals = _L2V @ eta_r[conn]
        ex = exact_fn(zq)
        err2 += h * np.sum(_G3_W * (vals - ex) ** 2)
        ref2 += h * np.sum(_G3_W * ex ** 2)
    return np.sqrt(err2 / ref2)


def qform(M, x, y=None):
    """Quadratic/bilinear form x^T M y."""
    if y is None:
        y = x
    return float(x @ (M @ y))
