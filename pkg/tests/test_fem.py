import dataclasses

import numpy as np
import pytest

from channelfsi import fem, linsolve
from channelfsi.fem import (assemble_advection, assemble_boundary_load,
                            assemble_divergence, assemble_elasticity,
                            assemble_fluid_stiffness,
                            assemble_interface_pressure_load, assemble_mass,
                            assemble_membrane, qform, tri_rule_collapsed,
                            tri_rule_deg5)
from channelfsi.mesh import Mesh, build_rect_mesh, fluid_p2_coords
from channelfsi.params import (membrane_coefficients, table_example1,
                               table_example2)


@pytest.fixture(scope="module")
def m():
    return build_rect_mesh(table_example1(), 12, 4, 3)


@pytest.fixture(scope="module")
def p():
    return table_example1()


# ---------------------------------------------------------------------------
# quadrature audit
# ---------------------------------------------------------------------------

def test_deg5_rule_matches_deg10_on_random_elements():
    rng = np.random.default_rng(7)
    pts5, w5 = tri_rule_deg5()
    pts10, w10 = tri_rule_collapsed(10)
    coef = rng.normal(size=(6, 6))

    def poly(x, y):
        out = 0.0
        for i in range(6):
            for j in range(6 - i):
                out = out + coef[i, j] * x ** i * y ** j
        return out

    for _ in range(5):
        tri = rng.normal(size=(3, 2))
        e1, e2 = tri[1] - tri[0], tri[2] - tri[0]
        det = abs(e1[0] * e2[1] - e1[1] * e2[0])

        def phys(pts):
            return (tri[0][0] + pts[:, 0] * e1[0] + pts[:, 1] * e2[0],
                    tri[0][1] + pts[:, 0] * e1[1] + pts[:, 1] * e2[1])

        i5 = det * np.sum(w5 * poly(*phys(pts5)))
        i10 = det * np.sum(w10 * poly(*phys(pts10)))
        assert i5 == pytest.approx(i10, rel=1e-13)


# ---------------------------------------------------------------------------
# fluid stiffness
# ---------------------------------------------------------------------------

def test_fluid_stiffness_constant_kernel(m, p):
    A = assemble_fluid_stiffness(m, p.mu_f)
    v = np.zeros(m.n_vdof)
    v[:m.fluid.n_p2] = 3.7
    assert abs(qform(A, v)) < 1e-10 * p.mu_f


def test_fluid_stiffness_shear_value(m, p):
    A = assemble_fluid_stiffness(m, p.mu_f)
    xy = fluid_p2_coords(m)
    v = np.concatenate([xy[:, 1], np.zeros(m.fluid.n_p2)])
    area = p.L * p.R
    assert qform(A, v) == pytest.approx(p.mu_f * area, rel=1e-12)


def test_fluid_stiffness_symmetric(m, p):
    A = assemble_fluid_stiffness(m, p.mu_f)
    assert abs(A - A.T).max() <= 1e-13 * abs(A).max()


# ---------------------------------------------------------------------------
# divergence
# ---------------------------------------------------------------------------

def test_divergence_constant_and_divfree(m):
    B = assemble_divergence(m)
    xy = fluid_p2_coords(m)
    n = m.fluid.n_p2
    v_const = np.concatenate([np.ones(n), np.zeros(n)])
    assert np.abs(B @ v_const).max() < 1e-12
    v_rot = np.concatenate([xy[:, 0], -xy[:, 1]])
    assert np.abs(B @ v_rot).max() < 1e-12


def test_divergence_linear_field_value(m):
    B = assemble_divergence(m)
    xy = fluid_p2_coords(m)
    v = np.concatenate([xy[:, 0], np.zeros(m.fluid.n_p2)])
    q = np.ones(m.n_pdof)
    assert q @ (B @ v) == pytest.approx(3.0, rel=1e-12)


# ---------------------------------------------------------------------------
# masses
# ---------------------------------------------------------------------------

def test_masses(m):
    Mv = assemble_mass(m, "fluid-velocity")
    v = np.zeros(m.n_vdof)
    v[:m.fluid.n_p2] = 1.0
    assert qform(Mv, v) == pytest.approx(3.0, rel=1e-12)
    M1 = assemble_mass(m, "interface-trace")
    one = np.ones(m.n_trace)
    assert one @ (M1 @ one) == pytest.approx(6.0, rel=1e-12)
    with pytest.raises(ValueError):
        assemble_mass(m, "nope")


def test_mass_spectrum_positive():
    m = Mesh(R=0.5, L=6.0, H=0.1, nz=2, nr_f=2, nr_s=2)
    Mv = assemble_mass(m, "structure-displacement")
    w = np.linalg.eigvalsh(Mv.toarray())
    assert w.min() > 0.0


# ---------------------------------------------------------------------------
# membrane form
# ---------------------------------------------------------------------------

def test_membrane_radial_constant(m, p):
    c = membrane_coefficients(p)
    Am = assemble_membrane(m, c)
    n = m.n_trace
    eta = np.zeros(2 * n)
    eta[n:] = 2.5
    assert qform(Am, eta) == pytest.approx(c.C0 * 2.5 ** 2 * p.L, rel=1e-12)


def test_membrane_c2_vanishes_for_single_component_fields(m, p):
    c = membrane_coefficients(p)
    c2 = dataclasses.replace(c, C2=2.0 * c.C2)
    A1 = assemble_membrane(m, c)
    A2 = assemble_membrane(m, c2)
    n = m.n_trace
    for block in (slice(0, n), slice(n, 2 * n)):
        eta = np.zeros(2 * n)
        eta[block] = np.sin(np.pi * m.trace_z / p.L)
        assert qform(A2, eta) == pytest.approx(qform(A1, eta), rel=1e-12)


def test_membrane_c2_diagonal_matches_cross_integral(m, p):
    # for generic clamped fields the C2 pairing contributes
    # 2 C2 int eta_r eta_z' to the quadratic form
    c = membrane_coefficients(p)
    c0 = dataclasses.replace(c, C2=0.0)
    A = assemble_membrane(m, c)
    A0 = assemble_membrane(m, c0)
    n = m.n_trace
    rng = np.random.default_rng(3)
    eta = rng.normal(size=2 * n)
    for idx in (0, n - 1, n, 2 * n - 1):
        eta[idx] = 0.0
    _, _, K1 = fem._trace_1d(m)
    oracle = 2.0 * c.C2 * float(eta[n:] @ (K1 @ eta[:n]))
    assert qform(A, eta) - qform(A0, eta) == pytest.approx(oracle, rel=1e-10)


def test_membrane_axial_sine_oracle(m, p):
    # quadrature oracle: exact value for the P2 interpolant of sin,
    # closed form within interpolation error
    c = membrane_coefficients(p)
    Am = assemble_membrane(m, c)
    n = m.n_trace
    eta = np.zeros(2 * n)
    eta[:n] = np.sin(np.pi * m.trace_z / p.L)
    got = qform(Am, eta)
    # independent fine-quadrature oracle on the same interpolant
    gl_t, gl_w = np.polynomial.legendre.leggauss(8)
    gl_t = 0.5 * (gl_t + 1.0)
    gl_w *= 0.5
    vals, ders = fem.p2_line_basis(gl_t)
    oracle = 0.0
    for k, conn in enumerate(m.trace_edges):
        h = m.trace_ref_h[k]
        dz = (ders @ eta[:n][conn]) / h
        oracle += c.C1 * h * np.sum(gl_w * dz ** 2)
    assert got == pytest.approx(oracle, rel=1e-12)
    assert got == pytest.approx(c.C1 * np.pi ** 2 / (2 * p.L), rel=1e-4)


# ---------------------------------------------------------------------------
# elasticity
# ---------------------------------------------------------------------------

def test_elasticity_rigid_motion(m):
    p0 = dataclasses.replace(table_example1(), gamma=0.0)
    Ae = assemble_elasticity(m, p0)
    U = np.zeros(m.n_sdof)
    U[:m.solid.n_p2] = 1.0
    U[m.solid.n_p2:] = -2.0
    assert abs(qform(Ae, U)) < 1e-12 * abs(Ae).max() * (U @ U)


def test_elasticity_spring_only():
    p1 = dataclasses.replace(table_example2(), gamma=4e6)
    m = build_rect_mesh(p1, 8, 3, 3)
    Ae = assemble_elasticity(m, p1)
    Ae0 = assemble_elasticity(m, dataclasses.replace(p1, gamma=0.0))
    U = np.zeros(m.n_sdof)
    U[m.solid.n_p2:] = 1.5
    spring = qform(Ae, U) - qform(Ae0, U)
    assert spring == pytest.approx(4e6 * 1.5 ** 2 * 6.0 * 0.1, rel=1e-12)
    assert abs(qform(Ae0, U)) < 1e-12 * abs(Ae0).max() * (U @ U)


def test_elasticity_radial_ramp(m, p):
    Ae = assemble_elasticity(m, p)  # gamma = 0 in this table
    U = np.concatenate([np.zeros(m.solid.n_p2), m.solid.p2_ref[:, 1] - p.R])
    expect = (2 * p.mu_s + p.lambda_s) * p.L * p.H
    assert qform(Ae, U) == pytest.approx(expect, rel=1e-12)


# ---------------------------------------------------------------------------
# advection
# ---------------------------------------------------------------------------

def test_advection_zero_field(m):
    z = np.zeros(m.n_vdof)
    C = assemble_advection(m, z)
    assert abs(C).max() == 0.0
    N = assemble_advection(m, z, symmetrized=True, w=z)
    assert abs(N).max() == 0.0


def test_advection_symmetrized_energy_neutral(m):
    rng = np.random.default_rng(5)
    u_adv = rng.normal(size=m.n_vdof)
    w = np.zeros(m.n_vdof)
    N = assemble_advection(m, u_adv, symmetrized=True, w=w)
    for _ in range(3):
        u = rng.normal(size=m.n_vdof)
        scale = abs(N).max() * (u @ u)
        assert abs(qform(N, u)) <= 1e-13 * scale


def test_advection_plain_matches_dense_oracle():
    p = table_example1()
    m = build_rect_mesh(p, 2, 2, 2)
    rng = np.random.default_rng(11)
    v_adv = rng.normal(size=m.n_vdof)
    C = assemble_advection(m, v_adv).toarray()

    # independent dense assembly with plain loops
    pts, wts = tri_rule_deg5()
    vals, grads = fem.p2_basis(pts)
    n = m.fluid.n_p2
    oracle = np.zeros((2 * n, 2 * n))
    for t, tri in enumerate(m.fluid.tris):
        conn = m.fluid.p2[t]
        pe = m.fluid_verts_cur[tri]
        J = np.column_stack([pe[1] - pe[0], pe[2] - pe[0]])
        det = abs(np.linalg.det(J))
        Jinv = np.linalg.inv(J)
        for q in range(len(wts)):
            g = grads[q] @ Jinv          # (6, 2) physical gradients
            uz = sum(v_adv[conn[i]] * vals[q, i] for i in range(6))
            ur = sum(v_adv[n + conn[i]] * vals[q, i] for i in range(6))
            for i in range(6):
                for j in range(6):
                    val = wts[q] * det * vals[q, i] * (
                        uz * g[j, 0] + ur * g[j, 1])
                    oracle[conn[i], conn[j]] += val
                    oracle[n + conn[i], n + conn[j]] += val
    assert np.allclose(C, oracle, rtol=1e-12, atol=1e-14 * abs(oracle).max())


# ---------------------------------------------------------------------------
# boundary loads
# ---------------------------------------------------------------------------

def test_boundary_load_zero(m):
    assert not np.any(assemble_boundary_load(m, 0.0, 0.0))


def test_boundary_load_total(m):
    load = assemble_boundary_load(m, 250.0, 0.0)
    v = np.zeros(m.n_vdof)
    v[:m.fluid.n_p2] = 1.0
    assert load @ v == pytest.approx(125.0, rel=1e-12)
    assert not np.any(load[m.fluid.n_p2:])


def test_boundary_load_outlet_sign(m):
    load = assemble_boundary_load(m, 0.0, 100.0)
    v = np.zeros(m.n_vdof)
    v[:m.fluid.n_p2] = 1.0
    assert load @ v == pytest.approx(-100.0 * 0.5, rel=1e-12)


# ---------------------------------------------------------------------------
# interface pressure load
# ---------------------------------------------------------------------------

def test_interface_load_beta_zero(m):
    pv = np.ones(m.n_pdof)
    assert not np.any(assemble_interface_pressure_load(m, pv, 0.0))


def test_interface_load_flat(m, p):
    pv = np.full(m.n_pdof, 3.0)
    tr = assemble_interface_pressure_load(m, pv, 1.0)
    n = m.n_trace
    assert tr[n:].sum() == pytest.approx(3.0 * p.L, rel=1e-12)
    assert np.abs(tr[:n]).max() == 0.0


def test_interface_load_deformed_matches_per_edge_oracle():
    p = table_example1()
    m = build_rect_mesh(p, 6, 2, 2)
    verts = m.fluid.verts.copy()
    k = m.interface_verts[3]
    verts[k, 1] += 0.07          # raise one interface node
    m2 = m.with_fluid_coords(verts)
    rng = np.random.default_rng(2)
    pv = rng.normal(size=m2.n_pdof)
    tr = assemble_interface_pressure_load(m2, pv, 0.8)

    from channelfsi.fem import _G3_PTS, _G3_W, _L2V
    oracle = np.zeros_like(tr)
    for e, (va, vb, mid) in enumerate(m2.interface_edges_f):
        d = m2.fluid_verts_cur[vb] - m2.fluid_verts_cur[va]
        jn = np.array([-d[1], d[0]])
        pq = (1 - _G3_PTS) * pv[va] + _G3_PTS * pv[vb]
        for i, tnode in enumerate(m2.trace_edges[e]):
            w = 0.8 * np.sum(_G3_W * pq * _L2V[:, i])
            oracle[tnode] += w * jn[0]
            oracle[tnode + m2.n_trace] += w * jn[1]
    assert np.allclose(tr, oracle, rtol=1e-13, atol=1e-15)


# ---------------------------------------------------------------------------
# mixed-pair patch test
# ---------------------------------------------------------------------------

def test_stokes_patch_quadratic_velocity_linear_pressure():
    """The Taylor-Hood pair reproduces quadratic velocity / linear pressure
    exactly in a steady Stokes solve with full velocity Dirichlet data."""
    p = table_example1()
    m = build_rect_mesh(p, 6, 4, 2)
    xy = fluid_p2_coords(m)
    z, r = xy[:, 0], xy[:, 1]
    # divergence-free quadratic field and linear pressure
    v_ex = np.concatenate([z * z - 2 * r * r + z * r + r,
                           -2 * z * r - 0.5 * r * r + 3 * z])
    p_ex_fn = lambda zz, rr: 2.0 * zz - 3.0 * rr + 1.0
    p_ex = p_ex_fn(m.fluid.verts[:, 0], m.fluid.verts[:, 1])
    mu = p.mu_f

    A = assemble_fluid_stiffness(m, mu)
    B = assemble_divergence(m)
    # constant body force f = -div sigma(v_ex, p_ex)
    # sigma = -pI + 2 mu D(v); div(2 mu D) = mu (Lap v + grad div v) = mu Lap v
    lap = np.array([2.0 - 4.0, -1.0])       # Laplacians of the two components
    grad_p = np.array([2.0, -3.0])
    f = grad_p - mu * lap
    Mv = fem.assemble_vector_mass(m.fluid, m.fluid_verts_cur)
    f_nodal = np.concatenate([np.full(m.fluid.n_p2, f[0]),
                              np.full(m.fluid.n_p2, f[1])])
    rhs = Mv @ f_nodal

    boundary = np.unique(np.concatenate([m.inlet_p2, m.outlet_p2,
                                         m.symmetry_p2, m.interface_p2]))
    fixed = np.concatenate([boundary, boundary + m.fluid.n_p2])
    free = np.setdiff1d(np.arange(m.n_vdof), fixed)
    lift = np.zeros(m.n_vdof)
    lift[fixed] = v_ex[fixed]
    rhs_f = rhs[free] - (A @ lift)[free]
    g = -np.asarray(B @ lift).ravel()
    # pin one pressure dof to remove the constant kernel
    A_ff = A.tocsr()[free][:, free]
    B_f = B.tocsr()[:, free][1:, :]
    v_sol, p_sol = linsolve.solve_saddle(A_ff, -B_f.T, B_f, rhs_f, g[1:], 1e-12)
    v = lift.copy()
    v[free] = v_sol
    p_full = np.concatenate([[0.0], p_sol])
    # compare up to the pressure constant
    shift = p_ex[0] - p_full[0]
    assert np.abs(v - v_ex).max() < 1e-9
    assert np.abs(p_full + shift - p_ex).max() < 1e-8
