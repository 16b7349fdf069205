# -*- coding: utf-8 -*-
"""
Sparse linear solvers for the three sub-problem classes.

* solve_spd: conjugate gradients with a diagonal preconditioner, falling
  back to a direct factorization when iteration stalls.
* solve_saddle: the indefinite velocity/pressure block system, factored
  directly by sparse LU (robustness over speed at desk scale).
* solve_nonsym: restarted GMRES with an incomplete-LU preconditioner and
  a direct LU fallback.

Every successful solve re-verifies its residual bound by explicit
multiplication before returning.  All paths are deterministic in
single-threaded use.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse as sp
from scipy.sparse import linalg as spla


class SolverError(RuntimeError):
    """A linear solve failed to meet its residual bound."""


def _check_residual(A, x, b, tol, label):
    res = np.linalg.norm(A @ x - b)
    scale = max(np.linalg.norm(b), 1e-300)
    if not np.isfinite(res) or res > max(tol * scale, 1e3 * np.finfo(float).eps * scale):
        raise SolverError("%s: residual %.3e exceeds %.1e relative" %
                          (label, res / scale, tol))
    return x


def solve_spd(A, b, tol=1e-10):
    """Solve SPD system by diagonally preconditioned CG, direct fallback."""
    b = np.asarray(b, dtype=float)
    if not np.any(b):
        return np.zeros_like(b)
    diag = A.diagonal()
    if np.any(diag <= 0.0):
        raise SolverError("solve_spd: non-positive diagonal, matrix not SPD")
    M = sp.diags(1.0 / diag)
    x, info = spla.cg(A.tocsr(), b, rtol=0.1 * tol, atol=0.0, M=M,
                      maxiter=10 * A.shape[0])
    if info != 0 or np.linalg.norm(A @ x - b) > tol * np.linalg.norm(b):
        x = spla.splu(A.tocsc()).solve(b)
    return _check_residual(A, x, b, tol, "solve_spd")


class SpdFactor:
    """Cached direct factorization for repeated SPD solves (fixed matrix)."""

    def __init__(self, A, tol=1e-10):
        self.A = A.tocsr()
        self.tol = tol
        self._lu = spla.splu(A.tocsc())

    def solve(self, b):
        x = self._lu.solve(np.asarray(b, dtype=float))
        return _check_residual(self.A, x, b, self.tol, "SpdFactor")


def solve_saddle(A, BT, B, f, g, tol=1e-10):
    """Solve [[A, BT], [B, 0]] [v, p] = [f, g] by direct sparse LU.

    Returns (v, p).  The normal-stress outflow data removes the constant
    pressure kernel, so the block system is nonsingular.
    """
    K = sp.bmat([[A, BT], [B, None]], format="csc")
    rhs = np.concatenate([f, g])
    try:
        lu = spla.splu(K)
    except RuntimeError as exc:
        raise SolverError("solve_saddle: factorization failed (%s)" % exc) from exc
    x = lu.solve(rhs)
    _check_residual(K, x, rhs, tol, "solve_saddle")
    nv = A.shape[0]
    return x[:nv], x[nv:]


class SaddleFactor:
    """Cached factorization of a fixed saddle block system."""

    def __init__(self, A, BT, B, tol=1e-10):
        self.K = sp.bmat([[A, BT], [B, None]], format="csc")
        self.nv = A.shape[0]
        self.tol = tol
        self._lu = spla.splu(self.K)

    def solve(self, f, g):
        rhs = np.concatenate([f, g])
        x = self._lu.solve(rhs)
        _check_residual(self.K, x, rhs, self.tol, "SaddleFactor")
        return x[:self.nv], x[self.nv:]


def solve_nonsym(A, b, tol=1e-10):
    """Solve a nonsymmetric system by ILU-preconditioned GMRES, LU fallback."""
    b = np.asarray(b, dtype=float)
    if not np.any(b):
        return np.zeros_like(b)
    A = A.tocsc()
    x = None
    try:
        ilu = spla.spilu(A, drop_tol=1e-5, fill_factor=10)
        M = spla.LinearOperator(A.shape, ilu.solve)
        x, info = spla.gmres(A, b, rtol=0.1 * tol, atol=0.0, M=M,
                             restart=50, maxiter=200)
        if info != 0:
            x = None
    except RuntimeError:
        x = None
    if x is None or np.linalg.norm(A @ x - b) > tol * np.linalg.norm(b):
        try:
            x = spla.splu(A).solve(b)
        except RuntimeError as exc:
            raise SolverError("solve_nonsym: singular matrix (%s)" % exc) from exc
    return _check_residual(A, x, b, tol, "solve_nonsym")


def eliminate(A, b, fixed_idx, fixed_val, n):
    """Reduce A x = b by Dirichlet elimination.

    Returns (A_ff, b_f, free_idx) with the lifting of inhomogeneous values
    moved to the right-hand side; symmetry of A is preserved on the free
    block.
    """
    mask = np.ones(n, dtype=bool)
    mask[fixed_idx] = False
    free = np.flatnonzero(mask)
    x0 = np.zeros(n)
    x0[fixed_idx] = fixed_val
    b_f = b[free] - (A @ x0)[free]
    A_csr = A.tocsr()
    A_ff = A_csr[free][:, free]
    return A_ff, b_f, free


def expand(x_f, free, fixed_idx, fixed_val, n):
    x = np.zeros(n)
    x[free] = x_f
    x[fixed_idx] = fixed_val
    return x
