"""Sparse linear algebra: tagged CSR operators and Krylov/direct solvers.

CG and BiCGStab are implemented here so the zero-mean constraint can be
re-imposed on the initial guess, on every Krylov correction, and on the
result; GMRES and the dense direct fallback come from scipy.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SolverError(RuntimeError):
    pass


class SparseOperator:
    """Compressed-row matrix tagged with its domain and codomain spaces."""

    __slots__ = ("matrix", "domain", "codomain")

    def __init__(self, matrix, domain: str = "", codomain: str = ""):
        m = sp.csr_matrix(matrix)
        m.sum_duplicates()
        self.matrix = m
        self.domain = domain
        self.codomain = codomain

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, x):
        return self.matrix @ x

    @property
    def T(self):
        return SparseOperator(self.matrix.T.tocsr(),
                              domain=self.codomain, codomain=self.domain)

    def toarray(self):
        return self.matrix.toarray()

    def export_coo(self, path) -> None:
        """Write 'row col value' lines in row-major order."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with open(path, "w") as f:
            for i in order:
                f.write(f"{coo.row[i]} {coo.col[i]} {coo.data[i]:.16e}\n")

    def __repr__(self):
        return (f"SparseOperator({self.shape[0]}x{self.shape[1]}, "
                f"{self.domain or '?'} -> {self.codomain or '?'}, "
                f"nnz={self.matrix.nnz})")


@dataclass
class SolverConfig:
    method: str = "cg"          # cg | bicgstab | gmres | dense
    rtol: float = 1e-10
    atol: float = 1e-14
    maxiter: int | None = None  # default 10 * n
    restart: int = 50

    def __post_init__(self):
        if self.method not in ("cg", "bicgstab", "gmres", "dense"):
            raise ValueError(f"unknown solver method {self.method!r}")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")
        if self.restart < 1:
            raise ValueError("restart must be >= 1")


@dataclass
class SolveInfo:
    converged: bool
    iterations: int
    residual: float
    method: str
    fallbacks: list = field(default_factory=list)

    def __str__(self):
        tail = f" (after {'/'.join(self.fallbacks)})" if self.fallbacks else ""
        return (f"{self.method}{tail}: converged={self.converged} "
                f"iters={self.iterations} residual={self.residual:.3e}")


def _as_csr(A):
    return A.matrix if isinstance(A, SparseOperator) else sp.csr_matrix(A)


def _projectors(weights, n):
    """(solution projector, residual projector) for the zero-mean constraint.

    The solution is pinned to zero weighted mean.  Residuals of the
    (symmetric, constant-kernel) operator are compatible when their plain
    mean vanishes, so they get the unweighted cleanup; mixing the two
    projections corrupts the Krylov recurrence.
    """
    if weights is None:
        ident = lambda x: x
        return ident, ident
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise ValueError("constraint weights must match the system size")
    total = w.sum()

    def proj_sol(x):
        return x - (w @ x) / total

    def proj_res(x):
        return x - x.mean()

    return proj_sol, proj_res


def _tol(b, config):
    return max(config.rtol * np.linalg.norm(b), config.atol)


def _cg(A, b, proj_sol, proj_res, config, jacobi):
    """Preconditioned CG with up to two restarts so the reported (true)
    residual, not the recursion, meets the tolerance."""
    n = len(b)
    maxiter = config.maxiter or 10 * n
    tol = _tol(b, config)
    x = proj_sol(np.zeros(n))
    total_it = 0
    res = np.inf
    for _ in range(3):
        r = proj_res(b - A @ x)
        res = np.linalg.norm(r)
        if res <= tol or total_it >= maxiter:
            break
        z = proj_sol(jacobi * r)
        p = z.copy()
        rz = r @ z
        rec = res
        while rec > 0.5 * tol and total_it < maxiter:
            Ap = proj_res(A @ p)
            denom = p @ Ap
            if denom <= 0:
                break  # lost positive definiteness
            alpha = rz / denom
            x += alpha * p
            r -= alpha * Ap
            z = proj_sol(jacobi * r)
            rz_new = r @ z
            if rz_new == 0.0:
                break
            p = z + (rz_new / rz) * p
            rz = rz_new
            rec = np.linalg.norm(r)
            total_it += 1
        x = proj_sol(x)
        res = np.linalg.norm(proj_res(b - A @ x))
        if res <= tol:
            break
    return x, SolveInfo(res <= tol, total_it, float(res), "cg")


def _bicgstab(A, b, proj_sol, proj_res, config, jacobi):
    n = len(b)
    maxiter = config.maxiter or 10 * n
    tol = _tol(b, config)
    x = proj_sol(np.zeros(n))
    r = proj_res(b - A @ x)
    r0 = r.copy()
    rho = alpha = omega = 1.0
    v = np.zeros(n)
    p = np.zeros(n)
    res = np.linalg.norm(r)
    it = 0
    scale = max(np.linalg.norm(b), 1e-300)
    while res > tol and it < maxiter:
        rho_new = r0 @ r
        if abs(rho_new) < 1e-30 * scale * scale:
            return x, SolveInfo(False, it, float(res), "bicgstab")  # breakdown
        beta = (rho_new / rho) * (alpha / omega) if it else 0.0
        p = r + beta * (p - omega * v) if it else r.copy()
        phat = proj_sol(jacobi * p)
        v = proj_res(A @ phat)
        alpha = rho_new / (r0 @ v)
        s = r - alpha * v
        if np.linalg.norm(s) <= tol:
            x = proj_sol(x + alpha * phat)
            return x, SolveInfo(True, it + 1, float(np.linalg.norm(s)), "bicgstab")
        shat = proj_sol(jacobi * s)
        t = proj_res(A @ shat)
        tt = t @ t
        if tt == 0.0:
            return x, SolveInfo(False, it, float(res), "bicgstab")
        omega = (t @ s) / tt
        x = proj_sol(x + alpha * phat + omega * shat)
        r = s - omega * t
        rho = rho_new
        res = np.linalg.norm(r)
        it += 1
    return x, SolveInfo(res <= tol, it, float(res), "bicgstab")


def _gmres(A, b, proj_sol, proj_res, config, weights):
    n = len(b)
    if weights is not None:
        op = spla.LinearOperator((n, n), matvec=lambda x: A @ proj_sol(x))
    else:
        op = A
    maxiter = (config.maxiter or 10 * n) // config.restart + 1
    tol = _tol(b, config)
    x, flag = spla.gmres(op, proj_res(b), rtol=config.rtol, atol=config.atol,
                         restart=config.restart, maxiter=maxiter)
    x = proj_sol(x)
    res = float(np.linalg.norm(proj_res(b - A @ x)))
    return x, SolveInfo(flag == 0 and res <= tol * 1.01, -1 if flag == 0 else flag,
                        res, "gmres")


def _dense(A, b, proj_sol, proj_res, config, weights):
    n = len(b)
    dense = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    if weights is not None:
        # saddle formulation pins the weighted mean exactly
        w = np.asarray(weights, dtype=float)
        aug = np.zeros((n + 1, n + 1))
        aug[:n, :n] = dense
        aug[:n, n] = w
        aug[n, :n] = w
        rhs = np.concatenate([proj_res(b), [0.0]])
        x = np.linalg.solve(aug, rhs)[:n]
    else:
        x = np.linalg.solve(dense, b)
    x = proj_sol(x)
    res = float(np.linalg.norm(proj_res(b - A @ x)))
    # a direct solve of a numerically singular system can return garbage
    # without raising; judge convergence by the actual residual
    return x, SolveInfo(res <= max(10 * _tol(b, config), 1e-11 * np.linalg.norm(b)),
                        1, res, "dense")


def solve(A, b, config: SolverConfig | None = None, zero_mean_weights=None):
    """Solve A x = b.

    With ``zero_mean_weights`` (the diagonal mass of the pressure space),
    the solution is constrained to zero weighted mean; the projection is
    applied to the initial guess, every Krylov correction, and the result.
    On BiCGStab breakdown or non-convergence the solver falls back to
    GMRES, then to a dense direct solve below 2000 unknowns.

    Returns (x, SolveInfo).
    """
    config = config or SolverConfig()
    A_csr = _as_csr(A)
    b = np.asarray(b, dtype=float)
    n = len(b)
    if A_csr.shape != (n, n):
        raise ValueError(f"matrix shape {A_csr.shape} does not match rhs of size {n}")
    proj_sol, proj_res = _projectors(zero_mean_weights, n)
    if not np.linalg.norm(b):
        return np.zeros(n), SolveInfo(True, 0, 0.0, config.method)

    diag = A_csr.diagonal()
    jacobi = np.where(np.abs(diag) > 0, 1.0 / np.where(diag != 0, diag, 1.0), 1.0)

    if config.method == "cg":
        x, info = _cg(A_csr, b, proj_sol, proj_res, config, jacobi)
    elif config.method == "bicgstab":
        x, info = _bicgstab(A_csr, b, proj_sol, proj_res, config, jacobi)
    elif config.method == "gmres":
        x, info = _gmres(A_csr, b, proj_sol, proj_res, config, zero_mean_weights)
    else:
        return _dense(A_csr, b, proj_sol, proj_res, config, zero_mean_weights)

    if not info.converged and config.method in ("cg", "bicgstab"):
        fallbacks = [info.method]
        x, info = _gmres(A_csr, b, proj_sol, proj_res, config, zero_mean_weights)
        if not info.converged and n < 2000:
            fallbacks.append("gmres")
            x, info = _dense(A_csr, b, proj_sol, proj_res, config, zero_mean_weights)
        info.fallbacks = fallbacks
    return x, info
