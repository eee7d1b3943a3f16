"""Damped Newton iteration for the discrete nonlinear systems.

The outer loop drives the max-norm of the residual on the free dofs below
``tol_residual`` (default ``1e-10 * (1 + max|load|)``); the correction
systems go through either a sparse direct factorization or Jacobi-
preconditioned conjugate gradients.  Armijo backtracking keeps the l2
residual norm non-increasing across accepted steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fem
from .errors import (
    Breakdown,
    DampingStall,
    MaxIters,
    NoConvergence,
    SingularJacobian,
)


@dataclass
class NewtonConfig:
    tol_residual: Optional[float] = None   # None: 1e-10 * (1 + |load|_inf)
    max_iters: int = 30
    damping: str = "armijo"                # "armijo" | "none"
    backtrack_factor: float = 0.5
    max_backtracks: int = 30
    linear_kind: str = "direct"            # "direct" | "cg"
    linear_tol: float = 1e-12
    linear_maxit: Optional[int] = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.damping not in ("armijo", "none"):
            raise ValueError(f"unknown damping {self.damping!r}")
        if self.linear_kind not in ("direct", "cg"):
            raise ValueError(f"unknown linear solver {self.linear_kind!r}")


@dataclass
class SolveOutcome:
    u: fem.FeFunction
    iters: int
    final_residual: float
    linear_iters_total: int
    residual_history: list = field(default_factory=list)
    step_sizes: list = field(default_factory=list)


def default_tolerance(problem, space):
    """1e-10 * (1 + max|int f phi_i|), tight enough that the discrete
    solution behaves as exact to working precision."""
    if space.n_dofs == 0:
        return 1e-10
    f_hat = fem.load_vector(space, problem.f)
    return 1e-10 * (1.0 + float(np.abs(f_hat).max()))


def linear_solve(A, rhs, kind="direct", tol=1e-12, maxit=None):
    """Solve A x = rhs; returns (x, iterations).

    ``direct`` uses a sparse LU factorization; ``cg`` runs Jacobi-
    preconditioned conjugate gradients to a relative l2 residual of
    ``tol`` and raises ``Breakdown`` on negative curvature or ``MaxIters``
    past the iteration cap.
    """
    rhs = np.asarray(rhs, dtype=float)
    n = rhs.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix/rhs size mismatch")
    if n == 0:
        return np.zeros(0), 0
    if not np.any(rhs):
        return np.zeros(n), 0
    if kind == "direct":
        x = spla.spsolve(sp.csc_matrix(A), rhs)
        if not np.all(np.isfinite(x)):
            raise SingularJacobian("direct factorization produced non-finite "
                                   "solution")
        return x, 1
    return _pcg(A, rhs, tol, maxit if maxit is not None else 20 * n + 200)


def _pcg(A, b, tol, maxit):
    inv_diag = 1.0 / A.diagonal()
    if not np.all(np.isfinite(inv_diag)):
        raise Breakdown("zero diagonal entry in CG preconditioner")
    x = np.zeros_like(b)
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    b_norm = np.linalg.norm(b)
    for it in range(1, maxit + 1):
        Ap = A @ p
        curv = p @ Ap
        if curv <= 0.0:
            raise Breakdown("negative curvature: matrix is not SPD")
        alpha = rz / curv
        x += alpha * p
        r -= alpha * Ap
        if np.linalg.norm(r) <= tol * b_norm:
            return x, it
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise MaxIters(f"CG did not reach tol {tol} within {maxit} iterations")


def newton(problem, space, u0=None, cfg=None):
    """Newton iteration on ``<F(u), phi_i> = 0`` over the free dofs.

    Returns a :class:`SolveOutcome` whose residual is re-verified by a
    fresh evaluation after the loop.  Raises ``NoConvergence``,
    ``SingularJacobian`` or ``DampingStall``.
    """
    cfg = cfg or NewtonConfig()
    u = u0 if u0 is not None else space.zero_function()
    if u.space is not space:
        raise ValueError("initial guess lives on a different space")
    tol = cfg.tol_residual if cfg.tol_residual is not None \
        else default_tolerance(problem, space)

    linear_iters = 0
    history = []
    steps = []
    res = fem.nonlinear_residual(problem, u)
    history.append(float(np.linalg.norm(res)))
    iters = 0
    while True:
        if space.n_dofs == 0 or np.abs(res).max() <= tol:
            break
        if iters >= cfg.max_iters:
            raise NoConvergence(
                f"residual {np.abs(res).max():.3e} > tol {tol:.3e} "
                f"after {cfg.max_iters} Newton iterations")
        J = jacobian_matrix(problem, u)
        try:
            delta, lin_it = linear_solve(J, -res, kind=cfg.linear_kind,
                                         tol=cfg.linear_tol,
                                         maxit=cfg.linear_maxit)
        except (Breakdown, MaxIters) as exc:
            raise SingularJacobian(str(exc)) from exc
        linear_iters += lin_it

        if cfg.damping == "none":
            u = fem.FeFunction(space, u.coeffs + delta)
            res = fem.nonlinear_residual(problem, u)
            steps.append(1.0)
        else:
            u, res, s = _armijo_step(problem, space, u, delta,
                                     history[-1], cfg)
            steps.append(s)
        history.append(float(np.linalg.norm(res)))
        iters += 1

    # independent certificate: recompute the residual of the returned u
    check = fem.nonlinear_residual(problem, u)
    final = float(np.abs(check).max()) if space.n_dofs else 0.0
    if space.n_dofs and final > tol:
        raise NoConvergence("post-solve residual check failed")
    return SolveOutcome(u=u, iters=iters, final_residual=final,
                        linear_iters_total=linear_iters,
                        residual_history=history, step_sizes=steps)


def _armijo_step(problem, space, u, delta, res_norm, cfg):
    s = 1.0
    for _ in range(cfg.max_backtracks + 1):
        trial = fem.FeFunction(space, u.coeffs + s * delta)
        res = fem.nonlinear_residual(problem, trial)
        if np.linalg.norm(res) <= (1.0 - 1e-4 * s) * res_norm:
            return trial, res, s
        s *= cfg.backtrack_factor
    raise DampingStall(
        f"no sufficient decrease within {cfg.max_backtracks} backtracks")


def jacobian_matrix(problem, u):
    """Assembled Newton matrix at u (thin alias used by the outer loop)."""
    return fem.jacobian(problem, u)


def check_mesh_condition(space, tol=1e-12):
    """Positive off-diagonal stiffness entries on free rows.

    Entry (i, j) of the P1 stiffness matrix is -(cot t1 + cot t2)/2 over
    the angles opposite edge (i, j); non-positivity of every off-diagonal
    entry is the mesh condition behind discrete maximum principles.  Rows
    range over free vertices, columns over all vertices.  Returns a list
    of (vertex_i, vertex_j, value) violations; empty certifies the
    condition.
    """
    mesh = space.mesh
    local = np.einsum("tid,tjd->tij", space.grads, space.grads) \
        * space.areas[:, None, None]
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    full = sp.coo_matrix((local.ravel(), (rows, cols)),
                         shape=(mesh.n_vertices, mesh.n_vertices)).tocsr()
    full = sp.coo_matrix(full)
    violations = []
    bad = (full.data > tol) & (full.row != full.col) \
        & space.free_mask[full.row]
    for i, j, v in zip(full.row[bad], full.col[bad], full.data[bad]):
        violations.append((int(i), int(j), float(v)))
    violations.sort()
    return violations
