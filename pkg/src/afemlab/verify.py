"""Empirical verification of the convergence-theory ingredients.

Each routine measures, on concrete runs, one of the inequalities behind
the quasi-error contraction argument:

* quasi-orthogonality      Lambda_k = (e_{k+1}^2 + E_k^2) / e_k^2
* indicator reduction      eta^2(v, T*) <= eta^2(v, T) - lam eta^2(v, M),
                           lam = 1 - 2**(-ell/d), d = 2
* reliability ratio        C1_k = e_k^2 / eta_k^2
* quasi-error contraction  alpha_k^2 = Q_{k+1} / Q_k,
                           Q_k = e_k^2 + gamma eta_k^2
* discrete inf-sup         smallest generalized singular value of the
                           linearized form against a chosen norm
* local Lipschitz          |eta(v,tau) - eta(w,tau)| relative to
                           h_tau K |v - w|_{1, patch}

Nothing here is proved, only measured; the acceptance suite pins the
tolerances under which the measurements must land.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg as sla

from . import estimate, fem, mesh as msh
from .errors import MeshTooLarge


# ---------------------------------------------------------------------------
# quasi-orthogonality
# ---------------------------------------------------------------------------

def quasi_orthogonality_report(errors, increments):
    """Per-step ratios Lambda_k = (e_{k+1}^2 + E_k^2) / e_k^2.

    ``errors`` holds energy errors e_0..e_n, ``increments`` the energy
    norms E_k = |u_{k+1} - u_k| for k = 0..n-1.  Steps with e_k below
    1e-14 are skipped and flagged as NaN.
    """
    e = np.asarray(errors, dtype=float)
    E = np.asarray(increments, dtype=float)
    if E.shape[0] != e.shape[0] - 1:
        raise ValueError("need one increment per error pair")
    out = np.full(E.shape[0], np.nan)
    ok = e[:-1] > 1e-14
    out[ok] = (e[1:][ok] ** 2 + E[ok] ** 2) / e[:-1][ok] ** 2
    return out


# ---------------------------------------------------------------------------
# indicator reduction
# ---------------------------------------------------------------------------

class ReductionCheck(NamedTuple):
    margin: float          # eta2_fine - (eta2_coarse - lam * eta2_marked)
    rel_margin: float      # margin / eta2_coarse
    eta2_coarse: float
    eta2_fine: float
    eta2_marked: float
    lam: float


def indicator_reduction_check(v, marked, mesh_star, ell, p=2.0,
                              jump_weight="element"):
    """Exact per-step indicator reduction for a fixed function.

    ``v`` lives on the coarse mesh, ``mesh_star = refine(mesh, marked,
    ell)``, and the same function is evaluated on both meshes through
    exact prolongation.  In pure-jump mode with element-meshsize weights
    the inequality margin is provably <= 0 up to roundoff: new interior
    edges created inside a parent carry no jump (v is linear there) and
    every child's weight is the parent's scaled by 2**(-1/2) per
    bisection level.
    """
    lam = 1.0 - 2.0 ** (-ell / 2.0)
    space_star = fem.P1Space(mesh_star, dirichlet=v.space.dirichlet)
    v_star = fem.prolong(v, space_star)

    coarse = estimate.pure_jump_indicator(v, p=p, jump_weight=jump_weight)
    fine = estimate.pure_jump_indicator(v_star, p=p,
                                        jump_weight=jump_weight)
    eta2_coarse = float(np.sum(coarse.eta ** p))
    eta2_fine = float(np.sum(fine.eta ** p))
    eta2_marked = float(np.sum(
        coarse.eta[np.asarray(marked, dtype=np.int64)] ** p))
    margin = eta2_fine - (eta2_coarse - lam * eta2_marked)
    rel = margin / eta2_coarse if eta2_coarse > 0.0 else margin
    return ReductionCheck(margin=margin, rel_margin=rel,
                          eta2_coarse=eta2_coarse, eta2_fine=eta2_fine,
                          eta2_marked=eta2_marked, lam=lam)


def reduction_constants(theta, ell, d=2.0):
    """Reduction constant, admissible slack window and resulting rate.

    Returns lam = 1 - 2**(-ell/d), the largest admissible slack
    delta_max = lam theta^2 / (1 - lam theta^2), and the reduction factor
    omega = 1 - (1 + delta)(1 - lam theta^2) evaluated at half the
    window, which must land in (0, 1).
    """
    lam = 1.0 - 2.0 ** (-float(ell) / d)
    lt2 = lam * theta ** 2
    delta_max = lt2 / (1.0 - lt2)
    delta = 0.5 * delta_max
    omega = 1.0 - (1.0 + delta) * (1.0 - lt2)
    return {"lam": lam, "delta_max": delta_max, "delta": delta,
            "omega": omega}


# ---------------------------------------------------------------------------
# contraction / reliability
# ---------------------------------------------------------------------------

@dataclass
class ContractionReport:
    lambdas: np.ndarray      # quasi-orthogonality ratios (NaN where skipped)
    c1: np.ndarray           # error^2 / eta^2 per iteration
    alpha: np.ndarray        # quasi-error ratios, alpha_k for k >= 1
    q_error: np.ndarray      # sqrt(e_k^2 + gamma eta_k^2)
    gamma: float
    lam: Optional[float] = None
    theta: Optional[float] = None
    ell: Optional[int] = None

    def geometric_mean_alpha(self, start=1, stop=None):
        a = self.alpha[start:stop]
        a = a[np.isfinite(a)]
        if a.size == 0:
            return float("nan")
        return float(np.exp(np.mean(np.log(a))))

    @property
    def contracting(self):
        a = self.alpha[np.isfinite(self.alpha)]
        return bool(a.size) and bool(np.all(a < 1.0))


def auto_gamma(errors, etas):
    """Default quasi-error weight: balances the two terms at step 0."""
    e = np.asarray(errors, dtype=float)
    t = np.asarray(etas, dtype=float)
    if e.size and np.isfinite(e[0]) and t.size and t[0] > 1e-14:
        return float(e[0] ** 2 / t[0] ** 2)
    return 1.0


def contraction_report(errors, etas, increments=None, gamma=None,
                       theta=None, ell=None):
    """Quasi-error sequence Q_k = e_k^2 + gamma eta_k^2 and its ratios."""
    e = np.asarray(errors, dtype=float)
    t = np.asarray(etas, dtype=float)
    if e.shape != t.shape:
        raise ValueError("errors and etas must align")
    if gamma is None:
        gamma = auto_gamma(e, t)
    q = e ** 2 + gamma * t ** 2
    alpha = np.full(e.shape[0], np.nan)
    ok = q[:-1] > 1e-300
    alpha[1:][ok] = np.sqrt(q[1:][ok] / q[:-1][ok])
    lambdas = quasi_orthogonality_report(e, increments) \
        if increments is not None else np.full(max(e.shape[0] - 1, 0),
                                               np.nan)
    lam = None if ell is None else 1.0 - 2.0 ** (-ell / 2.0)
    return ContractionReport(lambdas=lambdas, c1=upper_bound_ratio(e, t),
                             alpha=alpha, q_error=np.sqrt(q),
                             gamma=float(gamma), lam=lam, theta=theta,
                             ell=ell)


def upper_bound_ratio(errors, etas):
    """Reliability ratios C1_k = e_k^2 / eta_k^2 (NaN where eta ~ 0)."""
    e = np.asarray(errors, dtype=float)
    t = np.asarray(etas, dtype=float)
    out = np.full(e.shape[0], np.nan)
    ok = t > 1e-14
    out[ok] = e[ok] ** 2 / t[ok] ** 2
    return out


def estimator_convergence_check(etas, min_drop=2.0):
    """True when the total estimator trends to zero over the run.

    The run passes when the final value sits at least ``min_drop`` below
    the value at iteration 2 and the last three values are
    non-increasing.  A run that never refines (frozen marking) fails; a
    run that starts at zero passes outright.
    """
    t = np.asarray(etas, dtype=float)
    if t.size == 0:
        return False
    if t[-1] <= 1e-14:
        return True
    ref = t[2] if t.size > 2 else t[0]
    if t[-1] > ref / min_drop:
        return False
    tail = t[-3:]
    return bool(np.all(np.diff(tail) <= 1e-12 * max(tail.max(), 1.0)))


# ---------------------------------------------------------------------------
# discrete inf-sup
# ---------------------------------------------------------------------------

def discrete_infsup(space, u_linearization, problem, norm="energy",
                    max_dofs=2000):
    """Smallest generalized singular value of the linearized form.

    Assembles B with entries b(phi_j, phi_i) from the problem's Gateaux
    derivative at the supplied state and the Gram matrix G of the chosen
    norm ("energy": stiffness; "h1": stiffness plus mass), then returns
    the smallest singular value of G^(-1/2) B G^(-1/2).
    """
    if space.n_dofs > max_dofs:
        raise MeshTooLarge(
            f"dense inf-sup computation on {space.n_dofs} dofs > {max_dofs}")
    if space.n_dofs == 0:
        raise ValueError("space has no degrees of freedom")
    B = fem.jacobian(problem, u_linearization).toarray()
    A = fem.assemble_laplacian(space).toarray()
    if norm == "energy":
        G = A
    elif norm == "h1":
        G = A + fem.assemble_mass(space).toarray()
    else:
        raise ValueError(f"unknown norm {norm!r}")
    w, V = sla.eigh(G)
    if w.min() <= 0.0:
        raise ValueError("norm Gram matrix is not positive definite")
    g_inv_half = (V / np.sqrt(w)) @ V.T
    s = sla.svdvals(g_inv_half @ B @ g_inv_half)
    return float(s.min())


# ---------------------------------------------------------------------------
# local Lipschitz probe
# ---------------------------------------------------------------------------

def local_lipschitz_probe(v, w, problem, bounds, patches=None,
                          return_field=False):
    """Measured constant of the indicator's local Lipschitz property.

    For each element the indicator difference of two admissible states
    (clamped into ``bounds``) is compared against
    ``h_tau * K * |v - w|_{1, patch}`` with K the cubic Lipschitz
    constant of the bounds interval.  Returns the max ratio (and the
    per-element ratios when requested); elements where the denominator
    vanishes contribute zero.
    """
    space = v.space
    mesh = space.mesh
    vc = fem.FeFunction.from_vertex_values(
        space, bounds.clamp(v.vertex_values()))
    wc = fem.FeFunction.from_vertex_values(
        space, bounds.clamp(w.vertex_values()))
    eta_v = estimate.indicator_for(vc, problem, with_osc=False).eta
    eta_w = estimate.indicator_for(wc, problem, with_osc=False).eta

    diff = fem.FeFunction(space, vc.coeffs - wc.coeffs)
    g = diff.gradients()
    elem_energy = np.einsum("td,td->t", g, g) * mesh.areas
    if patches is None:
        patches = [msh.patch(mesh, t) for t in range(mesh.n_triangles)]
    patch_energy = np.array([elem_energy[p].sum() for p in patches])

    K = bounds.lipschitz_constant()
    denom = np.sqrt(mesh.areas) * K * np.sqrt(patch_energy)
    ratios = np.zeros(mesh.n_triangles)
    ok = denom > 1e-14
    ratios[ok] = np.abs(eta_v - eta_w)[ok] / denom[ok]
    top = float(ratios.max()) if ratios.size else 0.0
    return (top, ratios) if return_field else top


# ---------------------------------------------------------------------------
# measurement studies (shared by the CLI suites and the acceptance tests)
# ---------------------------------------------------------------------------

def random_reduction_instance(rng, base=None, p=2.0, ell=1):
    """One randomized (mesh, v, M) indicator-reduction check."""
    from . import problems  # noqa: F401  (kept for symmetry of studies)

    mesh = base if base is not None else msh.unit_square()
    for _ in range(int(rng.integers(2, 5))):
        n = mesh.n_triangles
        marked = np.flatnonzero(rng.random(n) < 0.4)
        if marked.size == 0:
            marked = np.array([int(rng.integers(n))])
        mesh = msh.refine(mesh, marked)
    space = fem.P1Space(mesh)
    if space.n_dofs == 0:
        space = fem.P1Space(mesh, dirichlet=False)
    v = fem.FeFunction(space, rng.standard_normal(space.n_dofs))
    n = mesh.n_triangles
    marked = np.flatnonzero(rng.random(n) < float(rng.uniform(0.1, 0.6)))
    if marked.size == 0:
        marked = np.array([int(rng.integers(n))])
    mesh_star = msh.refine(mesh, marked, ell=ell)
    return indicator_reduction_check(v, marked, mesh_star, ell=ell, p=p)


def reduction_trials(n=20, seed=0, ell=1):
    """Randomized pure-jump reduction margins; all must be <= 1e-10."""
    rng = np.random.default_rng(seed)
    bases = [msh.unit_square(), msh.l_shape()]
    return [random_reduction_instance(rng, base=bases[k % len(bases)],
                                      ell=ell)
            for k in range(n)]


def linear_quasi_orthogonality_study(n_levels=5, pre_sweeps=4, ref_gap=2):
    """Exact Pythagoras measurement on the linear symmetric problem.

    Poisson with constant source on nested uniform meshes; errors are
    taken against the discrete solution on a reference refinement, with
    every energy evaluated through the reference stiffness matrix, so the
    Galerkin cross term cancels to roundoff and Lambda_k = 1 to ~1e-12.
    (Quadrature against a non-polynomial exact solution cannot reach that
    precision, which is why the discrete reference is used here.)
    """
    from . import problems
    from .nlsolve import newton

    prob = problems.poisson_problem(lambda x, y: np.ones_like(x))
    meshes = [msh.uniform_refine(msh.unit_square(), pre_sweeps)]
    for _ in range(n_levels - 1):
        meshes.append(msh.uniform_refine(meshes[-1]))
    ref_mesh = msh.uniform_refine(meshes[-1], ref_gap)
    ref_space = fem.P1Space(ref_mesh)
    A_ref = fem.assemble_laplacian(ref_space)
    u_ref = newton(prob, ref_space).u.coeffs

    coeffs = []
    for m in meshes:
        u = newton(prob, fem.P1Space(m)).u
        vals = fem.prolong_vertex_values(u.vertex_values(), m, ref_mesh)
        coeffs.append(vals[ref_space.free_mask])

    def a_norm(c):
        return float(np.sqrt(max(c @ (A_ref @ c), 0.0)))

    errors = np.array([a_norm(u_ref - c) for c in coeffs])
    increments = np.array([a_norm(coeffs[k + 1] - coeffs[k])
                           for k in range(len(coeffs) - 1)])
    lambdas = quasi_orthogonality_report(errors, increments)
    return {"errors": errors, "increments": increments, "lambdas": lambdas}


def cubic_quasi_orthogonality_study(max_dofs=50_000, theta=0.5):
    """Measured Lambda_k along an adaptive run of the manufactured cubic
    problem on the unit square (true energy errors by quadrature)."""
    from . import problems
    from .driver import AfemConfig, afem_run
    from .mark import MarkConfig

    prob = problems.sinsin_mms()
    cfg = AfemConfig(problem=prob,
                     mesh=msh.uniform_refine(msh.unit_square(), 2),
                     mark=MarkConfig(strategy="dorfler", theta=theta),
                     max_dofs=max_dofs, max_iters=200)
    report = afem_run(cfg)
    lambdas = quasi_orthogonality_report(report.errors, report.increments)
    return {"report": report, "lambdas": lambdas}


def lshape_contraction_study(n_iters=19, theta=0.5, ell=1, pre_sweeps=2,
                             ref_gap=2):
    """Quasi-error contraction on the cubic problem with unit source on
    the L-shaped domain.

    No exact solution exists here, so the energy errors are measured
    against the discrete solution on a uniform refinement of the final
    adaptive mesh.
    """
    from . import problems
    from .driver import AfemConfig, afem_run
    from .mark import MarkConfig
    from .nlsolve import newton

    prob = problems.make_semilinear_power(
        3, lambda x, y: np.ones_like(x))
    cfg = AfemConfig(problem=prob,
                     mesh=msh.uniform_refine(msh.l_shape(), pre_sweeps),
                     mark=MarkConfig(strategy="dorfler", theta=theta),
                     ell=ell, max_iters=n_iters + 1, probe_every=0,
                     check_mesh_condition=False)
    report = afem_run(cfg)

    ref_mesh = msh.uniform_refine(report.meshes[-1], ref_gap)
    ref_space = fem.P1Space(ref_mesh)
    warm = fem.prolong(report.solutions[-1], ref_space)
    u_ref = newton(prob, ref_space, u0=warm).u.coeffs
    A_ref = fem.assemble_laplacian(ref_space)

    errors = []
    for m, u in zip(report.meshes, report.solutions):
        vals = fem.prolong_vertex_values(u.vertex_values(), m, ref_mesh)
        d = u_ref - vals[ref_space.free_mask]
        errors.append(float(np.sqrt(max(d @ (A_ref @ d), 0.0))))
    errors = np.array(errors)
    contraction = contraction_report(errors, report.etas,
                                     increments=report.increments,
                                     theta=theta, ell=ell)
    return {"report": report, "errors": errors, "contraction": contraction}


def infsup_study(n_refinements=3, pre_sweeps=6, max_dofs=2000):
    """Discrete inf-sup measurements of the Laplacian form.

    In the energy norm the value is exactly 1; in the full H1 norm it
    settles to a mesh-independent constant in (0, 1).
    """
    from . import problems

    prob = problems.poisson_problem(lambda x, y: np.ones_like(x))
    out = {"energy": [], "h1": [], "dofs": []}
    m = msh.uniform_refine(msh.unit_square(), pre_sweeps)
    for _ in range(n_refinements):
        space = fem.P1Space(m)
        u0 = space.zero_function()
        out["dofs"].append(space.n_dofs)
        out["energy"].append(discrete_infsup(space, u0, prob,
                                             norm="energy",
                                             max_dofs=max_dofs))
        out["h1"].append(discrete_infsup(space, u0, prob, norm="h1",
                                         max_dofs=max_dofs))
        m = msh.uniform_refine(m)
    return out


def lipschitz_trials(n=100, seed=0, pre_sweeps=3):
    """Monte-Carlo local-Lipschitz probe on the manufactured cubic
    problem; the max measured constant should stay within a decade of
    the median."""
    from . import problems

    rng = np.random.default_rng(seed)
    prob = problems.sinsin_mms()
    mesh = msh.uniform_refine(msh.unit_square(), pre_sweeps)
    space = fem.P1Space(mesh)
    bounds = problems.AprioriBounds(-1.5, 1.5)
    patches = [msh.patch(mesh, t) for t in range(mesh.n_triangles)]
    tops = []
    for _ in range(n):
        v = fem.FeFunction(space, rng.uniform(-1.0, 1.0, space.n_dofs))
        w = fem.FeFunction(space, rng.uniform(-1.0, 1.0, space.n_dofs))
        tops.append(local_lipschitz_probe(v, w, prob, bounds,
                                          patches=patches))
    return np.array(tops)


# ---------------------------------------------------------------------------
# named suites for the command line
# ---------------------------------------------------------------------------

def suite_reduction(seed=0, n=20):
    checks = reduction_trials(n=n, seed=seed)
    rows = [("reduction", f"instance_{k}", c.rel_margin, 1e-10,
             c.rel_margin <= 1e-10) for k, c in enumerate(checks)]
    return rows, all(r[-1] for r in rows)


def suite_quasiorth(seed=0, max_dofs=20_000):
    lin = linear_quasi_orthogonality_study()
    rows = [("quasiorth", f"linear_lambda_{k}", lam, 1e-10,
             abs(lam - 1.0) <= 1e-10)
            for k, lam in enumerate(lin["lambdas"])]
    cub = cubic_quasi_orthogonality_study(max_dofs=max_dofs)
    lams = cub["lambdas"]
    for k, lam in enumerate(lams):
        if k >= 5 and np.isfinite(lam):
            rows.append(("quasiorth", f"cubic_lambda_{k}", lam, 1.2,
                         lam <= 1.2))
    return rows, all(r[-1] for r in rows)


def suite_infsup(seed=0):
    st = infsup_study()
    rows = [("infsup", f"energy_{k}", b, 1e-8, abs(b - 1.0) <= 1e-8)
            for k, b in enumerate(st["energy"])]
    h1 = np.array(st["h1"])
    spread = float(h1.max() / h1.min())
    rows.append(("infsup", "h1_spread", spread, 1.2, spread <= 1.2))
    rows.append(("infsup", "h1_in_unit_interval", float(h1.max()), 1.0,
                 bool(np.all((h1 > 0.0) & (h1 <= 1.0 + 1e-12)))))
    return rows, all(r[-1] for r in rows)


def suite_lipschitz(seed=0, n=100):
    tops = lipschitz_trials(n=n, seed=seed)
    ratio = float(tops.max() / np.median(tops))
    rows = [("lipschitz", "max_measured", float(tops.max()), np.inf, True),
            ("lipschitz", "max_over_median", ratio, 10.0, ratio <= 10.0)]
    return rows, all(r[-1] for r in rows)


SUITES = {
    "reduction": suite_reduction,
    "quasiorth": suite_quasiorth,
    "infsup": suite_infsup,
    "lipschitz": suite_lipschitz,
}
