"""Residual-type local error indicators and data oscillation.

For P1 elements the element-interior Laplacian vanishes, so the
semilinear indicator is

    eta(tau)^p = h_tau^p * ||u^m - f||_{Lp(tau)}^p
               + sum_{interior edges s of tau} w(tau, s) *
                 ||[grad u . n]||_{Lp(s)}^p

with h_tau = area(tau)**(1/2).  Two jump weights ``w`` are supported:
``"edge"`` (the default) uses the Euclidean edge length, the standard
realization for driving adaptivity; ``"element"`` uses h_tau, under which
the exact per-step indicator reduction inequality of the contraction
analysis holds (an inherited, unsplit edge keeps its length but not its
element's meshsize, so edge-length weighting provably breaks the exact
inequality).  Every interior edge contributes to both incident elements.

The quasilinear variant replaces the interior density by
``-kappa'(u)|grad u|^2 + b . grad u - f`` (the divergence collapses
because grad u is element-constant) and weights the edge jump by
``kappa(u)`` at edge quadrature points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fem, mesh as msh
from .errors import MeshTooLarge, QuadratureDomainError


@dataclass(frozen=True)
class IndicatorField:
    """Per-element indicator and oscillation values."""

    mesh: object
    eta: np.ndarray
    osc: np.ndarray
    p: float

    def __post_init__(self):
        if np.any(self.eta < 0.0) or np.any(self.osc < 0.0):
            raise ValueError("indicator entries must be nonnegative")
        if len(self.eta) != self.mesh.n_triangles:
            raise ValueError("indicator length does not match the mesh")
        for arr in (self.eta, self.osc):
            if isinstance(arr, np.ndarray):
                arr.setflags(write=False)

    def total(self):
        return aggregate(self)


def aggregate(field, subset=None, p=None):
    """l^p aggregation (sum of p-th powers)**(1/p) over a subset."""
    if isinstance(field, IndicatorField):
        values = field.eta
        p = field.p if p is None else p
    else:
        values = np.asarray(field, dtype=float)
        if p is None:
            p = 2.0
    if subset is not None:
        values = values[np.asarray(subset, dtype=np.int64)]
    if values.size == 0:
        return 0.0
    return float(np.sum(values ** p) ** (1.0 / p))


def _edge_geometry(mesh):
    p = mesh.vertices
    vec = p[mesh.edges[:, 1]] - p[mesh.edges[:, 0]]
    lengths = np.hypot(vec[:, 0], vec[:, 1])
    normals = np.stack([vec[:, 1], -vec[:, 0]], axis=1) / lengths[:, None]
    return lengths, normals


def _jump_values(mesh, grad_u):
    """Normal-gradient jump per edge; zero on boundary edges."""
    lengths, normals = _edge_geometry(mesh)
    t1 = mesh.edge_tris[:, 0]
    t2 = mesh.edge_tris[:, 1]
    interior = t2 >= 0
    jump = np.zeros(mesh.edges.shape[0])
    diff = grad_u[t1[interior]] - grad_u[t2[interior]]
    jump[interior] = np.einsum("ed,ed->e", diff, normals[interior])
    return jump, lengths, interior


def _scatter_edge_terms(mesh, per_edge, interior, jump_weight):
    """Distribute per-edge jump powers onto both incident elements."""
    h_tau = np.sqrt(mesh.areas)
    out = np.zeros(mesh.n_triangles)
    for side in (0, 1):
        tris = mesh.edge_tris[:, side]
        sel = interior & (tris >= 0)
        if jump_weight == "edge":
            w = _edge_geometry(mesh)[0][sel]
        elif jump_weight == "element":
            w = h_tau[tris[sel]]
        else:
            raise ValueError(f"unknown jump weight {jump_weight!r}")
        np.add.at(out, tris[sel], w * per_edge[sel])
    return out


def indicator_semilinear(u, problem, p=None, jump_weight="edge",
                         with_osc=True):
    """Indicator for ``-lap u + u^m - f`` (and the manufactured cubic)."""
    space = u.space
    mesh = space.mesh
    p = float(problem.p if p is None else p)

    xq = space.quad_xy
    dens = u.quad_values() ** problem.m - problem.f(xq[:, :, 0],
                                                    xq[:, :, 1])
    interior_p = np.einsum("tq,q->t", np.abs(dens) ** p, fem.TRI_QUAD_W) \
        * mesh.areas
    h_tau = np.sqrt(mesh.areas)
    eta_p = h_tau ** p * interior_p

    jump, lengths, interior = _jump_values(mesh, u.gradients())
    per_edge = np.abs(jump) ** p * lengths        # ||[.]||_Lp(s)^p
    eta_p = eta_p + _scatter_edge_terms(mesh, per_edge, interior,
                                        jump_weight)
    osc = oscillation(problem, mesh, p=p) if with_osc \
        else np.zeros(mesh.n_triangles)
    return IndicatorField(mesh=mesh, eta=eta_p ** (1.0 / p), osc=osc, p=p)


def pure_jump_indicator(u, p=2.0, jump_weight="element"):
    """Jump-only indicator of a P1 function (no data term).

    This is the part of the residual indicator the per-step reduction
    inequality controls exactly; with element weighting every bisection
    scales a child's jump weight by 2**(-1/2) while new interior edges
    carry no jump.
    """
    mesh = u.space.mesh
    jump, lengths, interior = _jump_values(mesh, u.gradients())
    per_edge = np.abs(jump) ** p * lengths
    eta_p = _scatter_edge_terms(mesh, per_edge, interior, jump_weight)
    return IndicatorField(mesh=mesh, eta=eta_p ** (1.0 / p),
                          osc=np.zeros(mesh.n_triangles), p=p)


def indicator_heat(u, problem, p=None, with_osc=True):
    """Indicator for ``-div(kappa(u) grad u) + b . grad u - f``."""
    if problem.kappa is None:
        raise ValueError("problem has no diffusion coefficient")
    space = u.space
    mesh = space.mesh
    p = float(problem.p if p is None else p)

    xq = space.quad_xy
    x, y = xq[:, :, 0], xq[:, :, 1]
    uq = u.quad_values()
    grad_u = u.gradients()
    k1 = problem.kappa1(uq)
    if not np.all(np.isfinite(k1)):
        raise QuadratureDomainError("kappa' undefined at a quadrature value")
    grad_sq = np.einsum("td,td->t", grad_u, grad_u)
    dens = -k1 * grad_sq[:, None] - problem.f(x, y)
    if problem.b_field is not None:
        bx, by = problem.b_field(x, y)
        dens = dens + bx * grad_u[:, None, 0] + by * grad_u[:, None, 1]
    interior_p = np.einsum("tq,q->t", np.abs(dens) ** p, fem.TRI_QUAD_W) \
        * mesh.areas
    h_tau = np.sqrt(mesh.areas)
    eta_p = h_tau ** p * interior_p

    # edge term: kappa(u) evaluated along the edge scales the constant
    # normal-gradient jump; u is continuous so both sides agree pointwise
    jump, lengths, interior = _jump_values(mesh, grad_u)
    kvals = _edge_kappa_values(mesh, u, problem)
    if not np.all(np.isfinite(kvals)):
        raise QuadratureDomainError("kappa undefined at an edge point")
    per_edge = np.einsum("eq,q->e", np.abs(kvals * jump[:, None]) ** p,
                         fem.EDGE_QUAD_W) * lengths
    eta_p = eta_p + _scatter_edge_terms(mesh, per_edge, interior, "edge")
    osc = oscillation(problem, mesh, p=p, u=u) if with_osc \
        else np.zeros(mesh.n_triangles)
    return IndicatorField(mesh=mesh, eta=eta_p ** (1.0 / p), osc=osc, p=p)


def _edge_kappa_values(mesh, u, problem):
    """kappa(u) at the edge quadrature points, (ne, nq)."""
    vals = u.vertex_values()
    va = vals[mesh.edges[:, 0]]
    vb = vals[mesh.edges[:, 1]]
    t = fem.EDGE_QUAD_T
    along = va[:, None] * (1.0 - t)[None, :] + vb[:, None] * t[None, :]
    return problem.kappa(along)


def oscillation(problem, mesh, p=None, u=None):
    """Data oscillation ``h_tau ||f - pi0 f||_{Lp(tau)}`` per element.

    pi0 is realized as the elementwise mean, exact as the Lp-best
    constant for p = 2 and used as a surrogate otherwise.  For the
    quasilinear problem with a state supplied, the full variant is
    returned: the mean is taken of the whole interior density and an
    edge term removes the best linear fit (weighted least squares at the
    edge quadrature nodes) from ``kappa(u) [grad u . n]``.
    """
    p = float(problem.p if p is None else p)
    space = u.space if u is not None else fem.P1Space(mesh)
    xq = space.quad_xy
    x, y = xq[:, :, 0], xq[:, :, 1]

    if problem.kappa is not None and u is not None:
        uq = u.quad_values()
        grad_u = u.gradients()
        grad_sq = np.einsum("td,td->t", grad_u, grad_u)
        dens = -problem.kappa1(uq) * grad_sq[:, None] - problem.f(x, y)
        if problem.b_field is not None:
            bx, by = problem.b_field(x, y)
            dens = dens + bx * grad_u[:, None, 0] + by * grad_u[:, None, 1]
    else:
        dens = np.broadcast_to(
            np.asarray(problem.f(x, y), dtype=float), x.shape)
    if not np.all(np.isfinite(dens)):
        raise QuadratureDomainError("oscillation density is non-finite")

    mean = dens @ fem.TRI_QUAD_W
    dev = np.abs(dens - mean[:, None]) ** p
    h_tau = np.sqrt(mesh.areas)
    osc_p = h_tau ** p * np.einsum("tq,q->t", dev, fem.TRI_QUAD_W) \
        * mesh.areas

    if problem.kappa is not None and u is not None:
        jump, lengths, interior = _jump_values(mesh, u.gradients())
        g = _edge_kappa_values(mesh, u, problem) * jump[:, None]
        resid = g - _edge_linear_fit(g)
        per_edge = np.einsum("eq,q->e", np.abs(resid) ** p,
                             fem.EDGE_QUAD_W) * lengths
        osc_p = osc_p + _scatter_edge_terms(mesh, per_edge, interior, "edge")
    return osc_p ** (1.0 / p)


def _edge_linear_fit(g):
    """L2(edge) projection of quadrature-node values onto linears."""
    t = fem.EDGE_QUAD_T
    w = fem.EDGE_QUAD_W
    # normal equations for basis {1, t - 1/2}; diagonal by symmetry
    s = t - 0.5
    c0 = g @ w
    c1 = (g * s[None, :]) @ w / (s ** 2 @ w)
    return c0[:, None] + c1[:, None] * s[None, :]


def dual_residual_probe(u, problem, ref_levels=1, max_dofs=5000):
    """Discrete dual-norm surrogate of the residual.

    The residual functional of ``u`` is evaluated on a uniformly refined
    reference space and represented through the energy inner product; the
    probe is the H1-seminorm of that representative, a two-sided proxy of
    the error up to the linearization constants.
    """
    from .nlsolve import linear_solve

    fine_mesh = msh.uniform_refine(u.space.mesh, ref_levels)
    fine_space = fem.P1Space(fine_mesh)
    if fine_space.n_dofs > max_dofs:
        raise MeshTooLarge(
            f"reference space has {fine_space.n_dofs} dofs > {max_dofs}")
    if fine_space.n_dofs == 0:
        return 0.0
    u_fine = fem.prolong(u, fine_space)
    r = fem.nonlinear_residual(problem, u_fine)
    A = fem.assemble_laplacian(fine_space)
    z, _ = linear_solve(A, r, kind="direct")
    return float(np.sqrt(max(z @ r, 0.0)))


def indicator_for(u, problem, p=None, with_osc=True):
    """Dispatch on the problem kind."""
    if problem.kind == "quasilinear_heat":
        return indicator_heat(u, problem, p=p, with_osc=with_osc)
    return indicator_semilinear(u, problem, p=p, with_osc=with_osc)
