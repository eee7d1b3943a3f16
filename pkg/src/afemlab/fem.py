"""Continuous piecewise-linear (P1) finite elements over a triangulation.

Homogeneous Dirichlet data only: boundary vertices are eliminated from
the system rather than penalized, so assembled symmetric forms stay SPD.
Pure P1 terms (stiffness, mass) use closed-form element matrices; every
nonlinear or data-dependent integral uses a 6-point, order-4 symmetric
triangle rule, which integrates ``u**3 * phi`` exactly for P1 ``u``.

Problem objects are consumed duck-typed; see :mod:`afemlab.problems` for
the densities they expose (``kappa``, ``kappa1``, ``b_field``,
``reaction``, ``reaction_du``).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import NotARefinement, QuadratureDomainError

# 6-point symmetric triangle rule, degree 4 (weights normalized to 1).
_A1, _B1, _W1 = 0.445948490915965, 0.108103018168070, 0.223381589678011
_A2, _B2, _W2 = 0.091576213509771, 0.816847572980459, 0.109951743655322
TRI_QUAD_BARY = np.array([
    [_B1, _A1, _A1], [_A1, _B1, _A1], [_A1, _A1, _B1],
    [_B2, _A2, _A2], [_A2, _B2, _A2], [_A2, _A2, _B2],
])
TRI_QUAD_W = np.array([_W1, _W1, _W1, _W2, _W2, _W2])

# 3-point Gauss rule on [0, 1], degree 5.
_G = 0.5 * np.sqrt(3.0 / 5.0)
EDGE_QUAD_T = np.array([0.5 - _G, 0.5, 0.5 + _G])
EDGE_QUAD_W = np.array([5.0, 8.0, 5.0]) / 18.0

_MASS_REF = np.array([[2.0, 1.0, 1.0],
                      [1.0, 2.0, 1.0],
                      [1.0, 1.0, 2.0]]) / 12.0


class P1Space:
    """P1 Lagrange space on a triangulation.

    With ``dirichlet=True`` (the default) every boundary vertex is
    constrained to zero and excluded from the degrees of freedom.
    """

    def __init__(self, mesh, dirichlet=True):
        self.mesh = mesh
        self.dirichlet = bool(dirichlet)
        free = ~mesh.on_boundary if dirichlet \
            else np.ones(mesh.n_vertices, dtype=bool)
        self.free_mask = free
        self.n_dofs = int(free.sum())
        dof = np.full(mesh.n_vertices, -1, dtype=np.int64)
        dof[free] = np.arange(self.n_dofs)
        self.dof_of_vertex = dof
        self.vertex_of_dof = np.flatnonzero(free)

        pts = mesh.corners()
        self.areas = mesh.areas
        # grad(lambda_i) = rot90(p_{i+2} - p_{i+1}) / (2 A)
        g = np.empty((mesh.n_triangles, 3, 2))
        for i in range(3):
            e = pts[:, (i + 2) % 3] - pts[:, (i + 1) % 3]
            g[:, i, 0] = -e[:, 1]
            g[:, i, 1] = e[:, 0]
        self.grads = g / (2.0 * self.areas)[:, None, None]
        # quadrature points in physical coordinates, (nt, 6, 2)
        self.quad_xy = np.einsum("qi,tid->tqd", TRI_QUAD_BARY, pts)
        self._laplacian = None
        self._mass = None

    def zero_function(self):
        return FeFunction(self, np.zeros(self.n_dofs))

    def interpolate(self, func):
        """Nodal interpolation of ``func(x, y)``; Dirichlet nodes get 0."""
        v = self.mesh.vertices
        vals = np.asarray(func(v[:, 0], v[:, 1]), dtype=float)
        return FeFunction(self, vals[self.free_mask])


class FeFunction:
    """Coefficient vector of a P1 function (free dofs only)."""

    def __init__(self, space, coeffs):
        coeffs = np.array(coeffs, dtype=float, copy=True)
        if coeffs.shape != (space.n_dofs,):
            raise ValueError("coefficient length does not match the space")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("non-finite coefficients")
        coeffs.setflags(write=False)
        self.space = space
        self.coeffs = coeffs

    @classmethod
    def from_vertex_values(cls, space, values):
        values = np.asarray(values, dtype=float)
        return cls(space, values[space.free_mask])

    def vertex_values(self):
        """Values at all vertices, zeros at constrained ones."""
        out = np.zeros(self.space.mesh.n_vertices)
        out[self.space.free_mask] = self.coeffs
        return out

    def element_values(self):
        """Vertex values gathered per triangle, (nt, 3)."""
        return self.vertex_values()[self.space.mesh.triangles]

    def quad_values(self):
        """Values at the triangle quadrature points, (nt, 6)."""
        return self.element_values() @ TRI_QUAD_BARY.T

    def gradients(self):
        """Element-constant gradients, (nt, 2)."""
        return np.einsum("ti,tid->td", self.element_values(),
                         self.space.grads)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def _scatter(space, local):
    """Sum (nt, 3, 3) element matrices into a CSR matrix on free dofs."""
    dof = space.dof_of_vertex[space.mesh.triangles]      # (nt, 3)
    rows = np.repeat(dof, 3, axis=1).ravel()
    cols = np.tile(dof, (1, 3)).ravel()
    vals = local.ravel()
    keep = (rows >= 0) & (cols >= 0)
    mat = sp.coo_matrix((vals[keep], (rows[keep], cols[keep])),
                        shape=(space.n_dofs, space.n_dofs))
    return mat.tocsr()


def _local_stiffness(space, weight=None):
    local = np.einsum("tid,tjd->tij", space.grads, space.grads)
    scale = space.areas if weight is None else space.areas * weight
    return local * scale[:, None, None]


def _local_mass(space, weight_q=None):
    if weight_q is None:
        return _MASS_REF[None, :, :] * space.areas[:, None, None]
    local = np.einsum("tq,q,qi,qj->tij", weight_q, TRI_QUAD_W,
                      TRI_QUAD_BARY, TRI_QUAD_BARY)
    return local * space.areas[:, None, None]


def assemble_laplacian(space):
    """Stiffness matrix of (grad u, grad v), exact for P1, cached."""
    if space._laplacian is None:
        space._laplacian = _scatter(space, _local_stiffness(space))
    return space._laplacian


def assemble_mass(space):
    """Mass matrix of (u, v), exact for P1, cached."""
    if space._mass is None:
        space._mass = _scatter(space, _local_mass(space))
    return space._mass


def load_vector(space, f):
    """Entries int f * phi_i over free dofs, by quadrature."""
    xq = space.quad_xy
    fq = _finite(np.broadcast_to(
        np.asarray(f(xq[:, :, 0], xq[:, :, 1]), dtype=float), xq.shape[:2]),
        "source term")
    contrib = np.einsum("tq,q,qi->ti", fq, TRI_QUAD_W, TRI_QUAD_BARY) \
        * space.areas[:, None]
    return _scatter_vector(space, contrib)


def _scatter_vector(space, contrib):
    out = np.zeros(space.n_dofs)
    dof = space.dof_of_vertex[space.mesh.triangles]
    np.add.at(out, dof[dof >= 0], contrib[dof >= 0])
    return out


def _finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise QuadratureDomainError(
            f"{what} evaluated to a non-finite value at a quadrature point")
    return arr


def nonlinear_residual(problem, u):
    """Residual vector: entry i is the weak form tested with basis i.

    Covers operators of the form
    ``-div(kappa(u) grad u) + b . grad u + r(u, x) = 0``
    where the zero-order density ``r`` already includes ``-f``.
    """
    space = u.space
    xq = space.quad_xy
    x, y = xq[:, :, 0], xq[:, :, 1]
    uq = u.quad_values()
    grad_u = u.gradients()

    if problem.kappa is None:
        res = assemble_laplacian(space) @ u.coeffs
        contrib = np.zeros((space.mesh.n_triangles, 3))
    else:
        kq = _finite(problem.kappa(uq), "diffusion coefficient")
        kbar = kq @ TRI_QUAD_W
        flux = grad_u * (kbar * space.areas)[:, None]
        contrib = np.einsum("td,tid->ti", flux, space.grads)
        res = np.zeros(space.n_dofs)

    dens = _finite(np.asarray(problem.reaction(uq, x, y), dtype=float),
                   "reaction density")
    if problem.b_field is not None:
        bx, by = problem.b_field(x, y)
        dens = dens + bx * grad_u[:, None, 0] + by * grad_u[:, None, 1]
    contrib = contrib + np.einsum("tq,q,qi->ti", dens, TRI_QUAD_W,
                                  TRI_QUAD_BARY) * space.areas[:, None]
    return res + _scatter_vector(space, contrib)


def jacobian(problem, u):
    """Derivative of the residual at u, assembled on free dofs."""
    space = u.space
    xq = space.quad_xy
    x, y = xq[:, :, 0], xq[:, :, 1]
    uq = u.quad_values()
    grad_u = u.gradients()

    rprime = _finite(np.asarray(problem.reaction_du(uq, x, y), dtype=float),
                     "reaction derivative")
    local = _local_mass(space, np.broadcast_to(rprime, uq.shape))

    if problem.kappa is None:
        diffusion = assemble_laplacian(space)
    else:
        kq = _finite(problem.kappa(uq), "diffusion coefficient")
        diffusion = _scatter(space, _local_stiffness(
            space, kq @ TRI_QUAD_W))
        k1q = _finite(problem.kappa1(uq), "diffusion derivative")
        gdot = np.einsum("td,tid->ti", grad_u, space.grads)
        sj = np.einsum("tq,q,qj->tj", k1q, TRI_QUAD_W, TRI_QUAD_BARY)
        local = local + np.einsum("ti,tj->tij", gdot, sj) \
            * space.areas[:, None, None]

    if problem.b_field is not None:
        bx, by = problem.b_field(x, y)
        bgrad = bx[:, :, None] * space.grads[:, None, :, 0] \
            + by[:, :, None] * space.grads[:, None, :, 1]   # (nt, q, j)
        local = local + np.einsum("tqj,q,qi->tij", bgrad, TRI_QUAD_W,
                                  TRI_QUAD_BARY) * space.areas[:, None, None]

    return diffusion + _scatter(space, local)


# ---------------------------------------------------------------------------
# prolongation between nested meshes
# ---------------------------------------------------------------------------

def _mesh_chain(coarse_mesh, fine_mesh):
    chain = [fine_mesh]
    m = fine_mesh
    while m is not coarse_mesh:
        m = m.parent_mesh
        if m is None:
            raise NotARefinement(
                "target mesh does not descend from the function's mesh")
        chain.append(m)
    chain.reverse()
    return chain


def prolong_vertex_values(values, coarse_mesh, fine_mesh):
    """Exact nodal transfer of a P1 function to a nested refinement.

    New vertices are edge midpoints, so each takes the mean of its two
    parent values; cascaded midpoints (parents that are themselves new)
    resolve in waves.
    """
    vals = np.asarray(values, dtype=float)
    for m in _mesh_chain(coarse_mesh, fine_mesh)[1:]:
        n_inh = m.n_inherited_vertices
        out = np.empty(m.n_vertices)
        out[:n_inh] = vals
        pa = m.vertex_parents[:, 0]
        pb = m.vertex_parents[:, 1]
        computed = np.zeros(m.n_vertices, dtype=bool)
        computed[:n_inh] = True
        pending = np.arange(n_inh, m.n_vertices)
        while pending.size:
            ready = computed[pa[pending]] & computed[pb[pending]]
            sel = pending[ready]
            out[sel] = 0.5 * (out[pa[sel]] + out[pb[sel]])
            computed[sel] = True
            pending = pending[~ready]
        vals = out
    return vals


def prolong(u, fine_space):
    """Represent ``u`` exactly in a P1 space over a nested refinement."""
    vals = prolong_vertex_values(u.vertex_values(), u.space.mesh,
                                 fine_space.mesh)
    return FeFunction.from_vertex_values(fine_space, vals)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def h1_seminorm(u):
    """| . |_{H^1}: sqrt(c' A c) with the cached stiffness matrix."""
    A = assemble_laplacian(u.space)
    return float(np.sqrt(max(u.coeffs @ (A @ u.coeffs), 0.0)))


def energy_norm(u):
    """Energy norm of the Laplacian form; equals the H1 seminorm."""
    return h1_seminorm(u)


def l2_norm(u):
    M = assemble_mass(u.space)
    return float(np.sqrt(max(u.coeffs @ (M @ u.coeffs), 0.0)))


def lp_norm(u, p):
    uq = np.abs(u.quad_values()) ** p
    return float((np.einsum("tq,q->t", uq, TRI_QUAD_W)
                  @ u.space.areas) ** (1.0 / p))


def energy_increment(u_coarse, u_fine):
    """|u_fine - u_coarse|_{H^1} via exact nested prolongation."""
    w = prolong(u_coarse, u_fine.space)
    return h1_seminorm(FeFunction(u_fine.space, u_fine.coeffs - w.coeffs))


def l2_error(u, exact):
    xq = u.space.quad_xy
    d = u.quad_values() - exact(xq[:, :, 0], xq[:, :, 1])
    return float(np.sqrt(np.einsum("tq,q->t", d * d, TRI_QUAD_W)
                         @ u.space.areas))


def energy_error(u, exact_grad):
    """|u - u_exact|_{H^1} by element quadrature of the gradient gap."""
    xq = u.space.quad_xy
    gx, gy = exact_grad(xq[:, :, 0], xq[:, :, 1])
    gu = u.gradients()
    d2 = (gu[:, None, 0] - gx) ** 2 + (gu[:, None, 1] - gy) ** 2
    return float(np.sqrt(np.einsum("tq,q->t", d2, TRI_QUAD_W)
                         @ u.space.areas))


def w1p_error(u, exact, exact_grad, p):
    """|| u - u_exact ||_{W^{1,p}} = (sum of value and gradient p-powers)."""
    xq = u.space.quad_xy
    x, y = xq[:, :, 0], xq[:, :, 1]
    dv = np.abs(u.quad_values() - exact(x, y)) ** p
    gx, gy = exact_grad(x, y)
    gu = u.gradients()
    dg = ((gu[:, None, 0] - gx) ** 2
          + (gu[:, None, 1] - gy) ** 2) ** (p / 2.0)
    total = np.einsum("tq,q->t", dv + dg, TRI_QUAD_W) @ u.space.areas
    return float(total ** (1.0 / p))


def norms(u, p=2.0, exact=None, exact_grad=None):
    """Bundle of the standard norms (and errors when an exact solution
    with gradient is supplied)."""
    out = {
        "l2": l2_norm(u),
        "h1_semi": h1_seminorm(u),
        "energy": energy_norm(u),
        "lp": lp_norm(u, p),
    }
    if exact is not None:
        out["l2_error"] = l2_error(u, exact)
    if exact_grad is not None:
        out["energy_error"] = energy_error(u, exact_grad)
    if exact is not None and exact_grad is not None:
        out["w1p_error"] = w1p_error(u, exact, exact_grad, p)
    return out


def point_eval(u, points):
    """Evaluate a P1 function at arbitrary points (brute-force search)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    mesh = u.space.mesh
    corners = mesh.corners()
    vals = u.element_values()
    out = np.empty(pts.shape[0])
    for k, (x, y) in enumerate(pts):
        rel = np.array([x, y]) - corners[:, 0]
        d1 = corners[:, 1] - corners[:, 0]
        d2 = corners[:, 2] - corners[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        l1 = (rel[:, 0] * d2[:, 1] - rel[:, 1] * d2[:, 0]) / det
        l2_ = (d1[:, 0] * rel[:, 1] - d1[:, 1] * rel[:, 0]) / det
        l0 = 1.0 - l1 - l2_
        inside = (l0 >= -1e-12) & (l1 >= -1e-12) & (l2_ >= -1e-12)
        if not np.any(inside):
            raise ValueError(f"point {(x, y)} outside the mesh")
        t = int(np.flatnonzero(inside)[0])
        out[k] = l0[t] * vals[t, 0] + l1[t] * vals[t, 1] + l2_[t] * vals[t, 2]
    return out if out.size > 1 else float(out[0])
