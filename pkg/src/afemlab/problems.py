"""Concrete nonlinear PDE definitions.

Three problem families, all with homogeneous Dirichlet data:

* ``semilinear_power``:  -lap(u) + u**m - f = 0,  integer m >= 2
* ``cubic_mms``:         the m = 3 case with a manufactured source,
                          so the exact solution and its gradient travel
                          with the problem
* ``quasilinear_heat``:  -div(kappa(u) grad u) + b . grad u - f = 0,
                          kappa in C^2 bounded below by alpha > 0 and a
                          divergence-free velocity b

A :class:`ProblemSpec` carries vectorized callbacks; the assembly layer
consumes them as densities: ``kappa``/``kappa1`` for the diffusion part
(``None`` means the identity Laplacian), ``b_field`` for convection, and
``reaction``/``reaction_du`` for the zero-order part including ``-f``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidExponent, NonellipticDiffusion

# sample grid for diffusion-coefficient diagnostics
_KAPPA_SAMPLES = np.linspace(-10.0, 10.0, 10_000)


@dataclass(frozen=True)
class ProblemSpec:
    """Definition of one nonlinear elliptic problem.

    All callbacks are numpy-vectorized and must be pure; instances are
    immutable and safe to share.
    """

    kind: str
    f: Callable
    p: float = 2.0
    m: Optional[int] = None
    kappa: Optional[Callable] = None
    kappa1: Optional[Callable] = None
    kappa2: Optional[Callable] = None
    b_field: Optional[Callable] = None
    exact: Optional[Callable] = None
    exact_grad: Optional[Callable] = None
    reaction: Callable = field(default=None, repr=False)
    reaction_du: Callable = field(default=None, repr=False)

    @property
    def has_exact(self):
        return self.exact is not None


@dataclass(frozen=True)
class AprioriBounds:
    """Essential bounds expected to contain the discrete solutions."""

    u_minus: float
    u_plus: float

    def __post_init__(self):
        if self.u_minus > self.u_plus:
            raise ValueError("u_minus exceeds u_plus")

    def lipschitz_constant(self):
        """sup of 3 chi^2 over [u_minus, u_plus] (cubic nonlinearity)."""
        return 3.0 * max(self.u_minus ** 2, self.u_plus ** 2)

    def clamp(self, values):
        return np.clip(values, self.u_minus, self.u_plus)


def make_semilinear_power(m, f, p=2.0, exact=None, exact_grad=None):
    """Power nonlinearity u**m with source f(x, y)."""
    if int(m) != m or m < 2:
        raise InvalidExponent(f"exponent must be an integer >= 2, got {m}")
    m = int(m)

    def reaction(u, x, y):
        return u ** m - f(x, y)

    def reaction_du(u, x, y):
        return m * u ** (m - 1)

    return ProblemSpec(kind="semilinear_power", f=f, p=p, m=m,
                       exact=exact, exact_grad=exact_grad,
                       reaction=reaction, reaction_du=reaction_du)


def make_cubic_mms(exact, exact_grad, exact_laplacian, p=2.0):
    """Cubic problem with the source manufactured from an exact solution:
    f = -lap(u*) + u***3, so errors are measurable exactly."""

    def f(x, y):
        return -exact_laplacian(x, y) + exact(x, y) ** 3

    spec = make_semilinear_power(3, f, p=p, exact=exact,
                                 exact_grad=exact_grad)
    return ProblemSpec(kind="cubic_mms", f=spec.f, p=p, m=3,
                       exact=exact, exact_grad=exact_grad,
                       reaction=spec.reaction, reaction_du=spec.reaction_du)


def sinsin_mms(p=2.0):
    """Manufactured cubic problem with u* = sin(pi x) sin(pi y)."""
    pi = np.pi

    def exact(x, y):
        return np.sin(pi * x) * np.sin(pi * y)

    def exact_grad(x, y):
        return (pi * np.cos(pi * x) * np.sin(pi * y),
                pi * np.sin(pi * x) * np.cos(pi * y))

    def exact_laplacian(x, y):
        return -2.0 * pi ** 2 * np.sin(pi * x) * np.sin(pi * y)

    return make_cubic_mms(exact, exact_grad, exact_laplacian, p=p)


def bubble_mms(p=2.0):
    """Manufactured cubic problem with u* = x(1-x) y(1-y)."""

    def exact(x, y):
        return x * (1.0 - x) * y * (1.0 - y)

    def exact_grad(x, y):
        return ((1.0 - 2.0 * x) * y * (1.0 - y),
                x * (1.0 - x) * (1.0 - 2.0 * y))

    def exact_laplacian(x, y):
        return -2.0 * (y * (1.0 - y) + x * (1.0 - x))

    return make_cubic_mms(exact, exact_grad, exact_laplacian, p=p)


def make_quasilinear_heat(kappa, kappa1, kappa2, b_field, f, p=2.0,
                          exact=None, exact_grad=None):
    """Nonlinear-diffusion convection problem.

    The diffusion coefficient is sampled on a diagnostic grid; a
    non-positive sample raises ``NonellipticDiffusion``.  Estimator-driven
    convergence theory for this family wants p >= 2*d = 4; smaller p is
    accepted with a warning.
    """
    samples = np.asarray(kappa(_KAPPA_SAMPLES), dtype=float)
    samples = np.broadcast_to(samples, _KAPPA_SAMPLES.shape)
    if not np.all(np.isfinite(samples)) or samples.min() <= 0.0:
        raise NonellipticDiffusion(
            f"kappa is not positive on the diagnostic grid "
            f"(min {samples.min()!r})")
    if p < 4.0:
        warnings.warn(
            f"quasilinear heat problem built with p = {p} < 4 = 2d; the "
            "indicator convergence guarantee needs p >= 2d",
            RuntimeWarning, stacklevel=2)

    def reaction(u, x, y):
        return -f(x, y) + 0.0 * u

    def reaction_du(u, x, y):
        return np.zeros_like(u)

    return ProblemSpec(kind="quasilinear_heat", f=f, p=p,
                       kappa=kappa, kappa1=kappa1, kappa2=kappa2,
                       b_field=b_field, exact=exact, exact_grad=exact_grad,
                       reaction=reaction, reaction_du=reaction_du)


def poisson_problem(f, p=2.0, exact=None, exact_grad=None):
    """Plain Poisson problem as the linear degenerate case (kappa = 1,
    b = 0); handy for Galerkin-orthogonality baselines."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return make_quasilinear_heat(
            kappa=lambda s: np.ones_like(s),
            kappa1=lambda s: np.zeros_like(s),
            kappa2=lambda s: np.zeros_like(s),
            b_field=None, f=f, p=p, exact=exact, exact_grad=exact_grad)


def apriori_bounds_cubic(linear_range):
    """Essential bounds for the cubic problem from bounds of its linear
    part.

    Splitting u = u_l + u_n with u_l the solution of the linear problem,
    the cubic remainder satisfies -sup(u_l) <= u_n <= -inf(u_l), so
    u lies in [inf(u_l) - sup(u_l), sup(u_l) - inf(u_l)].  A sign
    condition on the data sharpens one side by the maximum principle:
    nonnegative u_l (f >= 0) gives the admissible lower bound 0.
    """
    l_min, l_max = (float(v) for v in linear_range)
    if not (np.isfinite(l_min) and np.isfinite(l_max)) or l_min > l_max:
        raise ValueError("invalid linear-part range")
    u_minus = l_min - l_max
    u_plus = l_max - l_min
    if l_min >= 0.0:
        u_minus = 0.0
    if l_max <= 0.0:
        u_plus = 0.0
    return AprioriBounds(u_minus, u_plus)


def linear_part_range(f, mesh):
    """Range of the discrete Poisson solution for source f on a coarse
    mesh (closure included, so 0 is always in the range)."""
    from . import fem
    from .nlsolve import linear_solve

    space = fem.P1Space(mesh)
    if space.n_dofs == 0:
        return (0.0, 0.0)
    A = fem.assemble_laplacian(space)
    x, _ = linear_solve(A, fem.load_vector(space, f), kind="direct")
    return (min(float(x.min()), 0.0), max(float(x.max()), 0.0))
