import warnings

import numpy as np
import pytest

from afemlab import fem, mesh as msh, nlsolve, problems
from afemlab.errors import InvalidExponent, NonellipticDiffusion


def test_invalid_exponent():
    with pytest.raises(InvalidExponent):
        problems.make_semilinear_power(1, lambda x, y: 0.0 * x)


def test_zero_solution_identity():
    prob = problems.make_semilinear_power(3, lambda x, y: 0.0 * x)
    x = np.linspace(0, 1, 5)
    assert np.all(prob.reaction(np.zeros_like(x), x, x) == 0.0)


def test_residual_density_m2():
    prob = problems.make_semilinear_power(2, lambda x, y: np.ones_like(x))
    x = np.array([0.3])
    assert prob.reaction(np.zeros(1), x, x)[0] == -1.0


def test_sinsin_manufactured_source():
    prob = problems.sinsin_mms()
    rng = np.random.default_rng(1)
    x, y = rng.random(20), rng.random(20)
    u = np.sin(np.pi * x) * np.sin(np.pi * y)
    expected = 2.0 * np.pi ** 2 * u + u ** 3
    assert np.allclose(prob.f(x, y), expected, rtol=1e-14)


def test_bubble_manufactured_source():
    prob = problems.bubble_mms()
    rng = np.random.default_rng(2)
    x, y = rng.random(20), rng.random(20)
    u = x * (1 - x) * y * (1 - y)
    expected = 2.0 * (y * (1 - y) + x * (1 - x)) + u ** 3
    assert np.allclose(prob.f(x, y), expected, rtol=1e-14)


def test_zero_exact_manufactures_zero_source():
    z = lambda x, y: 0.0 * x
    prob = problems.make_cubic_mms(z, lambda x, y: (0.0 * x, 0.0 * y), z)
    x = np.linspace(0, 1, 7)
    assert np.all(prob.f(x, x) == 0.0)


def test_mms_interpolant_residual_shrinks_under_refinement():
    prob = problems.sinsin_mms()
    from afemlab.estimate import dual_residual_probe
    m = msh.uniform_refine(msh.unit_square(), 4)
    probes = []
    for _ in range(5):
        space = fem.P1Space(m)
        u = space.interpolate(prob.exact)
        probes.append(dual_residual_probe(u, prob, ref_levels=1,
                                          max_dofs=20000))
        m = msh.uniform_refine(m)
    # uniform sweeps alternate between two mesh patterns; h halves every
    # two sweeps, and the probe follows at first order in h
    for k in range(len(probes) - 2):
        ratio = probes[k + 2] / probes[k]
        assert 0.35 < ratio < 0.7
    assert probes[-1] < probes[0]


def test_cubic_monotone_nonlinearity():
    rng = np.random.default_rng(3)
    space = fem.P1Space(msh.uniform_refine(msh.unit_square(), 3))
    for _ in range(10):
        a = rng.standard_normal(space.n_dofs)
        b = rng.standard_normal(space.n_dofs)
        u = fem.FeFunction(space, a)
        v = fem.FeFunction(space, b)
        # quadrature pairing of (u^3 - v^3, u - v)
        du = u.quad_values() ** 3 - v.quad_values() ** 3
        dv = u.quad_values() - v.quad_values()
        val = np.einsum("tq,q->t", du * dv, fem.TRI_QUAD_W) @ space.areas
        assert val >= -1e-12


# -- quasilinear heat ------------------------------------------------------------

def quadratic_kappa():
    return (lambda s: 1.0 + s ** 2,
            lambda s: 2.0 * s,
            lambda s: 2.0 + 0.0 * s)


def test_heat_rejects_nonelliptic():
    with pytest.raises(NonellipticDiffusion):
        problems.make_quasilinear_heat(
            kappa=lambda s: s, kappa1=lambda s: np.ones_like(s),
            kappa2=lambda s: np.zeros_like(s),
            b_field=None, f=lambda x, y: 0.0 * x, p=4.0)


def test_heat_warns_small_p():
    k, k1, k2 = quadratic_kappa()
    with pytest.warns(RuntimeWarning):
        problems.make_quasilinear_heat(k, k1, k2, None,
                                       lambda x, y: 0.0 * x, p=2.0)


def test_heat_constant_state_scaled_stiffness():
    # kappa(s) = 1 + s^2 and u = c: linear block is (1 + c^2) A
    k, k1, k2 = quadratic_kappa()
    prob = problems.make_quasilinear_heat(k, k1, k2, None,
                                          lambda x, y: 0.0 * x, p=4.0)
    space = fem.P1Space(msh.uniform_refine(msh.unit_square(), 2),
                        dirichlet=False)
    c = 0.8
    u = fem.FeFunction(space, np.full(space.n_dofs, c))
    J = fem.jacobian(prob, u).toarray()
    A = fem.assemble_laplacian(space).toarray()
    # grad u = 0 kills the kappa' coupling term
    assert np.allclose(J, (1.0 + c ** 2) * A, rtol=1e-12, atol=1e-14)


def test_heat_convection_density():
    # b = (1, 0), kappa = 1, f = 0, u = x: residual entries are
    # int grad(x) . grad(phi) + int 1 * phi
    prob = problems.poisson_problem(lambda x, y: 0.0 * x)
    prob = problems.make_quasilinear_heat(
        prob.kappa, prob.kappa1, prob.kappa2,
        b_field=lambda x, y: (np.ones_like(x), np.zeros_like(x)),
        f=lambda x, y: 0.0 * x, p=4.0)
    space = fem.P1Space(msh.uniform_refine(msh.unit_square(), 2),
                        dirichlet=False)
    u = space.interpolate(lambda x, y: x)
    r = fem.nonlinear_residual(prob, u)
    A = fem.assemble_laplacian(space)
    hats = fem.load_vector(space, lambda x, y: np.ones_like(x))
    assert np.allclose(r, A @ u.coeffs + hats, atol=1e-14)


def test_heat_jacobian_spd_at_solution():
    k, k1, k2 = quadratic_kappa()
    prob = problems.make_quasilinear_heat(k, k1, k2, None,
                                          lambda x, y: np.ones_like(x),
                                          p=4.0)
    space = fem.P1Space(msh.uniform_refine(msh.unit_square(), 3))
    out = nlsolve.newton(prob, space)
    J = fem.jacobian(prob, out.u).toarray()
    sym = 0.5 * (J + J.T)
    assert np.linalg.eigvalsh(sym).min() > 0.0


# -- a priori bounds -------------------------------------------------------------

def test_apriori_bounds_zero_source():
    b = problems.apriori_bounds_cubic((0.0, 0.0))
    assert b.u_minus == 0.0 and b.u_plus == 0.0


def test_apriori_bounds_nonnegative_source():
    m = msh.uniform_refine(msh.unit_square(), 3)
    rng_range = problems.linear_part_range(lambda x, y: np.ones_like(x), m)
    b = problems.apriori_bounds_cubic(rng_range)
    assert b.u_minus == 0.0
    assert b.u_plus > 0.0
    # discrete maximum-principle oracle on the coarse mesh: the Newton
    # solution of the cubic problem stays inside the bounds
    prob = problems.make_semilinear_power(3, lambda x, y: np.ones_like(x))
    out = nlsolve.newton(prob, fem.P1Space(m))
    vals = out.u.vertex_values()
    assert vals.min() >= b.u_minus - 1e-12
    assert vals.max() <= b.u_plus + 1e-12


def test_apriori_bounds_symmetric_source():
    m = msh.uniform_refine(msh.unit_square(), 3)

    def f(x, y):
        return x * y + np.sin(np.pi * (x + y))

    def f_swapped(x, y):
        return f(y, x)

    b1 = problems.apriori_bounds_cubic(problems.linear_part_range(f, m))
    b2 = problems.apriori_bounds_cubic(
        problems.linear_part_range(f_swapped, m))
    assert np.isclose(b1.u_minus, b2.u_minus, rtol=1e-12, atol=1e-14)
    assert np.isclose(b1.u_plus, b2.u_plus, rtol=1e-12, atol=1e-14)


def test_lipschitz_constant():
    b = problems.AprioriBounds(-0.5, 2.0)
    assert b.lipschitz_constant() == 3.0 * 4.0


def test_poisson_problem_silent():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        problems.poisson_problem(lambda x, y: np.ones_like(x))
