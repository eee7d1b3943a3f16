import numpy as np
import pytest

from afemlab import fem, mesh as msh, problems
from afemlab.errors import NotARefinement


def all_free(mesh):
    return fem.P1Space(mesh, dirichlet=False)


# -- assembly ------------------------------------------------------------------

def test_element_stiffness_unit_right_triangle():
    space = all_free(msh.single_triangle())
    A = fem.assemble_laplacian(space).toarray()
    expected = np.array([[1.0, -0.5, -0.5],
                         [-0.5, 0.5, 0.0],
                         [-0.5, 0.0, 0.5]])
    assert np.allclose(A, expected, atol=1e-14)


def test_stiffness_kills_constants():
    space = all_free(msh.uniform_refine(msh.unit_square(), 2))
    A = fem.assemble_laplacian(space)
    c = np.full(space.n_dofs, 3.7)
    assert np.abs(A @ c).max() <= 1e-13


def test_stiffness_symmetric_zero_row_sums():
    space = all_free(msh.unit_square())
    A = fem.assemble_laplacian(space).toarray()
    assert np.abs(A - A.T).max() <= 1e-12 * np.abs(A).max()
    assert np.abs(A.sum(axis=1)).max() <= 1e-14


def test_element_mass_closed_form():
    space = all_free(msh.single_triangle())
    M = fem.assemble_mass(space).toarray()
    area = 0.5
    expected = (area / 12.0) * np.array([[2.0, 1.0, 1.0],
                                         [1.0, 2.0, 1.0],
                                         [1.0, 1.0, 2.0]])
    assert np.allclose(M, expected, atol=1e-15)
    assert np.isclose(np.trace(M), area / 2.0)


def test_mass_partition_of_unity():
    m = msh.uniform_refine(msh.l_shape(), 2)
    space = all_free(m)
    M = fem.assemble_mass(space)
    ones = np.ones(space.n_dofs)
    assert np.isclose(ones @ (M @ ones), m.domain_area, rtol=1e-13)


# -- residual / jacobian -------------------------------------------------------

def test_residual_zero_solution_zero_source():
    prob = problems.make_semilinear_power(3, lambda x, y: 0.0 * x)
    space = fem.P1Space(msh.uniform_refine(msh.unit_square(), 2))
    r = fem.nonlinear_residual(prob, space.zero_function())
    assert np.abs(r).max() == 0.0


def test_residual_hat_integrals():
    # u = 0, f = 1: entry i is -(patch area of vertex i) / 3
    prob = problems.make_semilinear_power(3, lambda x, y: np.ones_like(x))
    m = msh.uniform_refine(msh.unit_square(), 3)
    space = fem.P1Space(m)
    r = fem.nonlinear_residual(prob, space.zero_function())
    for dof in range(space.n_dofs):
        v = space.vertex_of_dof[dof]
        patch_area = m.areas[m.vertex_triangles(v)].sum()
        assert np.isclose(r[dof], -patch_area / 3.0, rtol=1e-13)


def test_jacobian_at_zero_is_laplacian():
    prob = problems.make_semilinear_power(3, lambda x, y: np.ones_like(x))
    space = fem.P1Space(msh.uniform_refine(msh.unit_square(), 2))
    J = fem.jacobian(prob, space.zero_function())
    A = fem.assemble_laplacian(space)
    assert np.abs((J - A).toarray()).max() == 0.0


def test_jacobian_constant_state_weighted_mass():
    # m = 3, u = c on an all-free mesh: zero-order block is 3 c^2 M
    prob = problems.make_semilinear_power(3, lambda x, y: 0.0 * x)
    space = all_free(msh.uniform_refine(msh.unit_square(), 1))
    c = 1.7
    u = fem.FeFunction(space, np.full(space.n_dofs, c))
    J = fem.jacobian(prob, u).toarray()
    A = fem.assemble_laplacian(space).toarray()
    M = fem.assemble_mass(space).toarray()
    assert np.allclose(J, A + 3.0 * c ** 2 * M, rtol=1e-12)


def test_jacobian_finite_difference_directions():
    rng = np.random.default_rng(0)
    prob = problems.sinsin_mms()
    space = fem.P1Space(msh.uniform_refine(msh.unit_square(), 3))
    u = fem.FeFunction(space, rng.standard_normal(space.n_dofs))
    J = fem.jacobian(prob, u)
    eps = 1e-6
    for _ in range(10):
        w = rng.standard_normal(space.n_dofs)
        up = fem.FeFunction(space, u.coeffs + eps * w)
        fd = (fem.nonlinear_residual(prob, up)
              - fem.nonlinear_residual(prob, u)) / eps
        err = np.linalg.norm(fd - J @ w)
        assert err <= 50.0 * eps * (1.0 + np.linalg.norm(w))


def test_heat_jacobian_reduces_to_laplacian():
    prob = problems.poisson_problem(lambda x, y: np.ones_like(x))
    space = fem.P1Space(msh.uniform_refine(msh.unit_square(), 2))
    J = fem.jacobian(prob, space.zero_function()).toarray()
    A = fem.assemble_laplacian(space).toarray()
    assert np.allclose(J, A, atol=1e-14)


# -- prolongation --------------------------------------------------------------

def test_prolong_zero():
    m = msh.unit_square()
    m2 = msh.refine(m, [0, 1])
    u = fem.P1Space(m).zero_function()
    v = fem.prolong(u, fem.P1Space(m2))
    assert np.abs(v.coeffs).max() == 0.0


def test_prolong_reproduces_linears():
    m = msh.uniform_refine(msh.unit_square(), 1)
    m2 = msh.uniform_refine(m, 2)
    space = all_free(m)
    u = space.interpolate(lambda x, y: x + y)
    v = fem.prolong(u, all_free(m2))
    expected = m2.vertices[:, 0] + m2.vertices[:, 1]
    assert np.allclose(v.vertex_values(), expected, atol=1e-14)


def test_prolong_pointwise_exact():
    rng = np.random.default_rng(4)
    m = msh.uniform_refine(msh.unit_square(), 2)
    space = all_free(m)
    u = fem.FeFunction(space, rng.standard_normal(space.n_dofs))
    m2 = msh.refine(m, rng.choice(m.n_triangles, 5, replace=False))
    v = fem.prolong(u, all_free(m2))
    pts = rng.random((50, 2))
    before = np.array([fem.point_eval(u, p) for p in pts])
    after = np.array([fem.point_eval(v, p) for p in pts])
    assert np.abs(before - after).max() <= 1e-13


def test_prolong_norm_invariance():
    rng = np.random.default_rng(9)
    m = msh.uniform_refine(msh.unit_square(), 2)
    space = fem.P1Space(m)
    u = fem.FeFunction(space, rng.standard_normal(space.n_dofs))
    fine = fem.P1Space(msh.uniform_refine(m, 2))
    v = fem.prolong(u, fine)
    assert np.isclose(fem.h1_seminorm(u), fem.h1_seminorm(v), rtol=1e-12)
    assert np.isclose(fem.l2_norm(u), fem.l2_norm(v), rtol=1e-12)
    assert np.isclose(fem.lp_norm(u, 4.0), fem.lp_norm(v, 4.0), rtol=1e-12)


def test_prolong_rejects_unrelated_mesh():
    u = fem.P1Space(msh.unit_square()).zero_function()
    other = fem.P1Space(msh.l_shape())
    with pytest.raises(NotARefinement):
        fem.prolong(u, other)


# -- norms ----------------------------------------------------------------------

def test_norm_constant_has_zero_seminorm():
    space = all_free(msh.uniform_refine(msh.unit_square(), 1))
    u = fem.FeFunction(space, np.full(space.n_dofs, 2.0))
    assert fem.h1_seminorm(u) <= 1e-13


def test_norm_linear_function():
    space = all_free(msh.uniform_refine(msh.unit_square(), 2))
    u = space.interpolate(lambda x, y: x)
    assert np.isclose(fem.h1_seminorm(u), 1.0, rtol=1e-13)


def test_norm_unit_constant_l2():
    space = all_free(msh.unit_square())
    u = fem.FeFunction(space, np.ones(space.n_dofs))
    assert np.isclose(fem.l2_norm(u), 1.0, rtol=1e-13)
    assert np.isclose(fem.lp_norm(u, 3.0), 1.0, rtol=1e-12)


def test_norms_bundle_with_exact():
    prob = problems.sinsin_mms()
    space = fem.P1Space(msh.uniform_refine(msh.unit_square(), 3))
    u = space.interpolate(prob.exact)
    out = fem.norms(u, exact=prob.exact, exact_grad=prob.exact_grad)
    assert out["energy"] == out["h1_semi"]
    assert out["energy_error"] < 1.0
    assert out["l2_error"] < out["energy_error"]
