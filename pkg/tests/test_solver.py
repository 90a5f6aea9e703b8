import numpy as np
import pytest
from scipy.integrate import solve_ivp

from freetransmission.degeneracy import constant_law, sign_law
from freetransmission.elliptic import EllipticOperator
from freetransmission.grid import ScalarField, make_grid
from freetransmission.solver import (NonConvergence, ProblemSpec, SolveConfig, StepUnstable, manufactured_problem,
                                     manufactured_radial, residual, solve, solve_homogeneous)

LAPLACE = EllipticOperator("negative_trace")


def zero_rhs(g):
    return ScalarField(g, np.zeros(g.shape))


def interior_sup(g, field, where=None):
    m = g.mask if where is None else g.mask & where
    return float(np.abs(np.asarray(field.values))[m].max())


def test_residual_affine_is_zero():
    g = make_grid(2, 33)
    for law in (constant_law(1.0), sign_law(0.5, 2.0)):
        spec = ProblemSpec(EllipticOperator("pucci_minus", 1.0, 2.0), law, zero_rhs(g), lambda x: 1 + x[0] - 2 * x[1])
        u = ScalarField.from_function(g, lambda x: 1 + x[0] - 2 * x[1])
        assert interior_sup(g, residual(spec, u)) <= 1e-12


def test_residual_quadratic_beta_zero():
    g = make_grid(2, 33)
    spec = ProblemSpec(LAPLACE, constant_law(0.0), ScalarField(g, np.full(g.shape, -2.0)),
                       lambda x: 0.5 * np.sum(x**2, axis=0))
    u = ScalarField.from_function(g, lambda x: 0.5 * np.sum(x**2, axis=0))
    assert interior_sup(g, residual(spec, u)) <= 1e-12


def test_residual_radial_power():
    # |x|^{3/2} is self-similar at the origin, so the stencil residual within a few
    # nodes of 0 is h-independent; away from 0 it decays like h^2
    ms = manufactured_radial(1.0)
    assert ms.alpha == 0.5 and ms.rhs_value == pytest.approx(-3.375)
    errs = []
    for n in (65, 129, 257):
        g = make_grid(2, n)
        spec = ProblemSpec(LAPLACE, constant_law(1.0), ScalarField.from_function(g, ms.f), ms.u, reg_eps=0.0)
        R = residual(spec, ScalarField.from_function(g, ms.u))
        r = np.sqrt(np.sum(g.coords() ** 2, axis=0))
        if n == 129:
            assert interior_sup(g, R, r > 2 * g.h) < 0.15
        errs.append(interior_sup(g, R, r > 0.1))
    assert errs[0] / errs[1] > 2.5 and errs[1] / errs[2] > 3.5


@pytest.mark.parametrize("beta,rhs", [(1.0, -3.375), (0.0, -4.0), (2.0, -(4 / 3) ** 4)])
def test_manufactured_rhs_values(beta, rhs):
    assert manufactured_radial(beta).rhs_value == pytest.approx(rhs, rel=1e-14)


def test_manufactured_rejects_other_operators():
    with pytest.raises(ValueError):
        manufactured_radial(1.0, "pucci_minus")
    with pytest.raises(ValueError):
        manufactured_radial(-0.5)


def test_affine_boundary_gives_affine_solution():
    g = make_grid(2, 33)
    spec = ProblemSpec(LAPLACE, constant_law(1.0), zero_rhs(g), lambda x: 0.3 - x[0] + 2 * x[1])
    res = solve(spec)
    exact = ScalarField.from_function(g, lambda x: 0.3 - x[0] + 2 * x[1])
    assert res.iterations <= 1
    assert np.abs(res.u.values - exact.values)[g.mask].max() <= 1e-12


def test_homogeneous_examples():
    g = make_grid(2, 33)
    h = solve_homogeneous(LAPLACE, lambda x: x[0] ** 2 - x[1] ** 2, g)
    exact = ScalarField.from_function(g, lambda x: x[0] ** 2 - x[1] ** 2)
    assert np.abs(h.values - exact.values)[g.mask].max() <= 1e-10
    h = solve_homogeneous(EllipticOperator("pucci_minus", 1.0, 2.0), lambda x: 2 - x[0] + x[1], g,
                          SolveConfig(tol=1e-10))
    exact = ScalarField.from_function(g, lambda x: 2 - x[0] + x[1])
    assert np.abs(h.values - exact.values)[g.mask].max() <= 1e-10


def test_homogeneous_pucci_radial_data_symmetric_and_bounded():
    # the cube boundary is not a level set of |x|, so h is not radial; the radial
    # comparison lives in the shooting-oracle test below
    g = make_grid(2, 33)
    h = solve_homogeneous(EllipticOperator("pucci_minus", 1.0, 2.0), lambda x: np.sum(x**2, axis=0), g,
                          SolveConfig(tol=1e-9)).values
    m = g.mask
    for sym in (h.T, h[::-1], h[:, ::-1]):
        assert np.abs(sym - h)[m].max() <= 1e-8
    layer = g.boundary_layer()
    assert h[layer].min() - 1e-10 <= h[m].min() and h[m].max() <= h[layer].max() + 1e-10


def radial_pucci_profile(lam, Lam, d, f):
    """Shoot the radial ODE for P^-(D^2 u) = f(r) with u(0) = u'(0) = 0.

    The Hessian of a radial u has eigenvalues u'' (once) and u'/r (d-1 times);
    phi(e) = Lam e for e > 0 and lam e otherwise is inverted to get u''.
    """

    def phi(e):
        return Lam * e if e > 0 else lam * e

    def phinv(y):
        return y / Lam if y > 0 else y / lam

    def rhs(r, y):
        return [y[1], phinv(-f(r) - (d - 1) * phi(y[1] / r))]

    r0 = 1e-8
    upp0 = phinv(-f(0.0) / d)
    sol = solve_ivp(rhs, [r0, 1.5], [0.5 * upp0 * r0**2, upp0 * r0], rtol=1e-12, atol=1e-14, dense_output=True)

    def profile(x):
        r = np.sqrt(np.sum(np.asarray(x) ** 2, axis=0))
        return sol.sol(r.ravel())[0].reshape(r.shape)

    return profile


def test_pucci_radial_matches_shooting_oracle():
    lam, Lam = 1.0, 2.0

    def f(r):
        return -(1 + r**2)

    prof = radial_pucci_profile(lam, Lam, 2, f)
    errs = []
    for n in (17, 33):
        g = make_grid(2, n)
        rhs = ScalarField.from_function(g, lambda x: f(np.sqrt(np.sum(x**2, axis=0))))
        spec = ProblemSpec(EllipticOperator("pucci_minus", lam, Lam), constant_law(0.0), rhs, prof)
        u = solve(spec, SolveConfig(tol=1e-9)).u
        errs.append(np.abs(u.values - ScalarField.from_function(g, prof).values)[g.mask].max())
    assert errs[1] < 2e-4
    assert np.log2(errs[0] / errs[1]) > 1.7


def test_step_unstable():
    g = make_grid(2, 33)
    spec, _ = manufactured_problem(1.0, g)
    with pytest.raises(StepUnstable):
        solve(spec, SolveConfig(step=10 * g.h**2))


def test_non_convergence():
    g = make_grid(2, 33)
    spec, _ = manufactured_problem(1.0, g)
    with pytest.raises(NonConvergence) as info:
        solve(spec, SolveConfig(tol=1e-3, max_iters=5))
    assert info.value.iterations == 5


def test_solve_config_validation():
    with pytest.raises(ValueError):
        SolveConfig(step=-1.0)
    with pytest.raises(ValueError):
        SolveConfig(continuation=())
    with pytest.raises(ValueError):
        SolveConfig(continuation=(0.1, 0.2)).schedule(0.1)
    assert SolveConfig().schedule(0.1) == (0.4, 0.2, 0.1)


def test_problem_spec_validation():
    g = make_grid(2, 9)
    with pytest.raises(ValueError):
        ProblemSpec(LAPLACE, constant_law(1.0), zero_rhs(g), lambda x: np.full(x.shape[1:], np.inf))
    with pytest.raises(ValueError):
        ProblemSpec(LAPLACE, constant_law(1.0), zero_rhs(g), lambda x: x[0], reg_eps=-1.0)


def test_manufactured_error_at_129(manufactured_solution):
    s = manufactured_solution(1.0, 129)
    assert s.result.residual <= 1e-3
    assert s.error <= 2e-3


def test_diagnostics_shape(manufactured_solution):
    diag = manufactured_solution(1.0, 65).result.diagnostics()
    assert diag["final_residual"] <= 1e-3
    assert diag["reg_eps_schedule"] == pytest.approx([4 / 32, 2 / 32, 1 / 32])
    its = [k for k, _ in diag["residual_history"]]
    assert its == sorted(its) and its[-1] == diag["iterations"]


@pytest.mark.invariant
def test_comparison_principle():
    # with the decreasing convention a larger right-hand side gives a larger solution
    g = make_grid(2, 17)
    rng = np.random.default_rng(0)
    for _ in range(5):
        f1 = rng.normal(size=g.shape)
        f2 = f1 + np.abs(rng.normal(size=g.shape))
        sols = []
        for f in (f1, f2):
            spec = ProblemSpec(LAPLACE, constant_law(1.0), ScalarField(g, f), lambda x: np.sin(x[0]) + x[1] ** 2)
            sols.append(solve(spec, SolveConfig(tol=1e-6)).u.values)
        assert np.all((sols[1] - sols[0])[g.mask] >= -1e-6)


@pytest.mark.invariant
def test_regularization_consistency():
    g = make_grid(2, 33)
    out = []
    eps_list = (4 * g.h, 2 * g.h, g.h)
    for e in eps_list:
        spec, _ = manufactured_problem(1.0, g, reg_eps=e)
        out.append(solve(spec, SolveConfig(tol=1e-7, continuation=(e,))).u.values)
    for i, e in enumerate(eps_list[:2]):
        assert np.abs(out[i] - out[i + 1])[g.mask].max() <= e


@pytest.mark.invariant
def test_solve_is_deterministic():
    g = make_grid(2, 33)
    spec, _ = manufactured_problem(2.0, g)
    a = solve(spec)
    b = solve(spec)
    assert np.array_equal(a.u.values, b.u.values) and a.iterations == b.iterations
