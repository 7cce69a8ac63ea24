import numpy as np
import pytest

from fraclap import (NonConvergence, Nonlinearity, jacobian_check, power_seed,
                     solve_linear, solve_semilinear, torsion_scale)


def test_nonlinearity_power():
    f = Nonlinearity.power(3)
    u = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
    np.testing.assert_allclose(f.f(u), u**3)
    np.testing.assert_allclose(f.fprime(u), 3 * u**2)
    np.testing.assert_allclose(f.F(u), u**4 / 4)
    # odd f, even F
    np.testing.assert_allclose(f.f(-u), -f.f(u))
    np.testing.assert_allclose(f.F(-u), f.F(u))
    with pytest.raises(ValueError):
        Nonlinearity.power(0.5)


def test_nonlinearity_constant_linear():
    c = Nonlinearity.constant(2.5)
    u = np.linspace(-1, 1, 11)
    np.testing.assert_allclose(c.f(u), 2.5)
    np.testing.assert_allclose(c.fprime(u), 0.0)
    np.testing.assert_allclose(c.F(u), 2.5 * u)
    lin = Nonlinearity.linear(-3.0)
    np.testing.assert_allclose(lin.f(u), -3.0 * u)
    np.testing.assert_allclose(lin.F(u), -1.5 * u * u)


def test_nonlinearity_table():
    us = np.linspace(-2, 2, 41)
    f = Nonlinearity.table(us, np.sin(us))
    x = np.linspace(-1.5, 1.5, 7)
    np.testing.assert_allclose(f.f(x), np.sin(x), atol=1e-5)
    np.testing.assert_allclose(f.fprime(x), np.cos(x), atol=1e-3)
    np.testing.assert_allclose(f.F(x), 1.0 - np.cos(x), atol=1e-5)
    with pytest.raises(ValueError):
        Nonlinearity.table([0, 1], [0, 1])


def test_solve_linear_rhs_forms(op1d):
    _, op = op1d
    u_scalar = solve_linear(op, 1.0)
    u_vec = solve_linear(op, np.ones(op.disc.n_interior))
    u_fun = solve_linear(op, lambda x: np.ones_like(x))
    np.testing.assert_allclose(u_scalar.values, u_vec.values, atol=1e-13)
    np.testing.assert_allclose(u_scalar.values, u_fun.values, atol=1e-13)
    with pytest.raises(ValueError):
        solve_linear(op, np.full(op.disc.n_interior, np.nan))


def test_semilinear_matches_linear_for_constant(op1d):
    _, op = op1d
    f = Nonlinearity.constant(1.0)
    u, rep = solve_semilinear(op, f)
    assert rep.converged
    assert rep.iterations <= 2
    np.testing.assert_allclose(u.values, solve_linear(op, 1.0).values,
                               atol=1e-10)


def test_semilinear_linear_nonlinearity(op1d):
    # f(u) = -u is monotone; unique solution of (A + I) u = 0 is zero...
    # solve (A + I)u = 0 shifted: f(u) = 1 - u, fixed point of A u + u = 1
    _, op = op1d

    us = np.linspace(-10, 10, 101)
    f = Nonlinearity.table(us, 1.0 - us)
    u, rep = solve_semilinear(op, f)
    assert rep.converged
    res = op.A @ u.values - (1.0 - u.values)
    assert np.linalg.norm(res) <= 1e-8 * np.sqrt(len(res))


def test_trivial_detection(op1d):
    _, op = op1d
    f = Nonlinearity.power(2)
    u, rep = solve_semilinear(op, f)  # zero initial guess is a fixed point
    assert rep.converged and rep.trivial
    assert np.linalg.norm(u.values) <= 1e-12 * torsion_scale(op)


def test_power_seed_nontrivial(op1d):
    _, op = op1d
    f = Nonlinearity.power(2)
    u0 = power_seed(op, 2)
    assert np.max(u0) > 0.0
    u, rep = solve_semilinear(op, f, u0)
    assert rep.converged and not rep.trivial
    assert np.min(u.values) > 0.0  # positive solution


def test_nonconvergence_supercritical(op2d):
    _, op = op2d
    f = Nonlinearity.power(5)
    with pytest.raises(NonConvergence) as exc:
        solve_semilinear(op, f, power_seed(op, 5), max_iter=50)
    rep = exc.value.report
    assert not rep.converged
    assert rep.iterations <= 50
    assert "evidence" in str(exc.value)
    assert '"converged": false' in rep.to_json()


def test_damping_validation(op1d):
    _, op = op1d
    f = Nonlinearity.constant(1.0)
    with pytest.raises(ValueError):
        solve_semilinear(op, f, damping=0.0)
    with pytest.raises(ValueError):
        solve_semilinear(op, f, damping=1.5)
    with pytest.raises(ValueError):
        solve_semilinear(op, f, np.ones(3))  # wrong-shape guess


def test_line_search_never_increases_residual(op1d):
    _, op = op1d
    f = Nonlinearity.power(2)
    _, rep = solve_semilinear(op, f, power_seed(op, 2))
    hist = rep.residual_history
    assert all(b <= a * (1 + 1e-14) for a, b in zip(hist, hist[1:]))


def test_jacobian_check(op1d, op2d):
    for _, op in (op1d, op2d):
        f = Nonlinearity.power(3)
        u = solve_linear(op, 1.0)
        assert jacobian_check(op, f, u) <= 1e-6


def test_report_json_roundtrip(op1d):
    import json
    _, op = op1d
    _, rep = solve_semilinear(op, Nonlinearity.constant(1.0))
    data = json.loads(rep.to_json())
    assert data["converged"] is True
    assert data["residual_norm"] == rep.residual_norm
