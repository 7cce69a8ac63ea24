import numpy as np
from hypothesis import assume, given, settings, strategies as st

from fraclap import (Nonlinearity, SolutionField, half_laplacian, make_domain,
                     solve_linear, supercritical_gap, trace)
from fraclap.operator import _cutoff

from conftest import interval_op

FAST = settings(max_examples=25, deadline=None)


@FAST
@given(p=st.floats(1.0, 8.0), n=st.integers(1, 2), s=st.floats(0.05, 0.95))
def test_gap_classification_matches_sign_formula(p, n, s):
    # gap(u) = [(n-2s)/(2n) - 1/(p+1)] |u|^{p+1}: the bracket decides the sign
    bracket = (n - 2 * s) / (2 * n) - 1.0 / (p + 1.0)
    assume(abs(bracket) > 1e-3)
    _, cls = supercritical_gap(Nonlinearity.power(p), n, s)
    if bracket < 0:
        assert cls == "subcritical-violating"
    else:
        assert cls == "supercritical-strict"


@FAST
@given(p=st.floats(1.0, 6.0), u=st.floats(-5.0, 5.0))
def test_power_antiderivative_property(p, u):
    f = Nonlinearity.power(p)
    e = 1e-5 * max(1.0, abs(u))
    fd = (f.F(u + e) - f.F(u - e)) / (2 * e)
    assert abs(fd - float(f.f(u))) <= 1e-4 * max(1.0, abs(float(f.f(u))))
    assert float(f.f(-u)) == -float(f.f(u))


@FAST
@given(x=st.floats(-3.0, 3.0), y=st.floats(-3.0, 3.0))
def test_interval_distance_lipschitz(x, y):
    d = make_domain("interval", a=-1.0, b=1.0)
    dx = d.distance(np.array([x]))
    dy = d.distance(np.array([y]))
    assert abs(dx - dy) <= abs(x - y) + 1e-12


@FAST
@given(x=st.tuples(st.floats(-2.0, 2.0), st.floats(-2.0, 2.0)),
       y=st.tuples(st.floats(-2.0, 2.0), st.floats(-2.0, 2.0)))
def test_disk_distance_lipschitz(x, y):
    d = make_domain("disk", R=1.0)
    dx = d.distance(np.array(x))
    dy = d.distance(np.array(y))
    assert abs(dx - dy) <= np.linalg.norm(np.array(x) - np.array(y)) + 1e-12


@FAST
@given(xi=st.floats(0.0, 100.0))
def test_cutoff_bounds(xi):
    v = float(_cutoff(np.array([xi]), 10.0, 20.0))
    assert 0.0 <= v <= 1.0
    if xi <= 10.0:
        assert v == 1.0
    if xi >= 20.0:
        assert v == 0.0


@FAST
@given(c=st.floats(0.1, 10.0),
       coeffs=st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=4))
def test_solve_linear_homogeneity(c, coeffs):
    _, op = interval_op(s=0.5, m=63)
    x = op.disc.interior_points[:, 0]
    b = sum(a * np.cos((k + 1) * x) for k, a in enumerate(coeffs))
    b = np.asarray(b, dtype=float)
    assume(np.linalg.norm(b) > 1e-6)
    u1 = solve_linear(op, b)
    u2 = solve_linear(op, c * b)
    np.testing.assert_allclose(u2.values, c * u1.values,
                               rtol=1e-9, atol=1e-12)


@FAST
@given(a=st.floats(-2.0, 2.0), b=st.floats(-2.0, 2.0))
def test_half_laplacian_linearity(a, b):
    _, op = interval_op(s=0.5, m=63)
    u = solve_linear(op, 1.0)
    v = solve_linear(op, lambda x: np.cos(np.pi * x))
    combo = SolutionField(a * u.values + b * v.values, op.disc, op.s)
    w = half_laplacian(combo, pad=4)
    wu = half_laplacian(u, pad=4)
    wv = half_laplacian(v, pad=4)
    np.testing.assert_allclose(w.values, a * wu.values + b * wv.values,
                               atol=1e-10 * (abs(a) + abs(b) + 1))


@FAST
@given(c=st.floats(0.1, 10.0))
def test_trace_homogeneity(c):
    d, op = interval_op(s=0.5, m=127)
    u = solve_linear(op, 1.0)
    uc = SolutionField(c * u.values, op.disc, op.s)
    t1 = trace(u, d)
    t2 = trace(uc, d)
    np.testing.assert_allclose(t2.q, c * t1.q, rtol=1e-11)
