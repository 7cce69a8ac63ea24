import numpy as np
import pytest
from math import gamma, pi, sqrt

from fraclap import (apply_pointwise_oracle, assemble, half_laplacian,
                     load_operator, make_discretization, make_domain,
                     normalization_constant, save_operator, solve_linear,
                     torsion_rhs_constant)
from fraclap.operator import AssemblyError

from conftest import interval_op


def test_normalization_constant_values():
    # c_{1,1/2} = 1/pi and c_{2,1/2} = 1/(2 pi) in closed form
    assert normalization_constant(1, 0.5) == pytest.approx(1.0 / pi, rel=1e-13)
    assert normalization_constant(2, 0.5) == pytest.approx(
        0.5 * gamma(1.5) / (pi * gamma(0.5)) * 4**0.5, rel=1e-13)
    with pytest.raises(ValueError):
        normalization_constant(1, 1.5)
    with pytest.raises(ValueError):
        normalization_constant(3, 0.5)


def test_torsion_constant_values():
    # 4^s Gamma(n/2+s) Gamma(1+s) / Gamma(n/2); equals 1 at n=1, s=1/2
    assert torsion_rhs_constant(1, 0.5) == pytest.approx(1.0, rel=1e-13)
    s = 0.75
    expect = 4**s * gamma(0.5 + s) * gamma(1 + s) / gamma(0.5)
    assert torsion_rhs_constant(1, s) == pytest.approx(expect, rel=1e-13)


def test_symmetry_and_positive_definiteness(op1d, op2d):
    for _, op in (op1d, op2d):
        A = op.A
        asym = np.max(np.abs(A - A.T)) / np.max(np.abs(A))
        assert asym <= 1e-10
        ev = np.linalg.eigvalsh(0.5 * (A + A.T))
        assert ev.min() > 0.0


def test_torsion_solution_1d(op1d):
    d, op = op1d
    u = solve_linear(op, 1.0)
    x = op.disc.interior_points[:, 0]
    exact = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    assert np.max(np.abs(u.values - exact)) <= 5e-4


def test_torsion_solution_2d(op2d):
    d, op = op2d
    s = 0.5
    lam = torsion_rhs_constant(2, s)
    u = solve_linear(op, lam)
    rho2 = np.sum(op.disc.interior_points**2, axis=1)
    exact = np.clip(1.0 - rho2, 0.0, None) ** s
    assert np.max(np.abs(u.values - exact)) <= 2e-2


def test_interpolant_and_full(op1d):
    d, op = op1d
    u = solve_linear(op, 1.0)
    full = u.full()
    assert full.shape == (len(op.disc.axes[0]),)
    # interpolant reproduces nodal values
    itp = u.interpolant()
    x = op.disc.interior_points[::50, 0]
    np.testing.assert_allclose(itp(x), u.values[::50], atol=1e-9)


def test_oracle_agreement_first_order():
    d = make_domain("interval", a=-1.0, b=1.0)

    def fun(x):
        return np.clip(1.0 - np.asarray(x) ** 2, 0.0, None) ** 2

    errs = []
    for m in (63, 127):
        disc = make_discretization(d, n_interior=m)
        op = assemble(disc, 0.5)
        un = fun(disc.interior_points[:, 0])
        i = int(np.argmin(np.abs(disc.interior_points[:, 0] - 0.1875)))
        oracle = apply_pointwise_oracle(
            fun, np.array([disc.interior_points[i, 0]]), n=1, s=0.5, domain=d)
        errs.append(abs((op.A @ un)[i] - float(oracle)))
    order = np.log2(errs[0] / errs[1])
    assert order >= 1.0


def test_oracle_on_solution_field(op1d):
    d, op = op1d
    u = solve_linear(op, 1.0)
    val = apply_pointwise_oracle(u, np.array([0.0]))
    assert float(val) == pytest.approx(1.0, abs=5e-3)


def test_half_laplacian_energy(op1d):
    # int w^2 = int u (-Delta)^s u = int u * 1 for the torsion solution
    d, op = op1d
    u = solve_linear(op, 1.0)
    w = half_laplacian(u, pad=8)
    energy = float(np.sum(w.values**2) * w.h)
    target = sqrt(pi) * gamma(1.5) / gamma(2.0)  # int (1-x^2)^{1/2}
    assert energy == pytest.approx(target, rel=2e-2)


def test_half_laplacian_pad_validation(op1d):
    _, op = op1d
    u = solve_linear(op, 1.0)
    with pytest.raises(ValueError):
        half_laplacian(u, pad=1)


def test_node_cap():
    d = make_domain("interval", a=-1.0, b=1.0)
    with pytest.raises(AssemblyError, match="cap"):
        make_discretization(d, n_interior=100000)


def test_bad_s():
    d = make_domain("interval", a=-1.0, b=1.0)
    disc = make_discretization(d, n_interior=31)
    for s in (0.0, 1.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            assemble(disc, s)


def test_save_load_roundtrip(tmp_path, op1d):
    d, op = op1d
    path = tmp_path / "op.bin"
    save_operator(op, path)
    op2 = load_operator(path, op.disc)
    np.testing.assert_array_equal(op.A, op2.A)
    other = make_discretization(d, n_interior=31)
    with pytest.raises(AssemblyError):
        load_operator(path, other)


def test_operator_scale_invariance():
    # same s, doubled domain: A scales like h^{-2s} relative to the kernel
    d1, o1 = interval_op(s=0.5, m=63)
    d2, o2 = interval_op(s=0.5, m=63, a=-2.0, b=2.0)
    u1 = solve_linear(o1, 1.0)
    u2 = solve_linear(o2, 1.0)
    # torsion on (-R,R): u = lambda^{-1}(R^2-x^2)^s, so max scales like R^{2s}
    assert np.max(u2.values) / np.max(u1.values) == pytest.approx(
        2.0, rel=1e-2)
