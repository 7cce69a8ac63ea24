"""Identity checks: Pohozaev residual, integration by parts, scaling tests.

The central identity for solutions of (-Delta)^s u = f(u), u = 0 outside a
bounded domain, is

    (2s - n) int u f(u) + 2n int F(u)
        = Gamma(1+s)^2 int_{boundary} (u/delta^s)^2 (x . nu) dsigma,

with F the antiderivative of f.  Everything here computes both sides from a
discrete solution and reports residuals; nothing is asserted beyond
consistency of the numerics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import gamma

import numpy as np

from .boundary_trace import surface_functional, trace
from .geometry import Domain, star_shapedness_margin
from .operator import FracOperator, SolutionField, half_laplacian
from .solver import (NonConvergence, Nonlinearity, power_seed, solve_linear,
                     solve_semilinear, torsion_scale)


@dataclass
class PohozaevReport:
    term_uf: float        # (2s - n) int u f(u)
    term_F: float         # 2n int F(u)
    term_boundary: float  # Gamma(1+s)^2 int (u/delta^s)^2 (x . nu) dsigma
    residual: float
    relative_residual: float

    def to_json(self):
        return json.dumps({
            "term_uf": self.term_uf,
            "term_F": self.term_F,
            "term_boundary": self.term_boundary,
            "residual": self.residual,
            "relative_residual": self.relative_residual,
        }, indent=2)


def _volume_integral(u: SolutionField, values):
    return float(np.sum(values) * u.disc.h ** u.disc.n)


def pohozaev_residual(u: SolutionField, f: Nonlinearity, d: Domain = None,
                      *, origin=None, boundary_trace=None) -> PohozaevReport:
    """All terms of the identity for a discrete solution u of A u = f(u).

    Volume terms use the nodal grid quadrature, the boundary term the
    extrapolated trace.  The relative residual is measured against the
    largest term; when all terms are near zero the absolute residual is
    reported instead.
    """
    d = u.disc.domain if d is None else d
    s = u.s
    n = u.disc.n
    A = (2 * s - n) * _volume_integral(u, u.values * f.f(u.values))
    B = 2 * n * _volume_integral(u, f.F(u.values))
    tr = trace(u, d) if boundary_trace is None else boundary_trace
    R = gamma(1 + s) ** 2 * surface_functional(tr, d, origin=origin)
    resid = A + B - R
    scale = max(abs(A), abs(B), abs(R))
    rel = resid / scale if scale > 1e-300 else resid
    return PohozaevReport(A, B, R, resid, rel)


def _gradient_field(u: SolutionField):
    """Nodal gradient on the interior nodes by centered differences."""
    disc = u.disc
    full = u.full()
    h = disc.h
    if disc.n == 1:
        g = np.gradient(full, h)
        return g[disc.interior_idx][:, None]
    g1, g2 = np.gradient(full, h, h)
    return np.stack([g1.ravel()[disc.interior_idx],
                     g2.ravel()[disc.interior_idx]], axis=-1)


def ibp_residual(u: SolutionField, v: SolutionField, gu: Nonlinearity,
                 hv: Nonlinearity, d: Domain = None, axis: int = 0) -> float:
    """Residual of int (-D)^s u v_xi = -int u_xi (-D)^s v + boundary term.

    The boundary term is Gamma(1+s)^2 int (u/d^s)(v/d^s) nu_i dsigma.  The
    operator values are taken from the equations the fields solve,
    (-Delta)^s u = gu(u) and (-Delta)^s v = hv(v); derivatives are centered
    differences.  Returns the residual relative to the largest term, or the
    absolute residual when every term is near zero.
    """
    d = u.disc.domain if d is None else d
    if u.disc is not v.disc and u.disc.fingerprint() != v.disc.fingerprint():
        raise ValueError("fields live on different discretizations")
    s = u.s
    gradu = _gradient_field(u)[:, axis]
    gradv = _gradient_field(v)[:, axis]
    opu = gu.f(u.values)
    opv = hv.f(v.values)
    T1 = _volume_integral(u, opu * gradv)
    T2 = _volume_integral(u, gradu * opv)
    tru = trace(u, d)
    trv = trace(v, d)
    keep = ~(tru.flagged | trv.flagged)
    T3 = gamma(1 + s) ** 2 * float(np.sum(
        tru.q[keep] * trv.q[keep] * d.boundary_normals[keep, axis]
        * d.boundary_weights[keep]))
    resid = T1 + T2 - T3
    scale = max(abs(T1), abs(T2), abs(T3))
    return float(resid / scale) if scale > 1e-8 else float(resid)


def supercritical_gap(f: Nonlinearity, n: int, s: float, samples=None):
    """Minimum of gap(u) = (n-2s)/(2n) u f(u) - F(u) and its classification.

    Returns (min gap, classification) with classification one of
    "supercritical-strict" (gap > 0 away from u = 0), "critical" (gap
    vanishes identically to rounding) and "subcritical-violating"
    (gap < 0 somewhere).  Zero is detected relative to the sampled scale
    with a 1e-10 epsilon; signs away from that band are exact arithmetic.
    """
    if samples is None:
        samples = np.linspace(-10.0, 10.0, 2001)
    samples = np.asarray(samples, dtype=float)
    uf = samples * f.f(samples)
    Fv = f.F(samples)
    gapvals = (n - 2 * s) / (2 * n) * uf - Fv
    # zero detection is pointwise-relative: gap, u f(u) and F(u) all vanish
    # together at u = 0, so a global epsilon would swallow the small-u signs
    eps = 1e-10 * np.maximum(np.maximum(np.abs(uf), np.abs(Fv)), 1e-300)
    gmin = float(np.min(gapvals))
    at_zero = np.abs(samples) <= 1e-9
    if np.any(gapvals < -eps):
        cls = "subcritical-violating"
    elif np.all(np.abs(gapvals) <= eps):
        cls = "critical"
    elif np.all((gapvals > eps) | at_zero):
        cls = "supercritical-strict"
    else:
        cls = "critical"  # touches zero away from the origin
    return gmin, cls


@dataclass
class ScalingReport:
    lambdas: np.ndarray
    I_values: np.ndarray
    I_one: float
    dI_dlambda: float
    target: float          # -Gamma(1+s)^2 int (u/delta^s)^2 (x.nu) dsigma
    margins: np.ndarray    # I_1 - I_lambda, Cauchy-Schwarz says >= 0
    fit_residual: float

    def to_json(self):
        return json.dumps({
            "lambdas": self.lambdas.tolist(),
            "I_values": self.I_values.tolist(),
            "I_one": self.I_one,
            "dI_dlambda": self.dI_dlambda,
            "target": self.target,
            "margins": self.margins.tolist(),
            "fit_residual": self.fit_residual,
        }, indent=2)


def scaling_diagnostics(u: SolutionField, op: FracOperator = None,
                        d: Domain = None, *, lambdas=None, pad=4,
                        origin=None) -> ScalingReport:
    """I_lambda = int w(lambda x) w(x/lambda) dx for w = (-Delta)^{s/2} u.

    Requires the domain to be star-shaped about the origin (otherwise the
    scaled test function leaves the admissible exterior-zero class).  The
    lambda = 1 value goes through the same interpolation path, so the
    Cauchy-Schwarz margins I_1 - I_lambda are consistent discrete
    quantities.  The one-sided derivative at 1+ is a linear fit; its target
    is minus the boundary term of the identity.
    """
    d = u.disc.domain if d is None else d
    if origin is None:
        origin = np.zeros(d.n)
    margin = star_shapedness_margin(d, origin=origin)
    if margin <= 0:
        raise ValueError(
            f"domain is not star-shaped about the origin (margin {margin:.3e})")
    if lambdas is None:
        lambdas = 1.0 + 0.001 * np.arange(1, 21)
    lambdas = np.asarray(lambdas, dtype=float)

    w = half_laplacian(u, pad=pad)
    h = w.h
    n = u.disc.n
    if n == 1:
        from scipy.interpolate import CubicSpline
        ax = w.axes[0]
        spl = CubicSpline(ax, w.values)

        def I_of(lam):
            x = ax
            wl = np.where((x * lam >= ax[0]) & (x * lam <= ax[-1]),
                          spl(x * lam), 0.0)
            wo = np.where((x / lam >= ax[0]) & (x / lam <= ax[-1]),
                          spl(x / lam), 0.0)
            return float(np.sum(wl * wo) * h)
    else:
        from scipy.interpolate import RectBivariateSpline
        ax1, ax2 = w.axes
        spl = RectBivariateSpline(ax1, ax2, w.values, kx=3, ky=3)
        g1, g2 = np.meshgrid(ax1, ax2, indexing="ij")
        P = np.stack([g1.ravel(), g2.ravel()], axis=-1)

        def _eval(pts):
            ok = ((pts[:, 0] >= ax1[0]) & (pts[:, 0] <= ax1[-1])
                  & (pts[:, 1] >= ax2[0]) & (pts[:, 1] <= ax2[-1]))
            out = np.zeros(len(pts))
            out[ok] = spl.ev(pts[ok, 0], pts[ok, 1])
            return out

        def I_of(lam):
            return float(np.sum(_eval(P * lam) * _eval(P / lam)) * h * h)

    I1 = I_of(1.0)
    Ivals = np.array([I_of(lam) for lam in lambdas])
    X = np.column_stack([lambdas - 1.0, np.ones(len(lambdas))])
    coef, *_ = np.linalg.lstsq(X, Ivals, rcond=None)
    fit_res = float(np.sqrt(np.mean((Ivals - X @ coef) ** 2)))
    tr = trace(u, d)
    target = -gamma(1 + u.s) ** 2 * surface_functional(tr, d, origin=origin)
    return ScalingReport(lambdas, Ivals, I1, float(coef[0]), target,
                         I1 - Ivals, fit_res)


def scaling_lhs_check(u: SolutionField, op: FracOperator, f: Nonlinearity,
                      d: Domain = None, *, collar=4.0) -> float:
    """Relative error between int (x . grad u)(A u) and -n int F(u).

    The integrand has a delta^{s-1} gradient layer at the boundary that
    nodal quadrature cannot resolve (it would leave an O(h^s) error), so the
    collar delta < collar*h is integrated analytically under the boundary
    model u = q delta^s, with (A u) replaced by f(u) there (equal to solver
    tolerance for a solution).  The substitution y = delta^s makes the layer
    integral nonsingular.
    """
    d = u.disc.domain if d is None else d
    n = u.disc.n
    s = u.s
    h = u.disc.h
    t0 = collar * h
    delta = d.distance_many(u.disc.interior_points)
    grad = _gradient_field(u)
    xdotg = np.sum(u.disc.interior_points * grad, axis=1)
    bulk = (delta >= t0).astype(float)
    lhs = _volume_integral(u, bulk * xdotg * (op.A @ u.values))

    # collar layer: x . grad u = -(x . nu) q s delta^{s-1} along each normal
    tr = trace(u, d)
    yq, wq = np.polynomial.legendre.leggauss(32)
    y = 0.5 * (yq + 1.0) * t0**s
    wy = 0.5 * wq * t0**s
    dlt = y ** (1.0 / s)
    keep = ~tr.flagged
    zdotnu = np.sum(d.boundary_points[keep] * d.boundary_normals[keep],
                    axis=1)
    curv = d.boundary_curvature()[keep]
    for q, zn, w, kc in zip(tr.q[keep], zdotnu, d.boundary_weights[keep],
                            curv):
        # volume element of the normal coordinates: (1 - curvature*delta)
        jac = np.maximum(1.0 - kc * dlt, 0.0)
        lhs += -w * q * float(np.sum(wy * jac * (zn - dlt) * f.f(q * y)))

    rhs = -n * _volume_integral(u, f.F(u.values))
    scale = max(abs(lhs), abs(rhs))
    return float(abs(lhs - rhs) / scale) if scale > 1e-300 else 0.0


def calibrated_identity_tolerance(op: FracOperator, d: Domain = None,
                                  factor=3.0) -> float:
    """Relative Pohozaev residual of the torsion run on this grid, x factor.

    Used as the self-calibrating tolerance for sign-defect tests: the
    discretization cannot distinguish identity violations smaller than its
    own error on the exactly-solvable problem.
    """
    d = op.disc.domain if d is None else d
    f = Nonlinearity.constant(1.0)
    u = solve_linear(op, 1.0)
    rep = pohozaev_residual(u, f, d)
    return factor * abs(rep.relative_residual)


def nonexistence_scan(n: int, s: float, p_grid, d: Domain, *,
                      op: FracOperator = None, n_interior=49,
                      max_iter=50) -> list:
    """Evidence table for the nonexistence criterion across a p grid.

    For each exponent p: the sign classification of the supercritical gap,
    the Newton outcome from the scaled-torsion seed, and -- for converged
    nontrivial solutions -- the Pohozaev sign defect
    N(u) = (2s - n) int u f + 2n int F - R, compared against 3x the
    calibrated identity residual of the same grid.  Outcomes are evidence
    only; the table asserts consistency, not the theorem.
    """
    p_grid = list(p_grid)
    if not p_grid:
        raise ValueError("empty exponent grid")
    if op is None:
        from .operator import assemble, make_discretization
        disc = make_discretization(d, n_interior=n_interior)
        op = assemble(disc, s)
    tol = calibrated_identity_tolerance(op, d)
    scale0 = torsion_scale(op)
    rows = []
    for p in p_grid:
        f = Nonlinearity.power(p)
        gmin, cls = supercritical_gap(f, n, s)
        defect = float("nan")
        rel_defect = float("nan")
        consistent = True
        try:
            u, rep = solve_semilinear(op, f, power_seed(op, p),
                                      max_iter=max_iter)
            if rep.trivial or np.linalg.norm(u.values) <= 1e-12 * scale0:
                outcome = "trivial"
            else:
                outcome = "nontrivial"
                report = pohozaev_residual(u, f, d)
                defect = report.residual
                rel_defect = abs(report.relative_residual)
                passes = rel_defect <= tol
                # a nontrivial solution passing the identity test must not
                # coexist with a strictly positive gap
                consistent = not (cls == "supercritical-strict" and passes)
        except NonConvergence:
            outcome = "non-converged"
        rows.append({
            "p": float(p),
            "gap_min": gmin,
            "classification": cls,
            "outcome": outcome,
            "sign_defect": defect,
            "relative_defect": rel_defect,
            "identity_tolerance": tol,
            "consistent": consistent,
        })
    return rows


def scan_to_csv(rows) -> str:
    cols = ["p", "gap_min", "classification", "outcome", "sign_defect",
            "relative_defect", "identity_tolerance", "consistent"]
    lines = [",".join(cols)]
    for r in rows:
        vals = []
        for c in cols:
            v = r[c]
            vals.append(f"{v:.17g}" if isinstance(v, float) else str(v))
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"
