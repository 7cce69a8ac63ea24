"""Boundary behavior of solutions: the trace u/delta^s and the log expansion.

Solutions of the Dirichlet problem vanish like delta^s at the boundary; the
ratio u/delta^s extends continuously to the closure.  ``trace`` extrapolates
that ratio to each boundary node along the inward normal.  ``half_laplacian``
output develops a logarithmic singularity across the boundary whose structure
``log_singularity_fit`` measures on both sides.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import Domain
from .operator import SolutionField, WholeSpaceField


@dataclass
class BoundaryTrace:
    """Extrapolated q(z) ~ lim u/delta^s per boundary node.

    ``flagged`` marks nodes whose sample window left the domain; they are
    excluded from surface integrals.  ``alpha`` is a log-log estimate of the
    Hoelder exponent of q along the boundary, reported as a diagnostic only.
    """

    q: np.ndarray
    fit_residual: np.ndarray
    n_samples: int
    flagged: np.ndarray
    alpha: float
    window: tuple
    s: float

    def to_csv(self):
        lines = ["node,q,fit_residual,flagged"]
        for i, (qi, ri, fl) in enumerate(
                zip(self.q, self.fit_residual, self.flagged)):
            lines.append(f"{i},{qi:.17g},{ri:.17g},{int(fl)}")
        return "\n".join(lines) + "\n"


def trace(u: SolutionField, d: Domain = None, window=None,
          degree=3) -> BoundaryTrace:
    """Extrapolate u/delta^s to the boundary at each boundary node.

    Uses nodal values only: interior grid nodes with delta in ``window``
    (default [1.5h, 10h], capped at a third of the inradius) are gathered in
    a tube of radius 3h around each boundary node's projection fan, and
    u/delta^s is fit against {1, delta, ..., delta^degree, tau^2} (tau the
    tangential offset; dropped in 1D).  Interpolating between nodes is
    deliberately avoided: any smooth interpolant is biased near the delta^s
    kink at the boundary, while the nodal values carry the full accuracy of
    the collar-corrected operator.  Boundary nodes with too few tube
    samples are flagged and excluded from surface integrals downstream.
    """
    d = u.disc.domain if d is None else d
    h = u.disc.h
    s = u.s
    if window is None:
        inradius = float(np.max(d.distance_many(u.disc.interior_points)))
        window = (1.5 * h, max(4 * h, min(10 * h, inradius / 3.0)))
    t_lo, t_hi = window
    pts = u.disc.interior_points
    delta = d.distance_many(pts)
    sel = np.nonzero((delta >= t_lo) & (delta <= t_hi))[0]
    dl = delta[sel]
    vals = u.values[sel]
    if d.n == 1:
        proj = np.array([d.project(p)[1] for p in pts[sel]])
    else:
        proj = np.array([d.project(p)[1] for p in pts[sel]])
    nb = len(d.boundary_points)
    q = np.zeros(nb)
    res = np.zeros(nb)
    flagged = np.zeros(nb, dtype=bool)
    counts = []
    ncoef = degree + 1 + (1 if d.n == 2 else 0)
    for j in range(nb):
        z = d.boundary_points[j]
        tau = np.linalg.norm(proj - z[None, :], axis=1)
        loc = tau <= 3 * h
        m = int(loc.sum())
        if m < ncoef + 2:
            flagged[j] = True
            continue
        dloc = dl[loc]
        y = vals[loc] / dloc**s
        cols = [dloc**k for k in range(degree + 1)]
        if d.n == 2:
            cols.append(tau[loc] ** 2)
        X = np.column_stack(cols)
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        q[j] = coef[0]
        res[j] = float(np.sqrt(np.mean((y - X @ coef) ** 2)))
        counts.append(m)
    if np.any(flagged):
        warnings.warn(f"{int(flagged.sum())} boundary nodes flagged: "
                      "not enough interior samples in the trace window")
    alpha = _holder_exponent(q[~flagged], d) if nb > 4 else float("nan")
    return BoundaryTrace(q, res, int(np.mean(counts)) if counts else 0,
                         flagged, alpha, (float(t_lo), float(t_hi)), s)


def _holder_exponent(q, d):
    """Log-log fit of the modulus of continuity of q along the boundary."""
    nb = len(q)
    spacing = d.boundary_measure / nb
    ks = np.arange(1, min(nb // 4, 32) + 1)
    omega = np.array([np.max(np.abs(np.roll(q, -k) - q)) for k in ks])
    good = omega > 1e-14 * max(1.0, np.max(np.abs(q)))
    if good.sum() < 3:
        return float("nan")  # q is constant to precision; exponent undefined
    x = np.log(ks[good] * spacing)
    y = np.log(omega[good])
    slope = np.polyfit(x, y, 1)[0]
    return float(np.clip(slope, 0.0, 1.0))


def surface_functional(tr: BoundaryTrace, d: Domain, origin=None) -> float:
    """Quadrature of q(z)^2 ((z - origin) . nu(z)) over the boundary."""
    if origin is None:
        origin = np.zeros(d.n)
    origin = np.asarray(origin, dtype=float).reshape(d.n)
    keep = ~tr.flagged
    rel = d.boundary_points[keep] - origin
    xdotnu = np.sum(rel * d.boundary_normals[keep], axis=1)
    return float(np.sum(tr.q[keep] ** 2 * xdotnu * d.boundary_weights[keep]))


def gradient_growth(u: SolutionField, d: Domain = None) -> float:
    """max over interior nodes with delta > 2h of |grad u| delta^{1-s}.

    The continuum estimate is |grad u| <= C delta^{s-1}; the returned value
    should stay bounded under refinement.
    """
    d = u.disc.domain if d is None else d
    disc = u.disc
    h = disc.h
    full = u.full()
    delta = d.distance_many(disc.interior_points)
    mask = delta > 2 * h
    if not np.any(mask):
        return 0.0
    if disc.n == 1:
        grad = np.gradient(full, h)
        gnorm = np.abs(grad[disc.interior_idx])
    else:
        g1, g2 = np.gradient(full, h, h)
        gnorm = np.hypot(g1.ravel()[disc.interior_idx],
                         g2.ravel()[disc.interior_idx])
    return float(np.max(gnorm[mask] * delta[mask] ** (1.0 - u.s)))


@dataclass
class LogFit:
    """Two-sided fit of w = (-Delta)^{s/2} u near the boundary.

    w behaves like c1 q(x*) {log delta + c2 chi_Omega} + smooth; ``slope_in``
    and ``slope_out`` estimate c1 q(x*) from inside / outside and should
    agree; c2 comes from the intercept gap across the boundary.
    """

    slope_in: float
    slope_out: float
    intercept_in: float
    intercept_out: float
    c2: float
    remainder_in: float
    remainder_out: float
    window: tuple
    n_probes: int

    def to_json(self):
        return json.dumps({k: getattr(self, k) for k in
                           ("slope_in", "slope_out", "intercept_in",
                            "intercept_out", "c2", "remainder_in",
                            "remainder_out", "window", "n_probes")},
                          indent=2)


def log_singularity_fit(w: WholeSpaceField, u: SolutionField,
                        d: Domain = None, *, window=None,
                        n_probes=16) -> LogFit:
    """Fit w against {log delta, 1} separately inside and outside Omega.

    Probes run along boundary normals at distances in ``window`` (default
    [2h, 16h]).  Fits are averaged over probe nodes; per-side rms residuals
    are reported as the remainder magnitude.
    """
    d = u.disc.domain if d is None else d
    h = w.h
    if window is None:
        window = (2 * h, 16 * h)
    t_lo, t_hi = window
    ts = np.geomspace(t_lo, t_hi, 12)

    if u.disc.n == 1:
        from scipy.interpolate import CubicSpline
        spl = CubicSpline(w.axes[0], w.values)

        def ev(pts):
            return spl(pts[:, 0])
    else:
        from scipy.interpolate import RectBivariateSpline
        spl = RectBivariateSpline(w.axes[0], w.axes[1], w.values, kx=3, ky=3)

        def ev(pts):
            return spl.ev(pts[:, 0], pts[:, 1])

    nb = len(d.boundary_points)
    stride = max(1, nb // n_probes)
    idx = np.arange(0, nb, stride)
    X = np.column_stack([np.log(ts), np.ones(len(ts))])
    si, so, bi, bo, ri, ro = [], [], [], [], [], []
    for i in idx:
        z = d.boundary_points[i]
        nu = d.boundary_normals[i]
        inside = z[None, :] - ts[:, None] * nu[None, :]
        outside = z[None, :] + ts[:, None] * nu[None, :]
        yi = ev(inside)
        yo = ev(outside)
        ci, res_i, *_ = np.linalg.lstsq(X, yi, rcond=None)
        co, res_o, *_ = np.linalg.lstsq(X, yo, rcond=None)
        si.append(ci[0])
        bi.append(ci[1])
        so.append(co[0])
        bo.append(co[1])
        ri.append(np.sqrt(np.mean((yi - X @ ci) ** 2)))
        ro.append(np.sqrt(np.mean((yo - X @ co) ** 2)))
    slope_in = float(np.mean(si))
    slope_out = float(np.mean(so))
    int_in = float(np.mean(bi))
    int_out = float(np.mean(bo))
    denom = slope_in if abs(slope_in) > 1e-300 else 1.0
    c2 = float((int_in - int_out) / denom) if abs(slope_in) > 1e-300 else 0.0
    return LogFit(slope_in, slope_out, int_in, int_out, c2,
                  float(np.mean(ri)), float(np.mean(ro)),
                  (float(t_lo), float(t_hi)), len(idx))
