"""Newton solvers for the semilinear Dirichlet problem (-Delta)^s u = f(u).

The discrete problem is G(u) = A u - f(u) = 0 on the interior nodes with the
exterior-zero condition baked into A.  Newton steps use the exact Jacobian
A - diag(f'(u)) and a backtracking line search whose contract is that an
accepted step never increases ||G||.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .operator import FracOperator, SolutionField


class NonConvergence(RuntimeError):
    """Newton budget exhausted.  Evidence only, never a proof of nonexistence."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class Nonlinearity:
    """Right side f(u) with derivative and antiderivative F(u) = int_0^u f.

    kind is one of "constant", "linear", "power", "table".  Use the class
    constructors; ``table`` interpolates user samples with a cubic spline and
    integrates it exactly for F.
    """

    kind: str
    params: dict = field(repr=False)

    def f(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "constant":
            return np.full_like(u, self.params["c"])
        if self.kind == "linear":
            return self.params["lam"] * u
        if self.kind == "power":
            p = self.params["p"]
            return np.sign(u) * np.abs(u) ** p
        return self.params["spline"](u)

    def fprime(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(u)
        if self.kind == "linear":
            return np.full_like(u, self.params["lam"])
        if self.kind == "power":
            p = self.params["p"]
            return p * np.abs(u) ** (p - 1.0)
        return self.params["spline"].derivative()(u)

    def F(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "constant":
            return self.params["c"] * u
        if self.kind == "linear":
            return 0.5 * self.params["lam"] * u * u
        if self.kind == "power":
            p = self.params["p"]
            return np.abs(u) ** (p + 1.0) / (p + 1.0)
        anti = self.params["spline"].antiderivative()
        return anti(u) - anti(0.0)

    def describe(self):
        if self.kind == "constant":
            return f"constant c={self.params['c']}"
        if self.kind == "linear":
            return f"linear lam={self.params['lam']}"
        if self.kind == "power":
            return f"power p={self.params['p']}"
        return f"table ({len(self.params['u_samples'])} samples)"

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, c):
        return cls("constant", {"c": float(c)})

    @classmethod
    def linear(cls, lam):
        return cls("linear", {"lam": float(lam)})

    @classmethod
    def power(cls, p):
        """f(u) = |u|^{p-1} u, F(u) = |u|^{p+1}/(p+1)."""
        if not p >= 1:
            raise ValueError(f"power exponent must be >= 1, got {p}")
        return cls("power", {"p": float(p)})

    @classmethod
    def table(cls, u_samples, f_samples):
        from scipy.interpolate import CubicSpline

        u_samples = np.asarray(u_samples, dtype=float)
        f_samples = np.asarray(f_samples, dtype=float)
        if len(u_samples) < 4:
            raise ValueError("table nonlinearity needs at least 4 samples")
        spline = CubicSpline(u_samples, f_samples)
        return cls("table", {"spline": spline, "u_samples": u_samples,
                             "f_samples": f_samples})


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual_norm: float
    damping_history: list
    solution_norm: float
    residual_history: list
    trivial: bool = False
    message: str = ""

    def to_json(self):
        return json.dumps(
            {
                "converged": self.converged,
                "iterations": self.iterations,
                "residual_norm": self.residual_norm,
                "damping_history": self.damping_history,
                "solution_norm": self.solution_norm,
                "residual_history": self.residual_history,
                "trivial": self.trivial,
                "message": self.message,
            },
            indent=2,
        )


def _rhs_vector(op, rhs):
    if np.isscalar(rhs):
        return np.full(op.disc.n_interior, float(rhs))
    if callable(rhs):
        pts = op.disc.interior_points
        vals = rhs(pts if op.n == 2 else pts[:, 0])
        return np.asarray(vals, dtype=float)
    return np.asarray(rhs, dtype=float)


def solve_linear(op: FracOperator, rhs) -> SolutionField:
    """Direct solve A u = rhs; rhs may be a scalar, callable or vector."""
    b = _rhs_vector(op, rhs)
    if not np.all(np.isfinite(b)):
        raise ValueError("right side contains non-finite entries")
    u = linalg.solve(op.A, b, assume_a="sym")
    res = np.linalg.norm(op.A @ u - b)
    # backward-error scale: ||A|| ||u|| + ||b||
    scale = float(np.linalg.norm(op.A, 1) * np.linalg.norm(u)
                  + np.linalg.norm(b))
    if res > 1e-12 * max(1.0, scale):
        raise RuntimeError(f"linear solve residual {res:.2e} too large")
    return SolutionField(u, op.disc, op.s)


def torsion_scale(op: FracOperator) -> float:
    """Norm of the unit-right-side (torsion) solution, the solver's scale."""
    return float(np.linalg.norm(solve_linear(op, 1.0).values))


def solve_semilinear(op: FracOperator, f: Nonlinearity, u0=None, *,
                     max_iter=50, tol=1e-9, damping=1.0):
    """Damped Newton for A u = f(u); returns (SolutionField, SolveReport).

    The zero solution is reported as trivial when ||u|| <= 1e-12 times the
    torsion-solution norm.  Raises NonConvergence (with the report attached)
    when the iteration budget is exhausted or the line search stalls.
    """
    if not 0.0 < damping <= 1.0:
        raise ValueError("damping must lie in (0, 1]")
    m = op.disc.n_interior
    u = np.zeros(m) if u0 is None else np.array(
        u0.values if isinstance(u0, SolutionField) else u0, dtype=float)
    if u.shape != (m,) or not np.all(np.isfinite(u)):
        raise ValueError("bad initial guess")

    def G(v):
        return op.A @ v - f.f(v)

    g = G(u)
    rnorm = float(np.linalg.norm(g))
    history = [rnorm]
    damps = []
    it = 0
    converged = False
    message = ""
    for it in range(1, max_iter + 1):
        scale = max(1.0, float(np.linalg.norm(f.f(u))))
        if rnorm <= tol * scale:
            converged = True
            it -= 1
            break
        J = op.A - np.diag(f.fprime(u))
        try:
            step = linalg.solve(J, -g)
        except linalg.LinAlgError:
            message = "singular Newton Jacobian"
            break
        alpha = damping
        accepted = False
        for _ in range(40):
            trial = u + alpha * step
            gt = G(trial)
            tnorm = float(np.linalg.norm(gt))
            if tnorm <= rnorm:  # line-search contract: never increase ||G||
                u, g, rnorm = trial, gt, tnorm
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            message = "line search stalled"
            break
        damps.append(alpha)
        history.append(rnorm)
        scale = max(1.0, float(np.linalg.norm(f.f(u))))
        if rnorm <= tol * scale:
            converged = True
            break

    trivial = bool(np.linalg.norm(u) <= 1e-12 * torsion_scale(op))
    report = SolveReport(converged, it, rnorm, damps,
                         float(np.linalg.norm(u)), history, trivial, message)
    if not converged:
        raise NonConvergence(
            f"Newton did not converge in {max_iter} iterations "
            f"(residual {rnorm:.3e}); evidence only, not a nonexistence proof",
            report)
    return SolutionField(u, op.disc, op.s), report


def power_seed(op: FracOperator, p) -> np.ndarray:
    """Initial guess t * torsion for f(u) = |u|^{p-1} u.

    t minimizes the residual ||A(t u_T) - f(t u_T)|| / t over a log grid
    t in [1e-3, 1e3].  The normalization by t removes the trivial t -> 0
    minimum (the residual itself vanishes linearly at the zero solution,
    which is never the seed one wants).
    """
    f = Nonlinearity.power(p)
    ut = solve_linear(op, 1.0).values
    Aut = op.A @ ut
    ts = np.logspace(-3, 3, 241)
    best_t, best_r = ts[0], np.inf
    for t in ts:
        r = float(np.linalg.norm(t * Aut - f.f(t * ut))) / t
        if r < best_r:
            best_t, best_r = t, r
    return best_t * ut


def jacobian_check(op: FracOperator, f: Nonlinearity, u, *, ndir=10,
                   rng=None) -> float:
    """Worst relative error of the Newton Jacobian along random directions.

    Compares (A - diag f'(u)) d against the centered finite difference of
    G(u) = A u - f(u) with step 1e-6 * scale.
    """
    rng = np.random.default_rng(0 if rng is None else rng)
    u = np.asarray(u.values if isinstance(u, SolutionField) else u,
                   dtype=float)
    scale = max(1.0, float(np.linalg.norm(u)))
    eps = 1e-6 * scale

    def G(v):
        return op.A @ v - f.f(v)

    J = op.A - np.diag(f.fprime(u))
    worst = 0.0
    for _ in range(ndir):
        d = rng.standard_normal(len(u))
        d /= np.linalg.norm(d)
        fd = (G(u + eps * d) - G(u - eps * d)) / (2 * eps)
        jd = J @ d
        err = np.linalg.norm(fd - jd) / max(1.0, np.linalg.norm(jd))
        worst = max(worst, float(err))
    return worst
