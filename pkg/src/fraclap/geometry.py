"""Bounded computational domains: intervals, disks and polar-star domains.

All domains carry a boundary quadrature (nodes, outward unit normals,
surface weights), a distance function and a nearest-boundary-point map.
Objects are immutable after construction and safe to share between workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

UNIT_NORMAL_TOL = 1e-12


class DomainError(ValueError):
    """Raised for invalid domain parameters."""


@dataclass(frozen=True)
class Domain:
    """A bounded domain with boundary quadrature.

    kind is one of "interval", "disk", "star".  ``boundary_points`` has shape
    (nb, n) (n = 1 or 2), ``boundary_normals`` the matching outward unit
    normals and ``boundary_weights`` the surface quadrature weights (counting
    measure for the interval, trapezoidal in arclength otherwise).
    ``center`` is the translation applied to the reference domain.
    """

    kind: str
    n: int
    params: dict = field(repr=False)
    center: np.ndarray
    boundary_points: np.ndarray
    boundary_normals: np.ndarray
    boundary_weights: np.ndarray
    # dense parameter table used to seed Newton projection (star domains)
    _theta_table: np.ndarray | None = field(default=None, repr=False)

    # -- radius helpers (2D) ------------------------------------------------

    def _radius(self, theta):
        if self.kind == "disk":
            return np.full_like(np.asarray(theta, dtype=float), self.params["R"])
        a = self.params["cos_coeffs"]
        b = self.params["sin_coeffs"]
        theta = np.asarray(theta, dtype=float)
        r = np.full_like(theta, self.params["r0"])
        for k, (ak, bk) in enumerate(zip(a, b), start=1):
            r = r + ak * np.cos(k * theta) + bk * np.sin(k * theta)
        return r

    def _radius_prime(self, theta):
        if self.kind == "disk":
            return np.zeros_like(np.asarray(theta, dtype=float))
        a = self.params["cos_coeffs"]
        b = self.params["sin_coeffs"]
        theta = np.asarray(theta, dtype=float)
        rp = np.zeros_like(theta)
        for k, (ak, bk) in enumerate(zip(a, b), start=1):
            rp = rp - k * ak * np.sin(k * theta) + k * bk * np.cos(k * theta)
        return rp

    def boundary_point(self, theta):
        """Boundary parametrization z(theta) for 2D domains."""
        r = self._radius(theta)
        return self.center + np.stack(
            [r * np.cos(theta), r * np.sin(theta)], axis=-1
        )

    # -- membership / distance ---------------------------------------------

    def contains(self, x):
        """Strict interior test, vectorized over the last axis being a point."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "interval":
            a, b = self.params["a"], self.params["b"]
            inside = (x[:, 0] > a) & (x[:, 0] < b)
        elif self.kind == "disk":
            inside = np.linalg.norm(x - self.center, axis=1) < self.params["R"]
        else:
            rel = x - self.center
            rho = np.linalg.norm(rel, axis=1)
            theta = np.arctan2(rel[:, 1], rel[:, 0])
            inside = rho < self._radius(theta)
        return inside

    def distance(self, x):
        """dist(x, boundary) for a single point x, >= 0 inside and outside."""
        return self.project(x)[0]

    def project(self, x):
        """Return (delta, x*) with x* the nearest boundary point.

        Ties are broken toward the smallest boundary parameter.
        """
        x = np.asarray(x, dtype=float).reshape(self.n)
        if self.kind == "interval":
            a, b = self.params["a"], self.params["b"]
            da, db = abs(x[0] - a), abs(x[0] - b)
            if da <= db:
                return da, np.array([a])
            return db, np.array([b])
        if self.kind == "disk":
            R = self.params["R"]
            rel = x - self.center
            rho = np.linalg.norm(rel)
            if rho == 0.0:
                return R, self.center + np.array([R, 0.0])
            return abs(rho - R), self.center + rel * (R / rho)
        return self._project_star(x)

    def _project_star(self, x):
        rel = x - self.center
        table = self._theta_table
        z = self.boundary_point(table) - self.center
        d2 = np.sum((z - rel) ** 2, axis=1)
        theta = table[int(np.argmin(d2))]
        # Newton on d/dtheta |z(theta) - x|^2 = 0
        for _ in range(60):
            r = float(self._radius(theta))
            rp = float(self._radius_prime(theta))
            ct, st = np.cos(theta), np.sin(theta)
            zt = np.array([r * ct, r * st])
            dz = np.array([rp * ct - r * st, rp * st + r * ct])
            # second derivative of z
            rpp = self._radius_second(theta)
            d2z = np.array(
                [rpp * ct - 2 * rp * st - r * ct, rpp * st + 2 * rp * ct - r * st]
            )
            g = 2.0 * np.dot(zt - rel, dz)
            gp = 2.0 * (np.dot(dz, dz) + np.dot(zt - rel, d2z))
            if gp == 0.0:
                break
            step = g / gp
            theta -= step
            if abs(step) < 1e-12:
                break
        zstar = self.center + np.array(
            [float(self._radius(theta)) * np.cos(theta),
             float(self._radius(theta)) * np.sin(theta)]
        )
        return float(np.linalg.norm(x - zstar)), zstar

    def _radius_second(self, theta):
        a = self.params["cos_coeffs"]
        b = self.params["sin_coeffs"]
        rpp = 0.0
        for k, (ak, bk) in enumerate(zip(a, b), start=1):
            rpp += -k * k * ak * np.cos(k * theta) - k * k * bk * np.sin(k * theta)
        return rpp

    def distance_many(self, xs):
        """Vectorized distance for an (m, n) array of points."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        if self.kind == "interval":
            a, b = self.params["a"], self.params["b"]
            return np.minimum(np.abs(xs[:, 0] - a), np.abs(xs[:, 0] - b))
        if self.kind == "disk":
            rho = np.linalg.norm(xs - self.center, axis=1)
            return np.abs(rho - self.params["R"])
        return np.array([self.project(x)[0] for x in xs])

    @property
    def boundary_measure(self):
        return float(np.sum(self.boundary_weights))

    def centroid(self):
        if self.kind == "interval":
            a, b = self.params["a"], self.params["b"]
            return np.array([0.5 * (a + b)])
        if self.kind == "disk":
            return self.center.copy()
        # area-weighted centroid of a polar-star region, by quadrature
        th = np.linspace(0.0, 2 * np.pi, 4096, endpoint=False)
        r = self._radius(th)
        area = 0.5 * np.mean(r**2) * 2 * np.pi
        cx = np.mean(r**3 * np.cos(th)) / 3.0 * 2 * np.pi
        cy = np.mean(r**3 * np.sin(th)) / 3.0 * 2 * np.pi
        return self.center + np.array([cx, cy]) / area

    def bounding_radius(self):
        """Radius of the smallest origin-centered ball containing the domain."""
        return float(np.max(np.linalg.norm(self.boundary_points, axis=1)))

    def boundary_curvature(self):
        """Signed curvature at each boundary node (2D; convex boundary > 0)."""
        if self.n == 1:
            return np.zeros(len(self.boundary_points))
        if self.kind == "disk":
            return np.full(len(self.boundary_points), 1.0 / self.params["R"])
        nb = len(self.boundary_points)
        theta = np.linspace(0.0, 2 * np.pi, nb, endpoint=False)
        r = self._radius(theta)
        rp = self._radius_prime(theta)
        rpp = np.array([self._radius_second(t) for t in theta])
        return (r * r + 2 * rp * rp - r * rpp) / (r * r + rp * rp) ** 1.5


def make_domain(kind, *, a=None, b=None, R=None, r0=None, cos_coeffs=(),
                sin_coeffs=(), center=None, boundary_nodes=256):
    """Construct a Domain.

    kind "interval" needs a < b; "disk" needs R > 0; "star" needs a strictly
    positive trigonometric polynomial r(theta) = r0 + sum_k cos_coeffs[k-1]
    cos(k theta) + sin_coeffs[k-1] sin(k theta).
    """
    if kind == "interval":
        if a is None or b is None or not b > a:
            raise DomainError(f"degenerate interval: a={a}, b={b}")
        center = np.zeros(1) if center is None else np.asarray(center, float).reshape(1)
        a, b = float(a) + center[0], float(b) + center[0]
        pts = np.array([[a], [b]])
        nrm = np.array([[-1.0], [1.0]])
        wts = np.array([1.0, 1.0])
        return Domain("interval", 1, {"a": a, "b": b}, center, pts, nrm, wts)

    center = np.zeros(2) if center is None else np.asarray(center, float).reshape(2)
    if kind == "disk":
        if R is None or not R > 0:
            raise DomainError(f"disk radius must be positive, got {R}")
        dom = Domain("disk", 2, {"R": float(R)}, center,
                     np.empty((0, 2)), np.empty((0, 2)), np.empty(0))
    elif kind == "star":
        if r0 is None:
            raise DomainError("star domain needs r0")
        params = {"r0": float(r0),
                  "cos_coeffs": tuple(float(c) for c in cos_coeffs),
                  "sin_coeffs": tuple(float(c) for c in sin_coeffs)}
        # pad coefficient lists to equal length
        na = len(params["cos_coeffs"])
        nb = len(params["sin_coeffs"])
        m = max(na, nb)
        params["cos_coeffs"] += (0.0,) * (m - na)
        params["sin_coeffs"] += (0.0,) * (m - nb)
        dom = Domain("star", 2, params, center,
                     np.empty((0, 2)), np.empty((0, 2)), np.empty(0))
        th_chk = np.linspace(0.0, 2 * np.pi, 8192, endpoint=False)
        if np.min(dom._radius(th_chk)) <= 0.0:
            raise DomainError("star radius r(theta) is not strictly positive")
    else:
        raise DomainError(f"unknown domain kind {kind!r}")

    theta = np.linspace(0.0, 2 * np.pi, boundary_nodes, endpoint=False)
    r = dom._radius(theta)
    rp = dom._radius_prime(theta)
    ct, st = np.cos(theta), np.sin(theta)
    pts = center + np.stack([r * ct, r * st], axis=-1)
    # tangent z'(theta); outward normal is the clockwise rotation of it
    tx = rp * ct - r * st
    ty = rp * st + r * ct
    speed = np.hypot(tx, ty)
    nrm = np.stack([ty / speed, -tx / speed], axis=-1)
    wts = speed * (2 * np.pi / boundary_nodes)
    table = np.linspace(0.0, 2 * np.pi, 8 * boundary_nodes, endpoint=False)
    return Domain(dom.kind, 2, dom.params, center, pts, nrm, wts,
                  _theta_table=table)


def star_shapedness_margin(d: Domain, origin=None):
    """min over boundary nodes of (z - origin) . nu(z).

    Positive iff the boundary quadrature sees the domain as strictly
    star-shaped with respect to ``origin`` (default: coordinate origin).
    """
    if origin is None:
        origin = np.zeros(d.n)
    origin = np.asarray(origin, dtype=float).reshape(d.n)
    rel = d.boundary_points - origin
    return float(np.min(np.sum(rel * d.boundary_normals, axis=1)))


def distance_and_projection(d: Domain, x):
    """(delta, x*) for a point x, inside or outside the domain."""
    return d.project(x)
