"""Complete umbilic hypersurfaces ``N`` of a space form and their exterior.

Each surface is intrinsically a constant-curvature model scaled by a constant:
a round sphere, flat ``R^n`` or the half-space model of ``H^n``.  Points of
``N`` are handled as points of that intrinsic model ("model points"); the
surface knows how to embed them into the linear coordinates of the ambient
space form.  A model tangent vector ``w`` that is unit in the model metric is
pushed to a vector of ambient length ``1/scale``, so the unit vector of ``N``
in the direction of ``w`` is ``scale * push(p, w)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.stats import qmc

from .spaceform import EUCLIDEAN, HALF_SPACE, SpaceForm, c_kappa, horizon, s_kappa

STEREO_HANDOFF = 1.5


class ChartError(ValueError):
    """Local coordinates outside the chart domain."""


# -- intrinsic models ----------------------------------------------------

class RoundSphere:
    """Unit sphere ``S^n`` in ``R^{n+1}``."""

    name = "sphere"

    def __init__(self, n: int):
        self.n = n
        self.coord_len = n + 1

    def inner(self, p, x, y) -> float:
        return float(np.dot(x, y))

    def contains(self, p, tol=1e-10) -> bool:
        return abs(np.linalg.norm(p) - 1.0) < tol

    def tangent_basis(self, p) -> np.ndarray:
        """Rows form an orthonormal basis of ``p^perp``."""
        p = np.asarray(p, dtype=float)
        q, _ = np.linalg.qr(np.column_stack([p, np.eye(self.n + 1)]))
        return q[:, 1:self.n + 1].T.copy()

    def project(self, p, w):
        return w - np.dot(p, w) * p

    def retract(self, p, w):
        q = p + w
        return q / np.linalg.norm(q)

    def curve(self, p, x, eps):
        """Point at parameter ``eps`` on the great circle through ``p`` with velocity ``x``."""
        nx = np.linalg.norm(x)
        if nx == 0:
            return p.copy()
        return math.cos(eps * nx) * p + math.sin(eps * nx) * x / nx

    def connection(self, p, x, v, dv):
        """``nabla_x v`` from the directional derivative ``dv`` of an extension."""
        return self.project(p, dv)

    def shift(self, p, src, dst):
        """Rotate ``p`` by the minimal rotation carrying ``src`` to ``dst``."""
        c = float(np.dot(src, dst))
        if c <= -1.0 + 1e-12:
            return p.copy()
        s = src + dst
        out = p - np.dot(s, p) / (1.0 + c) * s + 2.0 * np.dot(src, p) * dst
        return out / np.linalg.norm(out)

    def sample(self, count: int, seed: int = 0) -> np.ndarray:
        from scipy.special import ndtri

        u = qmc.Halton(d=self.n + 1, scramble=True, seed=seed).random(count)
        g = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
        return g / np.linalg.norm(g, axis=1, keepdims=True)

    def random(self, rng, count):
        g = rng.standard_normal((count, self.n + 1))
        return g / np.linalg.norm(g, axis=1, keepdims=True)


class FlatSpace:
    """Euclidean ``R^n`` (intrinsic geometry of a horosphere)."""

    name = "flat"

    def __init__(self, n: int, box: float = 3.0):
        self.n = n
        self.coord_len = n
        self.box = box

    def inner(self, p, x, y) -> float:
        return float(np.dot(x, y))

    def contains(self, p, tol=0.0) -> bool:
        return len(p) == self.n

    def tangent_basis(self, p) -> np.ndarray:
        return np.eye(self.n)

    def project(self, p, w):
        return np.asarray(w, dtype=float)

    def retract(self, p, w):
        return p + w

    def curve(self, p, x, eps):
        return p + eps * x

    def connection(self, p, x, v, dv):
        return dv

    def shift(self, p, src, dst):
        return p + (dst - src)

    def sample(self, count: int, seed: int = 0) -> np.ndarray:
        u = qmc.Halton(d=self.n, scramble=True, seed=seed).random(count)
        return self.box * (2.0 * u - 1.0)

    def random(self, rng, count):
        return rng.uniform(-self.box, self.box, (count, self.n))


class HalfSpace:
    """Half-space model of ``H^n``: ``xi0 > 0`` with metric ``|dxi|^2 / xi0^2``."""

    name = "hyperbolic"

    def __init__(self, n: int, box: float = 3.0, heights: tuple[float, float] = (0.2, 5.0)):
        self.n = n
        self.coord_len = n
        self.box = box
        self.heights = heights

    def inner(self, p, x, y) -> float:
        return float(np.dot(x, y)) / (p[0] * p[0])

    def contains(self, p, tol=0.0) -> bool:
        return len(p) == self.n and p[0] > 0

    def tangent_basis(self, p) -> np.ndarray:
        return p[0] * np.eye(self.n)

    def project(self, p, w):
        return np.asarray(w, dtype=float)

    def retract(self, p, w):
        q = p + w
        if q[0] <= 0:
            q[0] = p[0] * math.exp(w[0] / p[0])
        return q

    def curve(self, p, x, eps):
        return p + eps * x

    def connection(self, p, x, v, dv):
        # Christoffel symbols of the conformal factor 1/xi0^2.
        x0 = p[0]
        out = dv - (x[0] / x0) * v - (v[0] / x0) * x
        out[0] += np.dot(x, v) / x0
        return out

    def shift(self, p, src, dst):
        q = p + (dst - src)
        q[0] = p[0] * dst[0] / src[0]
        return q

    def _heights(self, u):
        lo, hi = self.heights
        return np.exp(math.log(lo) + u * (math.log(hi) - math.log(lo)))

    def sample(self, count: int, seed: int = 0) -> np.ndarray:
        u = qmc.Halton(d=self.n, scramble=True, seed=seed).random(count)
        out = self.box * (2.0 * u - 1.0)
        out[:, 0] = self._heights(u[:, 0])
        return out

    def random(self, rng, count):
        out = rng.uniform(-self.box, self.box, (count, self.n))
        out[:, 0] = self._heights(rng.uniform(0, 1, count))
        return out


class SurfacePoint(NamedTuple):
    chart: int
    local: np.ndarray
    ambient: np.ndarray


@dataclass(frozen=True)
class Level:
    """Parallel hypersurface ``N_t``; ``value`` is its radius, height or angle."""

    t: float
    kind: str
    value: float


# -- surfaces -----------------------------------------------------------

class _Surface:
    sf: SpaceForm
    kind: str

    @property
    def n(self) -> int:
        return self.sf.dim - 1

    # linear-model primitives, implemented by subclasses
    def point_lin(self, p) -> np.ndarray: ...
    def push_lin(self, p, w) -> np.ndarray: ...
    def normal_lin(self, p) -> np.ndarray: ...
    def foot(self, X) -> np.ndarray: ...
    def level_t(self, X) -> float: ...
    def exterior_lin(self, X) -> bool: ...

    def unit_lin(self, p, w):
        """Unit vector of ``N`` in linear coordinates for model-unit ``w``."""
        return self.scale * self.push_lin(p, w)

    def embed(self, p) -> np.ndarray:
        """Ambient coordinates of the model point ``p``."""
        return self.sf.from_linear(self.point_lin(p))

    def tangent_frame(self, p) -> np.ndarray:
        """Rows: an orthonormal basis of ``T_p N`` in ambient components."""
        X = self.point_lin(p)
        basis = self.model.tangent_basis(p)
        return np.array([self.sf.vec_from_linear(X, self.unit_lin(p, b)) for b in basis])

    def normal(self, p) -> np.ndarray:
        """Unit normal pointing into the exterior ``U`` (ambient components)."""
        return self.sf.vec_from_linear(self.point_lin(p), self.normal_lin(p))

    def mean_curvature_vector(self, p) -> np.ndarray:
        return -self.mean_curvature_mag * self.normal(p)

    def exterior_contains(self, q) -> bool:
        q = np.asarray(q, dtype=float)
        if not self.sf.contains(q):
            return False
        return self.exterior_lin(self.sf.to_linear(q))

    def leaf_coordinates(self, q) -> tuple[Level, np.ndarray]:
        """The level ``N_t`` through ``q`` and the foot of the perpendicular to ``N``."""
        q = np.asarray(q, dtype=float)
        if not self.exterior_contains(q):
            raise ValueError(f"{q!r} is not in the exterior of {self!r}")
        X = self.sf.to_linear(q)
        t = self.level_t(X)
        return self.parallel_surface(t), self.foot(X)

    def normal_point(self, p, d) -> np.ndarray:
        """Ambient point at distance ``d`` from ``p`` along the exterior normal."""
        from .spaceform import geodesic_lin

        return self.sf.from_linear(geodesic_lin(self.sf, self.point_lin(p), self.normal_lin(p), d))

    def random_exterior(self, rng, count: int, dmin: float = 0.05, dmax: float = 1.5):
        pts = self.model.random(rng, count)
        ds = rng.uniform(dmin, dmax, count)
        return np.array([self.normal_point(p, d) for p, d in zip(pts, ds)])


@dataclass(frozen=True, repr=True)
class GeodesicSphere(_Surface):
    """Geodesic sphere of radius ``rho`` about :meth:`SpaceForm.center`.

    Model points are unit directions ``theta`` at the center.
    """

    sf: SpaceForm
    rho: float
    kind = "sphere"

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("sphere radius must be positive")
        if self.sf.kappa > 0 and not self.rho < horizon(self.sf.kappa) / 2.0:
            raise ValueError("for kappa > 0 the radius must be below T_k/2 (no great spheres)")
        object.__setattr__(self, "model", RoundSphere(self.sf.dim - 1))

    @property
    def intrinsic_radius(self) -> float:
        return float(s_kappa(self.sf.kappa, self.rho))

    @property
    def scale(self) -> float:
        return 1.0 / self.intrinsic_radius

    @property
    def mean_curvature_mag(self) -> float:
        return float(c_kappa(self.sf.kappa, self.rho)) * self.scale

    def point_lin(self, p):
        sf = self.sf
        return sf.c(self.rho) * sf.center() + sf.s(self.rho) * sf.at_center(p)

    def push_lin(self, p, w):
        return self.sf.s(self.rho) * self.sf.at_center(w)

    def normal_lin(self, p):
        sf = self.sf
        return -sf.kappa * sf.s(self.rho) * sf.center() + sf.c(self.rho) * sf.at_center(p)

    def center_distance(self, X) -> float:
        return float(self.sf.ldist(X, self.sf.center()))

    def foot(self, X):
        sf = self.sf
        O = sf.center()
        D = X - sf.kappa * sf.inner(X, O) * O if sf.model != EUCLIDEAN else X - O
        th = sf.from_center(D)
        return th / np.linalg.norm(th)

    def level_t(self, X) -> float:
        k = self.sf.kappa
        d = self.center_distance(X)
        r = self.rho
        if k == 0:
            return math.sqrt((d - r) * (d + r))
        rk = math.sqrt(abs(k))
        if k > 0:
            arg = math.sin(rk * (d + r) / 2) * math.sin(rk * (d - r) / 2) / math.cos(rk * r)
            return 2.0 / rk * math.asin(math.sqrt(min(max(arg, 0.0), 1.0)))
        arg = math.sinh(rk * (d + r) / 2) * math.sinh(rk * (d - r) / 2) / math.cosh(rk * r)
        return 2.0 / rk * math.asinh(math.sqrt(max(arg, 0.0)))

    def exterior_lin(self, X) -> bool:
        d = self.center_distance(X)
        if d <= self.rho:
            return False
        if self.sf.kappa > 0:
            return d < self.sf.horizon - self.rho
        return True

    def parallel_surface(self, t) -> Level:
        if not 0 < t < self.sf.horizon:
            raise ValueError(f"t={t} outside (0, T_k)")
        k, r = self.sf.kappa, self.rho
        if k == 0:
            d = math.hypot(r, t)
        elif k > 0:
            rk = math.sqrt(k)
            d = math.acos(math.cos(rk * r) * math.cos(rk * t)) / rk
        else:
            rk = math.sqrt(-k)
            d = math.acosh(math.cosh(rk * r) * math.cosh(rk * t)) / rk
        return Level(float(t), "sphere", d)

    # stereographic charts from the poles -e_{n+1} (chart 0) and +e_{n+1} (chart 1)
    def chart_to_model(self, local, chart: int = 0):
        local = np.asarray(local, dtype=float)
        if len(local) != self.n:
            raise ChartError("wrong number of local coordinates")
        q = float(np.dot(local, local))
        sign = 1.0 if chart == 0 else -1.0
        return np.concatenate([2.0 * local, [sign * (1.0 - q)]]) / (1.0 + q)

    def model_to_chart(self, p) -> tuple[int, np.ndarray]:
        p = np.asarray(p, dtype=float)
        chart = 0 if p[-1] >= 0 else 1
        sign = 1.0 if chart == 0 else -1.0
        return chart, p[:-1] / (1.0 + sign * p[-1])

    def surface_point(self, p) -> SurfacePoint:
        chart, local = self.model_to_chart(p)
        if np.linalg.norm(local) > STEREO_HANDOFF:
            chart = 1 - chart
            sign = 1.0 if chart == 0 else -1.0
            local = p[:-1] / (1.0 + sign * p[-1])
        return SurfacePoint(chart, local, self.embed(p))


@dataclass(frozen=True)
class Horosphere(_Surface):
    """Horosphere ``{x0 = 1}`` of the half-space model; exterior ``0 < x0 < 1``.

    The model coordinate ``z`` is isometric to flat ``R^n``; the ambient point is
    ``(1, sqrt(-kappa) z)``, which is ``(1, z)`` for curvature -1.
    """

    sf: SpaceForm
    kind = "horosphere"

    def __post_init__(self):
        if self.sf.model != HALF_SPACE:
            raise ValueError("horospheres live in the half-space model (kappa < 0)")
        object.__setattr__(self, "model", FlatSpace(self.sf.dim - 1))

    scale = 1.0

    @property
    def mean_curvature_mag(self) -> float:
        return self.sf.root

    def point_lin(self, p):
        c = self.sf.root
        p = np.asarray(p, dtype=float)
        return np.concatenate([[1.0 / c, (1.0 + c * c * np.dot(p, p)) / c], p])

    def push_lin(self, p, w):
        return np.concatenate([[0.0, 2.0 * self.sf.root * np.dot(p, w)], w])

    def normal_lin(self, p):
        c = self.sf.root
        p = np.asarray(p, dtype=float)
        return np.concatenate([[1.0, -(1.0 - c * c * np.dot(p, p))], c * p])

    def foot(self, X):
        return X[2:] / (self.sf.root * X[0])

    def height(self, X) -> float:
        return 1.0 / (self.sf.root * X[0])

    def level_t(self, X) -> float:
        h = self.height(X)
        return math.atanh(math.sqrt((1.0 - h) * (1.0 + h))) / self.sf.root

    def exterior_lin(self, X) -> bool:
        return 0.0 < self.height(X) < 1.0

    def parallel_surface(self, t) -> Level:
        if not t > 0:
            raise ValueError(f"t={t} outside (0, inf)")
        return Level(float(t), "horosphere", 1.0 / math.cosh(self.sf.root * t))

    def radius_for_height(self, h: float) -> float:
        """Chart displacement ``tanh(sqrt(-k) t)/sqrt(-k)`` of leaves ending at height ``h``."""
        return math.sqrt((1.0 - h) * (1.0 + h)) / self.sf.root

    def chart_to_model(self, local, chart: int = 0):
        return np.asarray(local, dtype=float)

    def surface_point(self, p) -> SurfacePoint:
        return SurfacePoint(0, np.asarray(p, dtype=float), self.embed(p))


@dataclass(frozen=True)
class TiltedHyperplane(_Surface):
    """Equidistant hypersurface ``H_theta = {(t sin th, t cos th, x2, ...)}``.

    Model coordinates ``(t, x2, ..., xn)`` are those of the half-space model of
    ``H^n``; the induced metric is that model scaled by ``1/(-kappa sin^2 th)``.
    """

    sf: SpaceForm
    theta: float
    kind = "tilted"

    def __post_init__(self):
        if self.sf.model != HALF_SPACE:
            raise ValueError("tilted hyperplanes live in the half-space model (kappa < 0)")
        if not 0 < self.theta < math.pi or abs(self.theta - math.pi / 2) < 1e-12:
            raise ValueError("theta must be in (0, pi) and differ from pi/2")
        object.__setattr__(self, "model", HalfSpace(self.sf.dim - 1))

    @property
    def scale(self) -> float:
        return self.sf.root * math.sin(self.theta)

    @property
    def mean_curvature_mag(self) -> float:
        return self.sf.root * abs(math.cos(self.theta))

    def _ambient(self, p):
        p = np.asarray(p, dtype=float)
        st, ct = math.sin(self.theta), math.cos(self.theta)
        return np.concatenate([[p[0] * st, p[0] * ct], p[1:]])

    def point_lin(self, p):
        return self.sf.to_linear(self._ambient(p))

    def push_lin(self, p, w):
        w = np.asarray(w, dtype=float)
        st, ct = math.sin(self.theta), math.cos(self.theta)
        wa = np.concatenate([[w[0] * st, w[0] * ct], w[1:]])
        return self.sf.vec_to_linear(self._ambient(p), wa)

    def normal_lin(self, p):
        x = self._ambient(p)
        st, ct = math.sin(self.theta), math.cos(self.theta)
        sign = -1.0 if self.theta < math.pi / 2 else 1.0
        w = np.zeros_like(x)
        w[0], w[1] = ct, -st
        w *= sign * self.sf.root * x[0]
        return self.sf.vec_to_linear(x, w)

    def foot(self, X):
        x = self.sf.from_linear(X)
        return np.concatenate([[math.hypot(x[0], x[1])], x[2:]])

    def _cot_ratio(self, X) -> float:
        x = self.sf.from_linear(X)
        return abs(x[1]) / x[0] / abs(math.cos(self.theta) / math.sin(self.theta))

    def level_t(self, X) -> float:
        return math.acosh(max(self._cot_ratio(X), 1.0)) / self.sf.root

    def exterior_lin(self, X) -> bool:
        x = self.sf.from_linear(X)
        same_side = (x[1] > 0) == (math.cos(self.theta) > 0)
        return bool(same_side and self._cot_ratio(X) > 1.0)

    def parallel_surface(self, t) -> Level:
        if not t > 0:
            raise ValueError(f"t={t} outside (0, inf)")
        cot_t = math.cos(self.theta) / math.sin(self.theta) * math.cosh(self.sf.root * t)
        return Level(float(t), "tilted", math.atan2(1.0, cot_t))

    def chart_to_model(self, local, chart: int = 0):
        local = np.asarray(local, dtype=float)
        if local[0] <= 0:
            raise ChartError("first coordinate of the tilted chart must be positive")
        return local

    def surface_point(self, p) -> SurfacePoint:
        return SurfacePoint(0, np.asarray(p, dtype=float), self.embed(p))


def embed(surf, local, chart: int = 0) -> np.ndarray:
    """Ambient point for chart coordinates (stereographic for spheres)."""
    return surf.embed(surf.chart_to_model(local, chart))


def mean_curvature_mag(surf) -> float:
    return surf.mean_curvature_mag


def exterior_contains(surf, q) -> bool:
    return surf.exterior_contains(q)


def parallel_surface(surf, t) -> Level:
    return surf.parallel_surface(t)


def leaf_coordinates(surf, q):
    return surf.leaf_coordinates(q)


def make_surface(kind: str, sf: SpaceForm, rho: float | None = None, theta: float | None = None):
    """Build a surface by name: ``sphere``, ``horosphere`` or ``tilted``."""
    if kind == "sphere":
        return GeodesicSphere(sf, 1.0 if rho is None else rho)
    if kind == "horosphere":
        return Horosphere(sf)
    if kind == "tilted":
        if theta is None:
            # chosen so the induced metric has curvature -1
            if sf.kappa >= -1:
                raise ValueError("default tilt needs kappa < -1; pass theta explicitly")
            theta = math.asin(1.0 / sf.root)
        return TiltedHyperplane(sf, theta)
    raise ValueError(f"unknown surface kind {kind!r}")
