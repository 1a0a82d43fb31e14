"""Space forms of constant curvature: trigonometry, geodesics, transport.

Points and tangent vectors live in two coordinate systems.

Ambient coordinates
    Euclidean ``R^{n+1}`` (kappa = 0), the round sphere of radius
    ``1/sqrt(kappa)`` embedded in ``R^{n+2}`` (kappa > 0), or the upper
    half-space ``{x0 > 0}`` with metric ``|dx|^2 / (-kappa x0^2)`` (kappa < 0).

Linear coordinates
    A quadric model in which every unit speed geodesic is
    ``c_k(t) X + s_k(t) U`` and parallel transport is linear algebra.  For
    kappa < 0 this is the hyperboloid ``<X, X> = 1/kappa`` written in null
    coordinates ``(L, M, Y)`` with ``<X, Z> = -(L_X M_Z + M_X L_Z)/2 + Y_X.Y_Z``,
    which keeps points near the ideal boundary free of cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SERIES_CUTOFF = 1e-8
UNIT_TOL = 1e-8

EUCLIDEAN = "euclidean"
SPHERE = "sphere"
HALF_SPACE = "half-space"


class PoleError(ZeroDivisionError):
    """Raised when cot_kappa is evaluated where s_kappa vanishes."""


class NoRootError(ValueError):
    """Raised when c_k(t) - |lambda| s_k(t) has no root in (0, T_k)."""


def s_kappa(kappa: float, t):
    """Generalized sine ``s_k``; continuous in ``kappa`` across 0."""
    t = np.asarray(t, dtype=float)
    x = kappa * t * t
    series = t * (1.0 - x / 6.0 + x * x / 120.0)
    if kappa > 0:
        rk = math.sqrt(kappa)
        exact = np.sin(rk * t) / rk
    elif kappa < 0:
        rk = math.sqrt(-kappa)
        exact = np.sinh(rk * t) / rk
    else:
        exact = t
    return np.where(np.abs(x) < SERIES_CUTOFF, series, exact)[()]


def c_kappa(kappa: float, t):
    """Generalized cosine ``c_k = s_k'``."""
    t = np.asarray(t, dtype=float)
    x = kappa * t * t
    series = 1.0 - x / 2.0 + x * x / 24.0
    if kappa > 0:
        exact = np.cos(math.sqrt(kappa) * t)
    elif kappa < 0:
        exact = np.cosh(math.sqrt(-kappa) * t)
    else:
        exact = np.ones_like(t)
    return np.where(np.abs(x) < SERIES_CUTOFF, series, exact)[()]


def cot_kappa(kappa: float, t):
    """``c_k / s_k``.  Raises :class:`PoleError` where ``s_k(t) = 0``."""
    s = np.asarray(s_kappa(kappa, t))
    if np.any(s == 0.0):
        raise PoleError(f"cot_kappa has a pole at t={t!r} (kappa={kappa})")
    return (np.asarray(c_kappa(kappa, t)) / s)[()]


def horizon(kappa: float) -> float:
    """Maximal ray length ``T_k``: infinite unless kappa > 0."""
    if kappa > 0:
        return math.pi / math.sqrt(kappa)
    return math.inf


def t_o_root(kappa: float, lam: float) -> float:
    """Root of ``c_k(t) - |lam| s_k(t)`` in ``(0, T_k)``.

    Closed forms: ``t = 1/|lam|`` for kappa = 0, ``cot(sqrt(k) t) = |lam|/sqrt(k)``
    for kappa > 0 and ``coth(sqrt(-k) t) = |lam|/sqrt(-k)`` for kappa < 0.
    """
    a = abs(lam)
    if lam * lam + kappa <= 0:
        raise NoRootError(f"lambda^2 + kappa = {lam * lam + kappa} <= 0, no root")
    if kappa == 0:
        return 1.0 / a
    if kappa > 0:
        rk = math.sqrt(kappa)
        return math.atan2(rk, a) / rk
    rk = math.sqrt(-kappa)
    return math.atanh(rk / a) / rk


@dataclass(frozen=True)
class SpaceForm:
    """Simply connected space form ``M_k`` of dimension ``dim = n + 1``."""

    kappa: float
    dim: int
    model: str = field(default="")

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("ambient dimension must be at least 2")
        derived = EUCLIDEAN if self.kappa == 0 else SPHERE if self.kappa > 0 else HALF_SPACE
        if self.model and self.model != derived:
            raise ValueError(f"model {self.model!r} inconsistent with kappa={self.kappa}")
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "model", derived)

    # -- basic constants -------------------------------------------------

    @property
    def root(self) -> float:
        """``sqrt(|kappa|)``."""
        return math.sqrt(abs(self.kappa))

    @property
    def radius(self) -> float:
        """Embedding radius of the sphere model."""
        return 1.0 / math.sqrt(self.kappa)

    @property
    def horizon(self) -> float:
        return horizon(self.kappa)

    @property
    def ambient_len(self) -> int:
        """Length of an ambient coordinate vector."""
        return self.dim + 1 if self.model == SPHERE else self.dim

    @property
    def lin_dim(self) -> int:
        return self.dim if self.model == EUCLIDEAN else self.dim + 1

    def s(self, t):
        return s_kappa(self.kappa, t)

    def c(self, t):
        return c_kappa(self.kappa, t)

    def cot(self, t):
        return cot_kappa(self.kappa, t)

    # -- linear model ----------------------------------------------------

    def inner(self, a, b):
        """Bilinear form of the linear model (last axis)."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if self.model == HALF_SPACE:
            return (-(a[..., 0] * b[..., 1] + a[..., 1] * b[..., 0]) / 2.0
                    + np.sum(a[..., 2:] * b[..., 2:], axis=-1))
        return np.sum(a * b, axis=-1)

    def lnorm(self, a):
        return np.sqrt(np.maximum(self.inner(a, a), 0.0))

    def center(self) -> np.ndarray:
        """Reference point ``O``: origin, north pole, or ``(1, 0, ..., 0)``."""
        out = np.zeros(self.lin_dim)
        if self.model == SPHERE:
            out[-1] = self.radius
        elif self.model == HALF_SPACE:
            out[0] = out[1] = 1.0 / self.root
        return out

    def at_center(self, theta):
        """Identify ``R^{n+1}`` isometrically with the tangent space at ``O``.

        In the half-space model the first coordinate of ``theta`` is the
        vertical (x0) direction.
        """
        theta = np.asarray(theta, dtype=float)
        if self.model == EUCLIDEAN:
            return theta.copy()
        if self.model == SPHERE:
            return np.concatenate([theta, np.zeros(theta.shape[:-1] + (1,))], axis=-1)
        return np.concatenate([-theta[..., :1], theta[..., :1], theta[..., 1:]], axis=-1)

    def from_center(self, w):
        """Inverse of :meth:`at_center` for vectors tangent at ``O``."""
        w = np.asarray(w, dtype=float)
        if self.model == EUCLIDEAN:
            return w.copy()
        if self.model == SPHERE:
            return w[..., :-1].copy()
        return np.concatenate([(w[..., 1:2] - w[..., :1]) / 2.0, w[..., 2:]], axis=-1)

    def to_linear(self, x):
        x = np.asarray(x, dtype=float)
        if self.model != HALF_SPACE:
            return x.copy()
        c = self.root
        x0 = x[..., :1]
        y = x[..., 1:]
        L = 1.0 / (c * x0)
        M = (x0 * x0 + np.sum(y * y, axis=-1, keepdims=True)) / (c * x0)
        return np.concatenate([L, M, y / (c * x0)], axis=-1)

    def from_linear(self, X):
        X = np.asarray(X, dtype=float)
        if self.model != HALF_SPACE:
            return X.copy()
        L = X[..., :1]
        return np.concatenate([1.0 / (self.root * L), X[..., 2:] / L], axis=-1)

    def vec_to_linear(self, x, w):
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        if self.model != HALF_SPACE:
            return w.copy()
        c = self.root
        x0, y = x[..., :1], x[..., 1:]
        w0, wy = w[..., :1], w[..., 1:]
        dL = -w0 / (c * x0 * x0)
        dY = wy / (c * x0) - y * w0 / (c * x0 * x0)
        dM = ((x0 * x0 - np.sum(y * y, axis=-1, keepdims=True)) * w0
              + 2.0 * x0 * np.sum(y * wy, axis=-1, keepdims=True)) / (c * x0 * x0)
        return np.concatenate([dL, dM, dY], axis=-1)

    def vec_from_linear(self, X, W):
        X = np.asarray(X, dtype=float)
        W = np.asarray(W, dtype=float)
        if self.model != HALF_SPACE:
            return W.copy()
        L, Y = X[..., :1], X[..., 2:]
        dL, dY = W[..., :1], W[..., 2:]
        dx0 = -dL / (self.root * L * L)
        dy = dY / L - Y * dL / (L * L)
        return np.concatenate([dx0, dy], axis=-1)

    def project_tangent(self, X, W):
        """Orthogonal projection of a linear vector onto ``T_X M``."""
        if self.model == EUCLIDEAN:
            return np.asarray(W, dtype=float).copy()
        X = np.asarray(X, dtype=float)
        return W - self.kappa * self.inner(X, W)[..., None] * X

    def ldist(self, X, Z):
        """Geodesic distance between linear points, via chord lengths."""
        D = np.asarray(X, dtype=float) - np.asarray(Z, dtype=float)
        chord = self.lnorm(D)
        if self.model == EUCLIDEAN:
            return chord
        rk = self.root
        if self.model == SPHERE:
            return 2.0 / rk * np.arcsin(np.minimum(chord * rk / 2.0, 1.0))
        return 2.0 / rk * np.arcsinh(chord * rk / 2.0)

    # -- ambient conveniences --------------------------------------------

    def norm(self, x, w):
        """Model-metric norm of the ambient vector ``w`` at ``x``."""
        return float(self.lnorm(self.vec_to_linear(x, w)))

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.ambient_len:
            return False
        if self.model == SPHERE:
            return abs(np.linalg.norm(x) - self.radius) <= tol * max(1.0, self.radius)
        if self.model == HALF_SPACE:
            return bool(x[0] > 0)
        return True

    def distance(self, x, z) -> float:
        return float(self.ldist(self.to_linear(x), self.to_linear(z)))

    # -- global ambient chart, used for volume audits ----------------------

    def chart(self, x):
        """Global chart of the region of interest; stereographic for spheres.

        The sphere chart projects from the antipode of :meth:`center`.
        """
        x = np.asarray(x, dtype=float)
        if self.model != SPHERE:
            return x.copy()
        y = x / self.radius
        return y[..., :-1] / (1.0 + y[..., -1:])

    def unchart(self, xi):
        xi = np.asarray(xi, dtype=float)
        if self.model != SPHERE:
            return xi.copy()
        q = np.sum(xi * xi, axis=-1, keepdims=True)
        y = np.concatenate([2.0 * xi, 1.0 - q], axis=-1) / (1.0 + q)
        return self.radius * y

    def volume_density(self, xi) -> float:
        """Riemannian volume density of the chart at ``xi``."""
        xi = np.asarray(xi, dtype=float)
        if self.model == EUCLIDEAN:
            return 1.0
        if self.model == HALF_SPACE:
            return float((-self.kappa * xi[0] ** 2) ** (-self.dim / 2.0))
        q = float(np.dot(xi, xi))
        return float((2.0 * self.radius / (1.0 + q)) ** self.dim)


# -- geodesics and transport in linear coordinates -----------------------

def geodesic_lin(sf: SpaceForm, X, U, t):
    """Point ``c_k(t) X + s_k(t) U`` of the unit speed geodesic."""
    return sf.c(t) * np.asarray(X) + sf.s(t) * np.asarray(U)


def velocity_lin(sf: SpaceForm, X, U, t):
    return -sf.kappa * sf.s(t) * np.asarray(X) + sf.c(t) * np.asarray(U)


def transport_lin(sf: SpaceForm, X, U, t, W):
    """Parallel transport of ``W`` along the geodesic with data ``(X, U)``.

    The component along ``U`` follows the velocity; the part orthogonal to
    both ``X`` and ``U`` is constant in the linear model.
    """
    a = sf.inner(W, U)
    return a * velocity_lin(sf, X, U, t) + (np.asarray(W) - a * np.asarray(U))


def _check_unit(sf: SpaceForm, x, u) -> tuple[np.ndarray, np.ndarray]:
    if not sf.contains(x):
        raise ValueError(f"point {x!r} is not in the {sf.model} model")
    X = sf.to_linear(x)
    U = sf.vec_to_linear(x, u)
    if sf.model != EUCLIDEAN and abs(sf.inner(X, U)) > UNIT_TOL * (1 + sf.lnorm(X)):
        raise ValueError("velocity is not tangent to the model at its base point")
    nu = float(sf.lnorm(U))
    if abs(nu - 1.0) > UNIT_TOL:
        raise ValueError(f"geodesic velocity must be unit, got norm {nu}")
    return X, U


def geodesic_eval(sf: SpaceForm, x, u, t) -> np.ndarray:
    """Ambient point ``gamma_u(t)`` for a unit vector ``u`` based at ``x``."""
    X, U = _check_unit(sf, x, u)
    return sf.from_linear(geodesic_lin(sf, X, U, t))


def geodesic_velocity(sf: SpaceForm, x, u, t) -> np.ndarray:
    X, U = _check_unit(sf, x, u)
    return sf.vec_from_linear(geodesic_lin(sf, X, U, t), velocity_lin(sf, X, U, t))


def parallel_transport(sf: SpaceForm, x, u, t, w) -> np.ndarray:
    """Transport ``w`` (tangent at ``x``) to ``gamma_u(t)``; ambient in, ambient out."""
    X, U = _check_unit(sf, x, u)
    W = sf.vec_to_linear(x, w)
    return sf.vec_from_linear(geodesic_lin(sf, X, U, t), transport_lin(sf, X, U, t, W))


def jacobi_eval(sf: SpaceForm, x, u, a: float, uvec, wvec, t) -> np.ndarray:
    """Jacobi field ``a gamma'(t) + c_k(t) U(t) + s_k(t) W(t)``.

    ``uvec`` and ``wvec`` are the normal parts of ``J(0)`` and ``J'(0)`` and
    must be orthogonal to ``u``; ``U``, ``W`` are their parallel transports.
    """
    X, U = _check_unit(sf, x, u)
    Uv = sf.vec_to_linear(x, uvec)
    Wv = sf.vec_to_linear(x, wvec)
    scale = 1.0 + float(sf.lnorm(Uv)) + float(sf.lnorm(Wv))
    if abs(sf.inner(Uv, U)) > 1e-9 * scale or abs(sf.inner(Wv, U)) > 1e-9 * scale:
        raise ValueError("initial data of the normal part must be orthogonal to u")
    J = (a * velocity_lin(sf, X, U, t)
         + sf.c(t) * transport_lin(sf, X, U, t, Uv)
         + sf.s(t) * transport_lin(sf, X, U, t, Wv))
    return sf.vec_from_linear(geodesic_lin(sf, X, U, t), J)
