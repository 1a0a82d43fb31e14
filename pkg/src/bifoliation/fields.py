"""Unit vector fields on umbilic hypersurfaces and their covariant derivative.

A field is defined on the intrinsic model of ``N`` (see :mod:`.surface`): a
round unit sphere, flat ``R^n`` or the half-space model of ``H^n``.  It
returns the vector that is unit in the model metric, and optionally the
Jacobian ``Dv`` of a smooth extension to an open set of model coordinates.
On spheres the extension is the degree-0 homogeneous one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .surface import GeodesicSphere, Horosphere, SurfacePoint, TiltedHyperplane

FD_STEP = 1e-5
FD_AGREE = 1e-3

DOMAINS = {"sphere": GeodesicSphere, "flat": Horosphere, "hyperbolic": TiltedHyperplane}


class IncompatibleSurface(ValueError):
    """The field is not defined on the requested surface."""


@dataclass(frozen=True)
class UnitField:
    """A named unit vector field on one intrinsic model.

    Parameters
    ----------
    name : str
        Catalog identifier.
    domain : {"sphere", "flat", "hyperbolic"}
        Intrinsic model on which the field lives.
    value : callable
        ``p -> v(p)`` in model coordinates, unit in the model metric.
    jacobian : callable or None
        ``p -> Dv(p)`` with ``Dv[i, j] = d v_i / d p_j``.
    dims : callable
        Predicate on ``n = dim N``.
    """

    name: str
    domain: str
    value: Callable[[np.ndarray], np.ndarray]
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    dims: Callable[[int], bool] = lambda n: n >= 2
    params: dict = field(default_factory=dict)
    description: str = ""

    def supports(self, surf) -> bool:
        return isinstance(surf, DOMAINS[self.domain]) and self.dims(surf.n)

    def require(self, surf) -> None:
        if not self.supports(surf):
            raise IncompatibleSurface(
                f"field {self.name!r} lives on {self.domain} surfaces with a restricted "
                f"dimension; got {type(surf).__name__} with n={surf.n}")

    def evaluate(self, surf, p) -> np.ndarray:
        """Ambient components of the unit vector ``v(p)``."""
        p = _model_point(p)
        X = surf.point_lin(p)
        return surf.sf.vec_from_linear(X, surf.unit_lin(p, self.value(p)))

    def __call__(self, p) -> np.ndarray:
        return self.value(np.asarray(p, dtype=float))


def _model_point(p) -> np.ndarray:
    if isinstance(p, SurfacePoint):
        raise TypeError("pass model points; use surf.chart_to_model for chart coordinates")
    return np.asarray(p, dtype=float)


# -- sphere fields -------------------------------------------------------

def complex_structure(m: int) -> np.ndarray:
    """Matrix of ``J(p1, p2, ...) = (-p2, p1, ...)`` on ``R^m``, ``m`` even."""
    J = np.zeros((m, m))
    for k in range(0, m, 2):
        J[k + 1, k] = 1.0
        J[k, k + 1] = -1.0
    return J


def _linear_sphere_field(M: np.ndarray):
    def value(p):
        w = M @ p
        return w / np.linalg.norm(w)

    def jacobian(p):
        w = M @ p
        nw = np.linalg.norm(w)
        v = w / nw
        return (np.eye(len(p)) - np.outer(v, v)) @ M / nw

    return value, jacobian


def hopf(n: int = 3) -> UnitField:
    J = complex_structure(n + 1) if (n + 1) % 2 == 0 else None
    value, jac = _linear_sphere_field(J) if J is not None else (None, None)
    return UnitField("hopf", "sphere", value, jac, dims=lambda k: k == n and k % 2 == 1,
                     description="Hopf field p -> Jp on odd spheres")


def perturbation_matrix(m: int) -> np.ndarray:
    """Matrix of ``P(p) = (-p4, p3, -p2, p1, 0, ...)``."""
    P = np.zeros((m, m))
    P[0, 3], P[1, 2], P[2, 1], P[3, 0] = -1.0, 1.0, -1.0, 1.0
    return P


def hopf_perturbed(eps: float = 0.1, n: int = 3) -> UnitField:
    if not 0 <= eps < 1:
        raise ValueError("eps must lie in [0, 1)")
    m = n + 1
    M = complex_structure(m) + eps * perturbation_matrix(m) if m % 2 == 0 and m >= 4 else None
    value, jac = _linear_sphere_field(M) if M is not None else (None, None)
    return UnitField("hopf_perturbed", "sphere", value, jac,
                     dims=lambda k: k == n and k % 2 == 1 and k >= 3, params={"eps": eps},
                     description="normalized (J + eps P)p, bifoliating and not geodesic")


def _psi(x):
    return math.exp(-1.0 / x) if x > 0 else 0.0


def smooth_step(r: float) -> tuple[float, float]:
    """C-infinity step ``sigma`` (0 at r <= 0, 1 at r >= 1) and its derivative."""
    r = abs(r)
    if r >= 1.0:
        return 1.0, 0.0
    a, b = _psi(r), _psi(1.0 - r)
    da = a / (r * r) if a > 0 else 0.0
    db = b / ((1.0 - r) ** 2) if b > 0 else 0.0
    den = a + b
    return a / den, (da * b + a * db) / (den * den)


def fermi_profile(r: float) -> tuple[float, float]:
    """Odd increasing ``h`` with ``h(r) = sin r`` for ``r >= 1`` and flat at 0; returns ``(h, h')``."""
    sgn = -1.0 if r < 0 else 1.0
    r = abs(r)
    s, ds = smooth_step(r)
    return sgn * math.sin(r) * s, math.cos(r) * s + math.sin(r) * ds


def fermi_bizero() -> UnitField:
    """Hopf field modified near the circle ``e^{it}`` so that ``nabla v`` vanishes there."""
    J = complex_structure(4)
    hopf_value, hopf_jac = _linear_sphere_field(J)
    J2 = complex_structure(2)

    def parts(p):
        a, b = p[0:2], p[2:4]
        r1, r2 = float(np.linalg.norm(a)), float(np.linalg.norm(b))
        return a, b, r1, r2, math.atan2(r2, r1)

    def value(p):
        a, b, r1, r2, r = parts(p)
        if r >= 1.0 or r1 == 0.0:
            return hopf_value(p)
        h, _ = fermi_profile(r)
        g = math.sqrt(1.0 - h * h)
        out = np.zeros(4)
        out[:2] = g * (J2 @ a) / r1
        if r2 > 0:
            out[2:] = h * (J2 @ b) / r2
        return out

    def jacobian(p):
        a, b, r1, r2, r = parts(p)
        if r >= 1.0 or r1 == 0.0:
            return hopf_jac(p)
        h, dh = fermi_profile(r)
        g = math.sqrt(1.0 - h * h)
        dg = -h * dh / g
        phi1 = J2 @ a / r1
        dphi1 = J2 / r1 - np.outer(J2 @ a, a) / r1 ** 3
        D = np.zeros((4, 4))
        D[:2, :2] = g * dphi1
        if r2 > 0 and h != 0.0:
            q = r1 * r1 + r2 * r2
            grad_r = np.concatenate([-r2 * a / r1, r1 * b / r2]) / q
            phi2 = J2 @ b / r2
            dphi2 = J2 / r2 - np.outer(J2 @ b, b) / r2 ** 3
            D[:2, :] += dg * np.outer(phi1, grad_r)
            D[2:, :] += dh * np.outer(phi2, grad_r)
            D[2:, 2:] += h * dphi2
        return D

    return UnitField("fermi_bizero", "sphere", value, jacobian, dims=lambda k: k == 3,
                     description="bifoliates S^3 in R^4 with nabla v = 0 on e^{it}")


def fermi_coordinates(p) -> tuple[float, float, float]:
    """``(t, r, s)`` with ``p = cos r e^{it} + sin r e^{is} j``."""
    p = np.asarray(p, dtype=float)
    return (math.atan2(p[1], p[0]), math.atan2(math.hypot(p[2], p[3]), math.hypot(p[0], p[1])),
            math.atan2(p[3], p[2]))


# -- flat fields (horospheres) -------------------------------------------

def constant(direction=None, n: int = 3) -> UnitField:
    d = np.zeros(n) if direction is None else np.asarray(direction, dtype=float)
    if direction is None:
        d[0] = 1.0
    d = d / np.linalg.norm(d)
    return UnitField("constant", "flat", lambda p: d.copy(), lambda p: np.zeros((len(p), len(p))),
                     dims=lambda k: k == len(d), params={"direction": d.tolist()},
                     description="constant unit field on a horosphere")


def _sin_tilt(eps, x):
    s = eps * math.sin(x)
    ds = eps * math.cos(x)
    den = math.sqrt(1.0 + s * s)
    return s, ds, den


def u_eps(eps: float = 0.1, n: int = 3) -> UnitField:
    """Perturbation of the constant field by a tilt depending on the first coordinate."""

    def value(p):
        s, _, den = _sin_tilt(eps, p[0])
        out = np.zeros(len(p))
        out[0], out[1] = 1.0 / den, s / den
        return out

    def jacobian(p):
        s, ds, den = _sin_tilt(eps, p[0])
        D = np.zeros((len(p), len(p)))
        D[0, 0], D[1, 0] = -s * ds / den ** 3, ds / den ** 3
        return D

    return UnitField("u_eps", "flat", value, jacobian, dims=lambda k: k == n and k >= 2,
                     params={"eps": eps}, description="tilted constant field on a horosphere")


def rotating(freq: float = 2.0) -> UnitField:
    """``(cos f(x), sin f(x))`` with ``f(x) = freq x`` on a 2-dimensional horosphere."""

    def value(p):
        f = freq * p[0]
        return np.array([math.cos(f), math.sin(f)])

    def jacobian(p):
        f = freq * p[0]
        return np.array([[-freq * math.sin(f), 0.0], [freq * math.cos(f), 0.0]])

    return UnitField("rotating", "flat", value, jacobian, dims=lambda k: k == 2,
                     params={"freq": freq}, description="direction rotating along x, fails the criterion")


def hopf_stereo_value(p) -> np.ndarray:
    x, y, z = p
    D = x * x + y * y + z * z + 1.0
    return np.array([x * x - y * y - z * z + 1.0, 2 * x * y + 2 * z, 2 * x * z - 2 * y]) / D


def hopf_stereo_jacobian(p) -> np.ndarray:
    x, y, z = p
    D = x * x + y * y + z * z + 1.0
    N = np.array([x * x - y * y - z * z + 1.0, 2 * x * y + 2 * z, 2 * x * z - 2 * y])
    DN = np.array([[2 * x, -2 * y, -2 * z], [2 * y, 2 * x, 2.0], [2 * z, -2.0, 2 * x]])
    return DN / D - np.outer(N, 2.0 * np.asarray(p)) / (D * D)


def hopf_stereo() -> UnitField:
    return UnitField("hopf_stereo", "flat", hopf_stereo_value, hopf_stereo_jacobian,
                     dims=lambda k: k == 3,
                     description="stereographic image of the Hopf field on R^3")


# -- hyperbolic fields (tilted hyperplanes) ------------------------------

def w_eps(eps: float = 0.1, n: int = 3) -> UnitField:
    """Vertical field of the half-space model tilted by ``eps sin x1``."""

    def value(p):
        s, _, den = _sin_tilt(eps, p[1])
        out = np.zeros(len(p))
        out[0], out[1] = p[0] / den, p[0] * s / den
        return out

    def jacobian(p):
        s, ds, den = _sin_tilt(eps, p[1])
        D = np.zeros((len(p), len(p)))
        D[0, 0], D[1, 0] = 1.0 / den, s / den
        D[0, 1], D[1, 1] = -p[0] * s * ds / den ** 3, p[0] * ds / den ** 3
        return D

    return UnitField("w_eps", "hyperbolic", value, jacobian, dims=lambda k: k == n and k >= 2,
                     params={"eps": eps}, description="perturbed geodesic field on hyperbolic N")


# -- catalog ---------------------------------------------------------------

CATALOG_NAMES = ("hopf", "hopf_perturbed", "w_eps", "u_eps", "constant", "fermi_bizero",
                 "hopf_stereo", "rotating")


def make_field(name: str, n: int = 3, eps: float = 0.1, freq: float = 2.0) -> UnitField:
    """Build a catalog field; hyphens in ``name`` are accepted."""
    key = name.replace("-", "_")
    if key == "hopf":
        return hopf(n)
    if key == "hopf_perturbed":
        return hopf_perturbed(eps, n)
    if key == "w_eps":
        return w_eps(eps, n)
    if key == "u_eps":
        return u_eps(eps, n)
    if key == "constant":
        return constant(n=n)
    if key == "fermi_bizero":
        return fermi_bizero()
    if key == "hopf_stereo":
        return hopf_stereo()
    if key == "rotating":
        return rotating(freq)
    raise KeyError(f"unknown field {name!r}; known: {', '.join(CATALOG_NAMES)}")


def catalog(n: int = 3) -> list[UnitField]:
    """Every catalog field with default parameters (``rotating`` is planar)."""
    return [make_field(k, n) for k in CATALOG_NAMES]


# -- covariant derivative --------------------------------------------------

@dataclass
class NablaReport:
    """Matrix of ``(nabla v)_p`` in an adapted orthonormal frame.

    ``matrix[j, k] = <u_j, nabla_{u_k} v>`` with ``u_1 = v(p)``; ``frame`` holds the
    ambient components of ``u_1 .. u_n`` as rows.  ``chart_matrix`` is the same
    operator in the canonical model coordinates.
    """

    point: np.ndarray
    frame: np.ndarray
    matrix: np.ndarray
    chart_matrix: np.ndarray
    value: np.ndarray
    mode: str = "exact"

    @property
    def restricted(self) -> np.ndarray:
        return self.matrix[1:, 1:]

    @property
    def b(self) -> np.ndarray:
        """Coordinates of ``nabla_v v`` in ``u_2 .. u_n``."""
        return self.matrix[1:, 0]

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def adapted_frame(model, p, v) -> np.ndarray:
    """Rows: model-orthonormal basis of ``T_p`` starting with ``v``."""
    basis = model.tangent_basis(p)
    # coordinates of v in the orthonormal basis
    coords = np.array([model.inner(p, v, e) for e in basis])
    q, _ = np.linalg.qr(np.column_stack([coords, np.eye(len(coords))]))
    q = q[:, :len(coords)]
    if np.dot(q[:, 0], coords) < 0:
        q[:, 0] = -q[:, 0]
    return q.T @ basis


def _directional(field_, model, p, x, eta):
    fwd = field_.value(model.curve(p, x, eta))
    bwd = field_.value(model.curve(p, x, -eta))
    return (fwd - bwd) / (2.0 * eta)


def _derivatives(field_, model, p, dirs, mode, eta):
    """``Dv . x`` for each row ``x`` of ``dirs``."""
    if mode == "exact":
        if field_.jacobian is None:
            raise ValueError(f"field {field_.name!r} has no exact derivative")
        D = field_.jacobian(p)
        return [D @ x for x in dirs]
    if eta < 1e-12:
        raise FloatingPointError("finite-difference step underflow")
    out = []
    for x in dirs:
        d1 = _directional(field_, model, p, x, eta)
        d2 = _directional(field_, model, p, x, eta / 2.0)
        if np.max(np.abs(d1 - d2)) > FD_AGREE * (1.0 + np.max(np.abs(d2))):
            d1 = (4.0 * d2 - d1) / 3.0
        out.append(d1)
    return out


def nabla(field_: UnitField, surf, p, mode: str = "exact", eta: float = FD_STEP) -> NablaReport:
    """Covariant derivative of ``field_`` at the model point ``p`` of ``surf``.

    ``mode="exact"`` uses the closed-form Jacobian; ``mode="fd"`` uses central
    differences along great circles (spheres) or coordinate lines.
    """
    field_.require(surf)
    model = surf.model
    p = _model_point(p)
    v = field_.value(p)
    frame = adapted_frame(model, p, v)
    m = model.coord_len
    canon = np.eye(m)
    if model.name == "sphere":
        canon = np.array([model.project(p, e) for e in canon])
    dirs = np.vstack([frame, canon])
    dvs = _derivatives(field_, model, p, dirs, "fd" if mode in ("fd", "finite-difference") else mode, eta)
    cov = [model.connection(p, x, v, dv) for x, dv in zip(dirs, dvs)]
    k = len(frame)
    a = surf.scale
    M = a * np.array([[model.inner(p, frame[j], cov[i]) for i in range(k)] for j in range(k)])
    chart = a * np.column_stack(cov[k:])
    X = surf.point_lin(p)
    amb = np.array([surf.sf.vec_from_linear(X, surf.unit_lin(p, u)) for u in frame])
    return NablaReport(point=p, frame=amb, matrix=M, chart_matrix=chart,
                       value=amb[0], mode="exact" if mode == "exact" else "fd")


def great_circle_check(field_: UnitField, p, tol: float = 1e-10) -> bool:
    """Whether ``v(v(p)) = -p`` on the unit sphere (great circle fibration test)."""
    if field_.domain != "sphere":
        raise IncompatibleSurface("great circle test applies to sphere fields")
    p = np.asarray(p, dtype=float)
    return bool(np.linalg.norm(field_.value(field_.value(p)) + p) < tol)


def is_geodesic_field(field_: UnitField, surf, samples, tol: float = 1e-8) -> bool:
    """``nabla_v v = 0`` at every sample (first column of the adapted matrix)."""
    worst = 0.0
    for p in samples:
        worst = max(worst, float(np.linalg.norm(nabla(field_, surf, p).matrix[:, 0])))
    return worst < tol
