"""The outer billiard map of a bifoliating field, its Jacobian, and orbits.

For ``q`` in the exterior ``U`` there is a unique foot ``p`` on ``N`` and
``t > 0`` with ``q = gamma_{-v(p)}(t)``; the billiard map sends ``q`` to
``gamma_{v(p)}(t)``.  On the horosphere ``{x0 = 1}`` of curvature -1 every level
``{x0 = h}`` is preserved and the map reduces to a flat ``(v, delta)``-flow,
which gives a fast path.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .analysis import char_poly
from .fields import UnitField, nabla
from .kernels import InverseError
from .spaceform import geodesic_lin
from .surface import Horosphere

NEWTON_MAXITER = 50
LINESEARCH_HALVINGS = 20
INVERSE_TOL = 1e-12
LEAF_TOL = 1e-10
PRECORRECTIONS = 4
FD_JAC_STEP = 1e-6
DET_FD_STEP = 1e-5
PERIOD_EPS = 1e-8
UNBOUNDED_R2 = 0.99
UNBOUNDED_MIN = 10.0
ROTATION_STABLE = 1e-6

FORWARD = 1
BACKWARD = -1


class OutsideExterior(ValueError):
    """The point is on or outside the boundary of ``U``."""


class LeafNotFound(ArithmeticError):
    """Newton search for the leaf through a point failed."""


# -- flat helpers (horosphere levels) ---------------------------------------

def _as_callable(v):
    if isinstance(v, UnitField):
        return v.value
    return v


def vdelta_step(v, delta: float, p) -> np.ndarray:
    """One step ``p + delta v(p)`` of the ``(v, delta)``-flow."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    p = np.asarray(p, dtype=float)
    return p + delta * np.asarray(_as_callable(v)(p))


def _newton_inverse(value: Callable, jac: Callable, r: float, q) -> np.ndarray:
    """Solve ``p - r v(p) = q`` by damped Newton."""
    q = np.asarray(q, dtype=float)
    p = q + r * value(q)
    g = p - r * value(p) - q
    res = float(np.linalg.norm(g))
    scale = 1.0 + float(np.linalg.norm(q))
    eye = np.eye(len(q))
    for _ in range(NEWTON_MAXITER):
        if res <= 1e-13 * scale:
            return p
        try:
            step = np.linalg.solve(eye - r * jac(p), -g)
        except np.linalg.LinAlgError:
            step = -g
        lam = 1.0
        for _ in range(LINESEARCH_HALVINGS + 1):
            cand = p + lam * step
            gc = cand - r * value(cand) - q
            rc = float(np.linalg.norm(gc))
            if rc < res:
                break
            lam *= 0.5
        else:
            break
        p, g, res = cand, gc, rc
    if res <= INVERSE_TOL * scale:
        return p
    raise InverseError("Newton inversion of id - r v did not converge", res)


def inverse_id_minus_rv(field_: UnitField, r: float, q) -> np.ndarray:
    """``(id - r v)^{-1}(q)`` for a flat field, ``0 < r < 1``."""
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    if field_.name == "hopf_stereo":
        p, _ = kernels.hopf_stereo_inverse(q, r)
        return np.array(p)
    return _newton_inverse(field_.value, field_.jacobian, r, q)


def horosphere_radius(h: float, kappa: float = -1.0) -> float:
    """Chart displacement ``sqrt(1 - h^2)/sqrt(-kappa)`` of leaves meeting height ``h``."""
    if not 0 < h < 1:
        raise OutsideExterior(f"height {h} outside (0, 1)")
    return math.sqrt((1.0 - h) * (1.0 + h)) / math.sqrt(-kappa)


def billiard_step_horosphere(field_: UnitField, h: float, q, kappa: float = -1.0,
                             inverse: bool = False) -> np.ndarray:
    """Billiard map on the level ``x0 = h`` in the flat chart of the horosphere.

    ``B_h(q) = q + 2 r v((id - r v)^{-1} q)``; with ``inverse=True`` the
    roles of the two rays are swapped.
    """
    r = horosphere_radius(h, kappa)
    q = np.asarray(q, dtype=float)
    if inverse:
        p = _newton_inverse(lambda x: -field_.value(x), lambda x: -field_.jacobian(x), r, q)
        return q - 2.0 * r * field_.value(p)
    if field_.name == "hopf_stereo":
        p = np.array(kernels.hopf_stereo_inverse(q, r)[0])
    else:
        p = _newton_inverse(field_.value, field_.jacobian, r, q)
    return q + 2.0 * r * field_.value(p)


# -- leaves -------------------------------------------------------------------

@dataclass
class LeafCoords:
    """``q = gamma_{sign v(p)}(t)`` with ``p`` a model point of ``N``."""

    p: np.ndarray
    t: float
    sign: int
    residual: float = 0.0

    def point(self, field_: UnitField, surf) -> np.ndarray:
        return surf.sf.from_linear(_leaf_point(field_, surf, self.p, self.sign * self.t))


def _leaf_point(field_, surf, p, s):
    """Linear coordinates of ``gamma_{v(p)}(s)``."""
    X = surf.point_lin(p)
    U = surf.unit_lin(p, field_.value(p))
    return geodesic_lin(surf.sf, X, U, s)


def _lin_of(surf, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if not surf.sf.contains(q):
        raise OutsideExterior(f"{q.tolist()} is not a point of the space form")
    Q = surf.sf.to_linear(q)
    if not surf.exterior_lin(Q):
        raise OutsideExterior(f"{q.tolist()} is not in the exterior U")
    return Q


def locate_leaf(field_: UnitField, surf, q, sign: int = BACKWARD) -> LeafCoords:
    """Find ``(p, t)`` with ``gamma_{sign v(p)}(t) = q``.

    ``t`` is the parallel-surface parameter of ``q``.  On horospheres the
    foot solves ``p + sign r v(p) = z`` in the flat chart; elsewhere it is
    seeded at the perpendicular foot of ``q``, improved by a few shifts that
    match the perpendicular foot of the trial point, and polished by damped
    Gauss-Newton with the residual in linear coordinates.
    """
    field_.require(surf)
    Q = _lin_of(surf, q)
    if isinstance(surf, Horosphere) and field_.jacobian is not None:
        return _locate_horosphere(field_, surf, Q, sign)
    return _locate_generic(field_, surf, Q, sign)


def _locate_horosphere(field_, surf, Q, sign) -> LeafCoords:
    h = 1.0 / (surf.sf.root * Q[0])
    r = horosphere_radius(h, surf.sf.kappa)
    z = Q[2:] / (surf.sf.root * Q[0])
    if sign == BACKWARD:
        if field_.name == "hopf_stereo":
            p = np.array(kernels.hopf_stereo_inverse(z, r)[0])
        else:
            p = _newton_inverse(field_.value, field_.jacobian, r, z)
    else:
        p = _newton_inverse(lambda x: -field_.value(x), lambda x: -field_.jacobian(x), r, z)
    t = math.atanh(math.sqrt((1.0 - h) * (1.0 + h))) / surf.sf.root
    return LeafCoords(p, t, sign, float(np.linalg.norm(p + sign * r * field_.value(p) - z)))


def billiard_step_general(field_: UnitField, surf, q, inverse: bool = False) -> np.ndarray:
    """``B(q)`` through the generic leaf search (``B^{-1}`` if ``inverse``)."""
    field_.require(surf)
    leaf = _locate_generic(field_, surf, _lin_of(surf, q), FORWARD if inverse else BACKWARD)
    return surf.sf.from_linear(_leaf_point(field_, surf, leaf.p, -leaf.sign * leaf.t))


def _locate_generic(field_, surf, Q, sign) -> LeafCoords:
    t = surf.level_t(Q)
    s = sign * t
    model = surf.model
    target = surf.foot(Q)
    scale = 1.0 + float(np.max(np.abs(Q)))

    def F(p):
        return _leaf_point(field_, surf, p, s)

    p = target.copy()
    for _ in range(PRECORRECTIONS):
        p = model.shift(p, surf.foot(F(p)), target)
    R = F(p) - Q
    res = float(np.linalg.norm(R))
    for _ in range(NEWTON_MAXITER):
        if res <= 1e-14 * scale:
            break
        basis = model.tangent_basis(p)
        eta = FD_JAC_STEP
        J = np.column_stack([(F(model.retract(p, eta * b)) - F(model.retract(p, -eta * b))) / (2 * eta)
                             for b in basis])
        delta, *_ = np.linalg.lstsq(J, -R, rcond=None)
        step = delta @ basis
        lam = 1.0
        for _ in range(LINESEARCH_HALVINGS + 1):
            cand = model.retract(p, lam * step)
            Rc = F(cand) - Q
            rc = float(np.linalg.norm(Rc))
            if rc < res:
                break
            lam *= 0.5
        else:
            break
        p, R, res = cand, Rc, rc
    if res > LEAF_TOL * scale:
        raise LeafNotFound(f"leaf search stalled with residual {res:.3e}")
    return LeafCoords(p, t, sign, res)


def _uses_fast_path(field_, surf) -> bool:
    return isinstance(surf, Horosphere) and field_.jacobian is not None


def billiard_step(field_: UnitField, surf, q, inverse: bool = False) -> np.ndarray:
    """``B(q)`` in ambient coordinates, using the horosphere fast path when it applies."""
    if not _uses_fast_path(field_, surf):
        return billiard_step_general(field_, surf, q, inverse)
    field_.require(surf)
    Q = _lin_of(surf, q)
    c = surf.sf.root
    h = 1.0 / (c * Q[0])
    z = Q[2:] / (c * Q[0])
    zb = billiard_step_horosphere(field_, h, z, surf.sf.kappa, inverse)
    return np.concatenate([[h], c * zb])


# -- differentials and Jacobian determinants --------------------------------

@dataclass
class DFMatrix:
    """Matrix of ``dF`` at ``(p, s)`` in the transported orthonormal bases.

    Layout (rows): ``(1, 0, 1)``, ``(s_k b, c_k I + s_k A, 0)``, ``(s_k h, 0, 0)``.
    """

    matrix: np.ndarray
    A: np.ndarray
    b: np.ndarray
    h: float
    s_k: float
    c_k: float
    s: float

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    def det_formula(self) -> float:
        """``(-1)^n h s_k^n P(cot_k(-s))``, the expansion of the block determinant."""
        n = self.A.shape[0] + 1
        P = kernels.charpoly(self.A)
        cot = -self.c_k / self.s_k
        return (-1) ** n * self.h * self.s_k ** n * float(np.polyval(P, cot))


def df_matrix(field_: UnitField, surf, p, s: float) -> DFMatrix:
    if s == 0:
        raise ValueError("s must be non-zero")
    rep = nabla(field_, surf, p)
    A, b = rep.restricted, rep.b
    n = rep.n
    sk, ck = float(surf.sf.s(s)), float(surf.sf.c(s))
    h = surf.mean_curvature_mag
    M = np.zeros((n + 1, n + 1))
    M[0, 0] = M[0, n] = 1.0
    M[1:n, 0] = sk * b
    M[1:n, 1:n] = ck * np.eye(n - 1) + sk * A
    M[n, 0] = sk * h
    return DFMatrix(M, A, b, h, sk, ck, s)


def analytic_det_B(field_: UnitField, surf, p, t: float) -> float:
    """``(-1)^{n+1} P(cot_k(-t)) / P(cot_k(t))`` at the foot ``p``."""
    P = char_poly(field_, surf, p).p
    cot = float(surf.sf.cot(t))
    n = surf.n
    return (-1) ** (n + 1) * float(np.polyval(P, -cot)) / float(np.polyval(P, cot))


def jacobian_det_B(field_: UnitField, surf, q, mode: str = "analytic",
                   eta: float = DET_FD_STEP) -> float:
    """Riemannian Jacobian determinant of ``B`` at ``q``.

    ``analytic`` evaluates the characteristic-polynomial formula at the foot;
    ``fd`` differentiates ``B`` in the global ambient chart by central
    differences and corrects by the ratio of volume densities.
    """
    if mode == "analytic":
        leaf = locate_leaf(field_, surf, q, BACKWARD)
        return analytic_det_B(field_, surf, leaf.p, leaf.t)
    if mode not in ("fd", "finite-difference"):
        raise ValueError(f"unknown mode {mode!r}")
    sf = surf.sf
    xi = sf.chart(np.asarray(q, dtype=float))
    m = len(xi)
    scale = max(1.0, float(np.linalg.norm(xi)))
    h = eta * scale

    def Bc(x):
        return sf.chart(billiard_step(field_, surf, sf.unchart(x)))

    cols = []
    for i in range(m):
        e = np.zeros(m)
        e[i] = h
        cols.append((Bc(xi + e) - Bc(xi - e)) / (2 * h))
    D = np.column_stack(cols)
    img = Bc(xi)
    return float(np.linalg.det(D)) * sf.volume_density(img) / sf.volume_density(xi)


@dataclass
class InjectivityReport:
    t: float
    min_distance_ratio: float
    min_abs_det: float
    samples: int

    @property
    def passed(self) -> bool:
        return self.min_distance_ratio > 1e-3 and self.min_abs_det > 1e-8


def injectivity_probe(field_: UnitField, surf, samples, t: float) -> InjectivityReport:
    """Check that ``f_t: p -> gamma_{v(p)}(t)`` separates the samples.

    Reports the smallest ratio of image distance to source distance over all
    pairs, and the smallest ``|det(c_k(t) I + s_k(t) A)|``.
    """
    samples = [np.asarray(p, dtype=float) for p in samples]
    sf = surf.sf
    src = np.array([sf.from_linear(surf.point_lin(p)) for p in samples])
    img = np.array([sf.from_linear(_leaf_point(field_, surf, p, t)) for p in samples])
    ratio = math.inf
    for i in range(len(samples)):
        ds = np.array([sf.distance(src[i], src[j]) for j in range(i + 1, len(samples))])
        di = np.array([sf.distance(img[i], img[j]) for j in range(i + 1, len(samples))])
        if len(ds):
            ratio = min(ratio, float(np.min(di / ds)))
    sk, ck = float(sf.s(t)), float(sf.c(t))
    dets = [abs(float(np.linalg.det(ck * np.eye(surf.n - 1) + sk * nabla(field_, surf, p).restricted)))
            for p in samples]
    return InjectivityReport(t, ratio, min(dets), len(samples))


# -- orbits ---------------------------------------------------------------------

@dataclass
class Classification:
    """Orbit tag with the evidence behind it."""

    kind: str
    period: Optional[int] = None
    drift: Optional[float] = None
    rotation_number: Optional[float] = None
    evidence: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"kind": self.kind, "evidence": self.evidence}
        for k in ("period", "drift", "rotation_number"):
            val = getattr(self, k)
            if val is not None:
                out[k] = val
        return out


@dataclass
class Orbit:
    start: np.ndarray
    points: np.ndarray
    leaves: list
    chart: np.ndarray
    truncated: bool = False
    failure: str = ""
    classification: Optional[Classification] = None

    @property
    def steps(self) -> int:
        return len(self.points) - 1


def orbit_chart(surf, q) -> np.ndarray:
    """Coordinates used for classification: flat chart on horosphere levels."""
    q = np.asarray(q, dtype=float)
    if isinstance(surf, Horosphere):
        return q[1:] / surf.sf.root
    return surf.sf.chart(q)


def iterate_orbit(field_: UnitField, surf, q, m: int, classify_orbit: bool = True) -> Orbit:
    """``m`` billiard steps from ``q``; stops early and flags truncation on failure."""
    if m < 1:
        raise ValueError("an orbit needs at least one step")
    q = np.asarray(q, dtype=float)
    _lin_of(surf, q)
    failure = ""
    if (isinstance(surf, Horosphere) and field_.name == "hopf_stereo"
            and surf.sf.kappa == -1.0):
        r = horosphere_radius(q[0])
        try:
            pts, feet = kernels.hopf_stereo_orbit(q[1:], r, m)
            t = math.atanh(r)
            points = np.column_stack([np.full(len(pts), q[0]), pts])
            leaves = [LeafCoords(f, t, BACKWARD) for f in feet]
        except InverseError as exc:
            points, leaves, failure = _iterate_slow(field_, surf, q, m)
            failure = failure or str(exc)
    else:
        points, leaves, failure = _iterate_slow(field_, surf, q, m)
    chart = np.array([orbit_chart(surf, x) for x in points])
    orb = Orbit(q, points, leaves, chart, truncated=bool(failure), failure=failure)
    if classify_orbit:
        orb.classification = classify(orb)
    return orb


def _iterate_slow(field_, surf, q, m):
    points, leaves = [q], []
    for _ in range(m):
        try:
            leaf = locate_leaf(field_, surf, points[-1], BACKWARD)
            nxt = surf.sf.from_linear(_leaf_point(field_, surf, leaf.p, leaf.t))
            _lin_of(surf, nxt)
        except (ArithmeticError, ValueError) as exc:
            return np.array(points), leaves, f"step {len(points) - 1}: {exc}"
        leaves.append(leaf)
        points.append(nxt)
    return np.array(points), leaves, ""


def _linear_fit(d: np.ndarray) -> tuple[float, float]:
    k = np.arange(len(d), dtype=float)
    slope, icpt = np.polyfit(k, d, 1)
    resid = d - (slope * k + icpt)
    tot = float(np.sum((d - d.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / tot if tot > 0 else 0.0
    return float(slope), r2


def _circle_fit(xy: np.ndarray) -> tuple[np.ndarray, float]:
    """Algebraic least-squares circle through planar points."""
    A = np.column_stack([2 * xy[:, 0], 2 * xy[:, 1], np.ones(len(xy))])
    rhs = np.sum(xy * xy, axis=1)
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    center = sol[:2]
    return center, math.sqrt(max(sol[2] + center @ center, 0.0))


def rotation_increments(chart: np.ndarray) -> tuple[np.ndarray, dict]:
    """Signed angle increments of an orbit about its best-fit circle."""
    X = chart - chart.mean(axis=0)
    _, _, vt = np.linalg.svd(X, full_matrices=False)
    plane = X @ vt[:2].T
    center, radius = _circle_fit(plane)
    rel = plane - center
    ang = np.unwrap(np.arctan2(rel[:, 1], rel[:, 0]))
    radii = np.linalg.norm(rel, axis=1)
    off_plane = float(np.max(np.abs(X @ vt[2:].T))) if vt.shape[0] > 2 else 0.0
    info = {"radius": radius, "radius_min": float(radii.min()), "radius_max": float(radii.max()),
            "off_plane": off_plane}
    return np.diff(ang), info


def classify(orbit: Orbit, eps_per: float = PERIOD_EPS) -> Classification:
    """Tag an orbit as periodic, unbounded, bounded-nonperiodic or undetermined."""
    c = orbit.chart
    if len(c) < 2:
        return Classification("undetermined", evidence={"reason": "empty orbit"})
    d = np.linalg.norm(c - c[0], axis=1)
    for k in range(1, len(c)):
        if d[k] < eps_per:
            return Classification("periodic", period=k,
                                  evidence={"return_distance": float(d[k]), "eps": eps_per})
    if len(c) >= 3:
        slope, r2 = _linear_fit(d)
        if r2 > UNBOUNDED_R2 and slope > 0 and d.max() > UNBOUNDED_MIN:
            return Classification("unbounded", drift=slope,
                                  evidence={"r2": r2, "max_distance": float(d.max())})
    if len(c) >= 8 and d.max() <= UNBOUNDED_MIN * 10:
        inc, info = rotation_increments(c)
        half = len(inc) // 2
        est_full = abs(float(np.mean(inc))) / (2 * math.pi)
        est_half = abs(float(np.mean(inc[:half]))) / (2 * math.pi)
        # Richardson step on the 1/N tail of the ergodic average
        est = 2 * est_full - est_half
        stable = abs(est_full - est_half) < ROTATION_STABLE
        annulus = info["radius_min"] > 0 and info["off_plane"] < 1e-6 * (1 + info["radius"])
        info.update({"estimate_full": est_full, "estimate_half": est_half,
                     "stable": stable, "annulus": annulus})
        if stable and annulus:
            return Classification("bounded-nonperiodic", rotation_number=est, evidence=info)
        return Classification("undetermined", evidence=info)
    return Classification("undetermined", evidence={"max_distance": float(d.max())})


# -- CSV export -------------------------------------------------------------

def orbit_csv(orbit: Orbit) -> str:
    """Rows ``step,x0,...,xn,leaf_t,chart_norm``; the start row has an empty ``leaf_t``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    dim = orbit.points.shape[1]
    w.writerow(["step"] + [f"x{i}" for i in range(dim)] + ["leaf_t", "chart_norm"])
    for k, x in enumerate(orbit.points):
        t = "" if k == 0 else repr(float(orbit.leaves[k - 1].t))
        w.writerow([k] + [repr(float(v)) for v in x] + [t, repr(float(np.linalg.norm(orbit.chart[k])))])
    return buf.getvalue()


def read_orbit_csv(text: str, surf) -> Orbit:
    """Parse :func:`orbit_csv` output back into an :class:`Orbit` (feet not stored)."""
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    dim = len(header) - 3
    pts = np.array([[float(v) for v in r[1:1 + dim]] for r in body])
    leaves = [LeafCoords(np.zeros(0), float(r[1 + dim]), BACKWARD) for r in body[1:]]
    chart = np.array([orbit_chart(surf, x) for x in pts])
    return Orbit(pts[0], pts, leaves, chart)


def jacobi_variation(field_: UnitField, surf, p, k: int, t: float,
                     eps: float = 1e-4) -> tuple[np.ndarray, np.ndarray]:
    """Jacobi field of ``s -> gamma_{v(alpha(s))}`` at time ``t`` two ways.

    ``alpha`` leaves ``p`` with velocity ``u_k`` (adapted frame, ``k >= 1``).
    Returns the closed-form field ``c_k(t) U(t) + s_k(t) W(t)`` with
    ``W(0) = nabla_{u_k} v`` and its central finite difference, both in
    ambient components.
    """
    from .spaceform import jacobi_eval

    if k < 1:
        raise ValueError("variation direction must be orthogonal to v")
    p = np.asarray(p, dtype=float)
    rep = nabla(field_, surf, p)
    sf = surf.sf
    x = sf.from_linear(surf.point_lin(p))
    u = rep.frame[k]
    w = rep.matrix[:, k] @ rep.frame
    J = jacobi_eval(sf, x, rep.value, 0.0, u, w, t)
    model = surf.model
    u_model = adapted_model_direction(field_, surf, p, k)

    def end(s):
        return sf.from_linear(_leaf_point(field_, surf, model.curve(p, u_model, s), t))

    fd = (end(eps) - end(-eps)) / (2 * eps)
    return J, fd


def adapted_model_direction(field_: UnitField, surf, p, k: int) -> np.ndarray:
    """Model vector whose image in ``N`` is the ``k``-th adapted unit frame vector."""
    from .fields import adapted_frame

    frame = adapted_frame(surf.model, p, field_.value(p))
    return surf.scale * frame[k]
