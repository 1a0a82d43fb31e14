"""Eigenvalues of small matrices and the pointwise verdicts built on them.

Verdicts are sampled: a passing verdict means no violation was found on the
given samples, never a proof.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .fields import NablaReport, UnitField, nabla

DEFAULT_TOL = 1e-8
TAU_REL = 1e-7
CLUSTER_FACTOR = 10.0
RESIDUAL_REL = 1e-8
MAX_DIM = 8


class EigenError(ArithmeticError):
    """Eigenvalue computation failed; carries the offending point when known."""

    def __init__(self, msg, point=None):
        super().__init__(msg)
        self.point = point


def tau_im(M) -> float:
    """Imaginary-part threshold separating real from complex eigenvalues."""
    return TAU_REL * (1.0 + float(np.linalg.norm(M)))


@dataclass
class EigenReport:
    """Eigenvalues of a small real matrix, each repeated by multiplicity."""

    values: np.ndarray
    tau: float
    source: str = "full"

    @property
    def is_real(self) -> np.ndarray:
        return np.abs(self.values.imag) <= self.tau

    @property
    def real_values(self) -> np.ndarray:
        return np.sort(self.values[self.is_real].real)

    @property
    def complex_values(self) -> np.ndarray:
        return self.values[~self.is_real]

    def zero_multiplicity(self) -> int:
        """Real roots clustered at 0 within ``10 tau``."""
        return int(np.sum(np.abs(self.real_values) <= CLUSTER_FACTOR * self.tau))

    def multiplicities(self) -> list[tuple[complex, int]]:
        """Distinct eigenvalues after clustering within ``10 tau``."""
        out: list[tuple[complex, int]] = []
        for z in self.values:
            for i, (c, k) in enumerate(out):
                if abs(z - c) <= CLUSTER_FACTOR * self.tau:
                    out[i] = ((c * k + z) / (k + 1), k + 1)
                    break
            else:
                out.append((complex(z), 1))
        return out


def _pair_conjugates(roots: np.ndarray, tau: float) -> np.ndarray:
    """Snap near-real roots to the axis and symmetrize conjugate pairs."""
    roots = np.array(roots, dtype=complex)
    real = np.abs(roots.imag) <= tau
    out = list(roots[real].real.astype(complex))
    upper = sorted(roots[~real & (roots.imag > 0)], key=lambda z: (z.real, z.imag))
    lower = list(roots[~real & (roots.imag < 0)])
    for z in upper:
        if not lower:
            out.append(z)
            continue
        j = int(np.argmin([abs(z - w.conjugate()) for w in lower]))
        w = lower.pop(j)
        m = (z + w.conjugate()) / 2.0
        out.extend([m, m.conjugate()])
    out.extend(lower)
    return np.array(sorted(out, key=lambda z: (z.real, z.imag)), dtype=complex)


def polyval(coeffs, z):
    acc = 0j
    for a in coeffs:
        acc = acc * z + a
    return acc


def eigenvalues(M, source: str = "full", tau: float | None = None) -> EigenReport:
    """All eigenvalues of a real matrix of size at most 8.

    Roots of the characteristic polynomial are found by simultaneous
    (Aberth) iteration; each root must satisfy
    ``|det(lambda I - M)| < 1e-8 (1 + ||M||)^n``.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError("matrix must be square")
    if n > MAX_DIM:
        raise ValueError(f"dimension {n} exceeds {MAX_DIM}")
    tau = tau_im(M) if tau is None else tau
    if n == 0:
        return EigenReport(np.zeros(0, dtype=complex), tau, source)
    coeffs = kernels.charpoly(M)
    roots = kernels.aberth(coeffs)
    bound = RESIDUAL_REL * (1.0 + float(np.linalg.norm(M))) ** n
    for z in roots:
        if abs(polyval(coeffs, z)) >= bound:
            raise EigenError(f"eigenvalue residual too large at {z}")
    return EigenReport(_pair_conjugates(roots, tau), tau, source)


@dataclass(frozen=True)
class CharPoly:
    """``Q(s) = det(s I - nabla v)`` and ``P`` for the restriction, highest degree first."""

    q: np.ndarray
    p: np.ndarray

    def q_at(self, s):
        return polyval(self.q, s).real

    def p_at(self, s):
        return polyval(self.p, s).real

    def factor_gap(self) -> float:
        """Max coefficient gap between ``Q`` and ``s P``."""
        return float(np.max(np.abs(self.q - np.append(self.p, 0.0))))


def char_poly(field_: UnitField, surf, p, report: NablaReport | None = None) -> CharPoly:
    rep = report if report is not None else nabla(field_, surf, p)
    return CharPoly(kernels.charpoly(rep.matrix), kernels.charpoly(rep.restricted))


def divergence(field_: UnitField, surf, p) -> float:
    return float(np.trace(nabla(field_, surf, p).matrix))


# -- verdicts -------------------------------------------------------------

@dataclass
class Witness:
    point: tuple
    eigenvalue: complex
    margin: float
    note: str = ""

    def as_dict(self) -> dict:
        return {"point": [float(x) for x in self.point],
                "eigenvalue": [float(self.eigenvalue.real), float(self.eigenvalue.imag)],
                "margin": float(self.margin), "note": self.note}


@dataclass
class Verdict:
    """Outcome of a sampled check.  ``fails`` always carries witnesses."""

    kind: str
    witnesses: list[Witness]
    tol: float
    samples: int
    condition: str = ""
    margins: list[float] = field(default_factory=list)
    boundary: list[Witness] = field(default_factory=list)

    def __post_init__(self):
        if self.kind == "fails" and not self.witnesses:
            raise ValueError("a failing verdict needs witnesses")
        key = lambda w: (-w.margin, tuple(w.point))
        self.witnesses.sort(key=key)
        self.boundary.sort(key=key)

    @property
    def passed(self) -> bool:
        return self.kind != "fails"

    @property
    def worst(self) -> Witness | None:
        return self.witnesses[0] if self.witnesses else None

    def failing_points(self) -> set[tuple]:
        return {tuple(w.point) for w in self.witnesses}

    def summary(self) -> str:
        if self.passed:
            return (f"{self.condition}: no violation found on {self.samples} samples "
                    f"(tol {self.tol:g})")
        w = self.worst
        what = (f"{w.note} = {w.eigenvalue.real:.6g}" if w.note.startswith("coefficient")
                else f"eigenvalue {w.eigenvalue:.6g}")
        return (f"{self.condition}: {len(self.witnesses)} violating samples of {self.samples}; "
                f"worst at {np.round(w.point, 6).tolist()} with {what}")

    def as_dict(self) -> dict:
        return {"kind": self.kind, "condition": self.condition, "tol": self.tol,
                "samples": self.samples, "witnesses": [w.as_dict() for w in self.witnesses],
                "boundary": [w.as_dict() for w in self.boundary]}


def _point_key(p) -> tuple:
    return tuple(float(x) for x in np.asarray(p, dtype=float))


def _verdict(witnesses, tol, samples, condition, margins, boundary) -> Verdict:
    return Verdict("fails" if witnesses else "bifoliates", witnesses, tol, samples,
                   condition, margins, boundary)


def condition_b_at(kappa: float, report: NablaReport, tol: float):
    """Violations of ``lambda^2 + kappa <= tol`` on the restricted block at one point."""
    ev = eigenvalues(report.restricted, "restricted", tau_im(report.matrix))
    bad, edge, margins = [], [], []
    for lam in ev.real_values:
        m = lam * lam + kappa
        margins.append(m)
        if m > tol:
            bad.append((complex(lam), m, ""))
        elif abs(m) < tol:
            edge.append((complex(lam), m, "boundary"))
    return bad, edge, margins


def condition_c_at(kappa: float, report: NablaReport, tol: float):
    """Violations of the full-matrix condition at one point."""
    ev = eigenvalues(report.matrix, "full")
    bad, edge, margins = [], [], []
    zero_cut = CLUSTER_FACTOR * ev.tau
    for lam in ev.real_values:
        m = lam * lam + kappa
        margins.append(m)
        if kappa > 0:
            if abs(lam) > zero_cut:
                bad.append((complex(lam), m, "nonzero real eigenvalue"))
        elif kappa == 0:
            if lam * lam > tol:
                bad.append((complex(lam), m, ""))
        else:
            if m > tol:
                bad.append((complex(lam), m, ""))
            elif abs(m) < tol:
                edge.append((complex(lam), m, "boundary"))
    if kappa > 0:
        z = ev.zero_multiplicity()
        if z != 1:
            bad.append((0j, float(z), f"eigenvalue 0 has multiplicity {z}"))
    return bad, edge, margins


def _check(field_, surf, samples, tol, at, condition) -> Verdict:
    witnesses, boundary, margins = [], [], []
    count = 0
    for p in samples:
        count += 1
        try:
            rep = nabla(field_, surf, p)
            bad, edge, ms = at(surf.sf.kappa, rep, tol)
        except (ArithmeticError, kernels.RootFindingError) as exc:
            raise EigenError(f"{exc} at {np.asarray(p).tolist()}", p) from exc
        key = _point_key(p)
        witnesses += [Witness(key, lam, m, note) for lam, m, note in bad]
        boundary += [Witness(key, lam, m, note) for lam, m, note in edge]
        margins += ms
    return _verdict(witnesses, tol, count, condition, margins, boundary)


def check_bifoliation_b(field_: UnitField, surf, samples, tol: float = DEFAULT_TOL) -> Verdict:
    """Every real eigenvalue of the restriction to ``v^perp`` has ``lambda^2 + kappa <= tol``."""
    return _check(field_, surf, samples, tol, condition_b_at, "b")


def check_bifoliation_c(field_: UnitField, surf, samples, tol: float = DEFAULT_TOL) -> Verdict:
    """Full-matrix form: 0 simple (kappa > 0), real eigenvalues 0 (kappa = 0), ``lambda^2 <= -kappa``."""
    return _check(field_, surf, samples, tol, condition_c_at, "c")


@dataclass
class CrossCheck:
    agree: bool
    discrepancies: list[tuple]
    verdict_b: Verdict
    verdict_c: Verdict


def crosscheck_bc(field_: UnitField, surf, samples, tol: float = DEFAULT_TOL) -> CrossCheck:
    """Compare the two equivalent conditions sample by sample."""
    samples = [np.asarray(p, dtype=float) for p in samples]
    vb = check_bifoliation_b(field_, surf, samples, tol)
    vc = check_bifoliation_c(field_, surf, samples, tol)
    fb, fc = vb.failing_points(), vc.failing_points()
    diff = sorted(fb ^ fc)
    return CrossCheck(not diff, diff, vb, vc)


def contact_margin(field_: UnitField, surf, p) -> float:
    """``|A12 - A21|`` for the restricted 2x2 block on a 3-dimensional ``N``."""
    if surf.n != 3:
        raise ValueError("contact check needs a 3-dimensional hypersurface")
    A = nabla(field_, surf, p).restricted
    return float(abs(A[0, 1] - A[1, 0]))


def contact_check(field_: UnitField, surf, p, tol: float = DEFAULT_TOL) -> bool:
    """Whether the dual 1-form is contact at ``p``."""
    return contact_margin(field_, surf, p) > tol


def parity_defect(cp: CharPoly, n: int) -> tuple[int, float]:
    """Largest coefficient of ``Q`` whose parity differs from ``n``: ``(power, value)``."""
    best = (-1, 0.0)
    for i, c in enumerate(cp.q):
        k = n - i
        if (n - k) % 2 == 1 and abs(c) > abs(best[1]):
            best = (k, float(c))
    return best


def volume_parity(field_: UnitField, surf, samples, tol: float = DEFAULT_TOL) -> Verdict:
    """Passes iff ``Q_p`` has the parity of ``n`` at every sample."""
    witnesses, count = [], 0
    for p in samples:
        count += 1
        cp = char_poly(field_, surf, p)
        k, c = parity_defect(cp, surf.n)
        if abs(c) > tol:
            witnesses.append(Witness(_point_key(p), complex(c), abs(c), f"coefficient of s^{k}"))
    v = Verdict("fails" if witnesses else "preserves", witnesses, tol, count, "volume parity")
    return v


# -- sampling ---------------------------------------------------------------

def sample_points(surf, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic low-discrepancy model points of ``N``."""
    return surf.model.sample(count, seed)


def refine_near(surf, points: Iterable, count: int, seed: int = 0, radius: float = 1e-2):
    """Seeded random model points near each given point (witness refinement)."""
    rng = np.random.default_rng(seed)
    model = surf.model
    out = []
    for p in points:
        p = np.asarray(p, dtype=float)
        basis = model.tangent_basis(p)
        for _ in range(count):
            w = radius * (rng.standard_normal(len(basis)) @ basis)
            out.append(model.retract(p, w))
    return np.array(out)


def margin_histogram(margins: Sequence[float], bins: int = 10) -> dict:
    if not len(margins):
        return {"counts": [], "edges": []}
    counts, edges = np.histogram(np.asarray(margins, dtype=float), bins=bins)
    return {"counts": counts.tolist(), "edges": [float(e) for e in edges]}
