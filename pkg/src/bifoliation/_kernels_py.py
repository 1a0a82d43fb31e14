"""Pure-Python implementations of the hot numeric kernels.

These mirror ``_speedups.pyx`` line for line and are used when the compiled
extension is unavailable or ``BIFOLIATION_PURE_PYTHON=1`` is set.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

ABERTH_MAXITER = 500
NEWTON_MAXITER = 50
LINESEARCH_HALVINGS = 20


class RootFindingError(ArithmeticError):
    """Simultaneous root iteration did not converge."""


class InverseError(ArithmeticError):
    """Newton inversion of ``id - r v`` did not converge."""

    def __init__(self, msg, best_residual):
        super().__init__(msg)
        self.best_residual = best_residual


def charpoly(A) -> np.ndarray:
    """Coefficients of ``det(sI - A)``, highest degree first (Faddeev-LeVerrier)."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    scale = math.sqrt(float(np.sum(A * A)))
    coeffs = [1.0]
    if n == 0:
        return np.array(coeffs)
    if scale == 0.0:
        return np.array(coeffs + [0.0] * n)
    B = [[A[i][j] / scale for j in range(n)] for i in range(n)]
    Mk = [[0.0] * n for _ in range(n)]
    c = 1.0
    for k in range(1, n + 1):
        # Mk <- B Mk + c I
        new = [[0.0] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                acc = 0.0
                for l in range(n):
                    acc += B[i][l] * Mk[l][j]
                new[i][j] = acc
            new[i][i] += c
        Mk = new
        tr = 0.0
        for i in range(n):
            for l in range(n):
                tr += B[i][l] * Mk[l][i]
        c = -tr / k
        coeffs.append(c)
    return np.array([coeffs[k] * scale ** k for k in range(n + 1)])


def _horner(coeffs, z):
    p = 0j
    dp = 0j
    for a in coeffs:
        dp = dp * z + p
        p = p * z + a
    return p, dp


def _backward_ok(coeffs, z):
    p, _ = _horner(coeffs, z)
    az = abs(z)
    mag = 0.0
    for a in coeffs:
        mag = mag * az + abs(a)
    return abs(p) <= 1e-11 * mag


def aberth(coeffs, tol: float = 1e-14) -> np.ndarray:
    """All complex roots of a monic polynomial (Aberth-Ehrlich iteration).

    Trailing coefficients that vanish relative to the polynomial scale are
    deflated to exact zero roots.
    """
    coeffs = [complex(a) for a in coeffs]
    n = len(coeffs) - 1
    if n <= 0:
        return np.zeros(0, dtype=complex)
    # Cauchy-type bound fixes the scale for deflation and the start circle.
    bound = 0.0
    for k in range(1, n + 1):
        bound = max(bound, abs(coeffs[k]) ** (1.0 / k))
    zeros = 0
    while zeros < n and abs(coeffs[n - zeros]) <= 1e-14 * max(bound, 1e-300) ** (n - zeros):
        zeros += 1
    work = coeffs[:n + 1 - zeros]
    m = len(work) - 1
    roots = [0j] * zeros
    if m == 0:
        return np.array(roots, dtype=complex)
    rad = 0.0
    for k in range(1, m + 1):
        rad = max(rad, abs(work[k]) ** (1.0 / k))
    rad = max(rad, 1e-300)
    z = [rad * cmath.exp(1j * (2.0 * math.pi * k / m + 0.4)) for k in range(m)]
    for _ in range(ABERTH_MAXITER):
        worst = 0.0
        for i in range(m):
            p, dp = _horner(work, z[i])
            if p == 0:
                continue
            ratio = p / dp if dp != 0 else p
            s = 0j
            for j in range(m):
                if j != i:
                    d = z[i] - z[j]
                    if d != 0:
                        s += 1.0 / d
            den = 1.0 - ratio * s
            w = ratio / den if den != 0 else ratio
            z[i] -= w
            worst = max(worst, abs(w) / (rad + abs(z[i])))
        if worst < tol:
            break
    else:
        if not all(_backward_ok(work, zi) for zi in z):
            raise RootFindingError("Aberth iteration did not converge")
    return np.array(roots + z, dtype=complex)


def _hopf_stereo(x, y, z):
    D = x * x + y * y + z * z + 1.0
    vx = (x * x - y * y - z * z + 1.0) / D
    vy = (2.0 * x * y + 2.0 * z) / D
    vz = (2.0 * x * z - 2.0 * y) / D
    return vx, vy, vz, D


def _solve3(a, b):
    """Solve a 3x3 system by Cramer's rule; ``None`` if singular."""
    det = (a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
           - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
           + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]))
    if det == 0.0 or not math.isfinite(det):
        return None
    out = []
    for col in range(3):
        m = [row[:] for row in a]
        for i in range(3):
            m[i][col] = b[i]
        out.append((m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                    - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])) / det)
    return out


def _residual(px, py, pz, r, qx, qy, qz):
    vx, vy, vz, _ = _hopf_stereo(px, py, pz)
    return px - r * vx - qx, py - r * vy - qy, pz - r * vz - qz


def hopf_stereo_inverse(q, r, tol=1e-13):
    """Solve ``p - r v(p) = q`` for the stereographic Hopf field."""
    qx, qy, qz = float(q[0]), float(q[1]), float(q[2])
    vx, vy, vz, _ = _hopf_stereo(qx, qy, qz)
    px, py, pz = qx + r * vx, qy + r * vy, qz + r * vz
    g = _residual(px, py, pz, r, qx, qy, qz)
    res = math.sqrt(g[0] ** 2 + g[1] ** 2 + g[2] ** 2)
    scale = 1.0 + math.sqrt(qx * qx + qy * qy + qz * qz)
    for _ in range(NEWTON_MAXITER):
        if res <= tol * scale:
            return (px, py, pz), res
        x, y, z = px, py, pz
        vx, vy, vz, D = _hopf_stereo(x, y, z)
        nx, ny, nz = vx * D, vy * D, vz * D
        dn = [[2 * x, -2 * y, -2 * z], [2 * y, 2 * x, 2.0], [2 * z, -2.0, 2 * x]]
        nv = (nx, ny, nz)
        grad = (2 * x, 2 * y, 2 * z)
        jac = [[(1.0 if i == j else 0.0) - r * (dn[i][j] / D - nv[i] * grad[j] / (D * D))
                for j in range(3)] for i in range(3)]
        step = _solve3(jac, [-g[0], -g[1], -g[2]])
        if step is None:
            step = [-g[0], -g[1], -g[2]]
        lam = 1.0
        for _ in range(LINESEARCH_HALVINGS + 1):
            cx, cy, cz = px + lam * step[0], py + lam * step[1], pz + lam * step[2]
            gc = _residual(cx, cy, cz, r, qx, qy, qz)
            rc = math.sqrt(gc[0] ** 2 + gc[1] ** 2 + gc[2] ** 2)
            if rc < res:
                break
            lam *= 0.5
        else:
            break
        px, py, pz, g, res = cx, cy, cz, gc, rc
    if res <= 1e-12 * scale:
        return (px, py, pz), res
    raise InverseError("Newton inversion of id - r v did not converge", res)


def hopf_stereo_orbit(q0, r, m):
    """``m`` steps of ``q -> q + 2 r v((id - r v)^{-1} q)``; returns points and feet."""
    pts = np.empty((m + 1, 3))
    feet = np.empty((m, 3))
    pts[0] = q0
    qx, qy, qz = float(q0[0]), float(q0[1]), float(q0[2])
    for k in range(m):
        (px, py, pz), _ = hopf_stereo_inverse((qx, qy, qz), r)
        vx, vy, vz, _ = _hopf_stereo(px, py, pz)
        feet[k] = (px, py, pz)
        qx, qy, qz = qx + 2.0 * r * vx, qy + 2.0 * r * vy, qz + 2.0 * r * vz
        pts[k + 1] = (qx, qy, qz)
    return pts, feet
