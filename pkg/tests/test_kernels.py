import os
import subprocess
import sys

import numpy as np
import pytest

from bifoliation import _kernels_py as pure
from bifoliation import kernels

speedups = pytest.importorskip("bifoliation._speedups")


def test_backend_selected():
    forced = os.environ.get("BIFOLIATION_PURE_PYTHON", "") in ("1", "true", "yes")
    assert kernels.BACKEND == ("python" if forced else "cython")


def test_pure_backend_forced_by_environment():
    env = dict(os.environ, BIFOLIATION_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from bifoliation import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_charpoly_parity():
    rng = np.random.default_rng(0)
    for n in range(1, 9):
        M = rng.standard_normal((n, n))
        a, b = pure.charpoly(M), speedups.charpoly(M)
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)
        np.testing.assert_allclose(a, np.poly(M), rtol=1e-9, atol=1e-9)


def test_aberth_parity():
    rng = np.random.default_rng(1)
    for n in range(1, 9):
        c = pure.charpoly(rng.standard_normal((n, n)))
        a = np.sort_complex(np.asarray(pure.aberth(c)))
        b = np.sort_complex(np.asarray(speedups.aberth(c)))
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_aberth_exact_zero_roots():
    roots = np.asarray(pure.aberth(np.array([1.0, 0.0, 1.0, 0.0])))
    assert np.min(np.abs(roots)) == 0.0


def test_hopf_stereo_inverse_parity():
    rng = np.random.default_rng(2)
    for _ in range(50):
        q = rng.uniform(-3, 3, 3)
        r = float(rng.uniform(0.05, 0.95))
        pa, ra = pure.hopf_stereo_inverse(q, r)
        pb, rb = speedups.hopf_stereo_inverse(q, r)
        np.testing.assert_allclose(pa, pb, atol=1e-12)
        assert ra < 1e-12 and rb < 1e-12


def test_orbit_parity():
    pa, fa = pure.hopf_stereo_orbit(np.array([0.3, -0.2, 0.4]), 0.7, 200)
    pb, fb = speedups.hopf_stereo_orbit(np.array([0.3, -0.2, 0.4]), 0.7, 200)
    np.testing.assert_allclose(np.asarray(pa), np.asarray(pb), atol=1e-10)
    np.testing.assert_allclose(np.asarray(fa), np.asarray(fb), atol=1e-10)


def test_errors_shared():
    assert speedups.RootFindingError is pure.RootFindingError
    assert speedups.InverseError is pure.InverseError
