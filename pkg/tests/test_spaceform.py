import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bifoliation.spaceform import (
    NoRootError, PoleError, SpaceForm, c_kappa, cot_kappa, geodesic_eval, geodesic_velocity,
    horizon, jacobi_eval, parallel_transport, s_kappa, t_o_root,
)

from oracles import model_inner, ode_geodesic

kappas = st.sampled_from([-2.0, -1.0, -0.3, -1e-9, 0.0, 1e-9, 0.5, 1.0, 4.0])


# -- trigonometry ---------------------------------------------------------------------

def test_s_kappa_examples():
    assert s_kappa(0, 2.5) == 2.5
    assert s_kappa(1, math.pi / 2) == pytest.approx(1.0, abs=1e-15)
    assert s_kappa(-1, 1) == pytest.approx(math.sinh(1), rel=1e-15)


def test_c_and_cot_examples():
    for t in (0.3, 1.0, 7.0):
        assert c_kappa(0, t) == 1.0
    assert cot_kappa(0, 2) == 0.5
    assert cot_kappa(-1, 1) == pytest.approx(1 / math.tanh(1), rel=1e-14)


def test_cot_pole_raises():
    with pytest.raises(PoleError):
        cot_kappa(1.0, 0.0)
    with pytest.raises(PoleError):
        cot_kappa(0.0, 0.0)


def test_horizon_examples():
    assert horizon(0) == math.inf
    assert horizon(-3) == math.inf
    assert horizon(1) == math.pi
    assert horizon(4) == pytest.approx(math.pi / 2)


def test_continuity_across_zero_curvature():
    t = 1.7
    for k in (1e-12, -1e-12):
        assert s_kappa(k, t) == pytest.approx(t, rel=1e-11)
        assert c_kappa(k, t) == pytest.approx(1.0, abs=1e-11)


@given(kappas, st.floats(-3, 3))
def test_parity_and_pythagoras(kappa, t):
    if kappa > 0:
        t = t * 0.9 * math.pi / math.sqrt(kappa) / 3
    assert s_kappa(kappa, -t) == pytest.approx(-s_kappa(kappa, t), abs=1e-15)
    assert c_kappa(kappa, -t) == c_kappa(kappa, t)
    assert c_kappa(kappa, t) ** 2 + kappa * s_kappa(kappa, t) ** 2 == pytest.approx(1.0, abs=1e-12)
    if abs(t) > 1e-6:
        assert cot_kappa(kappa, -t) == pytest.approx(-cot_kappa(kappa, t), rel=1e-14)


def test_derivative_relation():
    for kappa in (-1.5, 0.0, 2.0):
        for t in (0.2, 0.9):
            h = 1e-6
            d = (s_kappa(kappa, t + h) - s_kappa(kappa, t - h)) / (2 * h)
            assert d == pytest.approx(c_kappa(kappa, t), abs=1e-9)


# -- t_o ----------------------------------------------------------------------------

def test_t_o_examples():
    assert t_o_root(0, 2) == pytest.approx(0.5, abs=1e-15)
    assert t_o_root(1, 1) == pytest.approx(math.pi / 4, abs=1e-15)
    assert t_o_root(-1, 2) == pytest.approx(0.5493061443340549, abs=1e-15)


def test_t_o_no_root():
    with pytest.raises(NoRootError):
        t_o_root(-1, 0.5)
    with pytest.raises(NoRootError):
        t_o_root(-4, 2.0)


@given(kappas, st.floats(-5, 5))
def test_t_o_residual(kappa, lam):
    if lam * lam + kappa <= 1e-6:
        return
    t = t_o_root(kappa, lam)
    assert 0 < t < horizon(kappa)
    assert abs(c_kappa(kappa, t) - abs(lam) * s_kappa(kappa, t)) < 1e-12


# -- geodesics and transport ---------------------------------------------------------

def _random_unit(sf, x, rng):
    w = rng.standard_normal(len(x))
    if sf.model == "sphere":
        w -= np.dot(w, x) / np.dot(x, x) * x
    return w / sf.norm(x, w)


def _random_point(sf, rng):
    if sf.model == "sphere":
        g = rng.standard_normal(sf.ambient_len)
        return sf.radius * g / np.linalg.norm(g)
    x = rng.standard_normal(sf.dim)
    if sf.model == "half-space":
        x[0] = math.exp(rng.uniform(-1, 1))
    return x


def test_geodesic_examples():
    sf = SpaceForm(0, 3)
    p, w = np.array([1.0, 2, 3]), np.array([0.0, 0.6, 0.8])
    np.testing.assert_allclose(geodesic_eval(sf, p, w, 2.0), p + 2 * w, atol=1e-15)
    sf = SpaceForm(1, 3)
    p, w = np.array([0.0, 0, 0, 1.0]), np.array([1.0, 0, 0, 0])
    np.testing.assert_allclose(geodesic_eval(sf, p, w, 0.7), math.cos(0.7) * p + math.sin(0.7) * w,
                               atol=1e-15)


def test_half_space_horizontal_geodesic():
    # (sech t, p' + tanh(t) w), checked against the ODE oracle
    sf = SpaceForm(-1, 4)
    pp = np.array([0.3, -0.2, 0.5])
    w = np.array([0.0, 0.6, 0.8])
    x = np.concatenate([[1.0], pp])
    u = np.concatenate([[0.0], w])
    for t in (0.4, 1.3, -0.8):
        closed = np.concatenate([[1 / math.cosh(t)], pp + math.tanh(t) * w])
        np.testing.assert_allclose(geodesic_eval(sf, x, u, t), closed, atol=1e-14)
    ode, _, _ = ode_geodesic(-1, "half-space", x, u, 1.3)
    np.testing.assert_allclose(geodesic_eval(sf, x, u, 1.3), ode, atol=1e-9)


@pytest.mark.parametrize("kappa", [-2.0, -1.0, 0.0, 1.0, 0.25])
def test_geodesic_and_transport_match_ode(kappa):
    rng = np.random.default_rng(7)
    sf = SpaceForm(kappa, 3)
    for _ in range(4):
        x = _random_point(sf, rng)
        u = _random_unit(sf, x, rng)
        w = _random_unit(sf, x, rng)
        t = 0.9
        xo, uo, wo = ode_geodesic(kappa, sf.model, x, u, t, w)
        np.testing.assert_allclose(geodesic_eval(sf, x, u, t), xo, atol=1e-8)
        np.testing.assert_allclose(geodesic_velocity(sf, x, u, t), uo, atol=1e-8)
        np.testing.assert_allclose(parallel_transport(sf, x, u, t, w), wo, atol=1e-8)


@pytest.mark.parametrize("kappa", [-1.0, 0.0, 1.0])
def test_unit_speed_and_isometry(kappa):
    rng = np.random.default_rng(11)
    sf = SpaceForm(kappa, 4)
    for _ in range(20):
        x = _random_point(sf, rng)
        u = _random_unit(sf, x, rng)
        a, b = _random_unit(sf, x, rng), _random_unit(sf, x, rng)
        t = rng.uniform(-2, 2)
        y = geodesic_eval(sf, x, u, t)
        assert sf.norm(y, geodesic_velocity(sf, x, u, t)) == pytest.approx(1.0, abs=1e-10)
        ta, tb = parallel_transport(sf, x, u, t, a), parallel_transport(sf, x, u, t, b)
        before = model_inner(kappa, sf.model, x, a, b) if sf.model != "sphere" else np.dot(a, b)
        after = model_inner(kappa, sf.model, y, ta, tb) if sf.model != "sphere" else np.dot(ta, tb)
        assert after == pytest.approx(before, abs=1e-10)
        np.testing.assert_allclose(parallel_transport(sf, x, u, t, u),
                                   geodesic_velocity(sf, x, u, t), atol=1e-12)


def test_half_space_transport_frame_orthonormal():
    sf = SpaceForm(-1, 4)
    x = np.array([1.0, 0, 0, 0])
    u = np.array([0.0, 1, 0, 0])
    frame = np.eye(4)
    moved = [parallel_transport(sf, x, u, 1.7, e) for e in frame]
    y = geodesic_eval(sf, x, u, 1.7)
    G = np.array([[model_inner(-1, "half-space", y, a, b) for b in moved] for a in moved])
    np.testing.assert_allclose(G, np.eye(4), atol=1e-10)
    assert np.linalg.det(np.array(moved) / y[0]) > 0


def test_non_unit_velocity_rejected():
    sf = SpaceForm(0, 3)
    with pytest.raises(ValueError):
        geodesic_eval(sf, np.zeros(3), np.array([1.0, 1.0, 0.0]), 1.0)
    sf = SpaceForm(1, 3)
    with pytest.raises(ValueError):
        geodesic_eval(sf, np.array([0, 0, 0, 1.0]), np.array([0, 0, 0.6, 0.8]), 1.0)


# -- Jacobi fields ---------------------------------------------------------------------

def test_jacobi_examples():
    sf = SpaceForm(-1, 3)
    x, u = np.array([1.0, 0.2, 0]), np.array([0.0, 1.0, 0])
    np.testing.assert_allclose(jacobi_eval(sf, x, u, 1.0, np.zeros(3), np.zeros(3), 0.8),
                               geodesic_velocity(sf, x, u, 0.8), atol=1e-14)
    sf = SpaceForm(0, 3)
    x, u, w = np.zeros(3), np.array([1.0, 0, 0]), np.array([0.0, 0.3, 0.4])
    np.testing.assert_allclose(jacobi_eval(sf, x, u, 0.0, np.zeros(3), w, 2.5), 2.5 * w, atol=1e-15)


def test_jacobi_rejects_tangential_data():
    sf = SpaceForm(0, 3)
    with pytest.raises(ValueError):
        jacobi_eval(sf, np.zeros(3), np.array([1.0, 0, 0]), 0.0, np.array([1.0, 0, 0]),
                    np.zeros(3), 1.0)


@pytest.mark.parametrize("kappa", [-1.0, 0.0, 1.0])
def test_jacobi_equation(kappa):
    # D^2 J/ds^2 + kappa J = 0 for the normal part, in the transported frame
    rng = np.random.default_rng(3)
    sf = SpaceForm(kappa, 3)
    x = _random_point(sf, rng)
    u = _random_unit(sf, x, rng)
    a = _random_unit(sf, x, rng)
    b = _random_unit(sf, x, rng)
    U = a - model_inner(kappa, sf.model, x, a, u) * u
    W = b - model_inner(kappa, sf.model, x, b, u) * u
    h = 1e-3
    s = 0.6

    def coeff(t):
        # components of J(t) along the transports of U and W
        J = jacobi_eval(sf, x, u, 0.0, U, W, t)
        y = geodesic_eval(sf, x, u, t)
        TU = parallel_transport(sf, x, u, t, U)
        TW = parallel_transport(sf, x, u, t, W)
        G = np.array([[model_inner(kappa, sf.model, y, p_, q_) for q_ in (TU, TW)] for p_ in (TU, TW)])
        rhs = np.array([model_inner(kappa, sf.model, y, J, v_) for v_ in (TU, TW)])
        return np.linalg.solve(G, rhs)

    second = (coeff(s + h) - 2 * coeff(s) + coeff(s - h)) / (h * h)
    np.testing.assert_allclose(second + kappa * coeff(s), 0.0, atol=1e-4)


def test_spaceform_validation():
    with pytest.raises(ValueError):
        SpaceForm(0.0, 1)
    with pytest.raises(ValueError):
        SpaceForm(1.0, 3, model="half-space")
    assert SpaceForm(-2.0, 3).model == "half-space"
    assert SpaceForm(0.0, 3).model == "euclidean"
    assert SpaceForm(3.0, 3).model == "sphere"
