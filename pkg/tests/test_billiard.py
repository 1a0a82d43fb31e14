import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import solve_ivp

from bifoliation.analysis import char_poly, sample_points
from bifoliation.billiard import (
    BACKWARD, FORWARD, OutsideExterior, analytic_det_B, billiard_step, billiard_step_general,
    billiard_step_horosphere, classify, df_matrix, horosphere_radius, injectivity_probe,
    inverse_id_minus_rv, iterate_orbit, jacobi_variation, jacobian_det_B, locate_leaf, orbit_csv,
    read_orbit_csv, vdelta_step,
)
from bifoliation.fields import constant, hopf, hopf_perturbed, hopf_stereo, u_eps, w_eps
from bifoliation.spaceform import SpaceForm
from bifoliation.surface import GeodesicSphere, Horosphere, TiltedHyperplane

from oracles import euclidean_hopf_leaf

S3 = GeodesicSphere(SpaceForm(0, 4), 1.0)
S3_IN_S4 = GeodesicSphere(SpaceForm(1, 4), 0.9)
HORO4 = Horosphere(SpaceForm(-1, 4))
TILT = TiltedHyperplane(SpaceForm(-4, 4), math.pi / 6)
C = constant()


def _exterior(surf, count, seed, dmax=1.2):
    return surf.random_exterior(np.random.default_rng(seed), count, 0.05, dmax)


# -- the (v, delta)-flow and the flat inverse --------------------------------------------

def test_vdelta_examples():
    p = np.array([0.3, -0.4, 1.0])
    np.testing.assert_allclose(vdelta_step(C, 2.0, p), p + [2.0, 0, 0], atol=1e-15)
    np.testing.assert_array_equal(vdelta_step(hopf_stereo(), 0.0, p), p)
    with pytest.raises(ValueError):
        vdelta_step(C, -1.0, p)


def test_vdelta_approximates_integral_curve():
    v = hopf_stereo()
    p0 = np.array([0.2, 0.5, -0.3])
    p = p0.copy()
    for _ in range(1000):
        p = vdelta_step(v, 1e-3, p)
    sol = solve_ivp(lambda _t, y: v(y), (0, 1.0), p0, rtol=1e-11, atol=1e-12)
    assert np.linalg.norm(p - sol.y[:, -1]) < 1e-2


def test_inverse_examples():
    r = 0.8
    np.testing.assert_allclose(inverse_id_minus_rv(hopf_stereo(), r, [0, 1, r]), [0, 1, 0],
                               atol=1e-12)
    np.testing.assert_allclose(inverse_id_minus_rv(hopf_stereo(), r, [0.7, 0, 0]), [1.5, 0, 0],
                               atol=1e-12)
    q = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(inverse_id_minus_rv(C, r, q), q + [r, 0, 0], atol=1e-14)
    with pytest.raises(ValueError):
        inverse_id_minus_rv(C, 1.0, q)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(0.05, 0.95))
def test_inverse_residual(x, y, z, r):
    q = np.array([x, y, z])
    for fld in (hopf_stereo(), u_eps(0.3)):
        p = inverse_id_minus_rv(fld, r, q)
        assert np.linalg.norm(p - r * fld(p) - q) < 1e-11 * (1 + np.linalg.norm(q))


def test_horosphere_step_examples():
    h = 0.6
    assert horosphere_radius(h) == pytest.approx(0.8)
    np.testing.assert_allclose(billiard_step_horosphere(hopf_stereo(), h, [0.4, 0, 0]),
                               [2.0, 0, 0], atol=1e-12)
    np.testing.assert_allclose(billiard_step_horosphere(hopf_stereo(), h, [0, 1, 0.8]),
                               [0, 1, -0.8], atol=1e-12)
    q = np.array([0.1, 0.2, 0.3])
    np.testing.assert_allclose(billiard_step_horosphere(C, h, q), q + [1.6, 0, 0], atol=1e-14)
    with pytest.raises(OutsideExterior):
        billiard_step_horosphere(C, 1.2, q)


# -- leaf location --------------------------------------------------------------------

def test_locate_leaf_horosphere_example():
    h = 0.6
    r = math.sqrt(1 - h * h)
    leaf = locate_leaf(hopf_stereo(), HORO4, np.array([h, 0, 1, r]))
    np.testing.assert_allclose(leaf.p, [0, 1, 0], atol=1e-12)
    assert leaf.t == pytest.approx(math.atanh(r), abs=1e-14)


def test_locate_leaf_sphere_brute_force():
    for q in _exterior(S3, 10, 21):
        leaf = locate_leaf(hopf(), S3, q)
        p_ref, t_ref, res = euclidean_hopf_leaf(q)
        assert res < 1e-9
        np.testing.assert_allclose(leaf.p, p_ref, atol=1e-8)
        assert leaf.t == pytest.approx(t_ref, abs=1e-10)
        assert np.dot(q, q) == pytest.approx(1 + leaf.t ** 2, abs=1e-12)
    # the example from the point sqrt(2) e1
    q = math.sqrt(2) * np.array([1.0, 0, 0, 0])
    leaf = locate_leaf(hopf(), S3, q)
    np.testing.assert_allclose(leaf.p, np.array([1.0, 1.0, 0, 0]) / math.sqrt(2), atol=1e-10)
    assert leaf.t == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("fld,surf", [(hopf(), S3), (hopf_perturbed(0.1), S3), (hopf(), S3_IN_S4),
                                      (hopf_stereo(), HORO4), (u_eps(0.1), HORO4),
                                      (w_eps(0.1), TILT)])
def test_leaf_sign_flip(fld, surf):
    for q in _exterior(surf, 8, 4):
        back = locate_leaf(fld, surf, q, BACKWARD)
        np.testing.assert_allclose(back.point(fld, surf), q, atol=1e-9)
        fwd = locate_leaf(fld, surf, billiard_step(fld, surf, q), FORWARD)
        np.testing.assert_allclose(fwd.p, back.p, atol=1e-8)
        assert fwd.t == pytest.approx(back.t, abs=1e-10)


def test_locate_leaf_rejects_interior():
    with pytest.raises(OutsideExterior):
        locate_leaf(hopf(), S3, np.array([0.5, 0, 0, 0]))
    with pytest.raises(OutsideExterior):
        locate_leaf(hopf_stereo(), HORO4, np.array([1.5, 0, 0, 0]))


# -- the billiard map -------------------------------------------------------------------

def test_fast_path_matches_generic():
    for fld in (hopf_stereo(), u_eps(0.1)):
        for q in _exterior(HORO4, 30, 8):
            np.testing.assert_allclose(billiard_step(fld, HORO4, q),
                                       billiard_step_general(fld, HORO4, q), atol=1e-9)


@pytest.mark.parametrize("fld,surf", [(hopf(), S3), (hopf(), S3_IN_S4), (hopf_stereo(), HORO4),
                                      (w_eps(0.1), TILT)])
def test_involution(fld, surf):
    for q in _exterior(surf, 15, 10):
        b = billiard_step(fld, surf, q)
        assert surf.exterior_contains(b)
        np.testing.assert_allclose(billiard_step(fld, surf, b, inverse=True), q, atol=1e-9)
        assert surf.leaf_coordinates(b)[0].t == pytest.approx(surf.leaf_coordinates(q)[0].t,
                                                              abs=1e-10)


def test_sphere_hopf_preserves_norm():
    for q in _exterior(S3, 30, 12):
        assert np.linalg.norm(billiard_step(hopf(), S3, q)) == pytest.approx(np.linalg.norm(q),
                                                                            abs=1e-12)


# -- determinants --------------------------------------------------------------------------

@pytest.mark.parametrize("fld,surf", [(hopf(), S3), (hopf_perturbed(0.2), S3), (hopf(), S3_IN_S4),
                                      (hopf_stereo(), HORO4), (w_eps(0.1), TILT)])
def test_block_determinant_expansion(fld, surf):
    for p in sample_points(surf, 10, seed=2):
        for s in (0.3, -0.7, 1.1):
            D = df_matrix(fld, surf, p, s)
            assert D.det == pytest.approx(D.det_formula(), rel=1e-10, abs=1e-12)


def test_df_matrix_rejects_zero_time():
    with pytest.raises(ValueError):
        df_matrix(hopf(), S3, np.array([1.0, 0, 0, 0]), 0.0)


def test_hopf_determinant_is_one():
    for q in _exterior(S3, 20, 14):
        assert jacobian_det_B(hopf(), S3, q) == pytest.approx(1.0, abs=1e-12)
        assert jacobian_det_B(hopf(), S3, q, mode="fd") == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("fld,surf", [(hopf_stereo(), HORO4), (hopf_perturbed(0.2), S3),
                                      (hopf(), S3_IN_S4), (w_eps(0.1), TILT)])
def test_analytic_matches_finite_difference(fld, surf):
    for q in _exterior(surf, 6, 16, dmax=0.8):
        a = jacobian_det_B(fld, surf, q)
        f = jacobian_det_B(fld, surf, q, mode="fd")
        assert f == pytest.approx(a, rel=1e-4)


def test_hopf_stereo_determinant_not_one():
    q = np.array([0.6, 0.8, 0.3, 0.0])
    leaf = locate_leaf(hopf_stereo(), HORO4, q)
    assert abs(leaf.p[0]) > 0.1
    assert abs(jacobian_det_B(hopf_stereo(), HORO4, q) - 1.0) > 1e-3


def test_odd_parity_gives_unit_determinant():
    for p in sample_points(S3, 10):
        P = char_poly(hopf(), S3, p).p
        for t in (0.4, 1.3):
            assert analytic_det_B(hopf(), S3, p, t) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(P[1::2], 0.0, atol=1e-12)


def test_injectivity_probe():
    for fld, surf in [(hopf(), S3), (hopf_stereo(), HORO4), (w_eps(0.1), TILT)]:
        rep = injectivity_probe(fld, surf, sample_points(surf, 40), 0.7)
        assert rep.passed, rep


def test_jacobi_variation_matches_closed_form():
    for fld, surf in [(hopf(), S3), (hopf(), S3_IN_S4), (hopf_stereo(), HORO4), (w_eps(0.1), TILT)]:
        for p in sample_points(surf, 3, seed=9):
            for k in range(1, surf.n):
                J, fd = jacobi_variation(fld, surf, p, k, 0.8)
                np.testing.assert_allclose(J, fd, atol=1e-6)


# -- orbits -------------------------------------------------------------------------------

def _h_start(h, chart):
    return np.concatenate([[h], chart])


def test_orbit_drift():
    orb = iterate_orbit(hopf_stereo(), HORO4, _h_start(0.6, [0.25, 0, 0]), 100)
    assert orb.classification.kind == "unbounded"
    assert orb.classification.drift == pytest.approx(1.6, abs=1e-8)
    np.testing.assert_allclose(orb.chart[:, 0], 0.25 + 1.6 * np.arange(101), atol=1e-8)


def test_orbit_period_eight():
    r = math.tan(math.pi / 8)
    h = math.sqrt(1 - r * r)
    orb = iterate_orbit(hopf_stereo(), HORO4, _h_start(h, [0, 1, r]), 20)
    assert orb.classification.kind == "periodic"
    assert orb.classification.period == 8


def test_orbit_irrational_rotation():
    h = 0.5
    orb = iterate_orbit(hopf_stereo(), HORO4, _h_start(h, [0, 1, math.sqrt(0.75)]), 10_000)
    cl = orb.classification
    assert cl.kind == "bounded-nonperiodic"
    assert cl.rotation_number == pytest.approx(math.atan(math.sqrt(0.75)) / math.pi, abs=1e-8)


def test_orbit_rejects_empty_request():
    with pytest.raises(ValueError):
        iterate_orbit(hopf_stereo(), HORO4, _h_start(0.6, [0, 0, 0]), 0)


def test_generic_orbit_matches_fast_kernel():
    q = _h_start(0.7, [0.3, -0.2, 0.5])
    fast = iterate_orbit(hopf_stereo(), HORO4, q, 15)
    slow = iterate_orbit(hopf_stereo(), Horosphere(SpaceForm(-1.0000000000001, 4)), q, 15)
    np.testing.assert_allclose(fast.points, slow.points, atol=1e-9)


def test_classify_short_orbit_undetermined():
    orb = iterate_orbit(hopf(), S3, _exterior(S3, 1, 3)[0], 3)
    assert orb.classification.kind in ("undetermined", "periodic")
    assert len(orb.points) == 4


def test_csv_round_trip():
    orb = iterate_orbit(hopf_stereo(), HORO4, _h_start(0.6, [0.1, 0.2, 0.3]), 12)
    text = orbit_csv(orb)
    lines = text.splitlines()
    assert lines[0] == "step,x0,x1,x2,x3,leaf_t,chart_norm"
    assert lines[1].split(",")[5] == ""
    back = read_orbit_csv(text, HORO4)
    np.testing.assert_array_equal(back.points, orb.points)
    assert [lf.t for lf in back.leaves] == [lf.t for lf in orb.leaves]
    assert classify(back).kind == classify(orb).kind
