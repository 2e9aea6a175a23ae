import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heiscurves.errors import ConfigError, ProfileDomainError
from heiscurves.profile import (
    ArclengthMap,
    Condition,
    CurveProfile,
    arclength_F,
    arclength_F_inv,
    arclength_increment,
    check_condition,
    check_quadratic_example,
    profile_from_spec,
    r_coeff,
    r_prime,
)

CATALOG = [
    CurveProfile.constant(2.0),
    CurveProfile.affine(-1.5, 0.3),
    CurveProfile.quadratic(-1.0, -2.0, 5.0),
    CurveProfile.exponential(0.7, -1.3, 0.2),
    CurveProfile.arctan(1.2, 2.0, -0.1),
]


@pytest.mark.parametrize("prof", CATALOG, ids=lambda p: p.kind)
def test_derivatives_match_finite_differences(prof):
    s = np.linspace(-1.5, 1.5, 41)
    eps = 1e-5
    for f, df in ((prof.H, prof.dH), (prof.dH, prof.d2H), (prof.d2H, prof.d3H)):
        fd = (f(s + eps) - f(s - eps)) / (2 * eps)
        assert np.allclose(fd, df(s), rtol=1e-7, atol=1e-7)


@pytest.mark.parametrize("prof", CATALOG, ids=lambda p: p.kind)
def test_r_prime_is_derivative_of_r(prof):
    s = np.linspace(-1.0, 1.0, 21)
    eps = 1e-5
    fd = (r_coeff(prof, s + eps) - r_coeff(prof, s - eps)) / (2 * eps)
    assert np.allclose(fd, r_prime(prof, s), rtol=1e-6, atol=1e-7)


def test_tabulated_reproduces_cubic():
    # a cubic is reproduced exactly by Hermite data; d3H is interpolated linearly
    s = np.linspace(-1, 1, 9)
    tab = CurveProfile.tabulated(s, s**3, 3 * s**2, 6 * s, 6 * np.ones_like(s))
    q = np.linspace(-1, 1, 37)
    assert np.allclose(tab.H(q), q**3, atol=1e-14)
    assert np.allclose(tab.dH(q), 3 * q**2, atol=1e-14)
    assert np.allclose(tab.d3H(q), 6.0)
    with pytest.raises(ProfileDomainError):
        tab.H(1.5)


def test_arclength_frozen_values():
    # reference values from 30-digit mpmath quadrature
    assert arclength_F(CurveProfile.quadratic(1, 0, 0), 1.0) == pytest.approx(1.4789428575445974, rel=1e-13)
    assert arclength_F(CurveProfile.exponential(1, -1, 0), 2.0) == pytest.approx(2.2214186659401396, rel=1e-13)
    at = CurveProfile.arctan(1, 1, 0)
    assert arclength_increment(at, -1.0, 3.0, order=12) == pytest.approx(4.619989166500108, rel=1e-6)
    assert arclength_F(at, 3.0, s0=-1.0) == pytest.approx(4.619989166500108, rel=1e-13)


def test_arclength_closed_forms():
    aff = CurveProfile.affine(2.0, 1.0)
    assert arclength_F(aff, 3.0) == pytest.approx(3 * math.sqrt(5), rel=1e-14)
    assert arclength_increment(aff, -1.0, 2.0) == pytest.approx(3 * math.sqrt(5), rel=1e-14)
    # H = s^2: F(s) = s sqrt(1 + 4 s^2)/2 + asinh(2 s)/4
    q = CurveProfile.quadratic(1, 0, 0)
    for s in (-2.0, 0.3, 1.7):
        exact = s * math.sqrt(1 + 4 * s * s) / 2 + math.asinh(2 * s) / 4
        assert arclength_F(q, s) == pytest.approx(exact, rel=1e-13)


@given(st.floats(-3, 3))
def test_arclength_inverse_roundtrip(s):
    prof = CurveProfile.quadratic(1, 0, 0)
    v = arclength_F(prof, s)
    assert arclength_F_inv(prof, v) == pytest.approx(s, abs=1e-11)


def test_arclength_map_matches_scalar_version():
    prof = CurveProfile.exponential(1, -1, 0)
    amap = ArclengthMap(prof, -1.0, 3.0, s0=0.0)
    s = np.linspace(-1, 3, 17)
    ref = np.array([arclength_F(prof, v) for v in s])
    assert np.allclose(amap.F(s), ref, atol=1e-13)
    assert np.allclose(amap.F_inv(ref), s, atol=1e-12)


def test_affine_profile_second_derivative_conditions_hold_with_zero_margin():
    prof = CurveProfile.affine(-2.0, 1.0)
    for cid in (Condition.SUPERHARM, Condition.COMPARISON_Y, Condition.SIGN_HpHpp,
                Condition.SIGN_Hpp_NONNEG, Condition.THREE_SPHERES_T):
        v = check_condition(prof, cid, (-1, 1))
        assert v.holds and v.margin == 0.0
    assert check_condition(prof, Condition.CACCIOPPOLI_MU, (-1, 1)).value == 0.0
    assert check_condition(prof, Condition.SIGN_Hp_NONPOS, (-1, 1)).holds


def test_mu_for_square_profile():
    # mu(s) = 4 s^2/(1 + 4 s^2) is maximal at |s| = 10 on [-10, 10]
    v = check_condition(CurveProfile.quadratic(1, 0, 0), Condition.CACCIOPPOLI_MU, (-10, 10))
    assert v.value == pytest.approx(400 / 401, rel=1e-14)
    assert v.holds and abs(v.witness) == 10.0


def test_strong_max_needs_c():
    prof = CurveProfile.quadratic(1, 0, 0)
    with pytest.raises(ValueError):
        check_condition(prof, Condition.STRONG_MAX, (0, 1))
    # r(s) = 4 s/(1 + 4 s^2) peaks at s = 1/2 with value 1; the bound is strict
    v = check_condition(prof, Condition.STRONG_MAX, (0, 1), C=1.0)
    assert v.value == pytest.approx(1.0, rel=1e-12) and v.witness == 0.5
    assert not v.holds
    assert check_condition(prof, Condition.STRONG_MAX, (0, 1), C=1.5).holds


def test_quadratic_example_region():
    assert check_quadratic_example(-1, -2, 5, 0.0).holds
    assert check_quadratic_example(-1, -2, 5, 0.0).margin == 1.0
    assert not check_quadratic_example(1, 0, 0, 0.0).holds
    assert not check_quadratic_example(-1, 0, 0, 0.0).holds


def test_condition_ids_validated():
    with pytest.raises(ValueError):
        check_condition(CATALOG[0], "NOPE", (0, 1))


def test_profile_spec_roundtrip_and_errors():
    for prof in CATALOG:
        again = profile_from_spec(prof.to_spec())
        s = np.linspace(-1, 1, 5)
        assert np.array_equal(again.H(s), prof.H(s))
    with pytest.raises(ConfigError, match="profile.kind"):
        profile_from_spec({"kind": "cubic"})
    with pytest.raises(ConfigError, match="profile.a"):
        profile_from_spec({"kind": "affine", "a": "one"})


def test_validity_window_enforced():
    prof = profile_from_spec({"kind": "quadratic", "a": 1, "b": 0, "c": 0, "validity": [-1, 1]})
    assert prof.contains(-0.5, 0.5) and not prof.contains(-2, 0)
    with pytest.raises(ProfileDomainError):
        prof.dH(np.array([0.0, 1.5]))
