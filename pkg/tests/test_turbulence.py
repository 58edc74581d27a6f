import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aerialqc.errors import AltitudeOutOfRange, InputError, NonPositiveWavenumber, ZeroDistance
from aerialqc.turbulence import (
    InertialRangeWarning,
    TurbulenceProfile,
    cn2,
    derived,
    fresnel,
    kolmogorov_spectrum,
    rytov_sq,
)

DAY = TurbulenceProfile.slcd_day()
NIGHT = TurbulenceProfile.slcd_night_variant()


@pytest.mark.parametrize(
    "profile,h,expected",
    [
        (DAY, 10.0, 1.70e-14),
        (DAY, 100.0, 3.13e-15),
        (DAY, 500.0, 1.30e-15),
        (DAY, 1000.0, 8.87e-7 / 1e9),
        (DAY, 10000.0, 2.00e-16 / 100.0),
        (NIGHT, 10.0, 0.0),
        (NIGHT, 100.0, 3.1255590829772202e-15),
        (NIGHT, 500.0, 1.30e-15),
    ],
)
def test_slcd_branch_values(profile, h, expected):
    assert cn2(profile, h) == pytest.approx(expected, rel=1e-12, abs=0)


def test_night_variant_rough_magnitude():
    assert cn2(NIGHT, 100.0) == pytest.approx(3.12e-15, rel=5e-3)


@pytest.mark.parametrize(
    "profile,h,expected",
    [
        (DAY, 18.5, 1.70e-14),
        (DAY, 240.0, 3.13e-13 / 240.0),
        (DAY, 880.0, 1.30e-15),
        (DAY, 7200.0, 8.87e-7 / 7200.0**3),
        (DAY, 20000.0, 2.00e-16 / 20000.0**0.5),
        (NIGHT, 19.0, 0.0),
        (NIGHT, 230.0, 4.008e-13 / 230.0**1.054),
    ],
)
def test_boundary_belongs_to_lower_branch(profile, h, expected):
    assert cn2(profile, h) == pytest.approx(expected, rel=1e-12, abs=0)


@pytest.mark.parametrize("h", [0.0, -5.0, 20000.0001, float("nan")])
def test_out_of_range(h):
    with pytest.raises(AltitudeOutOfRange):
        cn2(DAY, h)


def test_vectorised_matches_scalar():
    hs = np.array([5.0, 18.5, 30.0, 240.0, 241.0, 5000.0, 19999.0])
    vec = cn2(DAY, hs)
    assert vec.shape == hs.shape
    assert list(vec) == [cn2(DAY, float(h)) for h in hs]


def test_hvb_literature_form():
    prof = TurbulenceProfile.hvb(21.0)
    assert cn2(prof, 0.0) == pytest.approx(1.7e-14 + 2.7e-16, rel=1e-12)
    h = 10000.0
    expected = 0.00594 * (21 / 27) ** 2 * (0.1) ** 10 * math.exp(-10) + 2.7e-16 * math.exp(-h / 1500) + 1.7e-14 * math.exp(-100)
    assert cn2(prof, h) == pytest.approx(expected, rel=1e-12)


def test_hvb_grows_with_wind_speed():
    h = 12000.0
    assert cn2(TurbulenceProfile.hvb(30.0), h) > cn2(TurbulenceProfile.hvb(10.0), h)


def test_fried_literature_form():
    prof = TurbulenceProfile.fried(1e-13)
    assert cn2(prof, 1000.0) == pytest.approx(1e-13 * 0.1 * math.exp(-1000 / 3200), rel=1e-12)
    assert cn2(TurbulenceProfile.fried(2e-13), 50.0) > cn2(prof, 50.0)


def test_profile_requires_parameters():
    with pytest.raises(InputError):
        TurbulenceProfile("hvb")
    with pytest.raises(InputError):
        TurbulenceProfile("fried")
    with pytest.raises(InputError):
        TurbulenceProfile("nonsense")
    with pytest.raises(InputError):
        TurbulenceProfile.from_config({"model": "hvb", "wind_speed": 21, "colour": 3})


@given(st.floats(18.6, 239.9), st.floats(1.0001, 1.5))
def test_day_power_law_branch_non_increasing(h, factor):
    h2 = min(h * factor, 240.0)
    assert cn2(DAY, h2) <= cn2(DAY, h)


@given(st.floats(1e-3, 20000.0))
def test_profiles_finite_non_negative(h):
    for prof in (DAY, NIGHT):
        v = cn2(prof, h)
        assert math.isfinite(v) and v >= 0


def test_kolmogorov_examples():
    assert kolmogorov_spectrum(1.0, 1.0) == pytest.approx(0.033, rel=1e-15)
    assert kolmogorov_spectrum(0.0, 50.0) == 0.0
    assert kolmogorov_spectrum(1e-14, 100.0) == pytest.approx(1.531724315092218e-23, rel=1e-12)


def test_kolmogorov_rejects_non_positive_k():
    with pytest.raises(NonPositiveWavenumber):
        kolmogorov_spectrum(1e-14, 0.0)


def test_kolmogorov_warns_outside_inertial_range():
    with pytest.warns(InertialRangeWarning):
        kolmogorov_spectrum(1e-14, 0.1)
    with pytest.warns(InertialRangeWarning):
        kolmogorov_spectrum(1e-14, 5000.0)


@given(st.floats(1.0, 999.0), st.floats(1.001, 2.0))
def test_kolmogorov_strictly_decreasing(k, factor):
    k2 = min(k * factor, 1000.0)
    assert kolmogorov_spectrum(1e-14, k2) < kolmogorov_spectrum(1e-14, k)


def test_rytov_examples():
    assert rytov_sq(0.0, 800e-9, 1000.0) == 0.0
    assert rytov_sq(1.28e-14, 800e-9, 1000.0) == pytest.approx(0.5512982442347384, rel=1e-12)
    assert rytov_sq(1.28e-14, 800e-9, 2000.0) / rytov_sq(1.28e-14, 800e-9, 1000.0) == pytest.approx(2 ** (11 / 6))
    with pytest.raises(ZeroDistance):
        rytov_sq(1e-14, 800e-9, 0.0)


@given(st.floats(1e-3, 1e3))
def test_rytov_linear_in_cn2(c):
    base = rytov_sq(1e-15, 810e-9, 250.0)
    assert rytov_sq(c * 1e-15, 810e-9, 250.0) == pytest.approx(c * base, rel=1e-12)


def test_fresnel_examples():
    om = fresnel(810e-9, 0.0115, 30.0)
    assert om == pytest.approx(17.097762487129636, rel=1e-12)
    assert fresnel(810e-9, 0.023, 30.0) == pytest.approx(4 * om, rel=1e-12)
    assert fresnel(810e-9, 0.0115, 60.0) == pytest.approx(om / 2, rel=1e-12)
    with pytest.raises(ZeroDistance):
        fresnel(810e-9, 0.0115, 0.0)


@given(st.floats(1.0, 1e5))
def test_fresnel_times_distance_constant(z):
    assert fresnel(810e-9, 0.0115, z) * z == pytest.approx(fresnel(810e-9, 0.0115, 1.0), rel=1e-12)


def test_derived_bundle():
    d = derived(1e-14, 810e-9, 0.0115, 30.0)
    assert d.rytov_sq >= 0 and d.fresnel > 0
    assert d.wavenumber == pytest.approx(2 * math.pi / 810e-9)
