import math

import pytest
from hypothesis import given, strategies as st

from aerialqc.attenuation import (
    ExtinctionProfile,
    VisibilityRecord,
    atm_transmissivity,
    beta_fog,
    beta_rain,
    optical_depth,
    path_attenuation_db,
    read_visibility_csv,
    size_distribution_p,
    visibility_report,
)
from aerialqc.errors import EmptyInput, InputError, InvalidGeometry, MalformedRecord, QuadratureFailure
from aerialqc.geometry import ChannelGeometry, slant_path_length


@pytest.mark.parametrize(
    "model,v,expected",
    [
        ("kim", 0.3, 0.0),
        ("kim", 0.5, 0.0),
        ("kim", 0.75, 0.25),
        ("kim", 1.0, 0.5),
        ("kim", 3.0, 0.16 * 3 + 0.34),
        ("kim", 6.0, 1.3),
        ("kim", 10.0, 1.3),
        ("kim", 50.0, 1.6),
        ("kim", 80.0, 1.6),
        ("kruse", 2.0, 0.7370538141885008),
        ("kruse", 10.0, 1.3),
        ("kruse", 60.0, 1.6),
    ],
)
def test_size_distribution_p(model, v, expected):
    assert size_distribution_p(model, v) == pytest.approx(expected, rel=1e-12, abs=1e-15)


@given(st.floats(1e-3, 1e3))
def test_p_within_bounds(v):
    for m in ("kim", "kruse"):
        assert 0.0 <= size_distribution_p(m, v) <= 1.6


@given(st.floats(6.0, 1e3))
def test_kim_kruse_agree_above_6km(v):
    assert size_distribution_p("kim", v) == size_distribution_p("kruse", v)


def test_p_rejects_bad_input():
    with pytest.raises(InputError):
        size_distribution_p("kim", 0.0)
    with pytest.raises(InputError):
        size_distribution_p("mie", 1.0)


def test_beta_fog_examples():
    assert beta_fog(0.5, 850, 0.0) == pytest.approx(7.82, rel=1e-12)
    assert beta_fog(3.91, 550, 1.3) == pytest.approx(1.0, rel=1e-12)
    assert beta_fog(1.0, 1550, 0.5) == pytest.approx(2.329122082978768, rel=1e-12)


@given(st.floats(0.05, 100), st.floats(1.01, 3), st.floats(0.0, 1.6))
def test_beta_fog_decreasing_in_visibility(v, f, p):
    assert beta_fog(v * f, 850, p) < beta_fog(v, 850, p)


@given(st.floats(400, 2000), st.floats(1.01, 2), st.floats(0.01, 1.6))
def test_beta_fog_decreasing_in_wavelength(lam, f, p):
    assert beta_fog(2.0, lam * f, p) < beta_fog(2.0, lam, p)


def test_beta_fog_wavelength_independent_when_p_zero():
    assert beta_fog(0.4, 850, 0) == beta_fog(0.4, 950, 0) == beta_fog(0.4, 1550, 0)


def test_beta_rain_examples():
    assert beta_rain(2.8) == pytest.approx(1.0)
    assert beta_rain(1.0) == pytest.approx(2.8)
    assert beta_rain(5.6) == pytest.approx(0.5)


def test_path_attenuation_examples():
    assert path_attenuation_db(1.0, 1.0) == pytest.approx(4.3429, abs=1e-12)
    assert path_attenuation_db(3.0, 0.0) == 0.0
    assert path_attenuation_db(7.82, 0.5) == pytest.approx(16.980739, rel=1e-12)
    with pytest.raises(InputError):
        path_attenuation_db(-1.0, 1.0)


@given(st.floats(0, 10), st.floats(0, 10), st.floats(0, 5))
def test_path_attenuation_linear(b, l, c):
    assert path_attenuation_db(c * b, l) == pytest.approx(c * path_attenuation_db(b, l), rel=1e-12, abs=1e-12)
    assert path_attenuation_db(b, c * l) == pytest.approx(c * path_attenuation_db(b, l), rel=1e-12, abs=1e-12)


def test_transmissivity_no_extinction():
    assert atm_transmissivity(ExtinctionProfile.constant(0.0), ChannelGeometry(100.0)) == 1.0


def test_transmissivity_beer_lambert_closed_form():
    geom = ChannelGeometry(10_000.0)
    assert atm_transmissivity(ExtinctionProfile.constant(0.1), geom) == pytest.approx(math.exp(-1.0), rel=1e-10)


def test_zenith_path_length():
    assert slant_path_length(150.0, 0.0) == 150.0
    assert slant_path_length(150.0, math.radians(60)) == pytest.approx(300.0)
    with pytest.raises(InvalidGeometry):
        slant_path_length(150.0, math.radians(86))


def test_height_dependent_profile_against_closed_form():
    # alpha(h) = a0 exp(-h / H) integrates to a0 H (1 - exp(-h/H)) / cos(phi)
    a0, H = 0.5, 1200.0
    prof = ExtinctionProfile(lambda h: a0 * __import__("numpy").exp(-h / H), "exponential")
    h, phi = 3000.0, math.radians(40)
    expected = a0 * (H / 1000.0) * (1 - math.exp(-h / H)) / math.cos(phi)
    assert optical_depth(prof, h, phi) == pytest.approx(expected, rel=1e-9)


def test_quadrature_failure_reported():
    import numpy as np

    prof = ExtinctionProfile(lambda h: 1.0 + np.sin(0.37 * h), "pathological")
    with pytest.raises(QuadratureFailure) as exc:
        optical_depth(prof, 1000.0, 0.0, rtol=1e-14, max_panels=4)
    assert exc.value.tolerance == 1e-14


@given(st.floats(1.0, 5000.0), st.floats(1.01, 3.0), st.floats(0.0, 2.0))
def test_transmissivity_in_unit_interval_and_monotone(h, f, alpha):
    prof = ExtinctionProfile.constant(alpha)
    t1 = atm_transmissivity(prof, ChannelGeometry(h))
    t2 = atm_transmissivity(prof, ChannelGeometry(h * f))
    assert 0 < t2 <= t1 <= 1


def test_negative_profile_rejected():
    with pytest.raises(InputError):
        atm_transmissivity(ExtinctionProfile(lambda h: -h, "bad"), ChannelGeometry(10.0))


def test_visibility_report_chained():
    (row,) = visibility_report([VisibilityRecord("Jan-2021", 9.0)], 850, "kim", 1.0)
    assert row.p == 1.3
    assert row.beta_fog == pytest.approx(0.2466954507638559, rel=1e-12)
    assert row.attenuation_db == pytest.approx(1.0713736731223498, rel=1e-12)


def test_visibility_report_deterministic_and_ordered():
    recs = [VisibilityRecord("a", 2.0), VisibilityRecord("b", 2.0), VisibilityRecord("c", 0.3)]
    rows = visibility_report(recs, 850, "kruse", 2.0)
    assert (rows[0].beta_fog, rows[0].attenuation_db) == (rows[1].beta_fog, rows[1].attenuation_db)
    assert rows[2].p == pytest.approx(0.585 * 0.3 ** (1 / 3), rel=1e-12)
    assert [r.label for r in rows] == ["a", "b", "c"]


def test_visibility_report_errors():
    with pytest.raises(EmptyInput):
        visibility_report([], 850, "kim", 1.0)
    with pytest.raises(MalformedRecord) as exc:
        visibility_report([VisibilityRecord("ok", 1.0), VisibilityRecord("bad", 0.0)], 850, "kim", 1.0)
    assert exc.value.row == 1


def test_read_visibility_csv(tmp_path):
    path = tmp_path / "vis.csv"
    path.write_text("label,visibility_km\nJan-2021,4.5\nFeb-2021,6.25\n")
    recs = read_visibility_csv(str(path))
    assert recs == [VisibilityRecord("Jan-2021", 4.5), VisibilityRecord("Feb-2021", 6.25)]


@pytest.mark.parametrize(
    "text,row",
    [
        ("label,visibility_km\nA,3\nB,oops\n", 1),
        ("label,visibility_km\nA,-2\n", 0),
        ("label,visibility_km\nA,3\nB,4\nC,\n", 2),
    ],
)
def test_read_visibility_csv_malformed(text, row):
    with pytest.raises(MalformedRecord) as exc:
        read_visibility_csv(text.splitlines())
    assert exc.value.row == row


def test_read_visibility_csv_header_and_empty():
    with pytest.raises(InputError):
        read_visibility_csv(["month,vis", "a,1"])
    with pytest.raises(EmptyInput):
        read_visibility_csv(["label,visibility_km"])
