import math
import warnings

import pytest
from hypothesis import given, strategies as st

from aerialqc.beam_optics import (
    GaussianBeam,
    diffraction_transmissivity,
    divergence_loss_db,
    far_field_transmissivity,
    literature_wander_budget,
    overall_transmissivity,
    plob_upper_bound,
    spot_size,
    wander_budget,
)
from aerialqc.errors import FactorOutOfRange, InputError, NegativeVariance, RegimeWarning


def test_rayleigh_length_and_spot_size():
    beam = GaussianBeam.collimated(0.05, 800e-9)
    assert beam.rayleigh_length == pytest.approx(9817.477042468105, rel=1e-12)
    assert spot_size(beam, 0.0) == 0.05
    assert spot_size(beam, 5000.0) == pytest.approx(0.05611110028604824, rel=1e-12)
    assert spot_size(beam, beam.rayleigh_length) == pytest.approx(0.05 * math.sqrt(2), rel=1e-12)


def test_focused_beam_waist_at_focus():
    beam = GaussianBeam(0.01, 800e-9, radius_of_curvature=100.0)
    zr = beam.rayleigh_length
    assert spot_size(beam, 100.0) == pytest.approx(0.01 * 100.0 / zr, rel=1e-12)


@given(st.floats(0, 1e5), st.floats(1.0, 1e4))
def test_collimated_spot_size_non_decreasing(z, dz):
    beam = GaussianBeam.collimated(0.02, 810e-9)
    assert spot_size(beam, z + dz) >= spot_size(beam, z)


def test_beam_validation():
    with pytest.raises(InputError):
        GaussianBeam(0.0, 800e-9)
    with pytest.raises(InputError):
        spot_size(GaussianBeam.collimated(0.01, 800e-9), -1.0)


def test_diffraction_transmissivity_examples():
    assert diffraction_transmissivity(1.0, 1.0) == pytest.approx(1 - math.exp(-2), rel=1e-14)
    assert far_field_transmissivity(0.01, 1.0) == pytest.approx(2e-4, rel=1e-14)
    assert diffraction_transmissivity(0.01, 1.0) == pytest.approx(2e-4, rel=1e-3)


@given(st.floats(1e-4, 1.0), st.floats(1e-3, 10.0))
def test_diffraction_transmissivity_bounds(a, w):
    eta = diffraction_transmissivity(a, w)
    assert 0.0 <= eta <= 1.0
    assert eta <= far_field_transmissivity(a, w)


def test_plob_bound():
    assert plob_upper_bound(0.01, 1.0) == pytest.approx(2e-4 / math.log(2), rel=1e-14)
    with pytest.warns(RegimeWarning):
        plob_upper_bound(1.0, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        plob_upper_bound(0.01, 1.0)


def test_divergence_loss():
    at = ar = math.pi * 0.025**2  # 5 cm diameter apertures
    assert divergence_loss_db(at, ar, 810e-9, 500.0) == pytest.approx(-15.809699709147383, rel=1e-12)
    # doubling distance costs 20 log10(2)
    d = divergence_loss_db(at, ar, 810e-9, 1000.0) - divergence_loss_db(at, ar, 810e-9, 500.0)
    assert d == pytest.approx(20 * math.log10(2), rel=1e-12)


def test_overall_transmissivity():
    assert overall_transmissivity(0.5) == 0.5
    assert overall_transmissivity(0.5, 0.8, 0.9) == pytest.approx(0.36)
    with pytest.raises(FactorOutOfRange):
        overall_transmissivity(0.5, 1.2)
    with pytest.raises(FactorOutOfRange):
        overall_transmissivity(-0.1)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_overall_transmissivity_bounded(a, b, c):
    assert 0.0 <= overall_transmissivity(a, b, c) <= min(a, b, c)


def test_wander_budget():
    wb = wander_budget(1e-6, 4e-6, 1e-4)
    assert wb.var_total == pytest.approx(5e-6)
    assert wb.ordering_holds
    with pytest.raises(NegativeVariance):
        wander_budget(-1.0, 0.0, 0.0)


def test_literature_wander_budget_ordering():
    beam = GaussianBeam.collimated(0.02, 810e-9)
    wb = literature_wander_budget(1e-14, beam, 1000.0)
    assert wb.ordering_holds
    assert wb.var_turbulence == pytest.approx(2.42e-14 * 1e9 * 0.02 ** (-1 / 3), rel=1e-12)
