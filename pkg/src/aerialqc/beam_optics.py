"""Gaussian-beam propagation: spot size, diffraction loss, PLOB bound, divergence loss."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import FactorOutOfRange, InputError, NegativeVariance, RegimeWarning
from .turbulence import rytov_sq, wavenumber

# Far-field approximation is flagged once 2 a^2 / w^2 exceeds this.
FAR_FIELD_LIMIT = 0.1


@dataclass(frozen=True)
class GaussianBeam:
    """Gaussian beam at the transmitter.

    ``radius_of_curvature=None`` denotes a collimated beam (R0 = infinity);
    use :meth:`collimated` to build one explicitly.
    """

    w0: float
    wavelength: float
    radius_of_curvature: float | None = None

    def __post_init__(self):
        if self.w0 <= 0 or self.wavelength <= 0:
            raise InputError("w0 and wavelength must be positive")
        if self.radius_of_curvature is not None and self.radius_of_curvature == 0:
            raise InputError("radius of curvature must be non-zero (use None for collimated)")

    @classmethod
    def collimated(cls, w0, wavelength):
        return cls(w0, wavelength, None)

    @property
    def is_collimated(self):
        return self.radius_of_curvature is None

    @property
    def rayleigh_length(self):
        return math.pi * self.w0**2 / self.wavelength


def spot_size(beam, z):
    """Diffraction-broadened spot size w_D after propagating ``z`` metres."""
    if z < 0:
        raise InputError("propagation distance must be non-negative")
    focus = 1.0 if beam.is_collimated else 1.0 - z / beam.radius_of_curvature
    return beam.w0 * math.sqrt(focus**2 + (z / beam.rayleigh_length) ** 2)


def far_field_transmissivity(a_r, w_d):
    """Far-field approximation 2 a_r^2 / w_D^2 of the diffraction transmissivity."""
    if a_r <= 0 or w_d <= 0:
        raise InputError("a_r and w_d must be positive")
    return 2.0 * a_r**2 / w_d**2


def diffraction_transmissivity(a_r, w_d):
    """Fraction 1 - exp(-2 a_r^2 / w_D^2) of a Gaussian beam caught by a centred aperture."""
    return -math.expm1(-far_field_transmissivity(a_r, w_d))


def plob_upper_bound(a_r, w_d):
    """Secret-bit upper bound (2/ln 2) a_r^2 / w_D^2 per channel use.

    Emits :class:`RegimeWarning` when the far-field condition
    2 a_r^2 / w_D^2 << 1 does not hold.
    """
    x = far_field_transmissivity(a_r, w_d)
    if x > FAR_FIELD_LIMIT:
        warnings.warn(f"far-field regime violated: 2a^2/w^2 = {x:.3g}", RegimeWarning, stacklevel=2)
    return x / math.log(2.0)


def divergence_loss_db(a_t_area, a_r_area, wavelength, z):
    """Geometric beam-divergence loss in dB for aperture areas [m^2] over ``z`` metres."""
    if min(a_t_area, a_r_area, wavelength, z) <= 0:
        raise InputError("apertures, wavelength and distance must be positive")
    return -10.0 * (2.0 * math.log10(4.0 / math.pi) + math.log10(a_t_area * a_r_area / (wavelength**2 * z**2)))


def overall_transmissivity(eta_d, eta_eff=1.0, eta_atm=1.0):
    """Product of diffraction, receiver-efficiency and atmospheric transmissivities."""
    for name, v in (("eta_d", eta_d), ("eta_eff", eta_eff), ("eta_atm", eta_atm)):
        if not 0.0 <= v <= 1.0:
            raise FactorOutOfRange(f"{name}={v!r} outside [0, 1]")
    return eta_d * eta_eff * eta_atm


@dataclass(frozen=True)
class WanderBudget:
    var_pointing: float
    var_turbulence: float
    var_total: float
    long_term_waist_sq: float

    @property
    def ordering_holds(self):
        """True when w_lt^2 >= sigma_tb^2 >= sigma_pe^2."""
        return self.long_term_waist_sq >= self.var_turbulence >= self.var_pointing


def wander_budget(var_pe, var_tb, w_lt_sq):
    if min(var_pe, var_tb, w_lt_sq) < 0:
        raise NegativeVariance("variances must be non-negative")
    return WanderBudget(var_pe, var_tb, var_pe + var_tb, w_lt_sq)


def literature_wander_budget(cn2, beam, z, pointing_jitter=1e-6):
    """Weak-turbulence beam-wander budget for a collimated beam (literature model).

    Not part of the hybrid channel model: uses the Andrews-Phillips
    expressions with infinite outer scale,

    * turbulence wander ``2.42 C_n^2 z^3 w0^(-1/3)``
    * long-term spot ``w^2 (1 + 1.33 sigma_R^2 Lambda^(5/6))`` with
      ``Lambda = 2 z / (k w^2)``
    * pointing wander ``(pointing_jitter * z)^2``.
    """
    if z <= 0:
        raise InputError("distance must be positive")
    w_sq = spot_size(beam, z) ** 2
    lam = 2.0 * z / (wavenumber(beam.wavelength) * w_sq)
    var_tb = 2.42 * cn2 * z**3 * beam.w0 ** (-1.0 / 3.0)
    w_lt_sq = w_sq * (1.0 + 1.33 * rytov_sq(cn2, beam.wavelength, z) * lam ** (5.0 / 6.0))
    return wander_budget((pointing_jitter * z) ** 2, var_tb, w_lt_sq)
