"""Refractive-index structure constant profiles and derived turbulence quantities.

Four altitude models are available:

``slcd-day``
    Five-branch SLC-D daytime power law, valid on (0, 20000] m.
``slcd-night-variant``
    Alternative SLC-D iteration (zero below 19 m), valid on (0, 20000] m.
``hvb``
    Hufnagel-Valley boundary model parameterised by the rms high-altitude
    wind speed. Literature formula (Hufnagel 1974, Valley 1980).
``fried``
    Fried short-range model ``K0 * h**(-1/3) * exp(-h / 3200)``.
    Literature formula; ``k0`` is left to the caller.

Piecewise models are evaluated with right-closed branches: an altitude that
sits exactly on a boundary belongs to the lower-altitude branch.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import AltitudeOutOfRange, InputError, NonPositiveWavenumber, ZeroDistance

MODEL_NAMES = ("slcd-day", "slcd-night-variant", "hvb", "fried")

# (upper bound [m], coefficient, exponent): cn2 = coefficient * h**(-exponent)
SLCD_DAY_BRANCHES = (
    (18.5, 1.70e-14, 0.0),
    (240.0, 3.13e-13, 1.0),
    (880.0, 1.30e-15, 0.0),
    (7200.0, 8.87e-7, 3.0),
    (20000.0, 2.00e-16, 0.5),
)
SLCD_NIGHT_VARIANT_BRANCHES = (
    (19.0, 0.0, 0.0),
    (230.0, 4.008e-13, 1.054),
    (850.0, 1.30e-15, 0.0),
    (7000.0, 6.352e-7, 2.966),
    (20000.0, 6.209e-16, 0.6229),
)

HVB_GROUND_CN2 = 1.7e-14
FRIED_SCALE_HEIGHT = 3200.0

DEFAULT_OUTER_SCALE = 1.0
DEFAULT_INNER_SCALE = 1e-3


class InertialRangeWarning(UserWarning):
    """Wavenumber lies outside the inertial sub-range (1/L0, 1/l0)."""


@dataclass(frozen=True)
class TurbulenceProfile:
    """A named C_n^2(h) model together with its parameters.

    Parameters
    ----------
    model : str
        One of ``MODEL_NAMES``.
    wind_speed : float, optional
        rms wind speed in m/s (``hvb`` only).
    k0 : float, optional
        Turbulence-strength parameter (``fried`` only).
    ground_cn2 : float
        Boundary-layer strength A of the ``hvb`` model.
    """

    model: str
    wind_speed: float | None = None
    k0: float | None = None
    ground_cn2: float = HVB_GROUND_CN2
    valid_altitude_range: tuple[float, float] = field(init=False)

    def __post_init__(self):
        if self.model not in MODEL_NAMES:
            raise InputError(f"unknown turbulence model {self.model!r}; expected one of {MODEL_NAMES}")
        if self.model == "hvb":
            if self.wind_speed is None or self.wind_speed < 0:
                raise InputError("hvb model requires a non-negative wind_speed")
            rng = (0.0, 30000.0)
        elif self.model == "fried":
            if self.k0 is None or self.k0 < 0:
                raise InputError("fried model requires a non-negative k0")
            rng = (0.0, 20000.0)
        else:
            rng = (0.0, 20000.0)
        object.__setattr__(self, "valid_altitude_range", rng)

    @classmethod
    def slcd_day(cls):
        return cls("slcd-day")

    @classmethod
    def slcd_night_variant(cls):
        return cls("slcd-night-variant")

    @classmethod
    def hvb(cls, wind_speed, ground_cn2=HVB_GROUND_CN2):
        return cls("hvb", wind_speed=wind_speed, ground_cn2=ground_cn2)

    @classmethod
    def fried(cls, k0):
        return cls("fried", k0=k0)

    @classmethod
    def from_config(cls, cfg):
        """Build a profile from a ``{"model": ..., "wind_speed": ..., "k0": ...}`` mapping."""
        cfg = dict(cfg)
        name = cfg.pop("model")
        unknown = set(cfg) - {"wind_speed", "k0", "ground_cn2"}
        if unknown:
            raise InputError(f"unknown turbulence parameters: {sorted(unknown)}")
        return cls(name, **cfg)

    def __call__(self, altitude):
        return cn2(self, altitude)


def _piecewise(branches, h):
    out = np.empty_like(h)
    lower = 0.0
    for upper, coeff, exponent in branches:
        mask = (h > lower) & (h <= upper)
        out[mask] = coeff * h[mask] ** (-exponent) if exponent else coeff
        lower = upper
    return out


def cn2(profile, altitude):
    """Evaluate C_n^2 [m^-2/3] at ``altitude`` [m] (scalar or array).

    Raises
    ------
    AltitudeOutOfRange
        If any altitude lies outside the model's defined branches.
    """
    h = np.asarray(altitude, dtype=float)
    lo, hi = profile.valid_altitude_range
    # hvb is defined down to the ground; the others only above it
    below = h < lo if profile.model == "hvb" else h <= lo
    if np.any(below | (h > hi) | ~np.isfinite(h)):
        raise AltitudeOutOfRange(
            f"altitude outside ({lo:g}, {hi:g}] m for model {profile.model!r}"
        )
    hh = np.atleast_1d(h)
    if profile.model == "slcd-day":
        out = _piecewise(SLCD_DAY_BRANCHES, hh)
    elif profile.model == "slcd-night-variant":
        out = _piecewise(SLCD_NIGHT_VARIANT_BRANCHES, hh)
    elif profile.model == "hvb":
        v = profile.wind_speed
        out = (
            0.00594 * (v / 27.0) ** 2 * (1e-5 * hh) ** 10 * np.exp(-hh / 1000.0)
            + 2.7e-16 * np.exp(-hh / 1500.0)
            + profile.ground_cn2 * np.exp(-hh / 100.0)
        )
    else:
        out = profile.k0 * hh ** (-1.0 / 3.0) * np.exp(-hh / FRIED_SCALE_HEIGHT)
    return float(out[0]) if h.ndim == 0 else out


def wavenumber(wavelength):
    """Optical wavenumber k = 2*pi/lambda [rad/m]."""
    if wavelength <= 0:
        raise InputError("wavelength must be positive")
    return 2.0 * math.pi / wavelength


def kolmogorov_spectrum(cn2_value, k, outer_scale=DEFAULT_OUTER_SCALE, inner_scale=DEFAULT_INNER_SCALE):
    """Kolmogorov refractive-index power spectrum 0.033 * C_n^2 * k^(-11/3).

    A :class:`InertialRangeWarning` is emitted when ``k`` falls outside
    ``[1/outer_scale, 1/inner_scale]``; the value is still returned.
    """
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr <= 0):
        raise NonPositiveWavenumber("wavenumber must be positive")
    if np.any(k_arr < 1.0 / outer_scale) or np.any(k_arr > 1.0 / inner_scale):
        warnings.warn(
            f"k outside inertial range [{1 / outer_scale:g}, {1 / inner_scale:g}] rad/m",
            InertialRangeWarning,
            stacklevel=2,
        )
    out = 0.033 * cn2_value * k_arr ** (-11.0 / 3.0)
    return float(out) if k_arr.ndim == 0 else out


def rytov_sq(cn2_value, wavelength, z):
    """Rytov variance sigma_R^2 = 1.23 C_n^2 k^(7/6) z^(11/6) for path length ``z`` [m]."""
    if z <= 0:
        raise ZeroDistance("propagation distance must be positive")
    k = wavenumber(wavelength)
    return 1.23 * cn2_value * k ** (7.0 / 6.0) * z ** (11.0 / 6.0)


def fresnel(wavelength, w_d, z):
    """Fresnel number Omega = k w_D^2 / (2 z)."""
    if z <= 0:
        raise ZeroDistance("propagation distance must be positive")
    return wavenumber(wavelength) * w_d**2 / (2.0 * z)


@dataclass(frozen=True)
class TurbulenceDerived:
    rytov_sq: float
    fresnel: float
    wavenumber: float


def derived(cn2_value, wavelength, w_d, z):
    """Bundle the Rytov variance, Fresnel number and wavenumber for one path."""
    return TurbulenceDerived(
        rytov_sq=rytov_sq(cn2_value, wavelength, z),
        fresnel=fresnel(wavelength, w_d, z),
        wavenumber=wavenumber(wavelength),
    )
