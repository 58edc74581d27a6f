"""Visibility-driven scattering attenuation and Beer-Lambert extinction.

Fog attenuation follows ``beta = (3.91 / V) * (lambda / 550 nm) ** (-p)``
with the size-distribution coefficient ``p`` from either the Kim or the
Kruse table. Kim's printed branches overlap, so they are applied as
half-open intervals closed below::

    [0, 0.5) -> 0
    [0.5, 1) -> V - 0.5
    [1, 6)   -> 0.16 V + 0.34
    [6, 50)  -> 1.3
    [50, inf) -> 1.6

Kruse uses the same convention at 6 and 50 km.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import EmptyInput, InputError, MalformedRecord, QuadratureFailure
from .geometry import slant_path_length

SCATTERING_MODELS = ("kim", "kruse")

DB_PER_NEPER_KM = 4.3429

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class VisibilityRecord:
    label: str
    visibility: float  # km


def size_distribution_p(model, visibility):
    """Scattering size-distribution coefficient p for visibility ``visibility`` [km]."""
    if visibility <= 0:
        raise InputError("visibility must be positive")
    model = model.lower()
    if model not in SCATTERING_MODELS:
        raise InputError(f"unknown scattering model {model!r}")
    if visibility >= 50:
        return 1.6
    if visibility >= 6:
        return 1.3
    if model == "kruse":
        return 0.585 * visibility ** (1.0 / 3.0)
    if visibility >= 1:
        return 0.16 * visibility + 0.34
    if visibility >= 0.5:
        return visibility - 0.5
    return 0.0


def beta_fog(visibility, wavelength_nm, p):
    """Fog attenuation coefficient [1/km]; ``wavelength_nm`` in nanometres."""
    if visibility <= 0 or wavelength_nm <= 0:
        raise InputError("visibility and wavelength must be positive")
    return (3.91 / visibility) * (wavelength_nm / 550.0) ** (-p)


def beta_rain(visibility):
    """Rain attenuation coefficient 2.8 / V [1/km]."""
    if visibility <= 0:
        raise InputError("visibility must be positive")
    return 2.8 / visibility


def path_attenuation_db(beta, distance):
    """Path attenuation tau = 4.3429 * beta * L in dB (``beta`` in 1/km, ``distance`` in km)."""
    if beta < 0 or distance < 0:
        raise InputError("beta and distance must be non-negative")
    return DB_PER_NEPER_KM * beta * distance


@dataclass(frozen=True)
class ExtinctionProfile:
    """Altitude-dependent extinction factor alpha(h) in 1/km, with h in metres."""

    alpha_of_h: Callable[[np.ndarray], np.ndarray]
    description: str = ""

    @classmethod
    def constant(cls, alpha):
        if alpha < 0:
            raise InputError("extinction factor must be non-negative")
        return cls(lambda h: np.full(np.shape(h), float(alpha)), f"constant alpha={alpha:g} /km")

    def __call__(self, h):
        values = np.asarray(self.alpha_of_h(np.asarray(h, dtype=float)), dtype=float)
        if values.shape != np.shape(h):
            values = np.broadcast_to(values, np.shape(h))
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise InputError(f"extinction profile {self.description!r} produced a negative or non-finite value")
        return values


def optical_depth(profile, altitude, zenith, rtol=1e-8, max_panels=4096):
    """Integral of alpha along the straight slant path (dimensionless).

    Composite 16-point Gauss-Legendre on equal panels, doubled until two
    successive estimates agree to ``rtol``.
    """
    length_m = slant_path_length(altitude, zenith)
    cos_z = math.cos(zenith)
    previous = None
    err = math.inf
    integral = 0.0
    panels = 1
    while panels <= max_panels:
        edges = np.linspace(0.0, length_m, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        x = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        # alpha is per km, path coordinate in m
        integral = float(np.sum(profile(x * cos_z) @ _GL_WEIGHTS * half)) / 1000.0
        if previous is not None:
            err = abs(integral - previous)
            if err <= rtol * abs(integral) or integral == previous:
                return integral
        previous = integral
        panels *= 2
    raise QuadratureFailure("optical depth integral did not converge", rtol, err / max(abs(integral), 1e-300))


def atm_transmissivity(profile, geometry, rtol=1e-8):
    """Beer-Lambert transmissivity exp(-integral of alpha) along the slant path to the drone.

    ``geometry`` is anything with ``altitude`` [m] and ``zenith`` [rad]
    attributes, normally a :class:`~aerialqc.geometry.ChannelGeometry`.
    """
    return math.exp(-optical_depth(profile, geometry.altitude, geometry.zenith, rtol=rtol))


@dataclass(frozen=True)
class ReportRow:
    label: str
    visibility: float
    p: float
    beta_fog: float
    attenuation_db: float


def visibility_report(records, wavelength_nm, model, distance):
    """One attenuation row per visibility record, in input order."""
    records = list(records)
    if not records:
        raise EmptyInput("visibility report needs at least one record")
    rows = []
    for i, rec in enumerate(records):
        try:
            v = float(rec.visibility)
        except (TypeError, ValueError, AttributeError):
            raise MalformedRecord(i, f"unreadable visibility {getattr(rec, 'visibility', None)!r}") from None
        if not math.isfinite(v) or v <= 0:
            raise MalformedRecord(i, f"visibility must be positive, got {v!r}")
        p = size_distribution_p(model, v)
        b = beta_fog(v, wavelength_nm, p)
        rows.append(ReportRow(str(rec.label), v, p, b, path_attenuation_db(b, distance)))
    return rows


def read_visibility_csv(lines: Iterable[str] | str):
    """Parse ``label,visibility_km`` CSV text (path, or iterable of lines).

    Row indices in :class:`MalformedRecord` count data rows from zero.
    """
    if isinstance(lines, str):
        with open(lines, newline="") as fh:
            return read_visibility_csv(fh.read().splitlines())
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["label", "visibility_km"]:
        raise InputError("visibility CSV must have header 'label,visibility_km'")
    reader.fieldnames = ["label", "visibility_km"]
    records = []
    for i, row in enumerate(reader):
        raw = row.get("visibility_km")
        try:
            v = float(raw)
        except (TypeError, ValueError):
            raise MalformedRecord(i, f"unparseable visibility {raw!r}") from None
        if not math.isfinite(v) or v <= 0:
            raise MalformedRecord(i, f"visibility must be positive, got {v!r}")
        records.append(VisibilityRecord((row["label"] or "").strip(), v))
    if not records:
        raise EmptyInput("visibility CSV contains no records")
    return records
