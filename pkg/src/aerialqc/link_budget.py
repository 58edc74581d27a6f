"""FSO link margin and range/aperture sweeps.

The geometric term ``20 log10(sqrt(2) L theta / D)`` is evaluated with the
range ``L`` in metres so the ratio is dimensionless; fog loss
``alpha_fog * L`` uses ``L`` in kilometres.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import InputError, NonPositiveGeometry


@dataclass(frozen=True)
class LinkBudgetSpec:
    """Inputs of the link-margin equation.

    Powers in dBm, losses in dB, ``theta_div`` the half-angle divergence in
    rad, ``d_rx`` the receiver aperture diameter in m, ``alpha_fog`` in
    dB/km and ``range_km`` in km.
    """

    p_t: float
    a_tx: float
    a_rx: float
    theta_div: float
    d_rx: float
    alpha_fog: float
    s_r: float
    range_km: float


def geometric_loss_db(range_km, theta_div, d_rx):
    if theta_div <= 0 or d_rx <= 0 or range_km <= 0:
        raise NonPositiveGeometry("range, divergence and receiver diameter must be positive")
    return 20.0 * math.log10(math.sqrt(2.0) * range_km * 1000.0 * theta_div / d_rx)


def link_margin(spec):
    """Received power headroom above receiver sensitivity, in dB.

    Negative values are returned as-is; use :func:`is_operational` to flag them.
    """
    geo = geometric_loss_db(spec.range_km, spec.theta_div, spec.d_rx)
    return spec.p_t - spec.a_tx - geo - spec.a_rx - spec.alpha_fog * spec.range_km - spec.s_r


def is_operational(margin_db):
    return margin_db >= 0.0


@dataclass(frozen=True)
class MarginRow:
    range_km: float
    d_rx: float
    margin_db: float
    operational: bool


@dataclass(frozen=True)
class MarginSweep:
    rows: list[MarginRow]
    ranges: list[float]
    diameters: list[float]

    def series(self, d_rx):
        return [r for r in self.rows if r.d_rx == d_rx]

    def break_even_range(self, d_rx):
        """Range at which the margin crosses zero, by linear interpolation.

        ``None`` when the margin never changes sign on the grid.
        """
        s = self.series(d_rx)
        for a, b in zip(s, s[1:]):
            if a.margin_db == 0.0:
                return a.range_km
            if (a.margin_db > 0) != (b.margin_db > 0) or b.margin_db == 0.0:
                t = a.margin_db / (a.margin_db - b.margin_db)
                return a.range_km + t * (b.range_km - a.range_km)
        return None

    def non_operational(self, d_rx):
        """True when every range on the grid has a negative margin for ``d_rx``."""
        return all(not r.operational for r in self.series(d_rx))


def margin_sweep(template, ranges, diameters):
    """Margin for every (range, diameter) pair; rows ordered diameter-major, range-minor."""
    ranges = [float(r) for r in ranges]
    diameters = [float(d) for d in diameters]
    if not ranges or not diameters:
        raise InputError("range and diameter grids must be non-empty")
    rows = []
    for d in diameters:
        for r in sorted(ranges):
            m = link_margin(replace(template, range_km=r, d_rx=d))
            rows.append(MarginRow(r, d, m, is_operational(m)))
    return MarginSweep(rows, sorted(ranges), diameters)
