"""Link geometry shared by the attenuation and elliptic-beam channel models."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidGeometry

# Optical and technical link attributes used as defaults throughout the package.
DEFAULT_W_D = 1.15e-2
DEFAULT_A_R = 2.64e-2
DEFAULT_WAVELENGTH = 810e-9
DEFAULT_BETA = 0.7
DEFAULT_ALPHA_P = 2e-6
DEFAULT_ALTITUDE_RANGE = (18.5, 240.0)
DEFAULT_N0_NIGHT = 0.61
DEFAULT_N0_DAY = 0.01

MAX_ZENITH = math.radians(85.0)


def slant_path_length(altitude, zenith):
    """Straight-ray path length from the ground to ``altitude`` at zenith angle ``zenith``."""
    if altitude <= 0:
        raise InvalidGeometry("altitude must be positive")
    if not 0.0 <= zenith <= MAX_ZENITH * (1.0 + 1e-12):
        raise InvalidGeometry(f"zenith angle must lie in [0, 85] degrees, got {math.degrees(zenith):.3f}")
    return altitude / math.cos(zenith)


@dataclass(frozen=True)
class ChannelGeometry:
    """Ground-to-drone link geometry.

    Attributes
    ----------
    altitude : float
        Drone altitude h [m].
    zenith : float
        Zenith angle phi [rad], in [0, 85] deg.
    wavelength : float
        Signal wavelength [m].
    w_d : float
        Beam spot parameter w_D [m].
    a_r : float
        Receiving aperture radius [m].
    chi_ext : float or None
        Extinction factor in (0, 1]. ``None`` means "derive it from the
        Beer-Lambert extinction along the slant path" (see
        :func:`aerialqc.elliptic_channel.default_chi_ext`).
    """

    altitude: float
    zenith: float = 0.0
    wavelength: float = DEFAULT_WAVELENGTH
    w_d: float = DEFAULT_W_D
    a_r: float = DEFAULT_A_R
    chi_ext: float | None = None

    def __post_init__(self):
        if self.wavelength <= 0 or self.w_d <= 0 or self.a_r <= 0:
            raise InvalidGeometry("wavelength, w_d and a_r must be positive")
        if self.chi_ext is not None and not 0.0 < self.chi_ext <= 1.0:
            raise InvalidGeometry("chi_ext must lie in (0, 1]")
        slant_path_length(self.altitude, self.zenith)

    @property
    def distance(self):
        """Propagation distance z = h / cos(phi) [m]."""
        return slant_path_length(self.altitude, self.zenith)
