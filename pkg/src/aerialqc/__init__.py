"""Free-space quantum channel models for low-altitude drone links."""

from .errors import AerialQCError
from .geometry import ChannelGeometry

__all__ = ["AerialQCError", "ChannelGeometry"]
__version__ = "0.1.0"
