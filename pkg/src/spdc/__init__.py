"""spdc: compiler and cycle-accurate simulator for SPD stream-processing cores."""

from .errors import SimError, SpdError
from .parser import parse, parse_file

__version__ = "0.1.0"

__all__ = ["SpdError", "SimError", "parse", "parse_file", "__version__"]
