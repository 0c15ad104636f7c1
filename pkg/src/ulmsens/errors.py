"""Exception types shared across the package."""


class UlmsensError(Exception):
    """Base class for errors raised by this package."""


class DataFormatError(UlmsensError):
    """Malformed input file (CSV row, PGM header, binary map layout)."""


class GeometryError(UlmsensError):
    """Two grids that must share geometry do not."""


class ConfigError(UlmsensError):
    """Invalid run-configuration document (CLI maps this to exit code 2)."""
