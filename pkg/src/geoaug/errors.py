"""Exception types shared across the package."""


class GeoAugError(Exception):
    """Base class for all errors raised by geoaug."""


class ParameterError(GeoAugError, ValueError):
    """An argument is outside its documented range."""


class UnderdeterminedError(GeoAugError):
    """Least-squares fit has fewer samples than unknowns and no regularization."""


class DegeneratePairError(GeoAugError):
    """Two interpolation endpoints share the same direction."""


class InsufficientSamplesError(GeoAugError):
    """Not enough radiance samples for the requested operation."""


class DegenerateNormalError(GeoAugError):
    """The field gradient vanishes, so no normal is defined."""


class EmptyOverlapError(GeoAugError):
    """Two depth maps share no jointly valid pixel."""


class SceneParseError(GeoAugError):
    """A scene description is malformed. The message names the offending field."""
