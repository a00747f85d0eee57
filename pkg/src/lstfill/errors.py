"""Exception types raised across the package."""


class LstFillError(Exception):
    """Base class for all package errors."""


class GeoreferenceError(LstFillError):
    """A raster file lacks usable georeferencing."""


class MisalignmentError(LstFillError):
    """Two grids differ in shape or georeferencing."""


class FullyOccludedError(LstFillError):
    """No clear pixel is available to predict from."""

    def __init__(self, msg="image fully occluded"):
        super().__init__(msg)


class NoReferencesError(LstFillError):
    """The temporal channel found no admissible reference scene."""

    def __init__(self, msg="no admissible reference frames"):
        super().__init__(msg)


class ServiceabilityError(LstFillError):
    """Occlusion factor is at or above the serviceability bound."""


class PlacementError(LstFillError):
    """No artificial occlusion square could be placed."""


class EmptyMaskError(LstFillError):
    """Scoring was requested over an empty pixel set."""


class ConfigError(LstFillError):
    """Invalid manifest, configuration, or command-line parameter."""
