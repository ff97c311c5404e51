"""Exception hierarchy shared by all gwalk modules."""


class WalkError(Exception):
    """Base class for all gwalk errors."""


class ConfigurationError(WalkError):
    """Invalid input: bad lattice shape, inadmissible wavenumber, bad config."""


class SignConditionError(ConfigurationError):
    """A gravitational-wave amplitude constant violates its sign condition."""


class GeometryError(WalkError):
    """Degenerate geometry: singular cosine matrix or malformed triad."""


class ConsistencyError(WalkError):
    """An internal cross-check failed beyond its tolerance."""
