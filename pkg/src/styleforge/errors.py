"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: usage errors exit 2 (argparse), DataError
exits 3, TrainingError exits 4, anything else raised by us exits 5.
"""


class StyleforgeError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(StyleforgeError):
    """Invalid track specification (non-closing loop, bad segment, parse failure)."""


class OffTrackError(StyleforgeError):
    """Vehicle left the drivable corridor; carries the offending cross-track error."""

    def __init__(self, cross_track_error: float, limit: float):
        self.cross_track_error = cross_track_error
        self.limit = limit
        super().__init__(
            f"vehicle is {abs(cross_track_error):.2f} m from the centerline "
            f"(limit {limit:.2f} m)"
        )


class DimensionError(StyleforgeError):
    """Tensor shapes do not line up for an operation."""


class GraphError(StyleforgeError):
    """Backward called on a value that is not part of the recorded tape."""


class ConfigurationError(StyleforgeError):
    """Mismatched model pair or invalid configuration values."""


class DataError(StyleforgeError):
    """Dataset file or content problem (bad header, missing target speed, digest mismatch)."""


class TrainingError(StyleforgeError):
    """Training could not proceed or diverged."""
