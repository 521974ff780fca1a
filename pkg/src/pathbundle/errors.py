"""Exception hierarchy shared by all pathbundle modules."""


class PathBundleError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(PathBundleError):
    """Malformed numeric input: non-square, non-finite, or dimension mismatch."""


class SingularMatrixError(PathBundleError):
    """Matrix is singular within the configured tolerance."""


class SingularGaugeError(SingularMatrixError):
    """A gauge field is singular at a sampled point."""


class InvalidReparametrizationError(PathBundleError):
    """Parameter change is not monotone or not onto the target interval."""


class CoverageError(PathBundleError):
    """A point or path leaves the interiors of all atlas charts."""


class SamplingError(PathBundleError):
    """A requested sample point lies outside the region it was drawn for."""


class InconsistentBundleError(PathBundleError):
    """Local bundle data violates an overlap or cocycle condition."""


class CompositionError(PathBundleError):
    """Bordism slices do not compose: strand counts, signs, or points mismatch."""


class OracleError(PathBundleError):
    """A transport oracle returned unusable data or was queried off its table."""


class NotARotationError(PathBundleError):
    """A holonomy matrix is too far from a rotation to extract an angle."""


class ConfigError(PathBundleError):
    """Experiment configuration failed to parse or validate."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
