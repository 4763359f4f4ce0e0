"""Exception types raised across the package."""


class GimbalLock(ValueError):
    """Pitch is too close to +-90 degrees for a unique ZYX decomposition."""


class SingularGeometry(ValueError):
    """DVL beam geometry does not determine a 3-axis velocity."""


class DegenerateWindow(ValueError):
    """Velocity window does not excite enough directions to fix a rotation."""


class TooShort(ValueError):
    """Series shorter than the requested window length."""


class CorruptManifest(IOError):
    """Stored dataset or checkpoint fails its integrity checks."""


class ShapeMismatch(ValueError):
    """Array shapes are inconsistent with the network configuration."""


class LengthMismatch(ValueError):
    """Label and prediction collections differ in length."""


class Diverged(RuntimeError):
    """Training loss became non-finite."""


class MissingModel(RuntimeError):
    """A network checkpoint is required but was not supplied."""
