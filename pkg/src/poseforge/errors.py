"""Exception types shared across the package.

Loaders and command handlers are total over these types: any malformed
input maps to one of them instead of leaking a bare ValueError/KeyError.
"""


class PoseforgeError(Exception):
    """Base class for all package errors."""


class InvalidRotationError(PoseforgeError):
    """Matrix is not a proper rotation (orthonormal, det +1)."""


class BehindCameraError(PoseforgeError):
    """Point or pivot has non-positive depth and cannot be projected."""


class DegenerateAxisError(PoseforgeError):
    """Rotation axis has (near-)zero length."""


class UnknownObjectError(PoseforgeError):
    """Object id not present in the scene."""


class DuplicateIdError(PoseforgeError):
    """Object id already present in the scene."""


class OutOfRangeError(PoseforgeError):
    """Value outside its documented range (opacity, spacing, scores...)."""


class OutOfBoundsError(PoseforgeError):
    """Pixel coordinate outside the image bounds."""


class ParseError(PoseforgeError):
    """Malformed file or text input."""


class UnsupportedFormatError(PoseforgeError):
    """File extension or encoding not handled by the loader."""


class LayoutError(PoseforgeError):
    """Dataset directory does not follow the documented layout."""


class VersionMismatchError(PoseforgeError):
    """Workspace file written by an incompatible version."""


class MissingPoseError(PoseforgeError):
    """Pose map does not cover the required object ids."""


class DimensionMismatchError(PoseforgeError):
    """Image or mask dimensions disagree."""


class EmptyMeshError(PoseforgeError):
    """Mesh has no vertices."""


class NoRecordsError(PoseforgeError):
    """No annotation records available for the requested aggregation."""


class MissingTrialsError(PoseforgeError):
    """A (user, sample) group does not contain the three required trials."""


class SessionCompleteError(PoseforgeError):
    """All trials of the session plan have been confirmed."""


class InvalidCommandError(PoseforgeError):
    """Command unknown or carrying invalid parameters."""


class UnknownSessionError(PoseforgeError):
    """Session id not present in the session manager."""
