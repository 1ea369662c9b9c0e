"""Exception hierarchy shared across the package.

Retryability is part of the contract: the refinement loop keys its
failure handling (retry, regenerate, clamp-and-flag) off these classes,
so raising the right one matters more than the message text.
"""


class AeroloopError(Exception):
    """Base class for all package errors."""


class ConfigError(AeroloopError):
    """Run configuration missing, unparsable, or inconsistent."""


class MeshError(AeroloopError):
    """Base class for mesh ingestion and geometry errors."""


class MeshFormatError(MeshError):
    """Input bytes do not parse in the declared format.

    ``byte_offset`` locates the first offending byte in the source file.
    """

    def __init__(self, message: str, byte_offset: int = 0):
        super().__init__(f"{message} (byte offset {byte_offset})")
        self.byte_offset = byte_offset


class EmptyMeshError(MeshError):
    """Mesh has no faces after parsing/validation."""


class MeshIndexError(MeshError):
    """A face references a vertex index outside the vertex table."""


class DegenerateGeometryError(MeshError):
    """Geometry has no usable extent (zero area, zero projection, ...)."""


class ZeroNormError(AeroloopError):
    """Cosine similarity is undefined for a zero-norm vector."""


class EmptyMaskError(AeroloopError):
    """Novelty comparison has no region of interest in any view."""


class ManifestError(AeroloopError):
    """Run manifest missing, empty, or unparsable."""


class BackendError(AeroloopError):
    """A generative/embedding backend call failed after its retry budget.

    Retryable at the loop level: the candidate may be regenerated.
    """

    retryable = True


class ProtocolError(AeroloopError):
    """Hard wire-protocol violation (schema, dimension drift). Not retryable."""

    retryable = False


class UnrepairableMeshError(MeshError):
    """Mesh stayed non-watertight after repair; caller should regenerate."""

    retryable = True


class SimulatorError(AeroloopError):
    """External physics simulation failed. All subclasses are retryable."""

    retryable = True


class SimulatorTimeoutError(SimulatorError):
    """External simulation exceeded its wall-clock budget."""


class SimulatorExitError(SimulatorError):
    """External simulation command returned a nonzero exit code."""


class SimulatorOutputError(SimulatorError):
    """External simulation produced missing or unparsable output files."""


class DegenerateReferenceError(AeroloopError):
    """Reference score set has zero spread; the novelty weight is undefined."""
