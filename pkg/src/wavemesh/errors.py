"""Exception hierarchy shared across the toolkit.

Three families matter for the CLI exit codes: ValidationError (bad input
data or configuration, exit 2), NumericalError (a solver or the training
loop failed, exit 3) and CacheError (missing or corrupt cache files,
exit 4). Plain ValueError is used for simple scalar-argument violations
and is treated like ValidationError by the CLI.
"""


class ValidationError(Exception):
    """Input data or configuration violates a documented precondition."""


class NumericalError(Exception):
    """A numerical routine failed to produce a usable result."""


class CacheError(Exception):
    """A cache or container file is missing or unreadable."""


# --- mesh ---------------------------------------------------------------

class MeshError(ValidationError):
    pass


class ParseError(MeshError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = f"{path}:{line}: " if path is not None and line is not None else ""
        super().__init__(f"{where}{message}")


class NonTriangleFace(MeshError):
    pass


class NonManifoldEdge(MeshError):
    pass


class InconsistentOrientation(MeshError):
    pass


class DegenerateTriangle(MeshError):
    pass


class IsolatedVertex(MeshError):
    pass


# --- operators / spectrum ------------------------------------------------

class FrameMeshMismatch(ValidationError):
    pass


class KTooLarge(ValidationError):
    pass


class FactorizationFailed(NumericalError):
    pass


class NotConverged(NumericalError):
    def __init__(self, message, residuals=None):
        self.residuals = residuals
        super().__init__(message)


# --- wavelets -------------------------------------------------------------

class SpectrumMismatch(ValidationError):
    pass


class ZeroColumnNorm(NumericalError):
    pass


class NotTightFrame(ValidationError):
    pass


# --- network ---------------------------------------------------------------

class SingleVertexShape(ValidationError):
    pass


class PermutationLengthMismatch(ValidationError):
    pass


class EmptyDataset(ValidationError):
    pass


class NonFiniteLoss(NumericalError):
    pass


# --- correspondence ---------------------------------------------------------

class DisconnectedMesh(ValidationError):
    def __init__(self, message, unreachable=None):
        self.unreachable = unreachable
        super().__init__(message)


# --- synthetic data ----------------------------------------------------------

class MagnitudeOutOfRange(ValidationError):
    pass


class ResolutionTooSmall(ValidationError):
    pass


class ConfigInvalid(ValidationError):
    pass


class ManifestInvalid(ValidationError):
    pass


# --- cli / caching -------------------------------------------------------------

class MissingCache(CacheError):
    pass


class CorruptCache(CacheError):
    pass
