"""Error hierarchy shared by every maxlab module.

Each error remembers the module and operation that raised it so the CLI can
report it and map it to an exit code.
"""


class LabError(Exception):
    """Base error for the lab.

    Attributes:
        module (str): The module that failed (e.g. ``mesh``).
        operation (str): The operation that failed (e.g. ``import_mesh``).
        exit_code (int): The process exit code the CLI uses for this error.
    """

    exit_code = 3

    def __init__(self, message: str, module: str, operation: str):
        self.message = message
        self.module = module
        self.operation = operation
        super().__init__(f"[{module}.{operation}] {message}")


class ConfigError(LabError):
    """Invalid run configuration."""

    exit_code = 4


class MeshError(LabError):
    """Invalid, unreadable or degenerate mesh."""

    exit_code = 4


class MaterialError(LabError):
    """Material data that is not symmetric positive definite or has the wrong shape."""

    exit_code = 4


class AssemblyError(LabError):
    """A bilinear form could not be assembled as requested."""


class SolverError(LabError):
    """Factorization or eigensolver failure."""


class SpectralGapError(SolverError):
    """No clear gap between the discrete kernel and the rest of the spectrum."""


class TopologyError(LabError):
    """Kernel dimensions that contradict the mesh topology or change across levels."""


class HarmonicBasisError(LabError):
    """A harmonic basis is needed but was not supplied."""
