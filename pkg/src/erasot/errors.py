"""Exception types shared across the package."""


class ErasotError(Exception):
    """Base class for all package errors."""


class SizeError(ErasotError):
    """A length precondition was violated (subset larger than pool, wrong bit count, ...)."""


class DisjointnessError(ErasotError):
    """Two index sets that must not overlap do."""


class BackendError(ErasotError):
    """An extractor backend cannot realize the requested spec (e.g. table too large)."""


class InfeasibleParams(ErasotError):
    """Protocol planning produced a non-positive rate or an empty key."""


class ProtocolError(ErasotError):
    """A malformed message or size mismatch inside a protocol phase."""


class OracleScaleError(ErasotError):
    """An exact-enumeration oracle was asked to run beyond its enumerable scale."""


class ParamError(ErasotError):
    """An oracle parameter constraint (e.g. fraction budget) was violated."""
