from __future__ import annotations


class LatticeError(Exception):
    """Base class for every computational failure raised by this package."""


class DegenerateModel(LatticeError):
    pass


class InvalidKernel(LatticeError):
    pass


class NoConvergence(LatticeError):
    def __init__(
        self,
        message: str,
        *,
        last_delta: float | None = None,
        resolution: int | None = None,
        tolerance: float | None = None,
    ) -> None:
        super().__init__(message)
        self.last_delta = last_delta
        self.resolution = resolution
        self.tolerance = tolerance

    def provenance(self) -> str:
        return (
            f"NoConvergence: resolution={self.resolution}, "
            f"last_delta={self.last_delta!r}, tolerance={self.tolerance!r}"
        )


class BoxTooLarge(LatticeError):
    pass


class DimensionMismatch(LatticeError):
    pass


class TruncationFailure(LatticeError):
    pass


class SizeMismatch(LatticeError):
    pass


class NonPositiveValue(LatticeError):
    pass


class TooFewPoints(LatticeError):
    pass


class OracleFailure(LatticeError):
    pass


class ConfigError(LatticeError):
    """Raised for invalid command configuration; maps to exit code 2."""
