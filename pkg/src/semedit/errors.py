"""Exception types shared across the package."""


class PlacementError(RuntimeError):
    """Scene canvas cannot accommodate the requested objects."""


class SamplingError(RuntimeError):
    """A mask/region sampler ran out of options (empty support, attempt cap)."""


class CacheError(RuntimeError):
    """A cached semantics-stream result was used with different semantics."""


class CheckpointError(RuntimeError):
    """Checkpoint archive is corrupt, has the wrong version, or mismatched config."""


class MetricError(RuntimeError):
    """A metric was asked for on inputs where it is undefined (e.g. empty mask)."""


class NonFiniteLossError(RuntimeError):
    """Training produced a NaN/inf loss; carries the offending step metrics."""

    def __init__(self, message: str, metrics: dict | None = None):
        super().__init__(message)
        self.metrics = dict(metrics or {})
