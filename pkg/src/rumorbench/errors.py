"""Exception types raised across the package."""


class RumorBenchError(Exception):
    pass


class InvalidParameters(RumorBenchError, ValueError):
    pass


class GenerationRetryExhausted(RumorBenchError):
    pass


class RegenerationExhausted(RumorBenchError):
    """Every resampled graph of a trial came out disconnected."""


class GraphDisconnected(RumorBenchError, ValueError):
    pass


class SizeWindowEmpty(RumorBenchError, ValueError):
    pass


class NotRegular(RumorBenchError, ValueError):
    pass


class InvalidPermutation(RumorBenchError, ValueError):
    pass


class BoundViolation(RumorBenchError, AssertionError):
    """A quasirandom run broke a deterministic broadcast-time bound (engine bug)."""
