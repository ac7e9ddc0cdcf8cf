"""Exceptions raised by the chaingauge modules."""


class ChainGaugeError(Exception):
    """Common ancestor for chaingauge related exceptions."""


class InvalidArgumentError(ChainGaugeError, ValueError):
    """An argument does not satisfy the operation's preconditions."""


class GenerationFailureError(ChainGaugeError):
    """A randomized generator ran out of its retry budget."""

    def __init__(self, what: str, attempts: int):
        self.what = what
        self.attempts = attempts
        self.message = "Failed to generate {} after {} attempts".format(what, attempts)

        super().__init__(self.message)


class ResourceLimitError(ChainGaugeError):
    """Raised if a problem is too large for an exact (exponential) method."""

    def __init__(self, size: int, cap: int, what: str = "qubits"):
        self.size = size
        self.cap = cap
        self.message = "Problem has {} {}, the configured cap is {}".format(size, what, cap)

        super().__init__(self.message)


class EmbeddingNotFoundError(ChainGaugeError):
    """The embedder gave up without a valid embedding."""

    def __init__(self, tries: int):
        self.tries = tries
        self.message = "No embedding found after {} tries".format(tries)

        super().__init__(self.message)


class DataIntegrityError(ChainGaugeError):
    """Loaded data is inconsistent with itself or with the model it claims to describe."""


class BracketExhaustedError(ChainGaugeError):
    """A bisection bracket does not contain the searched threshold."""


class TunerError(ChainGaugeError):
    """The chain strength search cannot run with the given inputs."""
