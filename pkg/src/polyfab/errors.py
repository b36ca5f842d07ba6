"""Exception types shared across the package."""


class PolyfabError(Exception):
    pass


class ConfigError(PolyfabError):
    """Invalid specification: bad hyper-parameters, shape constraints, divisibility."""


class ShapeError(PolyfabError):
    """Runtime dimension mismatch between tensors."""


class DomainError(PolyfabError):
    """Input outside the mathematical domain of a function (e.g. arctanh(1.5))."""


class TrainDivergence(PolyfabError):
    """Loss became NaN/inf during training; carries the offending epoch/batch."""

    def __init__(self, message, epoch=None, batch=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch
