"""Exception types shared across the package."""


class PmWatchError(Exception):
    """Base class for all pmwatch errors."""


class InvalidSample(PmWatchError):
    """Raw reading violates its own bounds (e.g. pulse time exceeds the window)."""


class DomainError(PmWatchError):
    """Input outside the domain an operation is defined on."""


class NotInvertible(PmWatchError):
    """Requested concentration lies above what the sensor pipeline can produce."""


class NegativeConcentration(PmWatchError):
    """Concentrations are mass per volume and cannot be negative."""


class EmptySeries(PmWatchError):
    """An operation that needs at least one sample got none."""


class UnknownChannel(PmWatchError):
    """Channel id is not registered with the store."""


class UnknownField(PmWatchError):
    """Field name is not declared on the channel."""


class BadWriteKey(PmWatchError):
    """Write key does not match the channel's key."""


class RateLimited(PmWatchError):
    """Write arrived before the channel's minimum interval elapsed."""

    def __init__(self, retry_after: float):
        super().__init__(f"rate limited, retry after {retry_after:.3f} s")
        self.retry_after = retry_after


class StaleTimestamp(PmWatchError):
    """Sample timestamp does not advance the stream it belongs to."""


class EmptyChannel(PmWatchError):
    """Channel field holds no samples."""


class ParseError(PmWatchError):
    """A CSV row could not be parsed."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class SeriesTooShort(PmWatchError):
    """Series is too short to cut even one training window from."""


class ShapeMismatch(PmWatchError):
    """Array shapes disagree with the model's hidden size or window length."""


class EmptySplit(PmWatchError):
    """Evaluation split holds no examples."""


class DivergedLoss(PmWatchError):
    """Training loss became non-finite."""

    def __init__(self, epoch: int):
        super().__init__(f"loss diverged at epoch {epoch}")
        self.epoch = epoch


class NoOverlap(PmWatchError):
    """Device and station series share no timestamps."""


class ProfileError(PmWatchError):
    """Simulation profile file is malformed."""


class ConfigError(PmWatchError):
    """Service or threshold configuration is malformed."""
