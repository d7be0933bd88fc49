"""Exception types shared across the package."""


class StreamaugError(Exception):
    """Base class for all errors raised by this package."""


class MissingField(StreamaugError):
    def __init__(self, field: str):
        super().__init__(f"record is missing required field {field!r}")
        self.field = field


class RatingOutOfRange(StreamaugError):
    def __init__(self, value):
        super().__init__(f"rating {value!r} outside the 1..5 scale")
        self.value = value


class ParseError(StreamaugError):
    def __init__(self, line_no: int, cause: Exception | str):
        super().__init__(f"line {line_no}: {cause}")
        self.line_no = line_no
        self.cause = cause


class EmptyStreamError(StreamaugError):
    """Operation needs at least one event."""


class OutOfOrderEvent(StreamaugError):
    def __init__(self, timestamp: int, last: int):
        super().__init__(f"event at t={timestamp} arrived after t={last}")
        self.timestamp = timestamp
        self.last = last


class UnknownNode(StreamaugError):
    def __init__(self, node: str):
        super().__init__(f"node {node!r} is not in the graph")
        self.node = node


class UnknownUser(StreamaugError):
    def __init__(self, user: str):
        super().__init__(f"user {user!r} has no events in the stream")
        self.user = user


class DegenerateInput(StreamaugError):
    """Input too small or malformed for the requested computation."""


class EmptyHistory(StreamaugError):
    def __init__(self, entity: str):
        super().__init__(f"entity {entity!r} has no reviews to sample from")
        self.entity = entity


class InsufficientNeighbors(StreamaugError):
    def __init__(self, user: str):
        super().__init__(f"user {user!r} has no second-order neighbors")
        self.user = user


class NoCandidates(StreamaugError):
    def __init__(self, user: str):
        super().__init__(f"no candidate products reachable from user {user!r}")
        self.user = user


class UnparseableOutput(StreamaugError):
    def __init__(self, attempts: int, detail: str = ""):
        msg = f"backend output unparseable after {attempts} attempts"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.attempts = attempts


class MissingSynthesis(StreamaugError):
    def __init__(self, user: str, timestamp: int):
        super().__init__(
            f"no synthesized event for planned slot user={user!r} t={timestamp}"
        )
        self.user = user
        self.timestamp = timestamp


class LengthMismatch(StreamaugError):
    def __init__(self, n_predicted: int, n_gold: int):
        super().__init__(f"{n_predicted} predictions vs {n_gold} gold labels")


class EmptyInput(StreamaugError):
    """Metric requested over zero samples."""


class BackendError(StreamaugError):
    """Base class for completion-backend failures."""


class AuthError(BackendError):
    """Authentication rejected; never retried."""


class RateLimited(BackendError):
    """HTTP 429 persisted through every retry attempt."""


class ServerError(BackendError):
    """HTTP 5xx persisted through every retry attempt."""


class BackendTimeout(BackendError):
    """Request timed out on every retry attempt."""


class PipelineError(StreamaugError):
    """Stage failure surfaced by the CLI with its stage name."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
