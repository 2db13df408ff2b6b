"""Exception hierarchy shared across the engine."""


class KgragError(Exception):
    """Base class for all engine errors."""


class TripleParseError(KgragError):
    """A triple line could not be parsed."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class EmptyGraphError(KgragError):
    """The triple source contained no usable triples."""


class UnknownEntityError(KgragError):
    """An entity identifier is not present in the graph."""


class EmptySeedError(KgragError):
    """No query entity could be resolved against the graph."""


class LabelingError(KgragError):
    """A query could not be assigned a hop label."""


class DegenerateTrainingError(KgragError):
    """The training set does not contain both classes."""


class GenerationError(KgragError):
    """The LLM endpoint failed after exhausting retries."""


class ProtocolError(KgragError):
    """A remote endpoint returned a malformed reply."""


class DatasetError(KgragError):
    """A dataset file is missing or malformed."""


class ConfigError(KgragError):
    """A configuration value is out of range or inconsistent."""
