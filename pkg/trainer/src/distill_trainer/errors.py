"""Trainer error types."""


class TrainerError(Exception):
    pass


class SchemaViolation(TrainerError):
    """An instruction record is missing required fields."""


class EmptyTarget(TrainerError):
    """A record's target text is empty; its loss would be undefined."""


class IncompatibleAdapter(TrainerError):
    """Adapter artifact does not match the requested base model."""


class DivergedLoss(TrainerError):
    """Training loss became NaN/inf."""


class OutOfMemory(TrainerError):
    """Training ran out of memory; message carries the offending config."""
