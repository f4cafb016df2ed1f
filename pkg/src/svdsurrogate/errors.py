"""Exceptions shared across the package."""


class DataError(Exception):
    """Malformed, inconsistent, or non-finite data in a file or matrix."""


class TrainingDiverged(Exception):
    """Training loss became non-finite; carries the epoch and learning rate."""

    def __init__(self, epoch: int, learning_rate: float):
        self.epoch = epoch
        self.learning_rate = learning_rate
        super().__init__(
            f"non-finite loss at epoch {epoch} (learning rate {learning_rate:g})"
        )
