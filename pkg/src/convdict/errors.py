"""Error taxonomy shared across the workbench.

The CLI maps these onto its exit-code contract, so solver and pipeline
code should raise the most specific class that applies.
"""


class DimensionError(ValueError):
    """Array shapes do not satisfy an operation's size contract."""


class PreconditionError(ValueError):
    """A mathematical precondition is violated (e.g. spectral norm > 1)."""


class SingularSystemError(ValueError):
    """A linear system is singular or numerically unsolvable."""


class FormatError(ValueError):
    """A file does not conform to its declared format."""


class SynthesisError(RuntimeError):
    """Instance synthesis is infeasible or exhausted its attempt budget."""


class TrainingDiverged(RuntimeError):
    """Training loss left the finite/stable regime."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history
