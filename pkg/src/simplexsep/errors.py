"""Exception types raised across the package."""


class SimplexSepError(Exception):
    """Base class for all package-specific errors."""


class DegenerateSpectrumError(SimplexSepError):
    """Leading eigenvalue is non-positive; the spectrum carries no count."""


class RankDeficiencyError(SimplexSepError):
    """Identified simplex edges are numerically dependent.

    Usually means fewer distinct sources are present than were requested;
    rerun the counting step with a larger threshold.
    """


class SingularVertexMatrixError(SimplexSepError):
    """Vertex matrix cannot be inverted to recover probabilities."""


class NumericalFailureError(SimplexSepError):
    """An underlying linear-algebra routine failed to converge."""


class SignalTooShortError(SimplexSepError):
    """Signal is shorter than one analysis window."""


class NonColaError(SimplexSepError):
    """Window/hop combination violates constant overlap-add."""


class EmptySelectionError(SimplexSepError):
    """Every frame was gated out during feature extraction."""


class EmptyFrameSetError(SimplexSepError):
    """A speaker has no dominated frames to estimate its channel from."""

    def __init__(self, speaker: int, message: str | None = None):
        self.speaker = speaker
        super().__init__(message or f"no dominated frames for speaker {speaker}")


class UnderdeterminedError(SimplexSepError):
    """Fewer microphones than sources; linear unmixing is impossible."""


class DegenerateReferenceError(SimplexSepError):
    """A metric reference signal is identically zero."""


class PipelineStageError(SimplexSepError):
    """Wraps a module error with the pipeline stage it occurred in."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}': {cause}")
