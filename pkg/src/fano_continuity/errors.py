"""Exception types shared across the solver stack."""


class FanoContinuityError(Exception):
    """Base class; `kind` is the machine-readable error name."""

    kind = "Error"

    def record(self):
        return {"error": self.kind, "message": str(self)}


class InvalidModel(FanoContinuityError, ValueError):
    kind = "InvalidModel"


class NonAdmissible(FanoContinuityError, ValueError):
    kind = "NonAdmissible"

    def __init__(self, msg, node=None):
        super().__init__(msg)
        self.node = node


class DerivativeNoise(FanoContinuityError, ValueError):
    kind = "DerivativeNoise"


class QuadratureDivergence(FanoContinuityError, ValueError):
    kind = "QuadratureDivergence"


class ClassMismatch(FanoContinuityError, ValueError):
    kind = "ClassMismatch"


class MassMismatch(FanoContinuityError, ValueError):
    kind = "MassMismatch"


class InconsistentG(FanoContinuityError, ValueError):
    kind = "InconsistentG"


class SmoothnessCheckFailed(FanoContinuityError, ValueError):
    kind = "SmoothnessCheckFailed"


class SolverError(FanoContinuityError, RuntimeError):
    kind = "SolverError"


class LineSearchStall(SolverError):
    kind = "LineSearchStall"


class NonAdmissibleBasin(SolverError):
    kind = "NonAdmissibleBasin"


class MaxIterations(SolverError):
    kind = "MaxIterations"


class StepRefinementExhausted(SolverError):
    kind = "StepRefinementExhausted"


class PreconditionViolated(FanoContinuityError, ValueError):
    kind = "PreconditionViolated"


class HypothesisFailed(FanoContinuityError, ValueError):
    kind = "HypothesisFailed"


class InsufficientData(FanoContinuityError, ValueError):
    kind = "InsufficientData"
