"""
Exceptions raised by the disk_rigidity package.
"""


class RigidityError(Exception):
    """Base class for every error raised by disk_rigidity."""


class PointOutsideChart(RigidityError, ValueError):
    pass


class HypothesisViolation(RigidityError):
    """
    The deformation breaks the curvature bound K <= -1 + margin somewhere on the sampling grid.
    """

    def __init__(self, point, value, bound):
        self.point = point
        self.value = value
        self.bound = bound
        super().__init__(f"curvature {value:.6g} exceeds bound {bound:.6g} at x = ({point[0]:.4f}, {point[1]:.4f})")


class ChartEscape(RigidityError):
    pass


class NotEscaped(RigidityError):
    pass


class BvpNoConvergence(RigidityError):

    def __init__(self, message, best_residual):
        self.best_residual = best_residual
        super().__init__(f"{message} (best residual {best_residual:.3e})")


class EndpointMismatch(RigidityError):

    def __init__(self, mismatch):
        self.mismatch = mismatch
        super().__init__(f"ideal endpoints recovered with angular mismatch {mismatch:.3e}")


class DegenerateBoundaryPair(RigidityError, ValueError):
    pass


class NotConverged(RigidityError):

    def __init__(self, message, history):
        self.history = list(history)
        super().__init__(message)


class NotEntrySphere(RigidityError, ValueError):
    pass


class SolverFailure(RigidityError):

    def __init__(self, message, info=None):
        self.info = info
        super().__init__(message)


class PipelineStageFailure(RigidityError):

    def __init__(self, stage, residual, threshold):
        self.stage = stage
        self.residual = residual
        self.threshold = threshold
        super().__init__(f"stage '{stage}' failed: residual {residual:.3e} > {threshold:.3e}")


class ConfigError(RigidityError, ValueError):

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
