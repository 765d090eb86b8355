"""
Error definitions
Exceptions and warnings raised by the estimators and the experiment harness
"""


class BdRisError(Exception):
    """Base class for all library errors"""


class ConfigError(BdRisError):
    """Invalid or inconsistent experiment configuration"""


class DimensionError(BdRisError, ValueError):
    """Operand shapes do not agree"""


class EstimationError(BdRisError):
    """An estimator could not produce a trustworthy result"""


class RankDeficiencyError(EstimationError):
    """Least-squares system or projection basis is rank deficient"""


class NonOrthogonalScheduleError(EstimationError):
    """Baseline scattering schedule does not have the N·I vectorization Gram"""


class ZeroSignalError(EstimationError):
    """Beamspace row powers are all below the numerical floor"""


class FlatObjectiveError(EstimationError):
    """RIS angle search found no convincing correlation peak"""


class IdentifiabilityError(EstimationError):
    """Too few stage-2 observations for the RIS-user channel (C·M < N)"""


class GainResolutionError(EstimationError):
    """Gain-product matrix has no usable dominant component"""


class PlotError(BdRisError):
    """CSV input cannot be rendered"""


class RotationBoundaryWarning(UserWarning):
    """Best rotation sits on the search boundary (possible bin mis-detection)"""
