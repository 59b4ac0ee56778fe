"""Exception hierarchy for the generator, the loss kernels and the CLI."""


class PfigError(ValueError):
    """Base class for every error raised by this package."""


class DimensionMismatch(PfigError):
    pass


class ImageTooSmall(PfigError):
    pass


class EmptyInput(PfigError):
    pass


class NotNormalized(PfigError):
    pass


class DegenerateHull(PfigError):
    pass


class EmptyRegion(PfigError):
    pass


class RegionTouchesBorder(PfigError):
    pass


class SolverDiverged(PfigError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ZeroVector(PfigError):
    pass


class Divergence(PfigError):
    pass


class MissingDirectory(PfigError):
    pass


class UnreadableImage(PfigError):
    pass


class MalformedLandmarks(PfigError):
    pass


class MissingImage(PfigError):
    pass


class ConfigError(PfigError):
    pass
