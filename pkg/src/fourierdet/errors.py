"""Exception hierarchy. Every error is a ``ValueError`` so callers can catch broadly."""


class FourierDetError(ValueError):
    pass


class DegeneratePolygon(FourierDetError):
    pass


class OutOfBounds(FourierDetError):
    pass


class InsufficientSamples(FourierDetError):
    pass


class OutOfRange(FourierDetError):
    pass


class DimensionMismatch(FourierDetError):
    pass


class BothDegenerate(FourierDetError):
    pass


class ZeroArea(FourierDetError):
    pass


class LengthMismatch(FourierDetError):
    pass


class Infeasible(FourierDetError):
    pass


class NotEnoughProposals(FourierDetError):
    pass


class EmptyMatchSet(FourierDetError):
    pass


class ScoreOutOfRange(FourierDetError):
    pass


class WeightsNotNormalized(FourierDetError):
    pass
