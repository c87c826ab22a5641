"""Exception types shared across the package."""


class HoikitError(Exception):
    """Base class for package errors."""


class ShapeMismatch(HoikitError):
    pass


class AllMaskedRow(HoikitError):
    """An attention row had every logit at -inf."""


class NonFiniteLoss(HoikitError):
    pass


class EmptyVocab(HoikitError):
    pass


class InfeasibleSplit(HoikitError):
    pass


class NoInteraction(HoikitError):
    pass


class GridMismatch(HoikitError):
    pass


class EmptyCaption(HoikitError):
    pass


class ZeroNorm(HoikitError):
    pass


class EmptyLabelSet(HoikitError):
    pass


class UnclassifiedCategory(HoikitError):
    pass
