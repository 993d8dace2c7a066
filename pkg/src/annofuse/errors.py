"""Exception and warning types raised across the package."""


class AnnofuseError(ValueError):
    """Base class for all input and computation errors."""


class LengthMismatch(AnnofuseError):
    pass


class NonFinite(AnnofuseError):
    pass


class TooFewRaters(AnnofuseError):
    pass


class BadWindow(AnnofuseError):
    pass


class BadOrder(AnnofuseError):
    pass


class MissingStats(AnnofuseError):
    pass


class EmptySignal(AnnofuseError):
    pass


class DivergedAlignment(AnnofuseError):
    pass


class DomainMismatch(AnnofuseError):
    pass


class SegmentTooShort(AnnofuseError):
    pass


class BadBoundary(AnnofuseError):
    pass


class KTooLarge(AnnofuseError):
    pass


class BadFuzzifier(AnnofuseError):
    pass


class DimMismatch(AnnofuseError):
    pass


class DegenerateClustering(AnnofuseError):
    pass


class BadMembership(AnnofuseError):
    pass


class BadInput(AnnofuseError):
    pass


class LagTooLarge(AnnofuseError):
    pass


class SchemaError(AnnofuseError):
    """Malformed input file; the message names the file and row."""


class FewRatersWarning(UserWarning):
    """Fewer than three raters: fusion still runs but agreement estimates are weak."""


class AllRatersDropped(UserWarning):
    """Every rater was negatively correlated; fusion fell back to the plain mean."""


class RankDeficient(UserWarning):
    """Fewer non-zero principal components than requested."""
