"""Exception types shared across the package."""


class SpnError(Exception):
    """Base class for all library errors."""


class SignatureSyntaxError(SpnError):
    """Malformed signature text."""


class ScopeError(SpnError):
    """Scope sets violate the construction rules."""


class WeightError(SpnError):
    """Mixing weights outside the probability simplex."""


class ModelError(SpnError):
    """Invalid leaf parameters or inconsistent leaf bindings."""


class DimensionError(SpnError):
    """Input vector length does not match the model dimension."""


class SupportError(SpnError):
    """Joint support grids of two models do not match."""


class SizeError(SpnError):
    """Exact enumeration would exceed the configured size cap."""


class StructureError(SpnError):
    """Operation requires two models with the same structure."""


class NumericalError(SpnError):
    """A numeric computation lost all precision."""


class SimplexError(SpnError):
    """Vector is not a valid probability vector."""


class InsufficientSamples(SpnError):
    """Fewer samples than the codec requires."""


class DegenerateSample(SpnError):
    """Selected sample points do not span the space."""


class LeafEncodeFailure(SpnError):
    """A non-negligible leaf could not be encoded."""

    def __init__(self, msg, leaf_index=None):
        super().__init__(msg)
        self.leaf_index = leaf_index


class LayoutError(SpnError):
    """Message layout does not match the structure."""


class BitstreamError(SpnError):
    """Bit payload truncated or malformed."""


class CapExceeded(SpnError):
    """Candidate enumeration would exceed the cap; carries the exact count."""

    def __init__(self, msg, count=None):
        super().__init__(msg)
        self.count = count


class EmptyCandidateSet(SpnError):
    """Selection was asked to choose from an empty candidate list."""
