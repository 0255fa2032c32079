"""Exception types raised by the packing engine."""


class BinPackError(Exception):
    """Base class for all engine errors."""


class OutOfBoundsError(BinPackError):
    """A footprint or placement leaves the bin."""


class HeightOverflowError(BinPackError):
    """An item resting at its support height would poke out the bin top."""


class CollisionError(BinPackError):
    """A placement would intersect already packed material."""


class FloatingItemError(BinPackError):
    """A placement hangs above the surface it is supposed to rest on."""


class UnstablePlacementError(BinPackError):
    """A placement fails stability validation where it was required to pass."""


class UnknownItemError(BinPackError):
    """An item id is not present in the bin (or is already present on pack)."""


class BlockedItemError(BinPackError):
    """An item cannot be picked up because something rests on it."""


class NoCandidateError(BinPackError):
    """A policy was asked to choose from an empty stable candidate set."""


class NoExpansionError(BinPackError):
    """A search node has no expandable move left."""


class InconsistentStateError(BinPackError):
    """Incremental maps disagree with the from-scratch rebuild oracle."""
