"""Chronological fold splits for the sample-split statistics."""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["FoldSplit"]


@dataclass(frozen=True)
class FoldSplit:
    """Two disjoint, chronologically ordered folds covering rounds 0..T-1.

    ``alternating`` puts odd rounds (1-based) in fold 0 and even rounds in
    fold 1; ``contiguous`` uses first half / second half.
    """

    mode: str
    i0: tuple
    i1: tuple

    def __post_init__(self):
        i0, i1 = list(self.i0), list(self.i1)
        if sorted(i0) != i0 or sorted(i1) != i1:
            raise ValueError("fold indices must be ascending")
        union = set(i0) | set(i1)
        if set(i0) & set(i1):
            raise ValueError("folds must be disjoint")
        t = len(i0) + len(i1)
        if union != set(range(t)):
            raise ValueError("folds must cover rounds 0..T-1 exactly")

    @classmethod
    def alternating(cls, t: int) -> "FoldSplit":
        return cls("alternating", tuple(range(0, t, 2)), tuple(range(1, t, 2)))

    @classmethod
    def contiguous(cls, t: int) -> "FoldSplit":
        half = t // 2
        return cls("contiguous", tuple(range(half)), tuple(range(half, t)))

    @classmethod
    def make(cls, mode: str, t: int) -> "FoldSplit":
        if mode == "alternating":
            return cls.alternating(t)
        if mode == "contiguous":
            return cls.contiguous(t)
        raise ValueError(f"unknown split mode: {mode!r}")

    def swapped(self) -> "FoldSplit":
        return FoldSplit(self.mode, self.i1, self.i0)
