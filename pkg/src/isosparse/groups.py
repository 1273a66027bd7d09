"""Threshold parameters and coefficient grouping structures."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np


@dataclass(frozen=True)
class ThresholdParams:
    """Weight pair (lam, gamma) of the group threshold operator.

    ``lam`` is the base threshold weight and ``gamma`` controls how strongly
    coefficients within a group compete.  The product ``lam * gamma`` must be
    strictly below 1: that is the regime where the thresholding objective is
    strictly convex and the operator single-valued.  ``lam * gamma == 1`` is
    rejected as well, since the minimizer may then be non-unique.
    """

    lam: float
    gamma: float

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"lam must be finite and nonnegative, got {self.lam}")
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise ValueError(f"gamma must be finite and nonnegative, got {self.gamma}")
        if self.lam * self.gamma >= 1.0:
            raise ValueError(
                f"lam * gamma = {self.lam * self.gamma:g} >= 1: "
                "threshold operator is not single-valued"
            )

    @property
    def lam_gamma(self) -> float:
        return self.lam * self.gamma


class GroupLayout:
    """Ordered partition of indices {0..total_length-1} into disjoint groups.

    Groups may have arbitrary (positive) sizes and need not be contiguous.
    Every index must belong to exactly one group.
    """

    def __init__(self, total_length: int, groups: Sequence):
        total_length = int(total_length)
        idx_groups = [np.asarray(g, dtype=np.intp).ravel() for g in groups]
        if any(g.size == 0 for g in idx_groups):
            raise ValueError("groups must be non-empty")
        counts = np.zeros(total_length, dtype=np.intp)
        for g in idx_groups:
            if g.min() < 0 or g.max() >= total_length:
                raise ValueError("group index out of range")
            counts[g] += 1
        if not np.all(counts == 1):
            bad = int(np.flatnonzero(counts != 1)[0])
            raise ValueError(f"groups must partition 0..{total_length - 1}; index {bad} is covered {counts[bad]} times")
        self.total_length = total_length
        self.groups = idx_groups
        self._size_classes = None

    @classmethod
    def contiguous(cls, total_length: int, group_size: int) -> "GroupLayout":
        """Consecutive blocks of ``group_size`` indices; last block may be shorter."""
        if group_size < 1:
            raise ValueError("group_size must be >= 1")
        edges = list(range(0, total_length, group_size)) + [total_length]
        return cls(total_length, [np.arange(a, b) for a, b in zip(edges[:-1], edges[1:])])

    @classmethod
    def single(cls, total_length: int) -> "GroupLayout":
        return cls(total_length, [np.arange(total_length)])

    def __len__(self) -> int:
        return len(self.groups)

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.groups)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([g.size for g in self.groups])

    def size_classes(self):
        """Groups batched by common size, for vectorized per-group kernels.

        Returns a list of ``(positions, index_matrix)`` pairs where
        ``positions`` are the group numbers sharing one size and
        ``index_matrix`` has shape ``(len(positions), size)``.
        """
        if self._size_classes is None:
            by_size: dict[int, list[int]] = {}
            for gi, g in enumerate(self.groups):
                by_size.setdefault(g.size, []).append(gi)
            self._size_classes = [
                (np.array(pos, dtype=np.intp), np.vstack([self.groups[p] for p in pos]))
                for _, pos in sorted(by_size.items())
            ]
        return self._size_classes


class SuperGroupLayout:
    """Two-level grouping: contiguous runs of sub-groups form super-groups.

    ``base`` partitions the coefficients into sub-groups; ``supergroups`` is a
    sequence of ``(start, stop)`` runs over sub-group numbers that must tile
    ``0..len(base)`` without gaps or overlap.
    """

    def __init__(self, base: GroupLayout, supergroups: Sequence):
        runs = [(int(a), int(b)) for a, b in supergroups]
        expected = 0
        for a, b in runs:
            if a != expected or b <= a:
                raise ValueError("supergroups must be non-empty contiguous runs tiling the sub-group index range")
            expected = b
        if expected != len(base):
            raise ValueError(f"supergroups cover {expected} sub-groups, expected {len(base)}")
        self.base = base
        self.supergroups = runs
        self._member_classes = None

    @property
    def total_length(self) -> int:
        return self.base.total_length

    def __len__(self) -> int:
        return len(self.supergroups)

    def member_classes(self):
        """Super-groups batched by common member count.

        Returns ``(positions, member_matrix)`` pairs; ``member_matrix`` holds
        sub-group numbers, shape ``(len(positions), members)``.
        """
        if self._member_classes is None:
            by_count: dict[int, list[int]] = {}
            for si, (a, b) in enumerate(self.supergroups):
                by_count.setdefault(b - a, []).append(si)
            out = []
            for _, pos in sorted(by_count.items()):
                mat = np.vstack([np.arange(*self.supergroups[p]) for p in pos])
                out.append((np.array(pos, dtype=np.intp), mat))
            self._member_classes = out
        return self._member_classes
