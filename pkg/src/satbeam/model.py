"""Shared data model: beam assignment and precoder helpers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Assignment:
    """Beam assignment ``A`` stored as one DFT row index per user.

    ``row_of[m]`` is the DFT input (beam) carrying user ``m``'s precoded
    stream. Distinct rows make every user use exactly one beam and every beam
    carry at most one user.
    """

    row_of: tuple[int, ...]
    n: int

    def __post_init__(self):
        rows = tuple(int(r) for r in self.row_of)
        object.__setattr__(self, "row_of", rows)
        if not rows:
            raise ValueError("assignment needs at least one user")
        if len(set(rows)) != len(rows):
            raise ValueError(f"DFT rows must be distinct, got {rows}")
        if min(rows) < 0 or max(rows) >= self.n:
            raise ValueError(f"DFT rows must lie in [0, {self.n}), got {rows}")

    @property
    def m(self) -> int:
        return len(self.row_of)

    def matrix(self) -> np.ndarray:
        """Dense binary N x M matrix."""
        a = np.zeros((self.n, self.m))
        a[list(self.row_of), np.arange(self.m)] = 1.0
        return a

    @classmethod
    def from_matrix(cls, a) -> "Assignment":
        a = np.asarray(a)
        if not np.all((a == 0) | (a == 1)):
            raise ValueError("assignment matrix must be binary")
        if not np.all(a.sum(axis=0) == 1):
            raise ValueError("every user must be assigned exactly one beam")
        return cls(tuple(int(np.flatnonzero(a[:, m])[0]) for m in range(a.shape[1])), a.shape[0])

    @classmethod
    def random(cls, n: int, m: int, rng: np.random.Generator) -> "Assignment":
        if m > n:
            raise ValueError(f"cannot assign {m} users to {n} beams")
        return cls(tuple(int(r) for r in rng.permutation(n)[:m]), n)


def total_power(u) -> float:
    """``Trace(U^H U)``."""
    u = np.asarray(u)
    return float(np.sum(np.abs(u) ** 2))
