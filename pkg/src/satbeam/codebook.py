"""DFT beamforming codebook and the spatial window feeding the array.

The codebook is the unitary N-point DFT matrix ``W`` with entries
``exp(-2j*pi*k*n/N) / sqrt(N)``. Column ``n`` is the beam ``w_n``. Because
of the ``1/sqrt(N)`` scaling, ``W @ x`` is exactly ``numpy.fft.fft(x,
norm="ortho")``, which is what the fast application path uses.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .model import Assignment


@dataclass(frozen=True)
class DftCodebook:
    """Unitary N x N DFT codebook.

    The dense matrix is built lazily and marked read-only so one instance
    can be shared between workers.
    """

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"codebook size must be a positive integer, got {self.n!r}")

    @cached_property
    def matrix(self) -> np.ndarray:
        k = np.arange(self.n)
        w = np.exp(-2j * np.pi * np.outer(k, k) / self.n) / np.sqrt(self.n)
        w.flags.writeable = False
        return w

    def column(self, n: int) -> np.ndarray:
        """Beam vector ``w_n``."""
        return self.matrix[:, n]

    def transform(self, x: np.ndarray) -> np.ndarray:
        """Apply ``W`` along axis 0 with the FFT (O(N log N) per column)."""
        x = np.asarray(x)
        if x.shape[0] != self.n:
            raise ValueError(f"expected leading dimension {self.n}, got {x.shape[0]}")
        return np.fft.fft(x, axis=0, norm="ortho")


@dataclass(frozen=True)
class Window:
    """Selector of ``k`` consecutive DFT outputs starting at ``start``.

    Represents the binary K x N matrix ``Phi`` with ``Phi[i, start + i] = 1``.
    """

    start: int
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"window length must be positive, got {self.k}")
        if self.start < 0:
            raise ValueError(f"window start must be non-negative, got {self.start}")

    @classmethod
    def centered(cls, n: int, k: int) -> "Window":
        if k > n:
            raise ValueError(f"window length {k} exceeds codebook size {n}")
        return cls(start=(n - k) // 2, k=k)

    def check(self, n: int) -> None:
        if self.start + self.k > n:
            raise ValueError(
                f"window [{self.start}, {self.start + self.k}) does not fit in {n} DFT outputs"
            )

    @property
    def stop(self) -> int:
        return self.start + self.k

    def matrix(self, n: int) -> np.ndarray:
        """Dense ``Phi`` (K x N), mostly for checking the fast paths."""
        self.check(n)
        phi = np.zeros((self.k, n))
        phi[np.arange(self.k), self.start + np.arange(self.k)] = 1.0
        return phi


def build_codebook(n: int) -> DftCodebook:
    return DftCodebook(n)


def apply_codebook(codebook: DftCodebook, assignment: "Assignment", s) -> np.ndarray:
    """Compute ``W @ A @ s`` by scattering ``s`` onto the DFT inputs and
    running one FFT."""
    s = np.asarray(s)
    if assignment.n != codebook.n:
        raise ValueError(
            f"assignment has {assignment.n} DFT rows, codebook has {codebook.n}"
        )
    if s.shape != (assignment.m,):
        raise ValueError(f"expected {assignment.m} precoded symbols, got shape {s.shape}")
    s_tilde = np.zeros(codebook.n, dtype=complex)
    s_tilde[list(assignment.row_of)] = s
    return codebook.transform(s_tilde)


def apply_codebook_dense(codebook: DftCodebook, assignment: "Assignment", s) -> np.ndarray:
    """Reference O(N^2) path: explicit ``W @ A @ s``."""
    s = np.asarray(s)
    if assignment.n != codebook.n:
        raise ValueError(
            f"assignment has {assignment.n} DFT rows, codebook has {codebook.n}"
        )
    return codebook.matrix @ (assignment.matrix() @ s)


def effective_channel(h, window: Window, codebook: DftCodebook) -> np.ndarray:
    """Return ``H_eff = Phi^T H`` (N x M): the K antenna rows of ``h`` placed
    at the window positions, zeros elsewhere, so ``H_eff^H = H^H Phi``."""
    h = np.asarray(h)
    window.check(codebook.n)
    if h.ndim != 2 or h.shape[0] != window.k:
        raise ValueError(f"channel has {h.shape[0]} antenna rows, window selects {window.k}")
    h_eff = np.zeros((codebook.n, h.shape[1]), dtype=complex)
    h_eff[window.start:window.stop] = h
    return h_eff
