"""The covariance-matrix record shared by kernels, gaussian and axioms."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np


@dataclass
class CovarianceMatrix:
    """Symmetric kernel matrix over a finite ball configuration.

    ``factor`` is the lower Cholesky factor of ``entries + jitter_applied * I``
    once :func:`ballfield.gaussian.factorize` has run.
    """
    entries: np.ndarray
    dim: int
    kernel: str = "custom"
    params: dict = field(default_factory=dict)
    factor: Optional[np.ndarray] = None
    jitter_applied: float = 0.0
    max_error_estimate: float = 0.0
    tail_bound: float = 0.0
    quadrature: dict = field(default_factory=dict)

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)
        n = self.entries.shape[0]
        if self.entries.shape != (n, n):
            raise ValueError(f"covariance entries must be square, got {self.entries.shape}")

    @property
    def order(self) -> int:
        return self.entries.shape[0]

    @property
    def scale(self) -> float:
        """trace / n, the reference magnitude for relative tolerances."""
        return float(np.trace(self.entries)) / self.order

    def submatrix(self, idx) -> "CovarianceMatrix":
        idx = np.asarray(idx, dtype=int)
        return replace(self, entries=self.entries[np.ix_(idx, idx)].copy(), factor=None, jitter_applied=0.0)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])
