"""Cholesky factorization with a bounded jitter schedule.

Every solve against a covariance matrix in the package goes through
:func:`factorize`, so the jitter policy lives in exactly one place.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg as la

from .exceptions import NumericalError

JITTER_START = 1e-10
JITTER_MAX = 1e-6


class Factor:
    """Lower Cholesky factor of ``A + jitter * I``."""

    __slots__ = ("L", "jitter")

    def __init__(self, L: np.ndarray, jitter: float = 0.0):
        self.L = L
        self.jitter = jitter

    @property
    def n(self) -> int:
        return self.L.shape[0]

    def half_solve(self, b):
        """Return ``L^{-1} b``."""
        return la.solve_triangular(self.L, b, lower=True, check_finite=False)

    def solve(self, b):
        """Return ``A^{-1} b``."""
        return la.cho_solve((self.L, True), b, check_finite=False)

    def logdet(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.L))))


def factorize(A: np.ndarray) -> Factor:
    """Cholesky-factor a symmetric PSD matrix, adding jitter only on failure.

    Jitter starts at ``1e-10 * mean(diag(A))`` and grows tenfold up to
    ``1e-6 * mean(diag(A))``.

    Raises
    ------
    NumericalError
        If the matrix is still not positive definite at the largest jitter.
    """
    A = np.asarray(A, dtype=float)
    if A.shape[0] == 0:
        return Factor(np.zeros((0, 0)))
    try:
        return Factor(la.cholesky(A, lower=True, check_finite=False))
    except la.LinAlgError:
        pass
    if not np.all(np.isfinite(A)):
        raise NumericalError("matrix contains non-finite entries")
    scale = float(np.mean(np.diag(A)))
    if scale <= 0.0:
        raise NumericalError("matrix has non-positive mean diagonal; cannot jitter")
    rel = JITTER_START
    idx = np.diag_indices_from(A)
    while rel <= JITTER_MAX * (1 + 1e-9):
        Aj = A.copy()
        Aj[idx] += rel * scale
        try:
            return Factor(la.cholesky(Aj, lower=True, check_finite=False), rel * scale)
        except la.LinAlgError:
            rel *= 10.0
    raise NumericalError(
        f"Cholesky failed after jitter up to {JITTER_MAX:g} x mean diagonal")


def gaussian_logpdf(y: np.ndarray, factor: Factor) -> float:
    """Zero-mean multivariate normal log density given a factored covariance."""
    n = factor.n
    if n == 0:
        return 0.0
    alpha = factor.half_solve(y)
    return -0.5 * float(alpha @ alpha) - 0.5 * factor.logdet() - 0.5 * n * math.log(2 * math.pi)


def psd_sqrt(S: np.ndarray, pinv: bool = False, rtol: float = 1e-12) -> np.ndarray:
    """Symmetric square root of a PSD matrix, or its pseudo-inverse.

    Eigenvalues below ``rtol * max eigenvalue`` are treated as zero.
    """
    S = 0.5 * (S + S.T)
    if S.shape == (1, 1):
        s = float(S[0, 0])
        return np.array([[0.0 if s <= 0 else (s ** -0.5 if pinv else s ** 0.5)]])
    w, V = np.linalg.eigh(S)
    top = max(float(w.max(initial=0.0)), 0.0)
    keep = w > rtol * top
    r = np.zeros_like(w)
    if pinv:
        r[keep] = 1.0 / np.sqrt(w[keep])
    else:
        r[keep] = np.sqrt(w[keep])
    return (V * r) @ V.T
