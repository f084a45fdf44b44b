"""Zero-mean GP regression: posteriors, dual-process split, evidence, sampling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .exceptions import ParameterError
from .kernels import GramMatrix, KernelSpec
from .linalg import Factor, factorize, gaussian_logpdf

# anything with .cov(X, Y) -> ndarray (KernelSpec, RegionModel, FaultSpec, ...)
# or a plain callable k(X, Y) -> ndarray
CovarianceSource = Union[KernelSpec, Callable]


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Sample times ``t`` (strictly increasing) with observed values ``y``."""

    t: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.t, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if t.ndim != 1 or t.shape != y.shape:
            raise ParameterError("t and y must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
            raise ParameterError("time series contains NaN or Inf")
        if np.any(np.diff(t) <= 0):
            raise ParameterError("sample times must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.t.size

    def prefix(self, n: int) -> "TimeSeries":
        return TimeSeries(self.t[:n], self.y[:n])

    @property
    def span(self) -> tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])


@dataclass(frozen=True, eq=False)
class PosteriorEstimate:
    """Per-point Gaussian marginals; ``cov`` only when the full matrix was asked for."""

    mean: np.ndarray
    variance: np.ndarray
    cov: np.ndarray | None = None

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.variance)

    def __len__(self) -> int:
        return self.mean.size


def cov_matrix(source: CovarianceSource, X, Y=None) -> np.ndarray:
    """Evaluate any covariance source on locations ``X`` (and ``Y``)."""
    X = np.atleast_1d(np.asarray(X, float))
    Yv = X if Y is None else np.atleast_1d(np.asarray(Y, float))
    if hasattr(source, "cov"):
        K = source.cov(X, None if Y is None else Yv)
    elif callable(source):
        K = source(X, Yv)
    else:
        raise TypeError(f"not a covariance source: {type(source).__name__}")
    K = np.asarray(K.values if isinstance(K, GramMatrix) else K, dtype=float)
    if K.shape != (X.size, Yv.size):
        raise ParameterError(f"covariance source returned shape {K.shape}")
    return K


def _estimate(mean, prior, V, full_cov):
    """Posterior moments given ``V = L^{-1} K(X, X*)``."""
    if full_cov:
        cov = prior - V.T @ V
        cov = 0.5 * (cov + cov.T)
        var = np.diag(cov).copy()
    else:
        var = prior - np.einsum("ij,ij->j", V, V)
        cov = None
    var = np.where(var < 0.0, 0.0, var)
    if cov is not None:
        np.fill_diagonal(cov, var)
    return PosteriorEstimate(mean, var, cov)


def condition(factor: Factor, y: np.ndarray, cross: np.ndarray, prior: np.ndarray,
              full_cov: bool = False) -> PosteriorEstimate:
    """Condition one latent component on ``y``.

    Parameters
    ----------
    factor : Factor
        Factor of the data covariance ``K_s(X, X) + sigma^2 I``.
    cross : ndarray (m, n)
        Covariance between the component at the query points and the data.
    prior : ndarray
        Prior covariance of the component at the query points: (m, m) when
        ``full_cov``, else its diagonal (m,).
    """
    m = cross.shape[0]
    if factor.n == 0:
        if full_cov:
            return PosteriorEstimate(np.zeros(m), np.diag(prior).copy(), prior.copy())
        return PosteriorEstimate(np.zeros(m), np.asarray(prior, float).copy())
    V = factor.half_solve(cross.T)
    mean = V.T @ factor.half_solve(y)
    return _estimate(mean, prior, V, full_cov)


def _data_factor(K: np.ndarray, sigma2: float) -> Factor:
    if sigma2 < 0:
        raise ParameterError("noise variance must be non-negative")
    A = K.copy()
    A[np.diag_indices_from(A)] += sigma2
    return factorize(A)


def posterior(train: TimeSeries, Xstar, k: CovarianceSource, sigma2: float,
              full_cov: bool = False) -> PosteriorEstimate:
    """GP posterior at ``Xstar``::

        mean = K(X*, X) [K(X, X) + s2 I]^{-1} y
        cov  = K(X*, X*) - K(X*, X) [K(X, X) + s2 I]^{-1} K(X*, X)^T
    """
    Xs = np.atleast_1d(np.asarray(Xstar, float))
    factor = _data_factor(cov_matrix(k, train.t), sigma2)
    prior = cov_matrix(k, Xs) if full_cov else np.diag(cov_matrix(k, Xs)).copy()
    return condition(factor, train.y, cov_matrix(k, Xs, train.t), prior, full_cov)


def dual_posterior(train: TimeSeries, Xstar, k_f: CovarianceSource, k_e: CovarianceSource,
                   sigma2: float, full_cov: bool = False):
    """Separate posteriors for the real process ``f`` and the fault process ``e``.

    Both share the data covariance ``K_f + K_e + sigma2 I``.

    Returns
    -------
    (PosteriorEstimate, PosteriorEstimate)
        Estimates for ``f`` and ``e``.
    """
    Xs = np.atleast_1d(np.asarray(Xstar, float))
    factor = _data_factor(cov_matrix(k_f, train.t) + cov_matrix(k_e, train.t), sigma2)
    out = []
    for k in (k_f, k_e):
        prior = cov_matrix(k, Xs) if full_cov else np.diag(cov_matrix(k, Xs)).copy()
        out.append(condition(factor, train.y, cov_matrix(k, Xs, train.t), prior, full_cov))
    return out[0], out[1]


def log_evidence(train: TimeSeries, k: CovarianceSource, sigma2: float) -> float:
    """``log N(y; 0, K(X, X) + sigma2 I)``."""
    factor = _data_factor(cov_matrix(k, train.t), sigma2)
    return gaussian_logpdf(train.y, factor)


def sample_prior(k: CovarianceSource, X, seed=None, size: int | None = None) -> np.ndarray:
    """Draw from ``N(0, K(X, X))``.

    Locations with exactly zero prior variance are returned as exact zeros;
    only the remaining block is factored.

    Parameters
    ----------
    seed : int, numpy Generator or None
    size : int, optional
        Number of draws; the result is then ``(size, n)``.
    """
    X = np.atleast_1d(np.asarray(X, float))
    rng = np.random.default_rng(seed)
    K = cov_matrix(k, X)
    support = np.flatnonzero(np.diag(K) > 0)
    shape = (1 if size is None else size, X.size)
    out = np.zeros(shape)
    if support.size:
        factor = factorize(K[np.ix_(support, support)])
        z = rng.standard_normal((shape[0], support.size))
        out[:, support] = z @ factor.L.T
    return out[0] if size is None else out
