"""Hyperparameter posteriors by importance sampling from the prior.

A *model* here is any callable ``model(theta, data) -> float`` returning the
log-likelihood of ``data`` under the hyperparameter dict ``theta``.  Drawing
``theta`` from the prior and weighting by that likelihood gives a weighted
sample of ``p(theta | data)``; predictions are then combined by moment
matching.
"""

from __future__ import annotations

import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Union

import numpy as np
from scipy.special import logsumexp

from .exceptions import ConditioningError, InferenceError, NumericalError, ParameterError
from .gp import PosteriorEstimate, TimeSeries, log_evidence

log = logging.getLogger(__name__)

DEFAULT_SAMPLES = 2000


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ParameterError(f"uniform prior needs lo < hi, got ({self.lo}, {self.hi})")

    def sample(self, rng, n):
        return rng.uniform(self.lo, self.hi, n)

    def logpdf(self, x):
        return -math.log(self.hi - self.lo) if self.lo <= x <= self.hi else -math.inf

    def __str__(self):
        return f"uniform({float(self.lo)!r}, {float(self.hi)!r})"


@dataclass(frozen=True)
class LogUniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not 0 < self.lo < self.hi:
            raise ParameterError(f"log-uniform prior needs 0 < lo < hi, got ({self.lo}, {self.hi})")

    def sample(self, rng, n):
        return np.exp(rng.uniform(math.log(self.lo), math.log(self.hi), n))

    def logpdf(self, x):
        if not self.lo <= x <= self.hi:
            return -math.inf
        return -math.log(x) - math.log(math.log(self.hi / self.lo))

    def __str__(self):
        return f"loguniform({float(self.lo)!r}, {float(self.hi)!r})"


@dataclass(frozen=True)
class Fixed:
    value: float

    def sample(self, rng, n):
        return np.full(n, float(self.value))

    def logpdf(self, x):
        # point mass: treated as a constant factor
        return 0.0 if x == self.value else -math.inf

    def __str__(self):
        return f"fixed({float(self.value)!r})"


Prior = Union[Uniform, LogUniform, Fixed]
PriorSpec = Mapping[str, Prior]

_PRIOR_RE = re.compile(r"^\s*(uniform|loguniform|log_uniform|fixed)\s*\(([^)]*)\)\s*$", re.I)


def parse_prior(text: str):
    """Parse ``uniform(lo, hi)``, ``loguniform(lo, hi)``, ``fixed(v)`` or a bare number."""
    m = _PRIOR_RE.match(text)
    if m is None:
        try:
            return Fixed(float(text))
        except ValueError:
            raise ParameterError(f"cannot parse prior {text!r}") from None
    kind = m.group(1).lower().replace("_", "")
    try:
        args = [float(a) for a in m.group(2).split(",")]
    except ValueError:
        raise ParameterError(f"cannot parse prior arguments in {text!r}") from None
    if kind == "fixed" and len(args) == 1:
        return Fixed(args[0])
    if kind in ("uniform", "loguniform") and len(args) == 2:
        return Uniform(*args) if kind == "uniform" else LogUniform(*args)
    raise ParameterError(f"wrong number of arguments in prior {text!r}")


@dataclass(frozen=True, eq=False)
class HyperPosterior:
    """Weighted hyperparameter samples.

    ``log_weights`` are normalized so that ``logsumexp(log_weights) == 0``.
    """

    names: tuple[str, ...]
    values: np.ndarray
    log_weights: np.ndarray
    log_likelihoods: np.ndarray
    n_failed: int = 0

    def __len__(self):
        return self.values.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def theta(self, i: int) -> dict[str, float]:
        return dict(zip(self.names, (float(v) for v in self.values[i])))

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def quantile(self, name: str, q: float) -> float:
        """Weighted quantile: smallest sample value whose cumulative weight reaches ``q``."""
        x = self.column(name)
        order = np.argsort(x, kind="stable")
        cw = np.cumsum(self.weights[order])
        i = int(np.searchsorted(cw, q * cw[-1], side="left"))
        return float(x[order][min(i, x.size - 1)])

    def median(self, name: str) -> float:
        return self.quantile(name, 0.5)

    def mean(self, name: str) -> float:
        return float(np.sum(self.weights * self.column(name)))

    def effective_sample_size(self) -> float:
        return float(1.0 / np.sum(self.weights ** 2))


def log_prior(theta: Mapping[str, float], priors: PriorSpec) -> float:
    return float(sum(priors[k].logpdf(theta[k]) for k in priors))


def _safe_loglik(model, theta, data) -> float:
    try:
        val = float(model(theta, data))
    except (NumericalError, ConditioningError, np.linalg.LinAlgError, ParameterError) as exc:
        log.debug("likelihood failed at %s: %s", theta, exc)
        return -math.inf
    return val if not math.isnan(val) else -math.inf


def log_unnormalized_posterior(theta: Mapping[str, float], data, model: Callable,
                               priors: PriorSpec) -> float:
    """``log p(data | theta) + log p(theta)``; ``-inf`` outside the prior support
    or when the likelihood cannot be evaluated."""
    lp = log_prior(theta, priors)
    if lp == -math.inf:
        return -math.inf
    ll = _safe_loglik(model, theta, data)
    if ll == -math.inf:
        log.warning("likelihood evaluation failed at %s", dict(theta))
    return ll + lp


def draw_prior(priors: PriorSpec, n: int, rng, constraint: Callable | None = None):
    """Draw ``n`` hyperparameter vectors, rejecting those failing ``constraint``."""
    names = tuple(priors)
    rows: list[np.ndarray] = []
    have = 0
    batch = max(n, 16)
    for _ in range(10000):
        block = np.column_stack([priors[k].sample(rng, batch) for k in names]) if names \
            else np.zeros((batch, 0))
        if constraint is not None:
            ok = np.array([bool(constraint(dict(zip(names, row)))) for row in block])
            block = block[ok]
        rows.append(block)
        have += block.shape[0]
        if have >= n:
            break
    else:
        raise ParameterError("prior constraint rejects almost every draw")
    return names, np.concatenate(rows)[:n]


def mc_marginalize(data, model: Callable, priors: PriorSpec, n: int = DEFAULT_SAMPLES,
                   seed=0, constraint: Callable | None = None,
                   workers: int = 1) -> HyperPosterior:
    """Importance-sample the hyperparameter posterior with the prior as proposal.

    Raises
    ------
    InferenceError
        If every sample has zero likelihood.
    """
    if n < 1:
        raise ParameterError("need at least one sample")
    rng = np.random.default_rng(seed)
    names, values = draw_prior(priors, n, rng, constraint)
    thetas = [dict(zip(names, (float(v) for v in row))) for row in values]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            ll = list(pool.map(lambda th: _safe_loglik(model, th, data), thetas))
    else:
        ll = [_safe_loglik(model, th, data) for th in thetas]
    return posterior_from_loglik(names, values, ll)


def posterior_from_loglik(names, values, ll) -> HyperPosterior:
    """Normalize prior-drawn samples by their log-likelihoods."""
    ll = np.asarray(ll, dtype=float)
    n_failed = int(np.sum(~np.isfinite(ll)))
    if n_failed == ll.size:
        raise InferenceError("every hyperparameter sample has zero likelihood")
    if n_failed:
        log.info("%d of %d hyperparameter samples failed", n_failed, ll.size)
    lw = ll - logsumexp(ll)
    return HyperPosterior(tuple(names), np.asarray(values, float), lw, ll, n_failed)


def marginal_predict(hp: HyperPosterior, predictor: Callable[[dict], PosteriorEstimate],
                     min_weight: float = 0.0) -> PosteriorEstimate:
    """Moment-matched mixture of per-sample predictions.

    ``mean = sum w_i m_i`` and ``var = sum w_i (v_i + m_i^2) - mean^2``,
    evaluated in the centred form for stability.  Samples with normalized
    weight below ``min_weight`` are skipped and the rest renormalized.
    """
    w = hp.weights
    keep = np.flatnonzero(w >= min_weight) if min_weight > 0 else np.flatnonzero(w > 0)
    if keep.size == 0:
        keep = np.array([int(np.argmax(w))])
    wk = w[keep] / w[keep].sum()
    preds = [predictor(hp.theta(i)) for i in keep]
    return mix_estimates(preds, wk)


def mix_estimates(preds, weights) -> PosteriorEstimate:
    M = np.stack([p.mean for p in preds])
    V = np.stack([p.variance for p in preds])
    w = np.asarray(weights, float)[:, None]
    mean = np.sum(w * M, axis=0)
    var = np.sum(w * V, axis=0) + np.sum(w * (M - mean) ** 2, axis=0)
    return PosteriorEstimate(mean, var)


def gp_evidence_model(build: Callable[[dict], tuple]) -> Callable:
    """Wrap ``build(theta) -> (covariance source, sigma2)`` as a likelihood model."""

    def model(theta, data: TimeSeries) -> float:
        k, sigma2 = build(theta)
        return log_evidence(data, k, sigma2)

    return model
