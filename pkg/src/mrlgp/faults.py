"""Bias, drift and drift-then-bias fault kernels, and fault removal.

Observations are modelled as ``y = f + e + noise`` with a stationary real
process ``f`` and a fault process ``e`` that is zero outside its window
``(t0, t1]``.  Fault removal samples the fault hyperparameters from their
prior, weights each sample by the evidence under ``K_f + K_e``, and mixes the
per-sample dual posteriors.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .exceptions import ConditioningError, NumericalError, ParameterError
from .gp import PosteriorEstimate, TimeSeries, _data_factor, _estimate, condition
from .hyper import (DEFAULT_SAMPLES, HyperPosterior, LogUniform, Uniform,
                    draw_prior, mix_estimates, posterior_from_loglik)
from .kernels import GramMatrix, KernelSpec, _locs, constant, squared_exponential, zero
from .mrl import RegionModel, chain_regions

FAULT_KINDS = ("bias", "drift", "drift_then_bias")


@dataclass(frozen=True)
class FaultSpec:
    """One fault episode on the window ``(t0, t1]``.

    ``mu`` is the magnitude (variance scale), ``L`` the drift time-scale,
    ``t_m`` the drift-to-bias transition and ``k_b_link`` the prior variance
    carried across it.
    """

    kind: str
    t0: float
    t1: float
    mu: float
    L: float | None = None
    t_m: float | None = None
    k_b_link: float | None = None

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise ParameterError(f"unknown fault kind {self.kind!r}")
        if not self.t0 < self.t1:
            raise ParameterError("fault window needs t0 < t1")
        if not self.mu >= 0:
            raise ParameterError("fault magnitude mu must be non-negative")
        if self.kind != "bias" and not (self.L is not None and self.L > 0):
            raise ParameterError("drift faults need a positive length-scale L")
        if self.kind == "drift_then_bias":
            if self.t_m is None or not self.t0 < self.t_m < self.t1:
                raise ParameterError("drift_then_bias needs t0 < t_m < t1")
            if self.k_b_link is None or self.k_b_link < 0:
                raise ParameterError("drift_then_bias needs k_b_link >= 0")

    def window(self, X) -> np.ndarray:
        X = _locs(X)
        return (X > self.t0) & (X <= self.t1)

    def cov(self, X, Y=None) -> np.ndarray:
        return _BUILDERS[self.kind](self, X, Y).values


def _check_kind(spec, kind):
    if spec.kind != kind:
        raise ParameterError(f"expected a {kind} fault, got {spec.kind}")


def bias_cov(spec: FaultSpec, X, Y=None) -> GramMatrix:
    """``mu`` when both points are inside ``(t0, t1]``, zero otherwise."""
    _check_kind(spec, "bias")
    X = _locs(X)
    Y = X if Y is None else _locs(Y)
    K = spec.mu * np.outer(spec.window(X), spec.window(Y)).astype(float)
    return GramMatrix(K, 0.0, X)


def drift_cov(spec: FaultSpec, X, Y=None) -> GramMatrix:
    """Squared-exponential drift pinned to zero at onset.

    Inside the window::

        mu * [exp(-(t - t')^2 / L^2) - exp(-(t - t0)^2 / L^2) exp(-(t' - t0)^2 / L^2)]
    """
    _check_kind(spec, "drift")
    X = _locs(X)
    Y = X if Y is None else _locs(Y)
    L2 = spec.L ** 2
    ax = np.exp(-(X - spec.t0) ** 2 / L2)
    ay = np.exp(-(Y - spec.t0) ** 2 / L2)
    K = spec.mu * (np.exp(-(X[:, None] - Y[None, :]) ** 2 / L2) - np.outer(ax, ay))
    K *= np.outer(spec.window(X), spec.window(Y))
    return GramMatrix(K, 0.0, X)


def fault_region_model(spec: FaultSpec) -> RegionModel:
    """The fault prior as a region chain (drift kinds only).

    drift:            zero | SE            with K_B = 0 at t0, cut at t1
    drift_then_bias:  zero | SE | constant with K_B = 0 at t0, K_B = k_b_link at t_m, cut at t1
    """
    se = squared_exponential(spec.mu, spec.L)
    if spec.kind == "drift":
        return RegionModel((spec.t0, spec.t1), (zero(), se, zero()), (0.0, None), (0, None))
    if spec.kind == "drift_then_bias":
        # the constant kernel's own level drops out once conditioned on k_b_link
        return RegionModel((spec.t0, spec.t_m, spec.t1), (zero(), se, constant(1.0), zero()),
                           (0.0, spec.k_b_link, None), (0, 0, None))
    raise ParameterError("bias faults are not built from a region chain")


def drift_then_bias_cov(spec: FaultSpec, X, Y=None) -> GramMatrix:
    """Drift from zero at ``t0`` that settles into a constant offset at ``t_m``."""
    _check_kind(spec, "drift_then_bias")
    X = _locs(X)
    model = fault_region_model(spec)
    if Y is None:
        return chain_regions(model, X)
    return GramMatrix(model.cov(X, _locs(Y)), 0.0, X)


_BUILDERS = {"bias": bias_cov, "drift": drift_cov, "drift_then_bias": drift_then_bias_cov}


# priors -----------------------------------------------------------------------

FAULT_PARAMS = {
    "bias": ("t0", "t1", "mu", "sigma2"),
    "drift": ("t0", "t1", "mu", "L", "sigma2"),
    "drift_then_bias": ("t0", "t1", "mu", "L", "t_m", "k_b_link", "sigma2"),
}


@dataclass(frozen=True)
class FaultPrior:
    """Fault kind plus a prior per hyperparameter (including noise ``sigma2``)."""

    kind: str
    priors: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise ParameterError(f"unknown fault kind {self.kind!r}")
        missing = set(FAULT_PARAMS[self.kind]) - set(self.priors)
        extra = set(self.priors) - set(FAULT_PARAMS[self.kind])
        if missing or extra:
            raise ParameterError(
                f"{self.kind} prior needs exactly {FAULT_PARAMS[self.kind]}; "
                f"missing {sorted(missing)}, unexpected {sorted(extra)}")
        ordered = {k: self.priors[k] for k in FAULT_PARAMS[self.kind]}
        object.__setattr__(self, "priors", ordered)

    def constraint(self, theta) -> bool:
        if not theta["t0"] < theta["t1"]:
            return False
        if self.kind == "drift_then_bias":
            return theta["t0"] < theta["t_m"] < theta["t1"]
        return True

    def spec(self, theta) -> FaultSpec:
        return FaultSpec(self.kind, theta["t0"], theta["t1"], theta["mu"], theta.get("L"),
                         theta.get("t_m"), theta.get("k_b_link"))


def default_fault_prior(kind: str, t, **overrides) -> FaultPrior:
    """Vague priors scaled to the sample times ``t``.

    Onset/end uniform over the span, log-uniform magnitude on [1e-3, 1e2],
    log-uniform drift scale on [1, span], log-uniform ``k_b_link`` on
    [1e-3, 1e2] and log-uniform noise on [1e-5, 1].
    """
    t = _locs(t)
    lo, hi = float(t.min()), float(t.max())
    span = hi - lo
    base = {
        "t0": Uniform(lo, hi),
        "t1": Uniform(lo, hi),
        "mu": LogUniform(1e-3, 1e2),
        "L": LogUniform(1.0, max(span, 1.0 + 1e-9)),
        "t_m": Uniform(lo, hi),
        "k_b_link": LogUniform(1e-3, 1e2),
        "sigma2": LogUniform(1e-5, 1.0),
    }
    base.update(overrides)
    return FaultPrior(kind, {k: base[k] for k in FAULT_PARAMS[kind]})


# removal ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FaultRemovalResult:
    """Mixture posteriors for the real process, the fault and their sum."""

    clean: PosteriorEstimate
    fault: PosteriorEstimate
    total: PosteriorEstimate
    hyper: HyperPosterior


_FAILED = None


def _dual_terms(Kf, Ke, y, sigma2, Kf_q, Ke_q, kf_qq, ke_qq):
    """Log evidence and f / e / (f+e) posteriors for one hyperparameter sample."""
    try:
        factor = _data_factor(Kf + Ke, sigma2)
    except NumericalError:
        return _FAILED
    if factor.n == 0:
        return (0.0, condition(factor, y, Kf_q, kf_qq), condition(factor, y, Ke_q, ke_qq),
                condition(factor, y, Kf_q + Ke_q, kf_qq + ke_qq))
    alpha = factor.half_solve(y)
    ll = -0.5 * float(alpha @ alpha) - 0.5 * factor.logdet() - 0.5 * y.size * math.log(2 * math.pi)
    Vf = factor.half_solve(Kf_q.T)
    Ve = factor.half_solve(Ke_q.T)
    # the total's cross-covariance is Kf_q + Ke_q, so its solve is Vf + Ve
    f = _estimate(Vf.T @ alpha, kf_qq, Vf, False)
    e = _estimate(Ve.T @ alpha, ke_qq, Ve, False)
    s = _estimate(f.mean + e.mean, kf_qq + ke_qq, Vf + Ve, False)
    return ll, f, e, s


def _combine(names, values, terms):
    ll = np.array([-math.inf if t is _FAILED else t[0] for t in terms])
    hp = posterior_from_loglik(names, values, ll)
    keep = np.flatnonzero(hp.weights > 0)
    w = hp.weights[keep] / hp.weights[keep].sum()
    parts = [mix_estimates([terms[i][j] for i in keep], w) for j in (1, 2, 3)]
    return FaultRemovalResult(parts[0], parts[1], parts[2], hp)


def _draw(fault_prior: FaultPrior, n_samples, seed):
    rng = np.random.default_rng(seed)
    return draw_prior(fault_prior.priors, n_samples, rng, fault_prior.constraint)


def _map(fn, items, workers):
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _remove_fault(train: TimeSeries, real_k: KernelSpec, fault_prior: FaultPrior,
                  n_samples: int, seed, query, workers: int = 1) -> FaultRemovalResult:
    query = train.t if query is None else _locs(query)
    n = len(train)
    pts = np.concatenate([train.t, query])
    Kf_all = real_k.cov(pts)
    names, values = _draw(fault_prior, n_samples, seed)

    def one(row):
        theta = dict(zip(names, (float(v) for v in row)))
        try:
            Ke_all = fault_prior.spec(theta).cov(pts)
        except (ConditioningError, ParameterError):
            return _FAILED
        return _dual_terms(Kf_all[:n, :n], Ke_all[:n, :n], train.y, theta["sigma2"],
                           Kf_all[n:, :n], Ke_all[n:, :n],
                           np.diag(Kf_all)[n:].copy(), np.diag(Ke_all)[n:].copy())

    terms = _map(one, values, workers)
    return _combine(names, values, terms)


def remove_fault(train: TimeSeries, real_k: KernelSpec, fault_prior: FaultPrior,
                 n_samples: int = DEFAULT_SAMPLES, seed=0, query=None,
                 workers: int = 1) -> FaultRemovalResult:
    """Separate the real process from a fault of the declared kind.

    Parameters
    ----------
    train : TimeSeries
        Observed (possibly faulty) data; must be non-empty.
    real_k : KernelSpec
        Kernel of the real process.
    fault_prior : FaultPrior
        Fault kind and hyperparameter priors, see :func:`default_fault_prior`.
    query : array, optional
        Where to report the estimates; defaults to ``train.t``.

    Raises
    ------
    InferenceError
        If no hyperparameter sample gives a finite evidence.
    """
    if len(train) == 0:
        raise ParameterError("fault removal needs at least one observation")
    return _remove_fault(train, real_k, fault_prior, n_samples, seed, query, workers)


@dataclass(frozen=True)
class OnlineConfig:
    real_k: KernelSpec
    fault_prior: FaultPrior
    n_samples: int = DEFAULT_SAMPLES
    seed: int = 0
    workers: int = 1


def online_filter(train: TimeSeries, config: OnlineConfig,
                  reuse: bool = True) -> list[FaultRemovalResult]:
    """Causal estimates: step ``i`` sees only observations ``0 .. i-1``.

    Each step equals :func:`remove_fault` on the length-``i`` prefix queried at
    ``t_i``; the first step is therefore the prior.  With ``reuse`` the
    per-sample covariance matrices are built once over the whole series and
    sliced, otherwise every prefix is rebuilt from scratch.
    """
    if not reuse:
        return [_remove_fault(train.prefix(i), config.real_k, config.fault_prior,
                              config.n_samples, config.seed, train.t[i:i + 1])
                for i in range(len(train))]
    t, y = train.t, train.y
    n = len(train)
    Kf_all = config.real_k.cov(t)
    names, values = _draw(config.fault_prior, config.n_samples, config.seed)

    def one(row):
        theta = dict(zip(names, (float(v) for v in row)))
        try:
            Ke_all = config.fault_prior.spec(theta).cov(t)
        except (ConditioningError, ParameterError):
            return [_FAILED] * n
        s2 = theta["sigma2"]
        return [_dual_terms(Kf_all[:i, :i], Ke_all[:i, :i], y[:i], s2,
                            Kf_all[i:i + 1, :i], Ke_all[i:i + 1, :i],
                            np.diag(Kf_all)[i:i + 1].copy(), np.diag(Ke_all)[i:i + 1].copy())
                for i in range(n)]

    per_sample = _map(one, values, config.workers)
    return [_combine(names, values, [terms[i] for terms in per_sample]) for i in range(n)]


def stack_steps(results: list[FaultRemovalResult]):
    """Concatenate single-point online results into (clean, fault) estimates."""
    def cat(attr):
        parts = [getattr(r, attr) for r in results]
        return PosteriorEstimate(np.concatenate([p.mean for p in parts]),
                                 np.concatenate([p.variance for p in parts]))
    return cat("clean"), cat("fault")
