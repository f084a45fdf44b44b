"""Additive separation of a smooth signal from a windowed artifact.

The observation is ``y = s_sig + s_art`` with ``s_sig = m_sig + r_sig`` and
``s_art = m_art + r_art``.  ``m_sig`` is a squared-exponential GP; ``m_art``
is zero outside ``[T_s, T_e]`` and inside is two squared-exponential pieces
that meet (continuously, with a kink allowed) at the window midpoint.  The
residuals ``r_*`` belong to the signals and are apportioned, not filtered.

Processing is causal: at each sample the hidden means are predicted from the
earlier samples only, and the observed value is split between the two
components in proportion to their predictive variances.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .exceptions import ConditioningError, DegenerateModelError, NumericalError, ParameterError
from .gp import PosteriorEstimate, TimeSeries, _data_factor, dual_posterior
from .hyper import (DEFAULT_SAMPLES, HyperPosterior, LogUniform, Uniform, draw_prior,
                    mix_estimates, posterior_from_loglik)
from .kernels import GramMatrix, KernelSpec, _locs, squared_exponential, zero
from .mrl import RegionModel, chain_regions

HYPERPARAMETERS = ("sig_mu", "sig_L", "art_mu", "art_L", "T_s", "T_e", "R_sig", "R_art")


@dataclass(frozen=True)
class SeparationModel:
    """Signal kernel, artifact window and residual variances.

    ``art_v`` is the artifact variance at the window midpoint; when omitted
    it equals the artifact scale height ``art_mu``.
    """

    k_sig: KernelSpec
    art_mu: float
    art_L: float
    T_s: float
    T_e: float
    R_sig: float
    R_art: float
    art_v: float | None = None

    def __post_init__(self):
        if not self.T_s < self.T_e:
            raise ParameterError("artifact window needs T_s < T_e")
        if self.R_sig < 0 or self.R_art < 0:
            raise ParameterError("residual variances must be non-negative")
        if self.art_mu < 0 or not self.art_L > 0:
            raise ParameterError("artifact needs mu >= 0 and L > 0")

    @classmethod
    def from_theta(cls, theta: Mapping[str, float]) -> "SeparationModel":
        return cls(squared_exponential(theta["sig_mu"], theta["sig_L"]), theta["art_mu"],
                   theta["art_L"], theta["T_s"], theta["T_e"], theta["R_sig"], theta["R_art"],
                   theta.get("art_v"))

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.T_s + self.T_e)

    @property
    def k_art(self) -> RegionModel:
        se = squared_exponential(self.art_mu, self.art_L)
        v = self.art_mu if self.art_v is None else self.art_v
        return RegionModel((self.T_s, self.midpoint, self.T_e), (zero(), se, se, zero()),
                           (0.0, v, 0.0), (0, 0, 0))

    @property
    def sigma2(self) -> float:
        return self.R_sig + self.R_art


def artifact_prior(model: SeparationModel, X, Y=None) -> GramMatrix:
    """Artifact prior covariance: zero outside the window and at its ends."""
    X = _locs(X)
    if Y is None:
        return chain_regions(model.k_art, X)
    return GramMatrix(model.k_art.cov(X, _locs(Y)), 0.0, X)


def hidden_posteriors(model: SeparationModel, train: TimeSeries, xstar, full_cov: bool = False):
    """Posteriors of the smooth parts ``m_sig`` and ``m_art`` at ``xstar``.

    Both use the data covariance ``K_sig + K_art + (R_sig + R_art) I``.
    """
    return dual_posterior(train, xstar, model.k_sig, model.k_art, model.sigma2, full_cov)


@dataclass(frozen=True, eq=False)
class SeparationResult:
    """Apportioned components and the hidden means they came from."""

    sig: PosteriorEstimate
    art: PosteriorEstimate
    m_sig: PosteriorEstimate
    m_art: PosteriorEstimate
    hyper: HyperPosterior | None = None


def apportion(y, m_sig, cov_sig, m_art, cov_art, R_sig, R_art) -> SeparationResult:
    """Split each observed value between signal and artifact.

    With ``P_sig = cov_sig + R_sig`` and ``P_art = cov_art + R_art``::

        s_sig = [P_sig (y - m_art) + P_art m_sig] / (P_sig + P_art)
        s_art = [P_art (y - m_sig) + P_sig m_art] / (P_sig + P_art)
        var   = P_sig P_art / (P_sig + P_art)

    The variance is the product-of-Gaussians (precision) form that matches
    these means.
    """
    y, m_sig, cov_sig, m_art, cov_art = (np.asarray(a, float) for a in
                                         (y, m_sig, cov_sig, m_art, cov_art))
    P_sig = cov_sig + R_sig
    P_art = cov_art + R_art
    tot = P_sig + P_art
    if np.any(tot <= 0):
        raise DegenerateModelError("signal and artifact variances both vanish")
    s_sig = (P_sig * (y - m_art) + P_art * m_sig) / tot
    s_art = (P_art * (y - m_sig) + P_sig * m_art) / tot
    var = P_sig * P_art / tot
    return SeparationResult(PosteriorEstimate(s_sig, var), PosteriorEstimate(s_art, var.copy()),
                            PosteriorEstimate(m_sig, cov_sig), PosteriorEstimate(m_art, cov_art))


def sequential_predictions(model: SeparationModel, train: TimeSeries):
    """One-step-ahead hidden posteriors at every sample.

    Entry ``i`` conditions on samples ``0 .. i-1``.  One Cholesky factor of
    the full data covariance serves every prefix, since the factor of a
    leading block is the leading block of the factor.
    """
    t, y = train.t, train.y
    Ks = model.k_sig.cov(t)
    Ka = model.k_art.cov(t)
    factor = _data_factor(Ks + Ka, model.sigma2)
    v = factor.half_solve(y)
    before = np.triu(np.ones((t.size, t.size)), 1)
    out = []
    for K in (Ks, Ka):
        U = factor.half_solve(K) * before
        mean = U.T @ v
        var = np.diag(K) - np.einsum("ij,ij->j", U, U)
        out.append(PosteriorEstimate(mean, np.where(var < 0, 0.0, var)))
    return out[0], out[1]


def sequential_loglik(model: SeparationModel, train: TimeSeries, preds=None) -> float:
    """Sum over samples of ``log N(y_i; m_sig + m_art, P_sig + P_art)``."""
    ms, ma = preds if preds is not None else sequential_predictions(model, train)
    P = ms.variance + ma.variance + model.sigma2
    r = train.y - ms.mean - ma.mean
    return float(-0.5 * np.sum(r * r / P + np.log(2 * math.pi * P)))


def default_separation_priors(t, y) -> dict:
    """Vague priors scaled to the data variance and span."""
    t = _locs(t)
    var = float(np.var(y)) or 1.0
    lo, hi = float(t.min()), float(t.max())
    span = hi - lo
    step = float(np.min(np.diff(t))) if t.size > 1 else 1.0
    return {
        "sig_mu": LogUniform(1e-2 * var, 1e1 * var),
        "sig_L": LogUniform(step, span),
        "art_mu": LogUniform(1e-2 * var, 1e2 * var),
        "art_L": LogUniform(step, max(span / 2, 2 * step)),
        "T_s": Uniform(lo, hi),
        "T_e": Uniform(lo, hi),
        "R_sig": LogUniform(1e-4 * var, var),
        "R_art": LogUniform(1e-4 * var, var),
    }


def _window_ok(theta) -> bool:
    return theta["T_s"] < theta["T_e"]


def separate(train: TimeSeries, priors: Mapping | None = None, n: int = DEFAULT_SAMPLES,
             seed=0, workers: int = 1) -> SeparationResult:
    """Marginalize the eight hyperparameters and apportion every sample.

    Each prior draw is weighted by the product of one-step-ahead predictive
    densities; the per-draw apportioned components are then moment-matched.
    """
    if len(train) == 0:
        raise ParameterError("separation needs at least one observation")
    priors = default_separation_priors(train.t, train.y) if priors is None else dict(priors)
    missing = set(HYPERPARAMETERS) - set(priors)
    if missing:
        raise ParameterError(f"missing priors for {sorted(missing)}")
    names, values = draw_prior(priors, n, np.random.default_rng(seed), _window_ok)

    def one(row):
        theta = dict(zip(names, (float(v) for v in row)))
        try:
            model = SeparationModel.from_theta(theta)
            preds = sequential_predictions(model, train)
        except (NumericalError, ConditioningError, ParameterError):
            return None
        ll = sequential_loglik(model, train, preds)
        ms, ma = preds
        res = apportion(train.y, ms.mean, ms.variance, ma.mean, ma.variance,
                        model.R_sig, model.R_art)
        return ll, res

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, values))
    else:
        results = [one(row) for row in values]
    ll = [-math.inf if r is None else r[0] for r in results]
    hp = posterior_from_loglik(names, values, ll)
    keep = np.flatnonzero(hp.weights > 0)
    w = hp.weights[keep] / hp.weights[keep].sum()
    chosen = [results[i][1] for i in keep]
    return SeparationResult(
        mix_estimates([r.sig for r in chosen], w),
        mix_estimates([r.art for r in chosen], w),
        mix_estimates([r.m_sig for r in chosen], w),
        mix_estimates([r.m_art for r in chosen], w),
        hp,
    )
