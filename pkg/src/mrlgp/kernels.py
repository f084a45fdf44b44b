"""Stationary kernel families on 1-D inputs.

The squared-exponential follows the tracking convention
``mu * exp(-(x - x')**2 / L**2)`` (no factor 1/2).  The Gibbs kernel uses a
piecewise-constant length-scale table, which makes it stationary inside each
table interval and lets its derivatives be taken with ``l`` held locally
constant.

All matrix functions take 1-D location arrays ``X`` (n,) and ``Y`` (m,) and
return an (n, m) array.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .exceptions import ParameterError, UnsupportedOperationError

FAMILIES = ("squared_exponential", "gibbs", "constant", "zero", "white_noise")
DIFFERENTIABLE = frozenset({"squared_exponential", "gibbs", "constant", "zero"})


@dataclass(frozen=True)
class LengthScaleTable:
    """Piecewise-constant length-scale over half-open intervals ``(b[i-1], b[i]]``.

    ``scales[0]`` applies on ``(-inf, breaks[0]]`` and ``scales[-1]`` on
    ``(breaks[-1], inf)``, so the table always covers the real line.
    """

    breaks: tuple[float, ...]
    scales: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "breaks", tuple(float(b) for b in self.breaks))
        object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))
        if len(self.scales) != len(self.breaks) + 1:
            raise ParameterError("need exactly one more scale than breaks")
        if any(b1 >= b2 for b1, b2 in zip(self.breaks, self.breaks[1:])):
            raise ParameterError("length-scale breaks must be strictly increasing")
        if not all(np.isfinite(s) and s > 0 for s in self.scales):
            raise ParameterError("Gibbs length-scales must be positive and finite")

    def __call__(self, x):
        if np.ndim(x) == 0:
            return self.scales[bisect.bisect_left(self.breaks, float(x))]
        idx = np.searchsorted(np.asarray(self.breaks), np.asarray(x, float), side="left")
        return np.asarray(self.scales)[idx]


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family plus its named hyperparameters.

    Parameters
    ----------
    family : str
        One of :data:`FAMILIES`.
    params : mapping
        ``mu`` (output scale, >= 0), ``L`` (input scale, > 0) for the
        squared-exponential; optional ``mu`` for Gibbs; ``mu`` for constant;
        ``sigma2`` (>= 0) for white noise.
    lengthscales : LengthScaleTable, optional
        Required for the Gibbs family.
    """

    family: str
    params: Mapping[str, float] = field(default_factory=dict)
    lengthscales: LengthScaleTable | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown kernel family {self.family!r}")
        params = {k: float(v) for k, v in dict(self.params).items()}
        object.__setattr__(self, "params", params)
        for name, v in params.items():
            if not np.isfinite(v):
                raise ParameterError(f"{name} must be finite")
        fam = self.family
        if fam == "squared_exponential":
            _require(params, ("mu", "L"), fam)
            if params["L"] <= 0:
                raise ParameterError("length scale L must be positive")
        elif fam == "gibbs":
            params.setdefault("mu", 1.0)
            if self.lengthscales is None:
                raise ParameterError("gibbs kernel needs a length-scale table")
        elif fam == "constant":
            _require(params, ("mu",), fam)
        elif fam == "white_noise":
            _require(params, ("sigma2",), fam)
            if params["sigma2"] < 0:
                raise ParameterError("sigma2 must be non-negative")
        if params.get("mu", 0.0) < 0:
            raise ParameterError("output scale mu must be non-negative")

    @property
    def differentiable(self) -> bool:
        return self.family in DIFFERENTIABLE

    def cov(self, X, Y=None) -> np.ndarray:
        X = _locs(X)
        return _k(self, X, X if Y is None else _locs(Y))

    def cov_d1(self, X, Y) -> np.ndarray:
        return gram_d1(self, X, Y)

    def cov_d12(self, X, Y) -> np.ndarray:
        return gram_d12(self, X, Y)


def _require(params, names, family):
    missing = [n for n in names if n not in params]
    if missing:
        raise ParameterError(f"{family} kernel missing parameters {missing}")


def _locs(X) -> np.ndarray:
    X = np.atleast_1d(np.asarray(X, dtype=float))
    if X.ndim != 1:
        raise ParameterError("locations must be one-dimensional")
    return X


# constructors ---------------------------------------------------------------

def squared_exponential(mu: float, L: float) -> KernelSpec:
    return KernelSpec("squared_exponential", {"mu": mu, "L": L})


def gibbs(scales: Sequence[float], breaks: Sequence[float] = (), mu: float = 1.0) -> KernelSpec:
    return KernelSpec("gibbs", {"mu": mu}, LengthScaleTable(tuple(breaks), tuple(scales)))


def constant(mu: float) -> KernelSpec:
    return KernelSpec("constant", {"mu": mu})


def zero() -> KernelSpec:
    return KernelSpec("zero")


def white_noise(sigma2: float) -> KernelSpec:
    return KernelSpec("white_noise", {"sigma2": sigma2})


# evaluation -----------------------------------------------------------------

def _gibbs_parts(spec, X, Y):
    l1 = np.asarray(spec.lengthscales(X), float)[:, None]
    l2 = np.asarray(spec.lengthscales(Y), float)[None, :]
    s = l1 * l1 + l2 * l2
    pre = np.sqrt(2.0 * l1 * l2 / s)
    return s, pre


def _k(spec: KernelSpec, X, Y):
    fam, p = spec.family, spec.params
    if fam == "zero":
        return np.zeros((X.size, Y.size))
    if fam == "constant":
        return np.full((X.size, Y.size), p["mu"])
    D = X[:, None] - Y[None, :]
    if fam == "white_noise":
        return np.where(D == 0.0, p["sigma2"], 0.0)
    if fam == "squared_exponential":
        return p["mu"] * np.exp(-(D * D) / p["L"] ** 2)
    s, pre = _gibbs_parts(spec, X, Y)
    return p["mu"] * pre * np.exp(-(D * D) / s)


def gibbs_prefactor(spec: KernelSpec, x1: float, x2: float) -> float:
    """The ``sqrt(2 l1 l2 / (l1^2 + l2^2))`` term of the Gibbs kernel."""
    if spec.family != "gibbs":
        raise ParameterError("prefactor is only defined for the gibbs family")
    l1, l2 = spec.lengthscales(x1), spec.lengthscales(x2)
    return float(np.sqrt(2.0 * l1 * l2 / (l1 * l1 + l2 * l2)))


def evaluate(spec: KernelSpec, x1: float, x2: float) -> float:
    """Kernel value ``k(x1, x2)``."""
    return float(_k(spec, _locs(x1), _locs(x2))[0, 0])


def eval_d1(spec: KernelSpec, x1: float, x2: float) -> float:
    """Partial derivative of ``k(x1, x2)`` with respect to ``x1``."""
    return float(gram_d1(spec, [x1], [x2])[0, 0])


def eval_d12(spec: KernelSpec, x1: float, x2: float) -> float:
    """Mixed partial ``d^2 k / dx1 dx2``."""
    return float(gram_d12(spec, [x1], [x2])[0, 0])


def _check_diff(spec):
    if not spec.differentiable:
        raise UnsupportedOperationError(f"{spec.family} kernel has no analytic derivatives")


def gram_d1(spec: KernelSpec, X, Y) -> np.ndarray:
    """Matrix of ``Cov(f'(X_i), f(Y_j)) = dk/dx1``."""
    _check_diff(spec)
    X, Y = _locs(X), _locs(Y)
    if spec.family in ("zero", "constant"):
        return np.zeros((X.size, Y.size))
    D = X[:, None] - Y[None, :]
    if spec.family == "squared_exponential":
        s = spec.params["L"] ** 2
    else:
        s, _ = _gibbs_parts(spec, X, Y)
    return -2.0 * D / s * _k(spec, X, Y)


def gram_d12(spec: KernelSpec, X, Y) -> np.ndarray:
    """Matrix of ``Cov(f'(X_i), f'(Y_j)) = d^2 k / dx1 dx2``."""
    _check_diff(spec)
    X, Y = _locs(X), _locs(Y)
    if spec.family in ("zero", "constant"):
        return np.zeros((X.size, Y.size))
    D = X[:, None] - Y[None, :]
    if spec.family == "squared_exponential":
        s = spec.params["L"] ** 2
    else:
        s, _ = _gibbs_parts(spec, X, Y)
    return (2.0 / s - 4.0 * D * D / (s * s)) * _k(spec, X, Y)


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """A covariance matrix together with the jitter that made it factorable."""

    values: np.ndarray
    jitter_added: float = 0.0
    row_points: np.ndarray | None = None

    @property
    def shape(self):
        return self.values.shape

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def gram(spec: KernelSpec, X, Y=None) -> GramMatrix:
    """Gram matrix with ``(i, j)`` entry ``k(X[i], Y[j])``; ``Y`` defaults to ``X``."""
    X = _locs(X)
    K = spec.cov(X, Y)
    return GramMatrix(K, 0.0, X)
