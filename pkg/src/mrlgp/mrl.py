"""Markov Region Link covariance construction.

A 1-D domain is cut at ordered boundary points into regions, each carrying
its own stationary kernel.  Region processes are conditionally independent
given the process at the boundaries.  Each region kernel is conditioned on
the boundary covariance ``K_B``::

    G_r  = K_r(X_r, X_B) K_r(X_B, X_B)^{-1}
    K*_r = K_r(X_r, X_r) + G_r [K_B - K_r(X_B, X_B)] G_r^T
    D    = G_1 K_B G_2^T                      (cross-region block)

A boundary with ``continuity_order=1`` augments the boundary latent with the
derivative ``f'(x_B)``, so ``K_B`` becomes a 2x2 block.  A boundary with
``continuity_order=None`` is a hard cut: the regions either side are
independent and the cut point belongs to the left region.

With several boundaries the regions form a Markov chain.  A region between
two linking boundaries is conditioned on both at once, and the joint boundary
covariance is built left to right as a Gauss-Markov chain whose transition
borrows the correlation of the region in between (see
:func:`boundary_covariance`).  Every boundary block therefore equals its own
``K_B`` and, when each ``K_B`` matches the adjacent region kernels, every
region kernel is preserved exactly.

Three independent code paths evaluate the same covariance:
:func:`mrl_eval` (scalar, one boundary), :func:`assemble_global` (explicit
block matrix, one boundary) and :func:`chain_regions` (any number of
boundaries).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import ConditioningError, ParameterError, UnsupportedOperationError
from .kernels import GramMatrix, KernelSpec, _locs, evaluate, gram_d1, gram_d12
from .linalg import psd_sqrt

_COND_LIMIT = 1e12


# boundary latents -------------------------------------------------------------

def _latent_cross(spec: KernelSpec, X: np.ndarray, bpts) -> np.ndarray:
    """Cov(f(X), boundary latents) under one region kernel."""
    cols = []
    for xb, order in bpts:
        cols.append(spec.cov(X, [xb]))
        if order == 1:
            cols.append(gram_d1(spec, [xb], X).T)
    if not cols:
        return np.zeros((X.size, 0))
    return np.hstack(cols)


def _latent_self(spec: KernelSpec, bpts) -> np.ndarray:
    """Covariance of the boundary latents (values, and derivatives where linked)."""
    lat = []
    for xb, order in bpts:
        lat.append((xb, False))
        if order == 1:
            lat.append((xb, True))
    p = len(lat)
    S = np.empty((p, p))
    for i, (a, da) in enumerate(lat):
        for j, (b, db) in enumerate(lat):
            if da and db:
                S[i, j] = gram_d12(spec, [a], [b])[0, 0]
            elif da:
                S[i, j] = gram_d1(spec, [a], [b])[0, 0]
            elif db:
                S[i, j] = gram_d1(spec, [b], [a])[0, 0]
            else:
                S[i, j] = evaluate(spec, a, b)
    return S


def _gain(C: np.ndarray, S: np.ndarray) -> np.ndarray:
    """``C S^{-1}`` restricted to latents with positive prior variance.

    A latent with zero variance (e.g. the zero kernel at a fault onset) gets a
    zero gain; this is the pseudo-inverse limit.
    """
    G = np.zeros_like(C)
    keep = np.diag(S) > 0
    if not keep.any():
        return G
    Sk = S[np.ix_(keep, keep)]
    if Sk.shape[0] == 1:
        G[:, keep] = C[:, keep] / Sk[0, 0]
        return G
    if np.linalg.cond(Sk) > _COND_LIMIT:
        raise ConditioningError(
            "boundary covariance K_r(X_B, X_B) is singular; add jitter or "
            "separate the boundaries")
    G[:, keep] = np.linalg.solve(Sk, C[:, keep].T).T
    return G


@dataclass(frozen=True, eq=False)
class BoundaryConditioning:
    """A region kernel conditioned on the boundary covariance.

    Attributes
    ----------
    g : ndarray (n, p)
        Gain ``K_r(X_r, X_B) K_r(X_B, X_B)^{-1}``.
    corrected : ndarray (n, n)
        ``K_r + g [K_B - K_r(X_B, X_B)] g^T``.
    """

    g: np.ndarray
    corrected: np.ndarray


def condition_on_boundary(spec: KernelSpec, X, boundary: Sequence[tuple[float, int]],
                          k_b) -> BoundaryConditioning:
    X = _locs(X)
    C = _latent_cross(spec, X, boundary)
    S = _latent_self(spec, boundary)
    G = _gain(C, S)
    corrected = spec.cov(X) + G @ (np.asarray(k_b, float) - S) @ G.T
    return BoundaryConditioning(G, 0.5 * (corrected + corrected.T))


# region model -----------------------------------------------------------------

def _as_kb(value, order) -> np.ndarray | None:
    if order is None:
        return None
    arr = np.asarray(value, dtype=float)
    if order == 0:
        arr = arr.reshape(1, 1) if arr.size == 1 else arr
        if arr.shape != (1, 1):
            raise ParameterError("value-continuity boundary needs a scalar K_B")
    else:
        if arr.shape == (2,):
            arr = np.diag(arr)
        if arr.shape != (2, 2):
            raise ParameterError("derivative boundary needs a 2x2 K_B or a (value, slope) pair")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("K_B must be finite")
    if not np.allclose(arr, arr.T, rtol=1e-12, atol=0.0):
        raise ParameterError("K_B must be symmetric")
    arr = 0.5 * (arr + arr.T)
    tol = 1e-12 * max(1.0, float(np.trace(arr)))
    if np.linalg.eigvalsh(arr).min() < -tol:
        raise ParameterError("K_B must be positive semi-definite")
    return arr


@dataclass(frozen=True, eq=False)
class RegionModel:
    """Ordered change-points, per-region kernels and boundary covariances.

    Parameters
    ----------
    boundaries : sequence of float
        Strictly increasing boundary locations.
    regions : sequence of KernelSpec
        One more kernel than boundaries; ``regions[0]`` lies left of the
        first boundary.
    k_b : sequence
        Per boundary: a scalar ``v >= 0`` for value continuity, a 2x2 PSD
        block or a ``(v, w)`` pair for value-and-slope continuity, ``None``
        for a cut.
    continuity_order : sequence of {0, 1, None}, optional
        Defaults to 0 everywhere.
    """

    boundaries: tuple[float, ...]
    regions: tuple[KernelSpec, ...]
    k_b: tuple
    continuity_order: tuple | None = None

    def __post_init__(self):
        bnds = tuple(float(b) for b in self.boundaries)
        regions = tuple(self.regions)
        m = len(bnds)
        orders = (0,) * m if self.continuity_order is None else tuple(self.continuity_order)
        if len(regions) != m + 1:
            raise ParameterError("need exactly one more region than boundaries")
        if len(orders) != m or len(tuple(self.k_b)) != m:
            raise ParameterError("k_b and continuity_order need one entry per boundary")
        if any(not np.isfinite(b) for b in bnds):
            raise ParameterError("boundaries must be finite")
        if any(b1 >= b2 for b1, b2 in zip(bnds, bnds[1:])):
            raise ParameterError("boundaries must be strictly increasing")
        for i, o in enumerate(orders):
            if o not in (0, 1, None):
                raise ParameterError("continuity_order must be 0, 1 or None")
            if o == 1 and not (regions[i].differentiable and regions[i + 1].differentiable):
                raise UnsupportedOperationError(
                    "derivative continuity needs differentiable kernels on both sides")
        kb = tuple(_as_kb(v, o) for v, o in zip(self.k_b, orders))
        object.__setattr__(self, "boundaries", bnds)
        object.__setattr__(self, "regions", regions)
        object.__setattr__(self, "continuity_order", orders)
        object.__setattr__(self, "k_b", kb)

    @classmethod
    def two_region(cls, left: KernelSpec, right: KernelSpec, x_b: float, k_b,
                   order: int | None = 0) -> "RegionModel":
        return cls((x_b,), (left, right), (k_b,), (order,))

    def region_index(self, X) -> np.ndarray:
        """Region label per location; a point on a linking boundary goes right."""
        X = _locs(X)
        r = np.zeros(X.size, dtype=int)
        for b, o in zip(self.boundaries, self.continuity_order):
            r += (X > b) if o is None else (X >= b)
        return r

    def cov(self, X, Y=None) -> np.ndarray:
        return _chain_cov(self, _locs(X), None if Y is None else _locs(Y))


# pointwise form (one scalar boundary) ---------------------------------------

def _point_gain(spec: KernelSpec, x: float, xb: float, order: int):
    if order == 0:
        s = evaluate(spec, xb, xb)
        return np.array([evaluate(spec, x, xb) / s if s > 0 else 0.0]), np.array([[s]])
    bpts = [(xb, 1)]
    C = _latent_cross(spec, np.array([x]), bpts)
    S = _latent_self(spec, bpts)
    return _gain(C, S)[0], S


def mrl_eval(x1: float, x2: float, model: RegionModel) -> float:
    """Pointwise two-region link kernel.

    Same-region pairs use ``K_r + g_r(x1) [K_B - K_r(x_B, x_B)] g_r(x2)^T``;
    pairs straddling the change-point use ``g_1(x1) K_B g_2(x2)^T``.
    """
    if len(model.boundaries) != 1:
        raise ParameterError("mrl_eval needs a model with exactly one boundary")
    xb = model.boundaries[0]
    order = model.continuity_order[0]
    x1, x2 = float(x1), float(x2)
    if order is None:
        s1, s2 = int(x1 > xb), int(x2 > xb)
        return evaluate(model.regions[s1], x1, x2) if s1 == s2 else 0.0
    K_B = model.k_b[0]
    s1, s2 = int(x1 >= xb), int(x2 >= xb)
    if s1 == s2:
        spec = model.regions[s1]
        g1, S = _point_gain(spec, x1, xb, order)
        g2, _ = _point_gain(spec, x2, xb, order)
        return float(evaluate(spec, x1, x2) + g1 @ (K_B - S) @ g2)
    if s1 == 1:
        x1, x2 = x2, x1
    g1, _ = _point_gain(model.regions[0], x1, xb, order)
    g2, _ = _point_gain(model.regions[1], x2, xb, order)
    return float(g1 @ K_B @ g2)


# explicit block matrix --------------------------------------------------------

def assemble_global(model: RegionModel, X1, XB, X2) -> GramMatrix:
    """Global prior over the stacked vector ``(X1, XB, X2)``.

    ``X1`` must lie left of the change-point, ``X2`` right of it and every
    entry of ``XB`` on it.  With ``XB`` empty the boundary still links the
    regions; it just has no row in the output.
    """
    if len(model.boundaries) != 1:
        raise ParameterError("assemble_global needs a model with exactly one boundary")
    order = model.continuity_order[0]
    if order is None:
        raise ParameterError("assemble_global needs a linking boundary, not a cut")
    xb = model.boundaries[0]
    X1, XB, X2 = (np.atleast_1d(np.asarray(a, float)) for a in (X1, XB, X2))
    if np.any(X1 >= xb) or np.any(X2 <= xb) or np.any(XB != xb):
        raise ParameterError("X1 must lie left of, X2 right of, and XB on the boundary")
    K_B = model.k_b[0]
    p = K_B.shape[0]
    bpts = [(xb, order)]
    c1 = condition_on_boundary(model.regions[0], X1, bpts, K_B)
    c2 = condition_on_boundary(model.regions[1], X2, bpts, K_B)
    n1, n2 = X1.size, X2.size
    D = c1.g @ K_B @ c2.g.T
    M = np.block([
        [c1.corrected, c1.g @ K_B, D],
        [(c1.g @ K_B).T, K_B, K_B @ c2.g.T],
        [D.T, c2.g @ K_B, c2.corrected],
    ])
    idx = np.concatenate([np.arange(n1), np.full(XB.size, n1),
                          n1 + p + np.arange(n2)]).astype(int)
    K = M[np.ix_(idx, idx)]
    return GramMatrix(0.5 * (K + K.T), 0.0, np.concatenate([X1, XB, X2]))


# derivative augmentation ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AugmentedBoundary:
    """Value-and-slope blocks for one region kernel at boundary points ``X_B``.

    ``boundary`` is ordered ``(f(X_B), f'(X_B))``::

        [[K(X_B, X_B),  dK(X_B, X_B)^T],
         [dK(X_B, X_B), ddK(X_B, X_B)]]
    """

    boundary: np.ndarray
    cross_value: np.ndarray
    cross_deriv: np.ndarray


def augment_derivative(spec: KernelSpec, XB, Xr=None) -> AugmentedBoundary:
    if not spec.differentiable:
        raise UnsupportedOperationError(f"{spec.family} kernel has no analytic derivatives")
    XB = _locs(XB)
    Xr = np.zeros(0) if Xr is None else _locs(Xr)
    K = spec.cov(XB)
    dK = gram_d1(spec, XB, XB)
    ddK = gram_d12(spec, XB, XB)
    boundary = np.block([[K, dK.T], [dK, ddK]])
    return AugmentedBoundary(0.5 * (boundary + boundary.T), spec.cov(Xr, XB),
                             gram_d1(spec, XB, Xr))


# multi-boundary chain ---------------------------------------------------------

def _layout(model: RegionModel):
    offsets, p = {}, 0
    for i, o in enumerate(model.continuity_order):
        if o is not None:
            offsets[i] = p
            p += 1 + o
    return offsets, p


def _adjacent(model: RegionModel, r: int) -> list[int]:
    m = len(model.boundaries)
    out = []
    if r >= 1 and model.continuity_order[r - 1] is not None:
        out.append(r - 1)
    if r < m and model.continuity_order[r] is not None:
        out.append(r)
    return out


def boundary_covariance(model: RegionModel) -> np.ndarray:
    """Joint covariance of every boundary latent.

    Neighbouring linked boundaries ``i-1, i`` are joined by
    ``b_i = A b_{i-1} + w`` with
    ``A = K_Bi^{1/2} R K_B(i-1)^{+1/2}`` and ``R`` the canonical correlation
    of the two boundaries under the kernel of the region between them.  Cuts
    start a new, independent chain.
    """
    offsets, P = _layout(model)
    Sigma = np.zeros((P, P))
    orders = model.continuity_order
    for i, off in offsets.items():
        kb = model.k_b[i]
        p = kb.shape[0]
        Sigma[off:off + p, off:off + p] = kb
        if i == 0 or orders[i - 1] is None:
            continue
        prev = i - 1
        poff = offsets[prev]
        pp = model.k_b[prev].shape[0]
        S = _latent_self(model.regions[i], [(model.boundaries[prev], orders[prev]),
                                            (model.boundaries[i], orders[i])])
        R = psd_sqrt(S[pp:, pp:], pinv=True) @ S[pp:, :pp] @ psd_sqrt(S[:pp, :pp], pinv=True)
        A = psd_sqrt(kb) @ R @ psd_sqrt(model.k_b[prev], pinv=True)
        row = A @ Sigma[poff:poff + pp, :poff + pp]
        Sigma[off:off + p, :poff + pp] = row
        Sigma[:poff + pp, off:off + p] = row.T
    return Sigma


class _Design:
    """Loadings of each location on the boundary latents plus its region data."""

    def __init__(self, model: RegionModel, X: np.ndarray, offsets: dict, P: int):
        self.X = X
        self.load = np.zeros((X.size, P))
        self.labels = model.region_index(X)
        snapped = np.zeros(X.size, dtype=bool)
        for i, off in offsets.items():
            on = X == model.boundaries[i]
            self.load[on, off] = 1.0
            snapped |= on
        self.labels[snapped] = -1
        self.parts = {}
        for r in np.unique(self.labels):
            if r < 0:
                continue
            idx = np.flatnonzero(self.labels == r)
            adj = _adjacent(model, r)
            spec = model.regions[r]
            if adj:
                bpts = [(model.boundaries[i], model.continuity_order[i]) for i in adj]
                C = _latent_cross(spec, X[idx], bpts)
                G = _gain(C, _latent_self(spec, bpts))
                cols = np.concatenate([offsets[i] + np.arange(1 + model.continuity_order[i])
                                       for i in adj])
                self.load[np.ix_(idx, cols)] = G
            else:
                C = G = np.zeros((idx.size, 0))
            self.parts[r] = (idx, C, G)


def _chain_cov(model: RegionModel, X: np.ndarray, Y: np.ndarray | None) -> np.ndarray:
    offsets, P = _layout(model)
    Sigma = boundary_covariance(model)
    dx = _Design(model, X, offsets, P)
    dy = dx if Y is None else _Design(model, Y, offsets, P)
    K = dx.load @ Sigma @ dy.load.T
    for r, (ix, Cx, Gx) in dx.parts.items():
        if r not in dy.parts:
            continue
        iy, Cy, _ = dy.parts[r]
        resid = model.regions[r].cov(dx.X[ix], dy.X[iy]) - Gx @ Cy.T
        K[np.ix_(ix, iy)] += resid
    if Y is None:
        K = 0.5 * (K + K.T)
    return K


def chain_regions(model: RegionModel, X) -> GramMatrix:
    """Global MRL prior covariance over ``X`` for any number of boundaries."""
    X = _locs(X)
    return GramMatrix(_chain_cov(model, X, None), 0.0, X)
