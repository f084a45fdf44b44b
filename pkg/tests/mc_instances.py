"""Small region-link instances shared by the sampling-oracle checks."""

from __future__ import annotations

import numpy as np

from mrlgp.kernels import squared_exponential as SE
from mrlgp.kernels import zero
from mrlgp.mrl import RegionModel

from oracles import SERegion, scalar_chain_sigma


def instances():
    """``(name, model, oracle kwargs)`` for five fixed configurations."""
    out = []
    X = np.array([-2.0, -0.7, -0.1, 0.0, 0.15, 0.9, 2.2])
    out.append(("two regions, value link",
                RegionModel.two_region(SE(1.0, 1.5), SE(0.6, 0.8), 0.0, 0.8, 0),
                dict(regions=[SERegion(1.0, 1.5), SERegion(0.6, 0.8)], boundaries=[0.0],
                     k_b_sigma=np.array([[0.8]]), orders=[0], X=X)))
    kb = (1.0, 0.5)
    out.append(("two regions, value and slope link (diagonal)",
                RegionModel.two_region(SE(1.0, 2.0), SE(1.0, 0.7), 0.0, kb, 1),
                dict(regions=[SERegion(1.0, 2.0), SERegion(1.0, 0.7)], boundaries=[0.0],
                     k_b_sigma=np.diag(kb), orders=[1], X=X)))
    KB = np.array([[0.9, 0.3], [0.3, 0.6]])
    out.append(("two regions, value and slope link (full)",
                RegionModel.two_region(SE(0.8, 1.2), SE(1.3, 1.0), 0.0, KB, 1),
                dict(regions=[SERegion(0.8, 1.2), SERegion(1.3, 1.0)], boundaries=[0.0],
                     k_b_sigma=KB, orders=[1], X=X)))
    mid = SERegion(1.0, 2.0)
    X3 = np.array([-1.5, -0.2, 0.0, 0.5, 1.0, 1.8, 2.0, 2.6, 4.0])
    out.append(("three regions",
                RegionModel((0.0, 2.0), (SE(1.0, 1.0), SE(1.0, 2.0), SE(0.7, 1.5)), (0.9, 1.1)),
                dict(regions=[SERegion(1.0, 1.0), mid, SERegion(0.7, 1.5)], boundaries=[0.0, 2.0],
                     k_b_sigma=scalar_chain_sigma(mid, 0.0, 2.0, 0.9, 1.1), orders=[0, 0],
                     X=X3)))
    art = SERegion(4.0, 3.0)
    Xw = np.array([-1.0, 0.0, 1.5, 3.0, 5.0, 6.5, 9.0, 10.0, 11.0])
    out.append(("windowed zero | SE | SE | zero",
                RegionModel((0.0, 5.0, 10.0), (zero(), SE(4.0, 3.0), SE(4.0, 3.0), zero()),
                            (0.0, 4.0, 0.0), (0, 0, 0)),
                dict(regions=[SERegion(0.0, 1.0), art, art, SERegion(0.0, 1.0)],
                     boundaries=[0.0, 5.0, 10.0], k_b_sigma=np.diag([0.0, 4.0, 0.0]),
                     orders=[0, 0, 0], X=Xw)))
    return out
