"""Synthetic scenarios for tests, demos and the command line.

Every generator is a pure function of its parameters and seed.  Constants
not pinned down by the modelling (domains, amplitudes, slopes) are synthetic
defaults chosen to be quick to run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParameterError
from .faults import FAULT_KINDS, FaultSpec
from .gp import TimeSeries, sample_prior
from .kernels import KernelSpec, gibbs, squared_exponential
from .mrl import RegionModel
from .separation import SeparationModel

NOISE_VAR = 0.001
SCENARIOS = ("tracking", "gibbs", "wedge", "separation")

TRACKING_DEFAULTS = {
    "n": 100, "dt": 1.0, "real_mu": 1.0, "real_L": 20.0, "noise_var": NOISE_VAR,
}
FAULT_DEFAULTS = {
    "bias": {"t0": 40.0, "t1": 70.0, "mu": 1.0},
    "drift": {"t0": 30.0, "t1": 70.0, "mu": 1.0, "L": 10.0},
    "drift_then_bias": {"t0": 30.0, "t_m": 50.0, "t1": 75.0, "mu": 1.0, "L": 10.0,
                        "k_b_link": 1.0},
}
WEDGE_SLOPE = 0.02
WEDGE_NOISE_STD = {"low": 0.2, "high": 0.02}
SEPARATION_DEFAULTS = {
    "n": 100, "dt": 1.0, "sig_mu": 1.0, "sig_L": 3.0, "art_mu": 100.0, "art_L": 10.0,
    "T_s": 40.0, "T_e": 60.0, "R_sig": 0.01, "R_art": 0.01,
}


@dataclass(frozen=True, eq=False)
class Scenario:
    """``observed.y == truth.y + fault.y + noise``; ``spec`` records how it was made."""

    truth: TimeSeries
    fault: TimeSeries
    observed: TimeSeries
    noise: np.ndarray
    spec: dict = field(default_factory=dict)


def _streams(seed, k):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(k)]


def _grid(n, dt, start=0.0):
    if n < 1 or dt <= 0:
        raise ParameterError("grid needs n >= 1 and dt > 0")
    return start + dt * np.arange(int(n))


def _assemble(t, f, e, noise, spec):
    return Scenario(TimeSeries(t, f), TimeSeries(t, e), TimeSeries(t, f + e + noise), noise, spec)


def tracking_fault_spec(kind: str, **params) -> FaultSpec | None:
    """Fault of ``kind`` with default window and magnitude, ``None`` for ``"none"``."""
    if kind == "none":
        return None
    if kind not in FAULT_KINDS:
        raise ParameterError(f"unknown fault kind {kind!r}")
    p = {**FAULT_DEFAULTS[kind], **params}
    return FaultSpec(kind, p["t0"], p["t1"], p["mu"], p.get("L"), p.get("t_m"),
                     p.get("k_b_link"))


def gen_tracking(kind: str = "bias", seed=0, **params) -> Scenario:
    """Smooth trajectory plus a fault of the given kind plus white noise.

    ``params`` override :data:`TRACKING_DEFAULTS` and the fault defaults for
    ``kind`` (``t0``, ``t1``, ``mu``, ``L``, ``t_m``, ``k_b_link``).
    """
    base = {**TRACKING_DEFAULTS}
    fault_keys = {}
    for k, v in params.items():
        if k in base:
            base[k] = v
        elif kind != "none" and k in FAULT_DEFAULTS[kind]:
            fault_keys[k] = v
        else:
            raise ParameterError(f"unknown tracking parameter {k!r}")
    t = _grid(base["n"], base["dt"])
    rf, re, rn = _streams(seed, 3)
    f = sample_prior(squared_exponential(base["real_mu"], base["real_L"]), t, rf)
    spec = tracking_fault_spec(kind, **fault_keys)
    e = np.zeros_like(t) if spec is None else sample_prior(spec, t, re)
    noise = rn.normal(0.0, np.sqrt(base["noise_var"]), t.size)
    fault_params = {} if spec is None else {**FAULT_DEFAULTS[kind], **fault_keys}
    return _assemble(t, f, e, noise, {"scenario": "tracking", "kind": kind, "seed": seed,
                                      **base, **fault_params})


def gibbs_demo_kernel() -> KernelSpec:
    """Length-scale 35 up to and including 130, 15 beyond."""
    return gibbs((35.0, 15.0), (130.0,), mu=1.0)


def mrl_demo_model(order: int | None = 0, k_b=1.0) -> RegionModel:
    """Two squared-exponential regions (L = 35 | 15) linked at 130."""
    return RegionModel.two_region(squared_exponential(1.0, 35.0), squared_exponential(1.0, 15.0),
                                  130.0, k_b, order)


def gen_gibbs_demo(seed=0, noise_var: float = NOISE_VAR) -> Scenario:
    """Draw on [0, 260] from the piecewise length-scale kernel; no fault."""
    t = _grid(261, 1.0)
    rf, rn = _streams(seed, 2)
    f = sample_prior(gibbs_demo_kernel(), t, rf)
    noise = rn.normal(0.0, np.sqrt(noise_var), t.size)
    return _assemble(t, f, np.zeros_like(t), noise,
                     {"scenario": "gibbs", "seed": seed, "noise_var": noise_var})


def wedge(t, apex: float = 100.0, slope: float = WEDGE_SLOPE) -> np.ndarray:
    """Rises with ``slope`` up to ``apex`` and falls symmetrically after it."""
    t = np.asarray(t, float)
    return slope * (apex - np.abs(t - apex))


def gen_wedge(snr: str = "low", seed=0) -> Scenario:
    """Noisy wedge on [0, 200] with its apex at 100."""
    if snr not in WEDGE_NOISE_STD:
        raise ParameterError("snr must be 'low' or 'high'")
    t = _grid(201, 1.0)
    (rn,) = _streams(seed, 1)
    f = wedge(t)
    noise = rn.normal(0.0, WEDGE_NOISE_STD[snr], t.size)
    return _assemble(t, f, np.zeros_like(t), noise, {"scenario": "wedge", "snr": snr, "seed": seed})


def gen_separation(seed=0, artifact: bool = True, **params) -> Scenario:
    """Fast background signal plus an optional slow artifact on ``[T_s, T_e]``.

    ``truth`` holds the full background ``m_sig + r_sig`` and ``fault`` the full
    artifact ``m_art + r_art``; there is no separate measurement noise.
    """
    unknown = set(params) - set(SEPARATION_DEFAULTS)
    if unknown:
        raise ParameterError(f"unknown separation parameters {sorted(unknown)}")
    p = {**SEPARATION_DEFAULTS, **params}
    t = _grid(p["n"], p["dt"])
    rs, ra, rrs, rra = _streams(seed, 4)
    model = SeparationModel(squared_exponential(p["sig_mu"], p["sig_L"]), p["art_mu"], p["art_L"],
                            p["T_s"], p["T_e"], p["R_sig"], p["R_art"])
    sig = sample_prior(model.k_sig, t, rs) + rrs.normal(0.0, np.sqrt(p["R_sig"]), t.size)
    if artifact:
        art = sample_prior(model.k_art, t, ra) + rra.normal(0.0, np.sqrt(p["R_art"]), t.size)
    else:
        art = np.zeros_like(t)
    return _assemble(t, sig, art, np.zeros_like(t),
                     {"scenario": "separation", "seed": seed, "artifact": artifact, **p})
