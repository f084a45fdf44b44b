"""Command-line front end: ``mrl-gp {simulate,fit,remove,separate}``.

Exit codes: 0 success, 2 bad input or configuration, 3 inference failure,
4 internal invariant violated.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .exceptions import (ConditioningError, DegenerateModelError, InferenceError, MrlGpError,
                         NumericalError, ParameterError)
from .faults import FAULT_PARAMS, OnlineConfig, default_fault_prior, online_filter, \
    remove_fault, stack_steps
from .gp import TimeSeries, posterior
from .hyper import LogUniform, Uniform, gp_evidence_model, marginal_predict, mc_marginalize
from .kernels import squared_exponential
from .mrl import RegionModel
from .separation import HYPERPARAMETERS, default_separation_priors, separate
from .simulate import (FAULT_DEFAULTS, SEPARATION_DEFAULTS, gen_gibbs_demo, gen_separation,
                       gen_tracking, gen_wedge)
from .svg import Plot

log = logging.getLogger("mrlgp")

EXIT_OK, EXIT_INPUT, EXIT_INFERENCE, EXIT_INVARIANT = 0, 2, 3, 4
CLOSURE_TOL = 1e-10


class InputError(MrlGpError):
    """Unreadable or malformed input data."""


class InvariantViolation(MrlGpError):
    """An output failed an internal consistency check."""


# CSV --------------------------------------------------------------------------

def read_series(path) -> TimeSeries:
    """Read ``t`` and ``y`` columns from a headed CSV; ``#`` lines are skipped."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        header = None
        t, y = [], []
        try:
            for row in reader:
                line = reader.line_num
                if not row or (row[0].lstrip().startswith("#")):
                    continue
                cells = [c.strip() for c in row]
                if header is None:
                    header = cells
                    missing = [c for c in ("t", "y") if c not in header]
                    if missing:
                        raise InputError(f"{path}:{line}: header lacks column(s) "
                                         f"{', '.join(missing)}")
                    it, iy = header.index("t"), header.index("y")
                    continue
                if len(cells) != len(header):
                    raise InputError(f"{path}:{line}: expected {len(header)} fields, "
                                     f"got {len(cells)}")
                try:
                    tv, yv = float(cells[it]), float(cells[iy])
                except ValueError:
                    raise InputError(f"{path}:{line}: non-numeric t or y") from None
                if not (math.isfinite(tv) and math.isfinite(yv)):
                    raise InputError(f"{path}:{line}: t and y must be finite")
                if t and tv <= t[-1]:
                    raise InputError(f"{path}:{line}: t must be strictly increasing")
                t.append(tv)
                y.append(yv)
        except (csv.Error, UnicodeDecodeError) as exc:
            raise InputError(f"{path}:{reader.line_num}: {exc}") from None
    if header is None:
        raise InputError(f"{path}: no header row")
    if not t:
        raise InputError(f"{path}: no data rows")
    return TimeSeries(np.array(t), np.array(y))


def _fmt(v) -> str:
    return "%.12g" % v


def write_table(path: Path, command: str, columns: dict, comments=()):
    names = list(columns)
    cols = [np.asarray(columns[k]) for k in names]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# mrl-gp v1 {command}\n")
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write(",".join(names) + "\n")
        for row in zip(*cols):
            fh.write(",".join(v if isinstance(v, str) else _fmt(v) for v in row) + "\n")


def _band_plot(title, series: TimeSeries, bands):
    plot = Plot(title=title).points(series.t, series.y, color="#888888", label="y")
    for (label, est), color in zip(bands, ("#1f77b4", "#d62728", "#2ca02c")):
        plot.band(series.t, est.mean - est.std, est.mean + est.std, color=color)
        plot.line(series.t, est.mean, color=color, label=label)
    return plot


def _finish(cfg: RunConfig, out: Path, name: str):
    (out / f"{name}.config").write_text(cfg.echo(), encoding="utf-8")


def _reject_keys(cfg: RunConfig, allowed, context):
    bad = sorted(set(cfg.raw) - set(allowed))
    if bad:
        raise ConfigError(f"key(s) {', '.join(bad)} do not apply to {context}")


# commands ---------------------------------------------------------------------

_SIM_KEYS = {
    "tracking": {"n_points", "dt", "real_mu", "real_L", "noise_var"},
    "gibbs": {"noise_var"},
    "wedge": {"snr"},
    "separation": {"n_points", "dt", *(k for k in SEPARATION_DEFAULTS if k != "n")},
}


def cmd_simulate(cfg: RunConfig, out: Path, plot: bool) -> int:
    scenario = cfg["scenario"]
    seed = cfg["seed"]
    # the choice keys are always accepted so that any config echo can be fed back
    allowed = {"seed", "scenario", "kind", "snr", "artifact"} | _SIM_KEYS[scenario]
    if scenario == "tracking" and cfg["kind"] != "none":
        allowed |= set(FAULT_DEFAULTS[cfg["kind"]])
    _reject_keys(cfg, allowed, f"scenario {scenario}")
    choices = {"seed", "scenario", "kind", "snr", "artifact"}
    given = {k: v for k, v in cfg.explicit().items() if k not in choices}
    if "n_points" in given:
        given["n"] = given.pop("n_points")
    if scenario == "tracking":
        sc = gen_tracking(cfg["kind"], seed, **given)
    elif scenario == "gibbs":
        sc = gen_gibbs_demo(seed, **given)
    elif scenario == "wedge":
        sc = gen_wedge(cfg["snr"], seed)
    else:
        sc = gen_separation(seed, cfg["artifact"], **given)
    write_table(out / "simulate.csv", "simulate",
                {"t": sc.observed.t, "y": sc.observed.y, "f_true": sc.truth.y,
                 "e_true": sc.fault.y})
    if plot:
        p = Plot(title=f"simulate: {scenario}").points(sc.observed.t, sc.observed.y,
                                                       color="#888888", label="y")
        p.line(sc.truth.t, sc.truth.y, label="f_true").line(sc.fault.t, sc.fault.y,
                                                              label="e_true")
        p.save(out / "simulate.svg")
    _finish(cfg, out, "simulate")
    return EXIT_OK


def cmd_remove(cfg: RunConfig, series: TimeSeries, out: Path, plot: bool) -> int:
    kind = cfg["kind"]
    params = FAULT_PARAMS[kind]
    _reject_keys(cfg, set(params) | {"seed", "n", "workers", "kind", "mode", "real_mu", "real_L"},
                 f"{kind} faults")
    fp = default_fault_prior(kind, series.t, **{k: cfg[k] for k in params if cfg[k] is not None})
    cfg.values.update(fp.priors)
    real_k = squared_exponential(cfg["real_mu"], cfg["real_L"])
    if cfg["mode"] == "online":
        steps = online_filter(series, OnlineConfig(real_k, fp, cfg["n"], cfg["seed"],
                                                   cfg["workers"]))
        clean, fault = stack_steps(steps)
        total = np.concatenate([r.total.mean for r in steps])
    else:
        res = remove_fault(series, real_k, fp, cfg["n"], cfg["seed"], workers=cfg["workers"])
        clean, fault, total = res.clean, res.fault, res.total.mean
    gap = np.abs(clean.mean + fault.mean - total)
    if np.any(gap > 1e-8 * (1.0 + np.abs(total))):
        raise InvariantViolation(f"f_mean + e_mean departs from s_mean by {gap.max():.3g}")
    write_table(out / "remove.csv", "remove",
                {"t": series.t, "y": series.y, "f_mean": clean.mean, "f_std": clean.std,
                 "e_mean": fault.mean, "e_std": fault.std, "s_mean": total})
    if plot:
        _band_plot(f"remove: {kind} ({cfg['mode']})", series,
                   [("f", clean), ("e", fault)]).save(out / "remove.svg")
    _finish(cfg, out, "remove")
    return EXIT_OK


def cmd_separate(cfg: RunConfig, series: TimeSeries, out: Path, plot: bool) -> int:
    priors = default_separation_priors(series.t, series.y)
    priors.update({k: cfg[k] for k in (*HYPERPARAMETERS, "art_v") if cfg[k] is not None})
    cfg.values.update(priors)
    res = separate(series, priors, cfg["n"], cfg["seed"], cfg["workers"])
    gap = np.abs(res.sig.mean + res.art.mean - series.y)
    if np.any(gap > CLOSURE_TOL * np.maximum(1.0, np.abs(series.y))):
        raise InvariantViolation(f"sig_mean + art_mean departs from y by {gap.max():.3g}")
    write_table(out / "separate.csv", "separate",
                {"t": series.t, "y": series.y, "sig_mean": res.sig.mean, "sig_std": res.sig.std,
                 "art_mean": res.art.mean, "art_std": res.art.std,
                 "diff": series.y - res.sig.mean})
    if plot:
        _band_plot("separate", series, [("signal", res.sig), ("artifact", res.art)]
                   ).save(out / "separate.svg")
    _finish(cfg, out, "separate")
    return EXIT_OK


def fit_priors(cfg: RunConfig, series: TimeSeries) -> dict:
    """Hyperparameter priors for ``fit``, data-scaled where not configured."""
    t = series.t
    var = float(np.var(series.y)) or 1.0
    lo, hi = float(t[0]), float(t[-1])
    span = max(hi - lo, 1e-9)
    step = float(np.min(np.diff(t))) if t.size > 1 else 1.0
    scale = LogUniform(1e-2 * var, 1e2 * var)
    length = LogUniform(step, max(span, 2 * step))
    if cfg["model"] == "se":
        base = {"mu": scale, "L": length}
    else:
        base = {"x_b": Uniform(lo, hi), "mu1": scale, "L1": length, "mu2": scale, "L2": length,
                "k_b": scale}
        if cfg["order"] == 1:
            base["k_b_slope"] = LogUniform(1e-2 * var / span ** 2, 1e2 * var / step ** 2)
    base["sigma2"] = LogUniform(1e-6 * var, var)
    for k in base:
        if cfg[k] is not None:
            base[k] = cfg[k]
    return base


def fit_builder(model: str, order: int):
    def build(theta):
        if model == "se":
            return squared_exponential(theta["mu"], theta["L"]), theta["sigma2"]
        kb = theta["k_b"] if order == 0 else (theta["k_b"], theta["k_b_slope"])
        rm = RegionModel.two_region(squared_exponential(theta["mu1"], theta["L1"]),
                                    squared_exponential(theta["mu2"], theta["L2"]),
                                    theta["x_b"], kb, order)
        return rm, theta["sigma2"]
    return build


def cmd_fit(cfg: RunConfig, series: TimeSeries, out: Path, plot: bool) -> int:
    priors = fit_priors(cfg, series)
    _reject_keys(cfg, set(priors) | {"seed", "n", "workers", "model", "order"},
                 f"model {cfg['model']} (order {cfg['order']})")
    cfg.values.update(priors)
    build = fit_builder(cfg["model"], cfg["order"])
    hp = mc_marginalize(series, gp_evidence_model(build), priors, cfg["n"], cfg["seed"],
                        workers=cfg["workers"])
    cols = {name: hp.column(name) for name in hp.names}
    cols["log_weight"] = hp.log_weights
    write_table(out / "fit_samples.csv", "fit", cols)
    qs = (0.05, 0.25, 0.5, 0.75, 0.95)
    summary = {"param": list(hp.names),
               "mean": [hp.mean(k) for k in hp.names]}
    for q in qs:
        summary[f"q{int(round(100 * q)):02d}"] = [hp.quantile(k, q) for k in hp.names]
    write_table(out / "fit_summary.csv", "fit", summary,
                comments=(f"effective_sample_size = {_fmt(hp.effective_sample_size())}",
                          f"failed_samples = {hp.n_failed}"))
    if plot:
        def predict(theta):
            k, s2 = build(theta)
            return posterior(series, series.t, k, s2)

        est = marginal_predict(hp, predict, min_weight=1e-4)
        _band_plot(f"fit: {cfg['model']}", series, [("posterior", est)]).save(out / "fit.svg")
    _finish(cfg, out, "fit")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "remove": cmd_remove, "separate": cmd_separate,
            "fit": cmd_fit}

_HELP = {
    "simulate": "generate a synthetic scenario CSV (t,y,f_true,e_true)",
    "fit": "hyperparameter posterior samples and quantiles for an SE or two-region model",
    "remove": "separate a real process from a bias/drift fault",
    "separate": "apportion a signal between background and a windowed artifact",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrl-gp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "fit", "remove", "separate"):
        p = sub.add_parser(name, help=_HELP[name], description=_HELP[name])
        if name != "simulate":
            p.add_argument("input", help="CSV with a header row and columns t,y")
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one configuration key (repeatable)")
        p.add_argument("--seed", type=int, help="random seed (overrides config)")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--plot", action="store_true", help="also write an SVG plot")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = list(args.set)
        if args.seed is not None:
            overrides.append(f"seed={args.seed}")
        cfg = load_config(args.command, args.config, overrides)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "simulate":
            return cmd_simulate(cfg, out, args.plot)
        series = read_series(args.input)
        return COMMANDS[args.command](cfg, series, out, args.plot)
    except InvariantViolation as exc:
        print(f"mrl-gp: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (InferenceError, NumericalError, ConditioningError, DegenerateModelError) as exc:
        print(f"mrl-gp: inference failed: {exc}", file=sys.stderr)
        return EXIT_INFERENCE
    except (InputError, ParameterError) as exc:
        print(f"mrl-gp: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"mrl-gp: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
