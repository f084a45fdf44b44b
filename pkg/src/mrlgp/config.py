"""``key = value`` run configuration with typed, per-command schemas."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .exceptions import ParameterError
from .hyper import parse_prior


class ConfigError(ParameterError):
    """Bad configuration file or override."""


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _choice(*options):
    def conv(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    conv.__name__ = "choice"
    return conv


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise ValueError("must be a positive integer")
    return v


@dataclass(frozen=True)
class Field:
    convert: Callable[[str], object]
    default: object = None
    help: str = ""


def _prior(help_text):
    return Field(parse_prior, None, help_text)


COMMON = {
    "seed": Field(int, 0, "random seed"),
    "n": Field(_positive_int, 2000, "hyperparameter samples"),
    "workers": Field(_positive_int, 1, "threads for per-sample work"),
}

SCHEMAS: dict[str, dict[str, Field]] = {
    "simulate": {
        "seed": COMMON["seed"],
        "scenario": Field(_choice("tracking", "gibbs", "wedge", "separation"), "tracking"),
        "kind": Field(_choice("none", "bias", "drift", "drift_then_bias"), "bias"),
        "snr": Field(_choice("low", "high"), "low"),
        "artifact": Field(_bool, True),
        "n_points": Field(_positive_int, None, "series length"),
        "dt": Field(float, None),
        "real_mu": Field(float, None), "real_L": Field(float, None),
        "noise_var": Field(float, None),
        "t0": Field(float, None), "t1": Field(float, None), "t_m": Field(float, None),
        "mu": Field(float, None), "L": Field(float, None), "k_b_link": Field(float, None),
        "sig_mu": Field(float, None), "sig_L": Field(float, None),
        "art_mu": Field(float, None), "art_L": Field(float, None),
        "T_s": Field(float, None), "T_e": Field(float, None),
        "R_sig": Field(float, None), "R_art": Field(float, None),
    },
    "remove": {
        **COMMON,
        "kind": Field(_choice("bias", "drift", "drift_then_bias"), "bias"),
        "mode": Field(_choice("batch", "online"), "batch"),
        "real_mu": Field(float, 1.0, "real-process scale height"),
        "real_L": Field(float, 20.0, "real-process length-scale"),
        "t0": _prior("fault onset"), "t1": _prior("fault end"),
        "mu": _prior("fault magnitude"), "L": _prior("drift length-scale"),
        "t_m": _prior("drift-to-bias transition"), "k_b_link": _prior("transition variance"),
        "sigma2": _prior("noise variance"),
    },
    "separate": {
        **COMMON,
        "sig_mu": _prior("signal scale height"), "sig_L": _prior("signal length-scale"),
        "art_mu": _prior("artifact scale height"), "art_L": _prior("artifact length-scale"),
        "art_v": _prior("artifact midpoint variance (defaults to art_mu)"),
        "T_s": _prior("artifact start"), "T_e": _prior("artifact end"),
        "R_sig": _prior("signal residual variance"), "R_art": _prior("artifact residual variance"),
    },
    "fit": {
        **COMMON,
        "model": Field(_choice("se", "mrl"), "se"),
        "order": Field(lambda s: int(_choice("0", "1")(s)), 0, "continuity order (mrl)"),
        "mu": _prior("scale height (se)"), "L": _prior("length-scale (se)"),
        "sigma2": _prior("noise variance"),
        "x_b": _prior("change-point (mrl)"),
        "mu1": _prior("left scale height"), "L1": _prior("left length-scale"),
        "mu2": _prior("right scale height"), "L2": _prior("right length-scale"),
        "k_b": _prior("boundary value variance"), "k_b_slope": _prior("boundary slope variance"),
    },
}


@dataclass
class RunConfig:
    command: str
    values: dict
    raw: dict

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        v = self.values.get(key)
        return default if v is None else v

    def explicit(self) -> dict:
        """Keys that were set, mapped to their parsed values."""
        return {k: self.values[k] for k in self.raw}

    def echo(self) -> str:
        """Resolved configuration; feeding it back reproduces the run."""
        lines = [f"# mrl-gp v1 {self.command} config"]
        for key in sorted(self.values):
            v = self.values[key]
            if v is None:
                continue
            if isinstance(v, bool):
                text = "true" if v else "false"
            elif isinstance(v, float):
                text = repr(v)
            else:
                text = str(v)
            lines.append(f"{key} = {text}")
        return "\n".join(lines) + "\n"


def parse_lines(lines, source="<config>") -> dict[str, tuple[str, str]]:
    """``key -> (value text, location)`` from ``key = value`` lines."""
    out: dict[str, tuple[str, str]] = {}
    for no, line in enumerate(lines, 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{source}:{no}: expected 'key = value'")
        key, value = (s.strip() for s in text.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{source}:{no}: expected 'key = value'")
        if key in out:
            raise ConfigError(f"{source}:{no}: duplicate key {key!r}")
        out[key] = (value, f"{source}:{no}")
    return out


def load_config(command: str, path=None, overrides=()) -> RunConfig:
    """Merge defaults, a config file and ``key=value`` overrides, then type-check."""
    schema = SCHEMAS[command]
    raw: dict[str, tuple[str, str]] = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw.update(parse_lines(fh, str(path)))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    for item in overrides:
        parsed = parse_lines([item], "--set")
        if not parsed:
            raise ConfigError(f"--set {item!r}: expected 'key=value'")
        raw.update(parsed)
    values = {k: f.default for k, f in schema.items()}
    for key, (text, where) in raw.items():
        if key not in schema:
            raise ConfigError(f"{where}: unknown key {key!r} for {command}")
        try:
            values[key] = schema[key].convert(text)
        except (ValueError, ParameterError) as exc:
            raise ConfigError(f"{where}: bad value for {key!r}: {exc}") from None
    return RunConfig(command, values, {k: v[0] for k, v in raw.items()})
