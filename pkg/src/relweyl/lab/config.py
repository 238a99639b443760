"""Experiment configuration: one YAML (or JSON) mapping per run.

Schema, with defaults filled in by :func:`normalize`::

    kind: weyl | relative-weyl | gse-scaling | ims-check | exponents
          | mollify-slopes | trace-neg | classical
    potential: {family: pure_power | truncated_power, d, c0, s, mu, S, r_t}
    pair: {family: perturbed | shift | identical, ...}
    h: 0.1                      # single-h kinds
    ladder: {h_max: 0.4, ratio: 1.4142135623730951, count: 8}   # or {values: [...]}
    beta: 1.0
    grid: {gamma, r_min_factor, n_quantum, points_per_wavelength, outer_factor,
           margin_lengths, tail_level, max_points, R_max, N, error_estimate}
    quadrature: {order, rel_tol, abs_tol}
    theory: {d, s, S, r, eta_target, outer_extent}
    A: 1.0
    lt_constants: {"3,0.25": 0.0123, ...}
    ims: {configs: 5, samples: 10000}
    mollify: {d: 3, tau_max: 0.1, tau_min: 0.001, count: 6}
    seed: 0

The normalized mapping is echoed into every report.
"""

from __future__ import annotations

import copy
import dataclasses
import math
from pathlib import Path
from typing import Any, Optional

import yaml

from relweyl.errors import ConfigError
from relweyl.semiclassics import QuadratureSpec
from relweyl.spectral import GridPolicy

KINDS = ("weyl", "relative-weyl", "gse-scaling", "ims-check", "exponents",
         "mollify-slopes", "trace-neg", "classical")

DEFAULT_LADDER = {"h_max": 0.4, "ratio": math.sqrt(2.0), "count": 8}

_DEFAULTS = {
    "weyl": {
        "potential": {"family": "pure_power", "d": 3, "c0": 1.0, "s": 1.0, "mu": 0.1},
        "ladder": {"h_max": 0.4, "ratio": 2.0 ** (3 / 7), "count": 8},
    },
    "relative-weyl": {
        "pair": {"family": "perturbed", "d": 3, "c0": 1.0, "s": 1.3, "r_exp": 0.5,
                 "a": 0.5, "mu": 1.0, "r_t": 1.0},
        "ladder": {"h_max": 0.4, "ratio": math.sqrt(2.0), "count": 6},
    },
    "gse-scaling": {
        "potential": {"family": "pure_power", "d": 3, "c0": 1.0, "s": 1.0, "mu": 0.0},
        "ladder": dict(DEFAULT_LADDER),
    },
    "trace-neg": {
        "potential": {"family": "pure_power", "d": 3, "c0": 1.0, "s": 1.0, "mu": 0.1},
        "h": 0.1,
    },
    "classical": {
        "potential": {"family": "pure_power", "d": 3, "c0": 1.0, "s": 1.0, "mu": 0.1},
        "h": 0.1,
    },
    "exponents": {"theory": {"d": 3, "s": 1.3, "S": 2.0, "r": 0.5}},
    "ims-check": {"ims": {"configs": 5, "samples": 10_000}},
    "mollify-slopes": {"mollify": {"d": 3, "tau_max": 0.1, "tau_min": 0.001, "count": 6}},
}


def _policy_dict(raw: Optional[dict]) -> dict:
    raw = dict(raw or {})
    error_estimate = bool(raw.pop("error_estimate", False))
    names = {f.name for f in dataclasses.fields(GridPolicy)}
    unknown = set(raw) - names
    if unknown:
        raise ConfigError(f"unknown grid settings: {sorted(unknown)}")
    out = dataclasses.asdict(GridPolicy(**raw))
    out["error_estimate"] = error_estimate
    return out


def _quad_dict(raw: Optional[dict]) -> dict:
    raw = dict(raw or {})
    names = {f.name for f in dataclasses.fields(QuadratureSpec)}
    unknown = set(raw) - names
    if unknown:
        raise ConfigError(f"unknown quadrature settings: {sorted(unknown)}")
    return dataclasses.asdict(QuadratureSpec(**raw))


def ladder_values(spec: dict) -> list:
    if "values" in spec:
        vals = [float(v) for v in spec["values"]]
    else:
        try:
            h_max, ratio, count = float(spec["h_max"]), float(spec["ratio"]), int(spec["count"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"ladder needs h_max, ratio and count: {exc}") from None
        if ratio <= 1:
            raise ConfigError(f"ladder ratio must exceed 1, got {ratio}")
        vals = [h_max / ratio**k for k in range(count)]
    if any(not v > 0 for v in vals):
        raise ConfigError("ladder values must be positive")
    if any(b >= a for a, b in zip(vals[:-1], vals[1:])):
        raise ConfigError("ladder must be strictly decreasing")
    return vals


def normalize(raw: dict, kind: Optional[str] = None) -> dict:
    """Fill defaults and validate; returns a fresh plain mapping."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    cfg = copy.deepcopy(raw)
    kind = kind or cfg.get("kind")
    if cfg.get("kind") not in (None, kind):
        raise ConfigError(f"config kind {cfg.get('kind')!r} does not match {kind!r}")
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; expected one of {KINDS}")
    cfg["kind"] = kind
    for key, val in _DEFAULTS[kind].items():
        cfg.setdefault(key, copy.deepcopy(val))
    if "ladder" in cfg:
        cfg["ladder"] = {"values": ladder_values(cfg["ladder"])}
    cfg["grid"] = _policy_dict(cfg.get("grid"))
    cfg["quadrature"] = _quad_dict(cfg.get("quadrature"))
    cfg.setdefault("beta", 1.0)
    cfg.setdefault("A", 1.0)
    cfg.setdefault("seed", 0)
    cfg.setdefault("lt_constants", {})
    if float(cfg["A"]) <= 0:
        raise ConfigError("constant A must be positive")
    if float(cfg["beta"]) <= 0:
        raise ConfigError("beta must be positive")
    return cfg


def load_config(path, kind: Optional[str] = None) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {p}: {exc}") from None
    return normalize(raw or {}, kind)


def grid_policy(cfg: dict) -> GridPolicy:
    g = dict(cfg["grid"])
    g.pop("error_estimate", None)
    return GridPolicy(**g)


def quadrature(cfg: dict) -> QuadratureSpec:
    return QuadratureSpec(**cfg["quadrature"])


def lt_table(cfg: dict) -> dict:
    out: dict[Any, float] = {}
    for key, val in (cfg.get("lt_constants") or {}).items():
        parts = str(key).split(",")
        if len(parts) != 2:
            raise ConfigError(f"Lieb-Thirring key {key!r} must read 'd,beta'")
        try:
            out[(int(parts[0]), float(parts[1]))] = float(val)
        except ValueError:
            raise ConfigError(f"bad Lieb-Thirring entry {key!r}: {val!r}") from None
    return out
