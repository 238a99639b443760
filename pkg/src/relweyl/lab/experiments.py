"""Experiment drivers.  Each takes a config mapping and returns a :class:`Report`.

Residual convention: the spectral side is scaled by ``h^d`` and compared with
the ``h``-independent classical integral, so an ``O(h^{-d+η})`` remainder shows
up as an ``O(h^η)`` decay of ``residual``.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from relweyl import mollify, semiclassics, spectral, theory
from relweyl.errors import AdmissibilityError, ConfigError, DivergenceError
from relweyl.lab import config as cfgmod
from relweyl.lab.fit import fit_rate
from relweyl.lab.report import Report
from relweyl.potentials import build_pair, build_potential
from relweyl.unbounded import is_unbounded


def _potential(cfg):
    if "potential" not in cfg:
        raise ConfigError(f"{cfg['kind']} needs a 'potential' declaration")
    try:
        return build_potential(cfg["potential"])
    except Exception as exc:
        raise ConfigError(f"bad potential declaration: {exc}") from None


def _pair(cfg):
    if "pair" not in cfg:
        raise ConfigError(f"{cfg['kind']} needs a 'pair' declaration")
    try:
        return build_pair(cfg["pair"])
    except Exception as exc:
        raise ConfigError(f"bad pair declaration: {exc}") from None


def _hs(cfg):
    if "ladder" in cfg:
        return list(cfg["ladder"]["values"])
    h = cfg.get("h")
    if h is None:
        raise ConfigError("config needs 'h' or a 'ladder'")
    hs = h if isinstance(h, list) else [h]
    if any(not float(x) > 0 for x in hs):
        raise ConfigError("h must be positive")
    return [float(x) for x in hs]


def _quiet(fn, *args, **kwargs):
    """Run ``fn`` and collect resolution warnings instead of printing them."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", spectral.ResolutionWarning)
        out = fn(*args, **kwargs)
    notes = [str(w.message) for w in caught if issubclass(w.category, spectral.ResolutionWarning)]
    return out, notes


def _fit_summary(hs, residuals, predicted=None):
    try:
        return fit_rate(hs, residuals, predicted).as_dict()
    except Exception as exc:
        return {"error": str(exc), "predicted": predicted}


def _report_dict(rep: theory.ExponentReport) -> dict:
    out = rep.as_dict()
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in out.items()}


# ---------------------------------------------------------------- single evaluations

def run_trace_neg(cfg: dict, threads: int = 1) -> Report:
    cfg = cfgmod.normalize(cfg, "trace-neg")
    V = _potential(cfg)
    policy = cfgmod.grid_policy(cfg)
    beta = float(cfg["beta"])
    rows, notes = [], []
    for h in _hs(cfg):
        grid = spectral.make_grid(V, h, policy)
        sp, n = _quiet(spectral.trace_neg, V, h, grid, beta, threads=threads)
        notes += n
        ev = sp.all_eigenvalues()
        rows.append({"h": h, "beta": beta, "riesz_mean": sp.riesz_mean(beta), "n_neg": sp.n_neg,
                     "channels_used": sp.channels_used, "grid_N": grid.N,
                     "e_min": float(ev[0]) if ev.size else None})
    cols = ["h", "beta", "riesz_mean", "n_neg", "channels_used", "grid_N", "e_min"]
    return Report("trace-neg", cfg, cols, rows, {"warnings": sorted(set(notes))})


def run_classical(cfg: dict, threads: int = 1) -> Report:
    cfg = cfgmod.normalize(cfg, "classical")
    V = _potential(cfg)
    quad = cfgmod.quadrature(cfg)
    rows = []
    for h in _hs(cfg):
        res = semiclassics.classical_trace(V, h, quad)
        rows.append({"h": h, "value": res.value, "error": res.error,
                     "divergent": res.divergent, "integral": res.integral})
    summary = {"note": res.note} if res.note else {}
    return Report("classical", cfg, ["h", "value", "error", "divergent", "integral"], rows, summary)


def run_exponents(cfg: dict, threads: int = 1) -> Report:
    cfg = cfgmod.normalize(cfg, "exponents")
    t = cfg["theory"]
    try:
        d, s, S, r = int(t["d"]), float(t["s"]), float(t["S"]), float(t["r"])
    except KeyError as exc:
        raise ConfigError(f"theory block needs d, s, S and r; missing {exc}") from None
    rep = theory.eta_report(d, s, S, r)
    summary = {"report": _report_dict(rep), "landau_order": str(theory.landaus_order(d, s))}
    rows = []
    cols = ["n", "theta", "kind", "beta", "localization", "sc_1", "sc_2", "sc_3",
            "sc_optimized", "quantum", "integral", "worst"]
    if rep.admissible and rep.eta_star > 0:
        target = float(t.get("eta_target", 0.9 * float(rep.eta_star)))
        ledger = theory.zone_ledger(d, s, S, r, target, float(cfg["A"]),
                                    float(t.get("outer_extent", 1.0)))
        for z in ledger.zones:
            sc = list(z.semiclassical) + [None] * (3 - len(z.semiclassical))
            rows.append({"n": z.n, "theta": z.theta, "kind": z.kind, "beta": z.beta,
                         "localization": z.localization, "sc_1": sc[0], "sc_2": sc[1],
                         "sc_3": sc[2], "sc_optimized": z.semiclassical_optimized,
                         "quantum": z.quantum, "integral": z.integral, "worst": z.worst()})
        summary["ledger"] = {"eta_target": target, "A": ledger.A, "epsilon": ledger.epsilon,
                             "epsilon_used": ledger.epsilon_used, "N": ledger.N,
                             "n_min": ledger.n_min, "headline": dict(ledger.headline),
                             "worst_exponent": ledger.worst_exponent,
                             "governing": ledger.governing}
    else:
        summary["ledger"] = None
    return Report("exponents", cfg, cols, rows, summary)


# ---------------------------------------------------------------- ladders

def run_weyl(cfg: dict, threads: int = 1) -> Report:
    """Absolute Weyl law: ``h^d (tr[-h^2Δ+V]_- - classical)`` across the ladder."""
    cfg = cfgmod.normalize(cfg, "weyl")
    V = _potential(cfg)
    if float(cfg["beta"]) != 1.0:
        raise ConfigError("the Weyl comparison is defined for beta = 1")
    policy, quad = cfgmod.grid_policy(cfg), cfgmod.quadrature(cfg)
    try:
        base = semiclassics.classical_trace(V, 1.0, quad, strict=True)
    except DivergenceError as exc:
        raise DivergenceError(f"{exc}; run the relative-weyl experiment instead") from None
    d = V.d
    hs = _hs(cfg)
    rows, notes = [], []
    for h in hs:
        grid = spectral.make_grid(V, h, policy)
        sp, n = _quiet(spectral.trace_neg, V, h, grid, threads=threads)
        notes += n
        trace = sp.trace
        classical = base.value * h**-d
        row = {"h": h, "trace": trace, "classical": classical, "residual": trace - classical,
               "residual_scaled": h**d * trace - base.value, "grid_N": grid.N,
               "channels_used": sp.channels_used, "n_neg": sp.n_neg, "grid_error": None}
        if cfg["grid"]["error_estimate"]:
            fine, n = _quiet(spectral.trace_neg, V, h, grid.refined(2), threads=threads)
            notes += n
            # second-order stencil: error of the coarse value is about 4/3 of the change
            row["grid_error"] = 4.0 / 3.0 * abs(fine.trace - trace)
        rows.append(row)
    res = [r["residual_scaled"] for r in rows]
    fit = _fit_summary(hs, res)
    summary = {"classical_scaled": base.value, "classical_error": base.error, "fit": fit,
               "next_order_coefficient": float(np.mean([x / h for x, h in zip(res, hs)])),
               "warnings": sorted(set(notes))}
    cols = ["h", "trace", "classical", "residual", "residual_scaled", "grid_N",
            "channels_used", "n_neg", "grid_error"]
    return Report("weyl", cfg, cols, rows, summary)


RELATIVE_COLUMNS = ["h", "trace1", "trace2", "diff", "scaled_diff", "classical_relative",
                    "residual", "grid_N", "channels_used"]


def run_relative(cfg: dict, threads: int = 1) -> Report:
    """Relative Weyl law: ``h^d (tr_1 - tr_2) - L^cl ∫ W_1`` across the ladder.

    Both members share one grid and one channel set per ``h`` and are
    differenced channel by channel.
    """
    cfg = cfgmod.normalize(cfg, "relative-weyl")
    cfg.setdefault("require_admissible", True)
    pair = _pair(cfg)
    d = pair.d
    violations = []
    rep = None
    try:
        rep = theory.eta_report(d, pair.s, pair.S, pair.r)
        violations = list(rep.violations)
    except Exception as exc:
        violations = [str(exc)]
    if violations and cfg["require_admissible"]:
        raise AdmissibilityError("pair is not admissible: " + "; ".join(violations))
    policy, quad = cfgmod.grid_policy(cfg), cfgmod.quadrature(cfg)
    rel = semiclassics.relative_classical_trace(pair, 1.0, quad)
    hs = _hs(cfg)
    rows, notes = [], []
    scaled1, scaled2 = [], []
    for h in hs:
        grid = spectral.make_grid([pair.first, pair.second], h, policy)
        out, n = _quiet(spectral.relative_trace, pair, h, grid, threads=threads)
        notes += n
        t1, t2 = out.first.trace, out.second.trace
        scaled = h**d * out.difference
        rows.append({"h": h, "trace1": t1, "trace2": t2, "diff": out.difference,
                     "scaled_diff": scaled, "classical_relative": rel.value,
                     "residual": scaled - rel.value, "grid_N": grid.N,
                     "channels_used": out.channels_used})
        scaled1.append(h**d * t1)
        scaled2.append(h**d * t2)
    res = [r["residual"] for r in rows]
    mags = [abs(x) for x in res]
    eta_star = None if rep is None else rep.eta_star
    summary = {
        "eta_star": eta_star,
        "exponents": None if rep is None else _report_dict(rep),
        "violations": violations,
        "fit": _fit_summary(hs, res, None if eta_star is None or is_unbounded(eta_star)
                            else float(eta_star)),
        "monotone_decreasing": all(b < a for a, b in zip(mags[:-1], mags[1:])),
        "scaled_trace1": scaled1,
        "scaled_trace2": scaled2,
        "landau_order": str(theory.landaus_order(d, pair.s)),
        "classical_relative_error": rel.error,
        "warnings": sorted(set(notes)),
    }
    return Report("relative-weyl", cfg, list(RELATIVE_COLUMNS), rows, summary)


def gse_grid(V, hs, policy: spectral.GridPolicy, extent: float = 60.0) -> spectral.RadialGrid:
    """One absolute grid adequate for the ground state at every ``h`` in ``hs``."""
    ell = [h ** (2.0 / (2.0 - V.s)) for h in hs]
    r_min = policy.r_min_factor * min(ell)
    R = policy.R_max or extent * max(ell)
    N = policy.N or int(math.ceil(policy.n_quantum * (R / min(ell)) ** (1.0 / policy.gamma)))
    return spectral.RadialGrid(r_min, R, min(N, policy.max_points), policy.gamma)


def run_gse_scaling(cfg: dict, threads: int = 1) -> Report:
    """Fit the ground-state energy against ``h``; the prediction is ``-2s/(2-s)``."""
    cfg = cfgmod.normalize(cfg, "gse-scaling")
    V = _potential(cfg)
    if V.family != "pure_power":
        raise ConfigError("ground-state scaling needs a pure_power potential")
    hs = _hs(cfg)
    cfg.setdefault("extent", 60.0)
    grid = gse_grid(V, hs, cfgmod.grid_policy(cfg), float(cfg["extent"]))
    predicted = -2 * V.s / (2 - V.s)
    rows, energies = [], []
    for h in hs:
        e = spectral.ground_state_energy(V, h, grid) - V.mu
        energies.append(e)
        rows.append({"h": h, "e_min": e, "scaled": e * h ** (-predicted), "grid_N": grid.N})
    fit = _fit_summary(hs, energies, predicted)
    summary = {"fit": fit, "predicted": predicted,
               "relative_deviation": (None if fit.get("slope") is None
                                      else abs(fit["slope"] - predicted) / abs(predicted)),
               "grid": {"r_min": grid.r_min, "R_max": grid.R_max, "N": grid.N,
                        "gamma": grid.gamma}}
    return Report("gse-scaling", cfg, ["h", "e_min", "scaled", "grid_N"], rows, summary)


def run_ims_check(cfg: dict, threads: int = 1) -> Report:
    """Partition identity, local finiteness and gradient bound for random schemes."""
    cfg = cfgmod.normalize(cfg, "ims-check")
    opts = cfg["ims"]
    configs, samples = int(opts.get("configs", 5)), int(opts.get("samples", 10_000))
    rng = np.random.default_rng(int(cfg["seed"]))
    rows = []
    for i in range(configs):
        alpha = float(rng.uniform(0.5, 2.5))
        n = int(rng.integers(2, 9))
        eps = alpha / n
        h = float(rng.uniform(0.05, 0.95) * 2.0 ** (-1.0 / eps))
        scheme = mollify.PartitionScheme.covering(alpha, eps, h, float(opts.get("outer", 1.0)))
        lo = h**alpha / 10
        hi = 20 * h ** scheme.theta(scheme.n_min)
        r = np.logspace(math.log10(lo), math.log10(hi), samples)
        vals = mollify.partition_values(scheme, r)
        defect = float(np.max(np.abs(np.sum(vals * vals, axis=0) - 1.0)))
        members = int(np.max(np.sum(vals != 0.0, axis=0)))
        grad = mollify.gradient_bound_check(scheme, r)
        rows.append({"config": i, "alpha": alpha, "epsilon": scheme.eps, "h": h,
                     "N": scheme.N, "n_min": scheme.n_min, "max_defect": defect,
                     "max_members": members, "gradient_ratio": grad.max_ratio,
                     "gradient_constant": grad.constant, "gradient_passed": grad.passed})
    passed = all(r["max_defect"] < 1e-12 and r["max_members"] <= 2 and r["gradient_passed"]
                 for r in rows)
    cols = ["config", "alpha", "epsilon", "h", "N", "n_min", "max_defect", "max_members",
            "gradient_ratio", "gradient_constant", "gradient_passed"]
    return Report("ims-check", cfg, cols, rows, {"passed": passed})


def smooth_profile(r):
    return np.exp(-np.asarray(r) ** 2)


def kink_profile(r):
    """Negative part of the tent ``|x| - 1``: ``[|x| - 1]_- = max(1 - |x|, 0)``."""
    return np.maximum(1.0 - np.asarray(r), 0.0)


def run_mollify_slopes(cfg: dict, threads: int = 1) -> Report:
    cfg = cfgmod.normalize(cfg, "mollify-slopes")
    m = cfg["mollify"]
    d = int(m.get("d", 3))
    taus = list(np.logspace(math.log10(float(m.get("tau_max", 0.1))),
                            math.log10(float(m.get("tau_min", 0.001))), int(m.get("count", 6))))
    smooth = mollify.convolution_error_slope(smooth_profile, taus, np.linspace(0.1, 2.0, 8), d)
    kink = mollify.convolution_error_slope(kink_profile, taus, np.linspace(0.9, 1.1, 21), d,
                                           kinks=[1.0])
    rows = [{"tau": float(t), "error_smooth": float(a), "error_kink": float(b)}
            for t, a, b in zip(smooth.taus, smooth.errors, kink.errors)]
    summary = {"slope_smooth": smooth.slope, "slope_kink": kink.slope,
               "passed": (abs(smooth.slope - 2) <= 0.15 and abs(kink.slope - 1) <= 0.15)}
    return Report("mollify-slopes", cfg, ["tau", "error_smooth", "error_kink"], rows, summary)


RUNNERS = {
    "weyl": run_weyl,
    "relative-weyl": run_relative,
    "gse-scaling": run_gse_scaling,
    "ims-check": run_ims_check,
    "exponents": run_exponents,
    "mollify-slopes": run_mollify_slopes,
    "trace-neg": run_trace_neg,
    "classical": run_classical,
}


def run(cfg: dict, threads: int = 1) -> Report:
    kind = cfg.get("kind")
    if kind not in RUNNERS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    return RUNNERS[kind](cfg, threads)
