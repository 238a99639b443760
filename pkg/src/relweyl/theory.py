"""Closed-form exponents, admissibility conditions, optimal parameters and bounds.

All error orders are recorded as exponents of ``h``: an entry ``e`` stands for
``O(h^e)``.  The convergence exponent ``η`` of the relative Weyl law is the
gain over the leading ``h^{-d}``, so a term of order ``h^{-d+η}`` is stored as
``-d + η``.  Unbounded exponents are the :data:`UNBOUNDED` marker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np
from scipy.special import beta as beta_fn

from relweyl.errors import AdmissibilityError, ConfigError, DivergenceError, DomainError
from relweyl.potentials import PotentialSpec
from relweyl.semiclassics import (BOUNDARY_TOL, QuadratureSpec, classical_lt_constant,
                                  level_crossings, radial_integral)
from relweyl.unbounded import UNBOUNDED, is_unbounded

# upper ends of the singular exponent in the main results
S_CAP_3D = 62 / 45
S_CAP_2D = 5 / 4
# where α_loc(r=0) meets 2/(8-s) in d = 3: the smaller root of 5s^2 - 43s + 54
S_CAP_LEMMA_3D = (43 - math.sqrt(769)) / 10
# large-S thresholds above which the outer cutoff costs nothing
S_LARGE = {2: 4 / 3, 3: 14 / 9}


def critical_exponent(d: int) -> float:
    if d < 2:
        raise DomainError(f"dimension must be >= 2, got {d}")
    return 2 * d / (d + 2)


def _check_dim(d):
    if d not in (2, 3):
        raise DomainError(f"only d = 2 and d = 3 are implemented, got {d}")


def _check_s(d, s):
    if not 1.0 <= s < 2.0:
        raise DomainError(f"singular exponent must satisfy 1 <= s < 2, got {s}")


# ---------------------------------------------------------------- exponents

def eta_loc(d: int, s: float, r: float) -> float:
    _check_dim(d)
    if d == 3:
        if s <= 6 / 5:
            return 2 - 8 / (5 * (2 - r))
        return (175 * r * s - 250 * r - 270 * s + 372) / (25 * (2 - s) * (2 - r))
    return 2 * (5 - 4 * r - 4 * s + 3 * r * s) / ((2 - s) * (2 - r))


def eta_sc(d: int, s: float, r: float):
    _check_dim(d)
    if d == 3:
        if s <= 6 / 5:
            return UNBOUNDED
        return ((175 * r * s - 250 * r - 350 * s * s + 425 * s + 82)
                / (5 * (2 - s) * (10 * s - 5 * r + 1)))
    return 2 * (-5 * s * s + 8 * s - 2 + r * s - 2 * r) / ((2 - s) * (5 * s - 3 * r - 1))


def alpha_sc(d: int, s: float, r: float) -> float:
    _check_dim(d)
    if d == 3:
        den = 10 * s - 5 * r + 1
        if s <= 6 / 5:
            num = 5.0
        else:
            num = 2 * (5 * s - 4)
            den *= 2 - s
    else:
        num = 2 * (2 * s - 1)
        den = (2 - s) * (5 * s - 3 * r - 1)
    if den <= 0:
        raise DomainError(f"α_sc denominator {den:.6g} is not positive for s={s}, r={r}")
    return num / den


def alpha_loc(d: int, s: float, r: float) -> float:
    _check_dim(d)
    if r >= 2:
        raise DomainError(f"α_loc needs r < 2, got {r}")
    if d == 3:
        if s <= 6 / 5:
            return 2 / (2 - r)
        return 4 * (8 - 5 * s) / (5 * (2 - s) * (2 - r))
    return 2 * (3 - 2 * s) / ((2 - s) * (2 - r))


def alpha_optimal(d: int, s: float, r: float):
    """``(α_sc, α_loc, chosen α)``; α_sc is chosen when the semiclassical side is the bottleneck."""
    _check_dim(d)
    _check_s(d, s)
    a_sc, a_loc = alpha_sc(d, s, r), alpha_loc(d, s, r)
    e_sc, e_loc = eta_sc(d, s, r), eta_loc(d, s, r)
    chosen = a_sc if (not is_unbounded(e_sc) and e_sc < e_loc) else a_loc
    return a_sc, a_loc, chosen


def omega_cutoff(d: int, S: float):
    """``(ω, η_cutoff)``; both are unbounded when ``S`` exceeds the large-S threshold."""
    _check_dim(d)
    if not S > critical_exponent(d):
        raise DomainError(f"tail exponent S = {S} must exceed s_c = {critical_exponent(d):.6g}")
    if S > S_LARGE[d]:
        return UNBOUNDED, UNBOUNDED
    omega = (2 / 3) / (S - 2 / 3)
    if d == 3:
        eta = (5 / 3) * (S - 6 / 5) / (S - 2 / 3)
    else:
        eta = (4 / 3) * (S - 1) / (S - 2 / 3)
    return omega, eta


def theorem_conditions(d: int, s: float, S: float, r: float):
    """Violated hypotheses of the main results, as messages (empty when admissible)."""
    out = []
    if d == 3:
        if not 1 <= s < S_CAP_3D:
            out.append(f"need 1 <= s < 62/45 = {S_CAP_3D:.12g}, got s = {s}")
        if not S > 6 / 5:
            out.append(f"need S > 6/5, got S = {S}")
        bound = s
        if abs(7 * s - 10) > 0:
            bound = min(s, 6 * (45 * s - 62) / (25 * (7 * s - 10)))
        if not r < bound:
            out.append(f"need r < min{{s, 6(45s-62)/(25(7s-10))}} = {bound:.12g}, got r = {r}")
    else:
        if not 1 <= s < S_CAP_2D:
            out.append(f"need 1 <= s < 5/4, got s = {s}")
        if not S > 1:
            out.append(f"need S > 1, got S = {S}")
        bound = min((5 - 4 * s) / (4 - 3 * s), (-5 * s * s + 8 * s - 2) / (2 - s))
        if not r < bound:
            out.append(f"need r < min{{(5-4s)/(4-3s), (-5s^2+8s-2)/(2-s)}} = {bound:.12g},"
                       f" got r = {r}")
    return tuple(out)


def lemma_conditions(d: int, s: float, r: float):
    """Violated hypotheses of the dimension-specific error lemmas."""
    out = []
    if d == 3:
        if not s < S_CAP_LEMMA_3D:
            out.append(f"need s < (43-sqrt(769))/10 = {S_CAP_LEMMA_3D:.12g}, got s = {s}")
        bound = min(s, 1.5 * (2 - s))
        if not r < bound:
            out.append(f"need r < min{{s, 3(2-s)/2}} = {bound:.12g}, got r = {r}")
    else:
        if not r < 2 - s:
            out.append(f"need r < 2 - s = {2 - s:.12g}, got r = {r}")
    return tuple(out)


@dataclass(frozen=True)
class ExponentReport:
    d: int
    s: float
    S: float
    r: float
    s_c: float
    branch: str
    eta_sc: object
    eta_loc: float
    eta_cutoff: object
    eta_star: float
    governing: str
    alpha_sc: float
    alpha_loc: float
    alpha: float
    omega: object
    violations: tuple = ()
    lemma_violations: tuple = ()

    @property
    def admissible(self) -> bool:
        return not self.violations

    @property
    def lemma_admissible(self) -> bool:
        return not self.lemma_violations

    def require_admissible(self):
        if self.violations:
            raise AdmissibilityError("; ".join(self.violations))
        return self

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["violations"] = list(self.violations)
        out["lemma_violations"] = list(self.lemma_violations)
        out["admissible"] = self.admissible
        out["lemma_admissible"] = self.lemma_admissible
        return out


def eta_report(d: int, s: float, S: float, r: float) -> ExponentReport:
    """Evaluate every exponent and parameter for ``(d, s, S, r)``.

    Out-of-range inputs for the formulas raise; parameters outside the
    hypotheses of the main results are flagged in ``violations``.
    """
    _check_dim(d)
    _check_s(d, s)
    if r < 0:
        raise DomainError(f"difference exponent must be >= 0, got {r}")
    s_c = critical_exponent(d)
    omega, e_cut = omega_cutoff(d, S)
    e_sc, e_loc = eta_sc(d, s, r), eta_loc(d, s, r)
    terms = {"sc": e_sc, "loc": e_loc, "cutoff": e_cut}
    governing = min(terms, key=lambda k: terms[k])
    a_sc, a_loc, alpha = alpha_optimal(d, s, r)
    violations = list(theorem_conditions(d, s, S, r))
    if alpha > 2 / (2 - s):
        violations.append(f"α = {alpha:.12g} exceeds 2/(2-s) = {2 / (2 - s):.12g}")
    if d == 3 and s > 6 / 5 and alpha < 2 / (8 - s):
        violations.append(f"α = {alpha:.12g} is below 2/(8-s) = {2 / (8 - s):.12g}")
    return ExponentReport(
        d=d, s=s, S=S, r=r, s_c=s_c, branch="s<=s_c" if s <= s_c else "s>s_c",
        eta_sc=e_sc, eta_loc=e_loc, eta_cutoff=e_cut, eta_star=terms[governing],
        governing=governing, alpha_sc=a_sc, alpha_loc=a_loc, alpha=alpha, omega=omega,
        violations=tuple(violations), lemma_violations=lemma_conditions(d, s, r))


# ---------------------------------------------------------------- zone ledger

ZONES = ("inner", "outer", "deep_inner")


def beta_optimal(d: int, theta_n: float, zone: str, s: float, S: float = 2.0) -> float:
    """Optimal coherent-state scale exponent ``β_n`` for one semiclassical zone."""
    _check_dim(d)
    if zone not in ZONES:
        raise DomainError(f"unknown zone {zone!r}")
    if zone == "inner" and theta_n < 0:
        raise DomainError(f"inner zones need θ >= 0, got {theta_n}")
    if zone == "outer" and theta_n > 0:
        raise DomainError(f"outer zones need θ <= 0, got {theta_n}")
    if zone == "deep_inner":
        if d != 3:
            raise DomainError("deep inner zones exist only in d = 3")
        if theta_n < 2 / (8 - s):
            raise DomainError(f"deep inner zones need θ >= 2/(8-s) = {2 / (8 - s):.6g}")
        b = 0.5 + theta_n * (4 + s) / 4
    elif zone == "inner":
        b = 2 / 3 + theta_n * (1 + s) / 3
    else:
        b = 2 / 3 + theta_n / 3
    if not b > theta_n:
        raise AdmissibilityError(f"require a priori β_n > θ_n; got β_n = {b:.6g}, θ_n = {theta_n:.6g}")
    return b


def semiclassical_triple(d: int, theta: float, beta: float, zone: str, s: float, S: float):
    """The three unoptimized semiclassical error exponents of one zone (without ``-Aε``)."""
    if d == 2:
        x = s if zone in ("inner", "deep_inner") else S
        if zone == "outer":
            return (-2 + beta + theta * (1 - S), -2 + 2 * (1 - beta) + theta * (2 - S),
                    -2 + 2 * beta - theta * S)
        return (-2 + beta + theta * (1 - 2 * x), -2 + 2 * (1 - beta) + theta * (2 - x),
                -2 + 2 * beta - theta * (1 + x))
    if zone == "outer":
        return (-3 + beta + theta * (2 - 1.5 * S), -3 + 2 * (1 - beta) + theta * (3 - 1.5 * S),
                -3 + 2 * beta - theta * (1 + 2.5 * S))
    return (-3 + beta + theta * (2 - 2.5 * s), -3 + 2 * (1 - beta) + theta * (3 - 1.5 * s),
            -3 + 2 * beta - theta * (1 + 2.5 * s))


def semiclassical_optimized(d: int, theta: float, zone: str, s: float, S: float) -> float:
    if d == 2:
        if zone == "outer":
            return -4 / 3 + theta * (4 / 3 - S)
        return -4 / 3 + theta * (4 / 3 - 5 * s / 3)
    if zone == "deep_inner":
        return -2 + theta * (1 - 2 * s)
    if zone == "outer":
        return -7 / 3 + theta * (7 / 3 - 1.5 * S)
    return -7 / 3 + theta * (7 / 3 - 13 * s / 6)


def _branch_excess(s, s_c):
    return max(s - s_c, 0.0) / ((2 - s) * (2 - s_c))


def quantum_error_exponent(d: int, s: float, r: float, alpha: float) -> float:
    s_c = critical_exponent(d)
    return -d + alpha * (s_c - r) - 2 * s_c * _branch_excess(s, s_c)


def quantum_localization_exponent(d: int, s: float, alpha: float) -> float:
    s_c = critical_exponent(d)
    return -d + 2 * (1 - alpha) + s_c * alpha - 4 * _branch_excess(s, s_c)


def integral_error_exponent(d: int, s: float, r: float, alpha: float) -> float:
    return -d + alpha * (d / 2 * (2 - s) - r)


def zone_localization_exponent(d: int, theta: float, s_n: float, slack: float) -> float:
    return -d + 2 + theta * (-2 + d / 2 * (2 - s_n)) - slack


@dataclass(frozen=True)
class Zone:
    n: int
    theta: float
    kind: str
    beta: Optional[float]
    localization: float
    semiclassical: tuple = ()
    semiclassical_optimized: Optional[float] = None
    quantum: Optional[float] = None
    integral: Optional[float] = None

    def worst(self) -> float:
        vals = [self.localization] + list(self.semiclassical)
        vals += [v for v in (self.quantum, self.integral) if v is not None]
        return min(vals)


@dataclass(frozen=True)
class ZoneLedger:
    d: int
    s: float
    S: float
    r: float
    eta_target: float
    A: float
    epsilon: float
    epsilon_used: float
    alpha: float
    N: int
    n_min: int
    omega: object
    zones: tuple
    headline: Mapping = field(default_factory=dict)
    eta_star: float = 0.0
    governing: str = ""

    @property
    def worst_exponent(self) -> float:
        """Smallest headline order, as a gain over ``h^{-d}``."""
        return min(self.headline.values()) + self.d

    def semiclassical_zones(self):
        return [z for z in self.zones if z.kind != "quantum"]


def zone_ledger(d: int, s: float, S: float, r: float, eta_target: float, A: float = 1.0,
                outer_extent: float = 1.0) -> ZoneLedger:
    """Per-zone error bookkeeping for a target rate ``eta_target < η*``.

    ``ε = (η* - η)/A`` is shrunk to the nearest ``α/N`` with integer ``N``.
    Zones run from the quantum zone ``θ = α`` down to ``θ = -ω``, with
    ``ω = outer_extent`` when the cutoff is free.  The headline orders are the
    three balanced terms ``-d + η_sc``, ``-d + η_loc``, ``-d + η_cutoff``; the
    per-zone entries are diagnostics.
    """
    rep = eta_report(d, s, S, r).require_admissible()
    if not A > 0:
        raise ConfigError(f"constant A must be positive, got {A}")
    if not eta_target < rep.eta_star:
        raise DomainError(f"target η = {eta_target} must be below η* = {float(rep.eta_star):.12g}")
    eps = (float(rep.eta_star) - eta_target) / A
    alpha = rep.alpha
    N = max(1, math.ceil(alpha / eps - 1e-12))
    eps_used = alpha / N
    omega = outer_extent if is_unbounded(rep.omega) else rep.omega
    n_min = -math.ceil(omega / eps_used - 1e-12)
    slack = A * eps_used
    zones = [Zone(N, alpha, "quantum", None,
                  quantum_localization_exponent(d, s, alpha),
                  quantum=quantum_error_exponent(d, s, r, alpha),
                  integral=integral_error_exponent(d, s, r, alpha))]
    for n in range(N, n_min, -1):
        theta = n * eps_used
        theta_prev = (n - 1) * eps_used
        if theta_prev >= 0:
            kind = "deep_inner" if d == 3 and theta >= 2 / (8 - s) else "inner"
        else:
            kind = "outer"
        b = beta_optimal(d, theta, kind, s, S)
        s_n = S if kind == "outer" else s
        triple = tuple(e - slack for e in semiclassical_triple(d, theta, b, kind, s, S))
        zones.append(Zone(n, theta, kind, b,
                          zone_localization_exponent(d, theta, s_n, slack), triple,
                          semiclassical_optimized(d, theta, kind, s, S) - slack))
    headline = {"sc": rep.eta_sc, "loc": rep.eta_loc, "cutoff": rep.eta_cutoff}
    headline = {k: (v if is_unbounded(v) else -d + v) for k, v in headline.items()}
    return ZoneLedger(d, s, S, r, eta_target, A, eps, eps_used, alpha, N, n_min,
                      rep.omega, tuple(zones), headline, rep.eta_star, rep.governing)


# ---------------------------------------------------------------- bounds

@dataclass(frozen=True)
class WBetaBound:
    value: float
    exponent: float
    integrable: bool
    constant: float


def wbeta_bound(d: int, beta: float, s: float, r: float, radius: float,
                c_diff: float = 1.0, c_env: float = 1.0) -> WBetaBound:
    """Pointwise bound on ``|[V1]_-^{d/2+β} - [V2]_-^{d/2+β}|`` at ``radius <= 1``.

    The bound is ``C_β radius^{-(s(d/2+β-1)+r)}`` with
    ``C_β = (d/2+β) C_diff (C' + C_diff)^{d/2+β-1}``; it is integrable at the
    origin iff ``s(d/2+β-1) + r < d``.
    """
    if not 0 <= beta <= 1:
        raise DomainError(f"β must lie in [0, 1], got {beta}")
    if not 0 < radius <= 1:
        raise DomainError(f"radius must lie in (0, 1], got {radius}")
    g = d / 2 + beta
    e = s * (g - 1) + r
    const = g * c_diff * (c_env + c_diff) ** (g - 1)
    return WBetaBound(const * radius**-e, -e, e < d - BOUNDARY_TOL, const)


@dataclass(frozen=True)
class OrderDescriptor:
    exponent: float
    log_power: int
    regime: str

    def __str__(self):
        base = f"h^{self.exponent:g}"
        return base + " |log h|" if self.log_power else base

    def evaluate(self, h: float) -> float:
        return h**self.exponent * abs(math.log(h)) ** self.log_power


def landaus_order(d: int, s: float) -> OrderDescriptor:
    """Order in ``h`` of ``tr[-h^2 Δ - |x|^{-s} + μ]_-``."""
    if d < 2:
        raise DomainError(f"dimension must be >= 2, got {d}")
    if not 0 < s < 2:
        raise DomainError(f"need 0 < s < 2, got {s}")
    s_c = critical_exponent(d)
    if math.isclose(s, s_c, rel_tol=0, abs_tol=1e-14):
        return OrderDescriptor(-d, 1, "critical")
    if s < s_c:
        return OrderDescriptor(-d, 0, "subcritical")
    return OrderDescriptor(-2 * s / (2 - s), 0, "supercritical")


# Lieb's bound on the CLR constant for d = 3
CLR_3D = 0.1156


def lt_constant(d: int, beta: float, table: Optional[Mapping] = None) -> float:
    """Lieb-Thirring constant ``L_{d,β}`` from ``table`` or the shipped default.

    ``table`` maps ``(d, β)`` to a constant (exact key match).  The default for
    ``d = 3`` carries the CLR ratio ``0.1156 / L^cl_{3,0}`` to every ``β`` by
    monotonicity of ``L_{d,β}/L^cl_{d,β}`` in ``β``.  There is no default in
    ``d = 2``.
    """
    if table:
        for key, val in table.items():
            kd, kb = key if isinstance(key, tuple) else _parse_key(key)
            if int(kd) == d and math.isclose(float(kb), beta, rel_tol=0, abs_tol=1e-14):
                return float(val)
    if d == 3 and beta >= 0:
        return CLR_3D / classical_lt_constant(3, 0.0) * classical_lt_constant(3, beta)
    raise ConfigError(f"no Lieb-Thirring constant configured for d = {d}, β = {beta}")


def _parse_key(key):
    parts = str(key).replace("(", "").replace(")", "").split(",")
    if len(parts) != 2:
        raise ConfigError(f"Lieb-Thirring table key {key!r} is not 'd,beta'")
    return int(parts[0]), float(parts[1])


def beta_coefficients(d: int, epsilon: float, L: float):
    """The two prefactors of the singular Lieb-Thirring bound, with ``β = ε/2``."""
    b = epsilon / 2
    A = 2 * beta_fn(1 - b, 1 + b + d / 2) * L
    B = 2 ** (2 * b) * beta_fn(b, 1 + b + d / 2) * L
    return A, B


@dataclass(frozen=True)
class LTBound:
    value: float
    A: float
    B: float
    outer_integral: float
    inner_integral: float
    beta: float
    L: float


def ltsing_bound(d: int, epsilon: float, E: float, potential: PotentialSpec,
                 lt_table: Optional[Mapping] = None,
                 quadrature: QuadratureSpec = QuadratureSpec()) -> LTBound:
    """Upper bound on ``tr[-Δ + V]_-`` given ``-Δ + V >= -E``.

    ``A ∫_{V >= -E/2} [V]_-^{1+d/2} + B E^{1-ε} ∫_{V < -E/2} [V]_-^{ε+d/2}``.
    """
    if not 0 < epsilon < 1:
        raise DomainError(f"ε must lie in (0, 1), got {epsilon}")
    if not E > 0:
        raise DomainError(f"E must be positive, got {E}")
    if potential.d != d:
        raise DomainError("potential dimension does not match d")
    b = epsilon / 2
    L = lt_constant(d, b, lt_table)
    A, B = beta_coefficients(d, epsilon, L)
    p_out, p_in = 1 + d / 2, epsilon + d / 2
    if potential.s * p_in >= d:
        raise DivergenceError(f"[V]_-^{p_in:g} is not integrable at the origin for s = {potential.s}")
    v = potential.value
    lo, hi = 1e-8, 1e4
    breaks = level_crossings(v, 0.0, lo, hi) + level_crossings(v, -E / 2, lo, hi)
    breaks = sorted(set(breaks + [1.0]))
    compact = bool(v(np.array([hi]))[0] >= 0)
    outer = max(breaks) if compact else None
    tail = None if compact else potential.S * p_out

    def f_out(r):
        val = v(r)
        return np.where(val >= -E / 2, np.maximum(-val, 0.0) ** p_out, 0.0)

    def f_in(r):
        val = v(r)
        return np.where(val < -E / 2, np.maximum(-val, 0.0) ** p_in, 0.0)

    i_out, _ = radial_integral(f_out, d, breaks, quadrature, 0.0, outer=outer, tail_power=tail)
    if compact:
        i_in, _ = radial_integral(f_in, d, breaks, quadrature, potential.s * p_in, outer=outer)
    else:
        i_in, _ = radial_integral(f_in, d, breaks, quadrature, potential.s * p_in,
                                  outer=max(breaks))
    value = A * i_out + B * E ** (1 - epsilon) * i_in
    return LTBound(value, A, B, i_out, i_in, b, L)
