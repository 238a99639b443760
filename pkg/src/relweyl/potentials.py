"""Radial potentials, potential pairs, and sampled checks of their structural conditions.

A potential is ``V(r)`` on ``r > 0`` with a singular core ``-C0 r^{-s}``, a tail
whose gradient decays like ``r^{-S-1}`` and an optional constant chemical
potential ``mu`` folded in.  Pairs carry the exponent ``r`` that controls
``|V1 - V2|`` near the origin.

All checks here are done by sampling on log-spaced radii; nothing is symbolic.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from relweyl._spline import plateau, plateau_prime
from relweyl.errors import DomainError, ValidationError

SAMPLE_RANGE = (1e-8, 1e4)
ENVELOPE_SAFETY = 1.1

RadialFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    d: int
    c0: float
    s: float
    S: float
    value: RadialFn = field(repr=False)
    derivative: RadialFn = field(repr=False)
    mu: float = 0.0
    r_t: Optional[float] = None
    family: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.d not in (2, 3):
            raise DomainError(f"dimension must be 2 or 3, got {self.d}")
        if not self.c0 > 0:
            raise DomainError(f"core strength must be positive, got {self.c0}")
        if not 1.0 <= self.s < 2.0:
            raise DomainError(f"singular exponent must satisfy 1 <= s < 2, got {self.s}")
        if not self.S > 0:
            raise DomainError(f"tail exponent must be positive, got {self.S}")
        if self.mu < 0:
            raise DomainError(f"chemical potential must be >= 0, got {self.mu}")
        if self.r_t is not None and not self.r_t > 0:
            raise DomainError(f"truncation radius must be positive, got {self.r_t}")

    def __call__(self, r):
        return eval_potential(self, r)

    def negative_part(self, r):
        return np.maximum(-self(r), 0.0)

    @property
    def quantum_length(self) -> float:
        """Length scale of the ground state of ``-Δ - r^{-s}`` at ``h = 1``."""
        return 1.0

    def length_scale(self, h: float) -> float:
        return h ** (2.0 / (2.0 - self.s))

    def describe(self) -> dict:
        out = {"family": self.family, "d": self.d, "c0": self.c0, "s": self.s,
               "S": self.S, "mu": self.mu}
        if self.r_t is not None:
            out["r_t"] = self.r_t
        out.update(self.params)
        return out


def eval_potential(spec: PotentialSpec, radius):
    r = np.asarray(radius, dtype=float)
    if np.any(~(r > 0)):
        bad = r[~(r > 0)].ravel()[0]
        raise DomainError(f"potential evaluated at non-positive radius {bad}")
    out = spec.value(r)
    return float(out) if np.ndim(radius) == 0 else out


def pure_power(d: int, c0: float = 1.0, s: float = 1.0, mu: float = 0.0,
               S: Optional[float] = None) -> PotentialSpec:
    """``-c0 r^{-s} + mu``; the gradient decays with ``S = s`` unless overridden."""

    def value(r):
        return -c0 * r ** (-s) + mu

    def derivative(r):
        return s * c0 * r ** (-s - 1.0)

    return PotentialSpec(d=d, c0=c0, s=s, S=s if S is None else S, value=value,
                         derivative=derivative, mu=mu, family="pure_power")


def truncated_power(d: int, c0: float = 1.0, s: float = 1.0, mu: float = 0.0,
                    r_t: float = 1.0, S: float = 2.0) -> PotentialSpec:
    """``(-c0 r^{-s} + mu)`` smoothly switched off between ``r_t`` and ``2 r_t``.

    The gradient vanishes beyond ``2 r_t``, so any finite ``S`` is admissible;
    the default 2 lies above every large-S threshold of the error analysis.
    """

    def value(r):
        return (-c0 * r ** (-s) + mu) * plateau(r / r_t)

    def derivative(r):
        return (s * c0 * r ** (-s - 1.0) * plateau(r / r_t)
                + (-c0 * r ** (-s) + mu) * plateau_prime(r / r_t) / r_t)

    return PotentialSpec(d=d, c0=c0, s=s, S=S, value=value, derivative=derivative,
                         mu=mu, r_t=r_t, family="truncated_power")


def custom(d: int, value: RadialFn, derivative: RadialFn, *, s: float = 1.0,
           S: float = 2.0, c0: float = 1.0, mu: float = 0.0, name: str = "custom",
           **params) -> PotentialSpec:
    return PotentialSpec(d=d, c0=c0, s=s, S=S, value=value, derivative=derivative,
                         mu=mu, family=name, params=dict(params))


@dataclass(frozen=True, eq=False)
class PairSpec:
    first: PotentialSpec
    second: PotentialSpec
    r: float
    c_diff: float
    # V1 - V2, when it can be computed without cancellation
    difference: Optional[RadialFn] = field(default=None, repr=False)
    family: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.first.d != self.second.d:
            raise DomainError("pair members must share the dimension")
        if self.r < 0:
            raise DomainError(f"difference exponent must be >= 0, got {self.r}")

    @property
    def d(self) -> int:
        return self.first.d

    @property
    def s(self) -> float:
        return max(self.first.s, self.second.s)

    @property
    def S(self) -> float:
        return min(self.first.S, self.second.S)

    def diff(self, r):
        r = np.asarray(r, dtype=float)
        if self.difference is not None:
            return self.difference(r)
        return self.first.value(r) - self.second.value(r)

    def describe(self) -> dict:
        out = {"family": self.family, "r": self.r, "c_diff": self.c_diff,
               "first": self.first.describe(), "second": self.second.describe()}
        out.update(self.params)
        return out


def swap(pair: PairSpec) -> PairSpec:
    difference = None
    if pair.difference is not None:
        inner = pair.difference

        def difference(r):
            return -inner(r)

    return dataclasses.replace(pair, first=pair.second, second=pair.first,
                               difference=difference)


def identical_pair(v: PotentialSpec, r: float = 0.5) -> PairSpec:
    return PairSpec(first=v, second=v, r=r, c_diff=0.0,
                    difference=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                    family="identical")


def shift_pair(d: int, c0: float = 1.0, s: float = 1.0, mu1: float = 0.1,
               mu2: float = 0.2, S: Optional[float] = None) -> PairSpec:
    """Same core, different chemical potentials: ``V1 - V2 = mu1 - mu2``."""
    first = pure_power(d, c0, s, mu1, S)
    second = pure_power(d, c0, s, mu2, S)
    delta = mu1 - mu2
    return PairSpec(first=first, second=second, r=0.0, c_diff=abs(delta),
                    difference=lambda x: np.full_like(np.asarray(x, dtype=float), delta),
                    family="shift", params={"mu1": mu1, "mu2": mu2})


def perturbed_pair(d: int, c0: float = 1.0, s: float = 1.3, r_exp: float = 0.5,
                   a: float = 0.5, mu: float = 1.0, r_t: Optional[float] = None,
                   S: Optional[float] = None) -> PairSpec:
    """``V2 = V1 - c0 a r^{-r_exp} χ(r/R)``, i.e. ``-c0 r^{-s}(1 + a r^{s - r_exp} χ)``.

    ``χ`` is the C² plateau profile with ``R = r_t`` (or 1 when ``r_t`` is
    None), so the perturbation does not spoil the tail gradient bound.  With
    ``r_t`` set, the base potential is the truncated variant as well.
    """
    if r_exp >= s:
        raise DomainError(f"difference exponent {r_exp} must stay below s = {s}")
    if r_t is None:
        base = pure_power(d, c0, s, mu, S)
        radius = 1.0
    else:
        base = truncated_power(d, c0, s, mu, r_t, 2.0 if S is None else S)
        radius = r_t

    def bump(r):
        return c0 * a * r ** (-r_exp) * plateau(r / radius)

    def bump_prime(r):
        return c0 * a * (-r_exp * r ** (-r_exp - 1.0) * plateau(r / radius)
                         + r ** (-r_exp) * plateau_prime(r / radius) / radius)

    def value(r):
        return base.value(r) - bump(r)

    def derivative(r):
        return base.derivative(r) - bump_prime(r)

    second = dataclasses.replace(base, value=value, derivative=derivative,
                                 family=base.family + "+perturbation",
                                 params={"a": a, "r_exp": r_exp})
    return PairSpec(first=base, second=second, r=r_exp, c_diff=c0 * a,
                    difference=bump, family="perturbed",
                    params={"a": a, "r_exp": r_exp})


@dataclass(frozen=True)
class EnvelopeParams:
    c_prime: float
    s: float
    S: float
    core_ratio: float
    tail_ratio: float

    def bound(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= 1.0, self.c_prime * r ** (-self.s), self.c_prime * r ** (-self.S))


def sample_radii(count: int, offset: float = 0.0) -> np.ndarray:
    lo, hi = np.log10(SAMPLE_RANGE[0]), np.log10(SAMPLE_RANGE[1])
    if count < 2:
        raise DomainError("need at least two sample radii")
    step = (hi - lo) / (count - 1)
    return 10.0 ** (lo + step * (np.arange(count) + offset))[: count - (1 if offset else 0)]


def envelope(spec: PotentialSpec, sample_count: int = 10_000) -> EnvelopeParams:
    """Smallest sampled constant C' with ``[V]_- <= C' r^{-s}`` (r<=1), ``C' r^{-S}`` (r>=1), times 1.1."""
    r = sample_radii(sample_count)
    neg = np.maximum(-spec.value(r), 0.0)
    bad = ~np.isfinite(neg)
    if bad.any():
        raise ValidationError(f"potential is not finite at r = {r[bad][0]:.6g}", r[bad][0])
    core = r <= 1.0
    with np.errstate(over="ignore"):
        ratio = np.where(core, neg * r**spec.s, neg * r**spec.S)
    bad = ~np.isfinite(ratio)
    if bad.any():
        raise ValidationError(f"envelope violated at r = {r[bad][0]:.6g}", r[bad][0])
    core_ratio = float(ratio[core].max(initial=0.0))
    tail_ratio = float(ratio[~core].max(initial=0.0))
    return EnvelopeParams(c_prime=ENVELOPE_SAFETY * max(core_ratio, tail_ratio),
                          s=spec.s, S=spec.S, core_ratio=core_ratio, tail_ratio=tail_ratio)


@dataclass(frozen=True)
class ConditionCheck:
    line: int
    name: str
    member: Optional[int]
    passed: bool
    constant: float
    offending_radius: Optional[float] = None
    note: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple
    c_diff: float
    r_observed: Optional[float]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]


# a bounded ratio may drift, but a log-slope steeper than this over the last
# two sampled decades is read as power-law blow-up
_BLOWUP_SLOPE = 0.05


def _end_slope(r, q, inner: bool):
    """Least-squares slope of log q vs log r over the two outermost decades at one end."""
    lr = np.log10(r)
    sel = lr <= lr[0] + 2.0 if inner else lr >= lr[-1] - 2.0
    sel &= q > 0
    if sel.sum() < 3:
        return 0.0, None
    slope = np.polyfit(lr[sel], np.log10(q[sel]), 1)[0]
    idx = np.flatnonzero(sel)
    worst = idx[np.argmax(q[sel])]
    return float(slope), float(r[worst])


def _bounded_ratio_check(line, name, member, r, q, check_inner=True, check_outer=False):
    finite = np.isfinite(q)
    if not finite.all():
        where = float(r[~finite][0])
        return ConditionCheck(line, name, member, False, math.inf, where, "non-finite sample")
    constant = float(q.max(initial=0.0))
    if check_inner:
        slope, where = _end_slope(r, q, inner=True)
        if slope < -_BLOWUP_SLOPE:
            return ConditionCheck(line, name, member, False, constant, where,
                                  f"ratio grows like r^{slope:.3g} as r -> 0")
    if check_outer:
        slope, where = _end_slope(r, q, inner=False)
        if slope > _BLOWUP_SLOPE:
            return ConditionCheck(line, name, member, False, constant, where,
                                  f"ratio grows like r^{slope:.3g} as r -> inf")
    return ConditionCheck(line, name, member, True, constant)


def validate_conditions(pair: PairSpec, sample_count: int = 10_000) -> ValidationReport:
    """Check the three structural conditions on log-spaced radii in [1e-8, 1e4].

    Failures are reported, never raised.
    """
    r = sample_radii(sample_count)
    core = r <= 1.0
    checks = []
    for member, v in ((1, pair.first), (2, pair.second)):
        with np.errstate(all="ignore"):
            val = v.value(r)
            grad = np.abs(v.derivative(r))
        tail = val[~core]
        c_bound = float(np.max(np.abs(tail))) if tail.size else 0.0
        neg_tail = np.maximum(-tail, 0.0)
        # sup over r >= L for every sampled L
        sup_from = np.maximum.accumulate(neg_tail[::-1])[::-1] if tail.size else np.zeros(1)
        decays = sup_from[-1] <= max(1e-2 * sup_from[0], 1e-10)
        ok = bool(np.isfinite(c_bound) and decays)
        note = "" if decays else "sup of [V]_- does not decay"
        checks.append(ConditionCheck(1, "bounded tail", member, ok, c_bound,
                                     None if ok else float(r[~core][-1]), note))
        with np.errstate(all="ignore"):
            q_core = grad[core] * r[core] ** (v.s + 1.0)
            q_tail = grad[~core] * r[~core] ** (v.S + 1.0)
        chk_core = _bounded_ratio_check(2, "gradient core", member, r[core], q_core)
        chk_tail = _bounded_ratio_check(2, "gradient tail", member, r[~core], q_tail,
                                        check_inner=False, check_outer=True)
        checks.extend([chk_core, chk_tail])
    with np.errstate(all="ignore"):
        delta = np.abs(pair.diff(r[core]))
        q = delta * r[core] ** pair.r
    chk = _bounded_ratio_check(3, "difference", None, r[core], q)
    checks.append(chk)
    r_obs = None
    positive = delta > 0
    if positive.sum() >= 3:
        lr = np.log10(r[core])
        sel = positive & (lr <= lr[0] + 2.0)
        if sel.sum() >= 3:
            r_obs = float(-np.polyfit(lr[sel], np.log10(delta[sel]), 1)[0])
    c_diff = chk.constant if np.isfinite(chk.constant) else math.inf
    return ValidationReport(checks=tuple(checks), c_diff=c_diff, r_observed=r_obs)


def build_potential(decl: dict) -> PotentialSpec:
    """Construct a built-in family from a config mapping."""
    decl = dict(decl)
    family = decl.pop("family", "pure_power")
    builders = {"pure_power": pure_power, "coulomb": pure_power,
                "truncated_power": truncated_power}
    if family not in builders:
        raise DomainError(f"unknown potential family {family!r}")
    try:
        return builders[family](**decl)
    except TypeError as exc:
        raise DomainError(f"bad parameters for family {family!r}: {exc}") from None


def build_pair(decl: dict) -> PairSpec:
    decl = dict(decl)
    family = decl.pop("family", "perturbed")
    try:
        if family == "perturbed":
            return perturbed_pair(**decl)
        if family == "shift":
            return shift_pair(**decl)
        if family == "identical":
            r = decl.pop("r", 0.5)
            return identical_pair(build_potential(decl.pop("potential", decl)), r=r)
        if family == "members":
            first = build_potential(decl["first"])
            second = build_potential(decl["second"])
            return PairSpec(first=first, second=second, r=float(decl.get("r", 0.0)),
                            c_diff=float(decl.get("c_diff", 0.0)), family="members")
    except TypeError as exc:
        raise DomainError(f"bad parameters for pair family {family!r}: {exc}") from None
    raise DomainError(f"unknown pair family {family!r}")
