"""Semiclassical constants and classical phase-space integrals.

The classical term of the Weyl law is ``L^cl_d h^{-d} ∫ [V]_-^{1+d/2} dx``.
For core exponents ``s >= 2d/(d+2)`` that integral diverges at the origin,
but the difference ``[V1]_-^{1+d/2} - [V2]_-^{1+d/2}`` of a pair can still be
integrable; :func:`relative_classical_trace` integrates it directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import gamma as gamma_fn

from relweyl.errors import AdmissibilityError, DivergenceError, DomainError
from relweyl.potentials import PairSpec, PotentialSpec, SAMPLE_RANGE


@dataclass(frozen=True)
class SemiclassicalConstants:
    d: int
    omega: float
    L_pot: float
    L_kin: float
    L_cl: float

    @property
    def surface(self) -> float:
        """Area of the unit sphere ``S^{d-1}``."""
        return self.d * self.omega


def constants(d: int) -> SemiclassicalConstants:
    if d not in (2, 3):
        raise DomainError(f"unsupported dimension {d}; only 2 and 3 are implemented")
    omega = math.pi ** (d / 2) / math.gamma(1 + d / 2)
    L_pot = omega / (2 * math.pi) ** d
    L_kin = omega / (1 + 2 / d) / (2 * math.pi) ** d
    L_cl = 2.0**-d * math.pi ** (-d / 2) / math.gamma(2 + d / 2)
    return SemiclassicalConstants(d, omega, L_pot, L_kin, L_cl)


def classical_lt_constant(d: int, beta: float) -> float:
    """Semiclassical Riesz-mean constant ``Γ(β+1) / ((4π)^{d/2} Γ(β+1+d/2))``."""
    return float(gamma_fn(beta + 1) / ((4 * math.pi) ** (d / 2) * gamma_fn(beta + 1 + d / 2)))


def surface_area(d: int) -> float:
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


# ---------------------------------------------------------------- quadrature

@dataclass(frozen=True)
class QuadratureSpec:
    """Adaptive composite Gauss-Legendre settings.

    Panels are bisected until the ``order``-point rule on a panel agrees with
    the rule on its two halves; ``rel_tol`` applies to the running total.
    """

    order: int = 16
    rel_tol: float = 1e-11
    abs_tol: float = 1e-14
    max_depth: int = 48
    max_panels: int = 200_000

    def doubled(self) -> "QuadratureSpec":
        return QuadratureSpec(2 * self.order, self.rel_tol, self.abs_tol,
                              self.max_depth, self.max_panels)


_RULES: dict = {}


def _rule(order: int):
    if order not in _RULES:
        _RULES[order] = np.polynomial.legendre.leggauss(order)
    return _RULES[order]


def _panel(f, a, b, x, w):
    half = 0.5 * (b - a)
    return half * float(np.dot(w, f(a + half * (x + 1.0))))


def adaptive_gauss(f: Callable, a: float, b: float, quad: QuadratureSpec,
                   scale: float = 0.0):
    """Integrate vectorized ``f`` over ``[a, b]``; returns ``(value, error estimate)``.

    ``scale`` is a magnitude hint used for the relative tolerance before the
    first estimate exists.
    """
    if b <= a:
        return 0.0, 0.0
    x, w = _rule(quad.order)
    whole = _panel(f, a, b, x, w)
    target = max(quad.abs_tol, quad.rel_tol * max(abs(whole), abs(scale)))
    stack = [(a, b, whole, 0)]
    parts, errs = [], []
    panels = 0
    while stack:
        lo, hi, coarse, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left = _panel(f, lo, mid, x, w)
        right = _panel(f, mid, hi, x, w)
        fine = left + right
        err = abs(fine - coarse)
        panels += 1
        share = target * (hi - lo) / (b - a)
        if err <= share or depth >= quad.max_depth or panels > quad.max_panels:
            parts.append(fine)
            errs.append(err)
        else:
            stack.append((mid, hi, right, depth + 1))
            stack.append((lo, mid, left, depth + 1))
    return math.fsum(parts), math.fsum(errs)


def level_crossings(fn: Callable, level: float, lo: float, hi: float, count: int = 2001):
    """Radii in ``[lo, hi]`` where ``fn`` crosses ``level``, located on a log grid and refined."""
    r = np.logspace(math.log10(lo), math.log10(hi), count)
    g = fn(r) - level
    out = []
    for i in np.flatnonzero(np.sign(g[:-1]) != np.sign(g[1:])):
        a, b = r[i], r[i + 1]
        if g[i] == 0.0:
            out.append(float(a))
            continue
        out.append(float(brentq(lambda t: float(fn(np.array([t]))[0]) - level, a, b,
                                xtol=1e-300, rtol=1e-15)))
    return sorted(set(out))


def radial_integral(F: Callable, d: int, breaks: Sequence[float], quad: QuadratureSpec,
                    core_power: Optional[float] = None, outer: Optional[float] = None,
                    tail_power: Optional[float] = None):
    """``|S^{d-1}| ∫_0^∞ r^{d-1} F(r) dr`` for a radial integrand.

    ``core_power`` ``q`` declares ``F ~ r^{-q}`` at the origin; the core is
    mapped by ``r = b t^{1/(d-q)}`` so the transformed integrand is bounded.
    ``F`` vanishes beyond ``outer`` unless ``tail_power`` declares
    ``F ~ r^{-q}`` at infinity, handled by ``r = c t^{-1/(q-d)}``.
    Between breakpoints the integral runs in ``u = log r``.
    """
    surf = surface_area(d)
    pts = sorted(b for b in breaks if b > 0)
    if outer is not None:
        pts = [p for p in pts if p < outer] + [outer]
    if not pts:
        raise DomainError("radial integral needs at least one breakpoint")
    b0 = min(pts[0], 1.0) / 2.0
    kappa = d - (core_power if core_power is not None else 0.0)
    if kappa <= 0:
        raise DivergenceError(f"integrand ~ r^-{core_power} is not integrable at 0 in d = {d}")

    def core(t):
        r = b0 * t ** (1.0 / kappa)
        with np.errstate(all="ignore"):
            val = b0**d / kappa * t ** (d / kappa - 1.0) * F(r)
        return np.where(t > 0, val, 0.0)

    pieces = []
    # geometric panels in t toward the origin
    edges = [0.0] + [2.0**-k for k in range(40, -1, -1)]
    for lo, hi in zip(edges[:-1], edges[1:]):
        pieces.append(adaptive_gauss(core, lo, hi, quad))
    scale = sum(abs(p[0]) for p in pieces)

    def logpanel(u):
        r = np.exp(u)
        return r**d * F(r)

    knots = [b0] + pts
    for lo, hi in zip(knots[:-1], knots[1:]):
        ulo, uhi = math.log(lo), math.log(hi)
        n = max(1, int(math.ceil((uhi - ulo) / math.log(2.0))))
        us = np.linspace(ulo, uhi, n + 1)
        for a, b in zip(us[:-1], us[1:]):
            pieces.append(adaptive_gauss(logpanel, a, b, quad, scale))
            scale += abs(pieces[-1][0])
    if tail_power is not None:
        c = knots[-1]
        k_out = tail_power - d
        if k_out <= 0:
            raise DivergenceError(f"integrand ~ r^-{tail_power} is not integrable at infinity in d = {d}")

        def tail(t):
            r = c * t ** (-1.0 / k_out)
            with np.errstate(all="ignore"):
                val = c**d / k_out * t ** (-d / k_out - 1.0) * F(r)
            return np.where(t > 0, val, 0.0)

        for lo, hi in zip(edges[:-1], edges[1:]):
            pieces.append(adaptive_gauss(tail, lo, hi, quad, scale))
    value = math.fsum(p[0] for p in pieces)
    err = math.fsum(p[1] for p in pieces)
    return surf * value, surf * err


# ---------------------------------------------------------------- classical terms

@dataclass(frozen=True)
class ClassicalResult:
    value: float
    error: float
    divergent: bool
    integral: float
    note: str = ""


def _power(d: int) -> float:
    return 1.0 + d / 2.0


# exponents within this of an integrability threshold count as on it
BOUNDARY_TOL = 1e-12


def core_divergent(d: int, s: float) -> bool:
    """``[V]_-^{1+d/2}`` fails to be integrable at the origin: ``s(1+d/2) >= d``."""
    return s * _power(d) >= d - BOUNDARY_TOL


def _has_compact_negative_part(v: PotentialSpec) -> bool:
    return bool(v.value(np.array([SAMPLE_RANGE[1]]))[0] >= 0.0)


def _potential_breaks(v: PotentialSpec):
    hi = SAMPLE_RANGE[1]
    pts = level_crossings(v.value, 0.0, SAMPLE_RANGE[0], hi)
    if v.r_t is not None:
        pts += [v.r_t, 2 * v.r_t]
    pts += [1.0]
    return sorted(set(pts))


def _support_end(v: PotentialSpec, breaks) -> Optional[float]:
    if not _has_compact_negative_part(v):
        return None
    # V_- ends at the right edge of the last interval that still holds V < 0
    lefts = [SAMPLE_RANGE[0]] + list(breaks[:-1])
    mids = np.sqrt(np.array(lefts) * np.array(breaks))
    neg = [b for b, m in zip(breaks, mids) if v.value(np.array([m]))[0] < 0]
    return max(neg) if neg else min(breaks)


def classical_trace(potential: PotentialSpec, h: float,
                    quadrature: QuadratureSpec = QuadratureSpec(),
                    strict: bool = False) -> ClassicalResult:
    """``L^cl_d h^{-d} ∫ [V]_-^{1+d/2}``.

    A divergent integral is reported by flag (value ``inf``); with
    ``strict=True`` it raises :class:`DivergenceError` instead.
    """
    if not h > 0:
        raise DomainError(f"h must be positive, got {h}")
    d, p = potential.d, _power(potential.d)
    c = constants(d)
    tail_div = not _has_compact_negative_part(potential) and potential.S * p <= d
    if core_divergent(d, potential.s) or tail_div:
        where = "at the origin" if core_divergent(d, potential.s) else "at infinity"
        msg = (f"[V]_-^{p:g} is not integrable {where}; "
               "use the relative classical trace of a pair")
        if strict:
            raise DivergenceError(msg)
        return ClassicalResult(math.inf, math.inf, True, math.inf, msg)

    def F(r):
        return np.maximum(-potential.value(r), 0.0) ** p

    breaks = _potential_breaks(potential)
    outer = _support_end(potential, breaks)
    if outer is None:
        integral, err = radial_integral(F, d, breaks, quadrature, potential.s * p,
                                        tail_power=potential.S * p)
    elif outer <= SAMPLE_RANGE[0]:
        integral, err = 0.0, 0.0
    else:
        integral, err = radial_integral(F, d, breaks, quadrature, potential.s * p, outer=outer)
    scale = c.L_cl * h**-d
    return ClassicalResult(scale * integral, scale * err, False, integral)


def w1_integrable(d: int, s: float, r: float) -> bool:
    """The difference of ``[V_i]_-^{1+d/2}`` is integrable near 0 iff ``s d/2 + r < d``."""
    return s * d / 2 + r < d - BOUNDARY_TOL


def pair_density(pair: PairSpec, p: float) -> Callable:
    """``[V1]_-^p - [V2]_-^p`` evaluated without cancellation where both are negative."""

    def W(r):
        r = np.asarray(r, dtype=float)
        a = np.maximum(-pair.first.value(r), 0.0)
        b = np.maximum(-pair.second.value(r), 0.0)
        delta = np.asarray(pair.diff(r), dtype=float)
        out = a**p - b**p
        both = (a > 0) & (b > 0)
        if np.any(both):
            # b = a + delta on this set
            aa, dd = a[both], delta[both]
            out[both] = -aa**p * np.expm1(p * np.log1p(dd / aa))
        return out

    return W


def relative_classical_trace(pair: PairSpec, h: float,
                             quadrature: QuadratureSpec = QuadratureSpec()) -> ClassicalResult:
    """``L^cl_d h^{-d} ∫ ([V1]_-^{1+d/2} - [V2]_-^{1+d/2})``, integrated as one density."""
    if not h > 0:
        raise DomainError(f"h must be positive, got {h}")
    d, p = pair.d, _power(pair.d)
    if not w1_integrable(d, pair.s, pair.r):
        raise AdmissibilityError(
            f"relative density is not integrable: s*d/2 + r = {pair.s * d / 2 + pair.r:.6g}"
            f" must be < d = {d}")
    c = constants(d)
    scale = c.L_cl * h**-d
    if pair.first is pair.second:
        return ClassicalResult(0.0, 0.0, False, 0.0)
    W = pair_density(pair, p)
    b1, b2 = _potential_breaks(pair.first), _potential_breaks(pair.second)
    breaks = sorted(set(b1 + b2))
    o1, o2 = _support_end(pair.first, b1), _support_end(pair.second, b2)
    core = pair.s * (p - 1) + pair.r
    if o1 is None or o2 is None:
        tails = [v.S * p for v, o in ((pair.first, o1), (pair.second, o2)) if o is None]
        tail_power = min(tails)
        if tail_power <= d:
            msg = "negative parts decay too slowly for the density to be integrable at infinity"
            return ClassicalResult(math.inf, math.inf, True, math.inf, msg)
        integral, err = radial_integral(W, d, breaks, quadrature, core, tail_power=tail_power)
    else:
        integral, err = radial_integral(W, d, breaks, quadrature, core, outer=max(o1, o2))
    return ClassicalResult(scale * integral, scale * err, False, integral)


def phase_space_integral(potential: PotentialSpec, point_u: float, h: float,
                         kind: str = "classical") -> float:
    """Closed-form momentum integral over ``{p : h^2 p^2 + V(u) < 0}`` at one point.

    ``kinetic`` gives ``∫ h^2 p^2 dp/(2π)^d = L^kin h^{-d} [V]_-^{1+d/2}``;
    ``potential`` gives ``∫ V(u) dp/(2π)^d = -L^pot h^{-d} [V]_-^{1+d/2}``;
    ``classical`` is their sum, ``-L^cl h^{-d} [V]_-^{1+d/2}``.
    """
    if not h > 0:
        raise DomainError(f"h must be positive, got {h}")
    c = constants(potential.d)
    neg = max(-float(potential.value(np.array([point_u], dtype=float))[0]), 0.0)
    base = h ** -potential.d * neg ** _power(potential.d)
    if kind == "kinetic":
        return c.L_kin * base
    if kind == "potential":
        return -c.L_pot * base
    if kind == "classical":
        return -c.L_cl * base
    raise DomainError(f"unknown phase-space kind {kind!r}")
