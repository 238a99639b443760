"""Partition of unity around the singularity, and mollifier convolutions.

The partition has a quantum member ``Φ^q(x) = φ(h^{-α}|x|)`` and dyadic-in-``h``
shell members ``Φ_n(x) = φ(h^{-θ_{n-1}}|x|) sqrt(1 - φ(h^{-θ_n}|x|)^2)`` with
``θ_n = nε``; an exterior member ``sqrt(1 - φ(h^{-θ_{n_min}}|x|)^2)`` closes it.
The product form needs ``2h^ε <= 1`` so that consecutive plateaus nest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from relweyl._spline import PLATEAU_SUP_DERIVATIVE, plateau
from relweyl.errors import DomainError, NumericError
from relweyl.semiclassics import surface_area

QUANTUM = "q"
EXTERIOR = "ext"


@dataclass(frozen=True)
class PartitionScheme:
    alpha: float
    epsilon: float
    h: float
    n_min: int = 0

    def __post_init__(self):
        if not 0 < self.h < 1:
            raise DomainError(f"h must lie in (0, 1), got {self.h}")
        if not (self.alpha > 0 and self.epsilon > 0):
            raise DomainError("α and ε must be positive")
        ratio = self.alpha / self.epsilon
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise DomainError(f"α/ε = {ratio:.12g} is not an integer")
        if self.n_min >= self.N:
            raise DomainError(f"n_min = {self.n_min} must be below N = {self.N}")
        if 2 * self.h**self.epsilon > 1:
            raise DomainError(f"need 2 h^ε <= 1 for nested plateaus, got h^ε = {self.h ** self.epsilon:.6g}")

    @classmethod
    def covering(cls, alpha: float, epsilon: float, h: float, outer: float = 1.0):
        """Scheme whose shells reach down to ``θ = -outer``."""
        n = round(alpha / epsilon)
        return cls(alpha, epsilon, h, -math.ceil(outer / (alpha / n) - 1e-12))

    @property
    def N(self) -> int:
        return int(round(self.alpha / self.epsilon))

    @property
    def eps(self) -> float:
        return self.alpha / self.N

    def theta(self, n: int) -> float:
        return n * self.eps

    def zone_ids(self):
        return [QUANTUM] + list(range(self.N, self.n_min, -1)) + [EXTERIOR]

    def plateau_interval(self, zone):
        """Radii where the member equals 1."""
        h = self.h
        if zone == QUANTUM:
            return 0.0, h**self.alpha
        if zone == EXTERIOR:
            return 2 * h ** self.theta(self.n_min), math.inf
        return 2 * h ** self.theta(zone), h ** self.theta(zone - 1)

    def scale(self, zone) -> float:
        """``h^{-θ}`` for the smallest θ among the cutoffs of the member."""
        if zone == QUANTUM:
            return self.h ** -self.alpha
        if zone == EXTERIOR:
            return self.h ** -self.theta(self.n_min)
        return self.h ** -self.theta(zone - 1)


def _comp(t):
    p = plateau(t)
    return np.sqrt(np.maximum(1.0 - p * p, 0.0))


def partition_values(scheme: PartitionScheme, radii) -> np.ndarray:
    """Member values at ``radii``; rows follow ``scheme.zone_ids()``."""
    r = np.asarray(radii, dtype=float)
    h = scheme.h
    rows = [plateau(h**-scheme.alpha * r)]
    for n in range(scheme.N, scheme.n_min, -1):
        inner = h ** -scheme.theta(n)
        outer = h ** -scheme.theta(n - 1)
        rows.append(plateau(outer * r) * _comp(inner * r))
    rows.append(_comp(h ** -scheme.theta(scheme.n_min) * r))
    return np.array(rows)


def partition_eval(scheme: PartitionScheme, x):
    """Nonzero members at a point (or radius) ``x`` as ``[(zone id, value), ...]``."""
    r = float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float))))
    if not r > 0:
        raise DomainError("partition is evaluated at |x| > 0")
    vals = partition_values(scheme, np.array([r]))[:, 0]
    return [(z, float(v)) for z, v in zip(scheme.zone_ids(), vals) if v != 0.0]


def partition_defect(scheme: PartitionScheme, radii) -> np.ndarray:
    vals = partition_values(scheme, radii)
    return np.abs(np.sum(vals * vals, axis=0) - 1.0)


@dataclass(frozen=True)
class GradientReport:
    max_ratio: float
    constant: float
    passed: bool
    samples: int
    plateau_max: float


def partition_gradients(scheme: PartitionScheme, radii, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference radial derivatives of every member (rows as ``zone_ids``)."""
    r = np.asarray(radii, dtype=float)
    dr = rel_step * r
    return (partition_values(scheme, r + dr) - partition_values(scheme, r - dr)) / (2 * dr)


def gradient_bound_check(scheme: PartitionScheme, samples) -> GradientReport:
    """Check ``Σ_j |∇Φ_j|^2 <= 2 ||φ'||^2 h^{-2θ_n}`` pointwise.

    A point in the transition shell ``h^{θ_n} <= |x| <= 2h^{θ_n}`` is
    measured against that shell's ``θ_n``; elsewhere every gradient vanishes.
    """
    r = np.asarray(samples, dtype=float)
    grads = partition_gradients(scheme, r)
    total = np.sum(grads * grads, axis=0)
    local = np.full(r.shape, np.inf)
    for n in range(scheme.N, scheme.n_min - 1, -1):
        edge = scheme.h ** scheme.theta(n)
        shell = (r >= edge * (1 - 1e-6)) & (r <= 2 * edge * (1 + 1e-6))
        local = np.where(shell, np.minimum(local, edge), local)
    finite = np.isfinite(local)
    ratio = np.zeros_like(total)
    ratio[finite] = total[finite] * local[finite] ** 2
    const = 2 * PLATEAU_SUP_DERIVATIVE**2
    vals = partition_values(scheme, r)
    on_plateau = np.any(vals == 1.0, axis=0) & ~finite
    plateau_max = float(np.max(np.sqrt(total[on_plateau]), initial=0.0))
    mr = float(np.max(ratio, initial=0.0))
    return GradientReport(mr, const, bool(mr <= const * (1 + 1e-6)), int(r.size), plateau_max)


def quantum_gradient_max(alpha: float, h: float, count: int = 4001) -> float:
    """``max |∇Φ^q|`` over its transition shell, from finite differences."""
    r = h**alpha * np.linspace(1.0, 2.0, count)
    step = 1e-7 * r
    g = (plateau(h**-alpha * (r + step)) - plateau(h**-alpha * (r - step))) / (2 * step)
    return float(np.max(np.abs(g)))


# ---------------------------------------------------------------- kernels

def _bump(sigma):
    sigma = np.asarray(sigma, dtype=float)
    out = np.zeros_like(sigma)
    inside = np.abs(sigma) < 1
    out[inside] = np.exp(-1.0 / (1.0 - sigma[inside] ** 2))
    return out


def _bump_prime(sigma):
    sigma = np.asarray(sigma, dtype=float)
    out = np.zeros_like(sigma)
    inside = np.abs(sigma) < 1
    t = sigma[inside]
    out[inside] = np.exp(-1.0 / (1.0 - t * t)) * (-2 * t / (1.0 - t * t) ** 2)
    return out


# radial nodes for kernel integrals: Gauss-Legendre panels refined toward σ = 1
_SIGMA_EDGES = (0.0, 0.25, 0.5, 0.7, 0.85, 0.95, 1.0)


def _sigma_rule(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for a, b in zip(_SIGMA_EDGES[:-1], _SIGMA_EDGES[1:]):
        nodes.append(a + 0.5 * (b - a) * (x + 1))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


@dataclass(frozen=True)
class MollifierKernel:
    """``g_τ(y) = τ^{-d/2} g(|y|/τ)`` with ``g ∝ exp(-1/(1-σ^2))`` on the unit ball, ``||g||_2 = 1``."""

    d: int
    tau: float
    order: int = 48

    def __post_init__(self):
        if self.d not in (2, 3):
            raise DomainError(f"dimension must be 2 or 3, got {self.d}")
        if not self.tau > 0:
            raise DomainError(f"τ must be positive, got {self.tau}")

    @property
    def rule(self):
        return _sigma_rule(self.order)

    @property
    def norm_constant(self) -> float:
        s, w = self.rule
        raw = surface_area(self.d) * np.dot(w, s ** (self.d - 1) * _bump(s) ** 2)
        return 1.0 / math.sqrt(raw)

    def profile(self, sigma):
        """Unit-scale profile ``g(σ)``."""
        return self.norm_constant * _bump(sigma)

    def __call__(self, radius):
        r = np.abs(np.asarray(radius, dtype=float))
        return self.tau ** (-self.d / 2) * self.profile(r / self.tau)

    def l2_norm_squared(self) -> float:
        """``∫ g_τ^2``, which is 1 at every scale."""
        s, w = self.rule
        g2 = self.profile(s) ** 2
        return float(surface_area(self.d) * np.dot(w, s ** (self.d - 1) * g2))

    def grad_norm_squared(self) -> float:
        """``∫ |∇g_τ|^2 = τ^{-2} ∫ |∇g|^2``."""
        s, w = self.rule
        gp = self.norm_constant * _bump_prime(s)
        return float(surface_area(self.d) * np.dot(w, s ** (self.d - 1) * gp * gp)) / self.tau**2

    def second_moment(self) -> float:
        """``∫ |y|^2 g_τ(y)^2 dy``."""
        s, w = self.rule
        g2 = self.profile(s) ** 2
        return self.tau**2 * float(surface_area(self.d) * np.dot(w, s ** (self.d + 1) * g2))

    def scaled(self, tau: float) -> "MollifierKernel":
        return MollifierKernel(self.d, tau, self.order)


def _angle_rule(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def convolve(f: Callable, kernel: MollifierKernel, x, *, radial: bool = True,
             kinks: Sequence[float] = (), domain: Optional[float] = None,
             angular_order: int = 48) -> float:
    """``(f ⋆ g_τ^2)(x)``.

    With ``radial=True`` ``f`` is a function of ``|x|``; the integral becomes
    ``∫ σ^{d-1} g(σ)^2 ∫ f(|x - τσω|) dω dσ`` over the unit ball, with the
    angular integral split where ``|x - τσω|`` crosses a radius in ``kinks``.
    Otherwise ``f`` takes points of shape ``(..., d)`` and the sphere is
    integrated in polar coordinates.
    """
    d, tau = kernel.d, kernel.tau
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size == 1:
        x = np.concatenate([x, np.zeros(d - 1)])
    if x.shape != (d,):
        raise DomainError(f"point must have {d} coordinates")
    rho = float(np.linalg.norm(x))
    if domain is not None and rho + tau > domain:
        raise DomainError(f"f is defined up to radius {domain}, the kernel reaches {rho + tau:.6g}")
    sig, wsig = kernel.rule
    g2 = kernel.profile(sig) ** 2
    ux, uw = _angle_rule(angular_order)
    total = []
    if radial:
        for s_i, w_i, g_i in zip(sig, wsig, g2):
            if g_i == 0.0:
                continue
            a = tau * s_i
            inner = _sphere_radial(f, rho, a, d, ux, uw, kinks)
            total.append(w_i * s_i ** (d - 1) * g_i * inner)
        return math.fsum(total)
    e1 = x / rho if rho > 0 else np.eye(d)[0]
    basis = _orthonormal_basis(e1)
    for s_i, w_i, g_i in zip(sig, wsig, g2):
        if g_i == 0.0:
            continue
        a = tau * s_i
        inner = _sphere_general(f, x, a, d, basis, ux, uw, angular_order)
        total.append(w_i * s_i ** (d - 1) * g_i * inner)
    return math.fsum(total)


def _orthonormal_basis(e1):
    d = e1.size
    m = np.eye(d)
    m[:, 0] = e1
    q, _ = np.linalg.qr(m)
    if np.dot(q[:, 0], e1) < 0:
        q = -q
    return q


def _sphere_radial(f, rho, a, d, ux, uw, kinks):
    """``∫_{S^{d-1}} f(|x - aω|) dω`` for ``|x| = rho``."""
    # distance as a function of u = cos(angle to x)
    if d == 3:
        cuts = [-1.0, 1.0]
        if rho > 0:
            for k in kinks:
                u = (rho * rho + a * a - k * k) / (2 * rho * a)
                if -1 < u < 1:
                    cuts.append(u)
        cuts = sorted(cuts)
        parts = []
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            u = lo + 0.5 * (hi - lo) * (ux + 1)
            dist = np.sqrt(np.maximum(rho * rho + a * a - 2 * rho * a * u, 0.0))
            parts.append(0.5 * (hi - lo) * np.dot(uw, f(dist)))
        return 2 * math.pi * math.fsum(parts)
    # d = 2: angle φ in [0, π], doubled by symmetry
    cuts = [0.0, math.pi]
    if rho > 0:
        for k in kinks:
            c = (rho * rho + a * a - k * k) / (2 * rho * a)
            if -1 < c < 1:
                cuts.append(math.acos(c))
    cuts = sorted(cuts)
    parts = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        phi = lo + 0.5 * (hi - lo) * (ux + 1)
        dist = np.sqrt(np.maximum(rho * rho + a * a - 2 * rho * a * np.cos(phi), 0.0))
        parts.append(0.5 * (hi - lo) * np.dot(uw, f(dist)))
    return 2 * math.fsum(parts)


def _sphere_general(f, x, a, d, basis, ux, uw, order):
    if d == 2:
        phi = np.linspace(0, 2 * math.pi, 2 * order, endpoint=False)
        pts = x[None, :] - a * (np.cos(phi)[:, None] * basis[:, 0] + np.sin(phi)[:, None] * basis[:, 1])
        return 2 * math.pi * float(np.mean(f(pts)))
    az = np.linspace(0, 2 * math.pi, 2 * order, endpoint=False)
    uu, pp = np.meshgrid(ux, az, indexing="ij")
    st = np.sqrt(1 - uu * uu)
    dirs = (uu[..., None] * basis[:, 0] + (st * np.cos(pp))[..., None] * basis[:, 1]
            + (st * np.sin(pp))[..., None] * basis[:, 2])
    vals = f(x - a * dirs)
    return 2 * math.pi * float(np.dot(uw, vals.mean(axis=1)))


@dataclass(frozen=True)
class SlopeFit:
    slope: Optional[float]
    intercept: Optional[float]
    taus: tuple
    errors: tuple
    exact: bool = False


def convolution_error_slope(f: Callable, taus: Sequence[float], region: Sequence[float],
                            d: int = 3, kinks: Sequence[float] = (),
                            zero_level: float = 1e-13) -> SlopeFit:
    """Fit ``log sup_region |f ⋆ g_τ^2 - f|`` against ``log τ``."""
    taus = np.asarray(sorted(taus, reverse=True), dtype=float)
    if taus.size < 4 or math.log10(taus.max() / taus.min()) < 2 - 1e-9:
        raise NumericError("τ ladder must have at least 4 points spanning 2 decades")
    region = np.asarray(region, dtype=float)
    errs = []
    for tau in taus:
        k = MollifierKernel(d, float(tau))
        e = max(abs(convolve(f, k, rho, kinks=kinks) - float(f(np.array([rho]))[0]))
                for rho in region)
        errs.append(e)
    errs = np.array(errs)
    if np.all(errs < zero_level):
        return SlopeFit(None, None, tuple(taus), tuple(errs), exact=True)
    keep = errs >= zero_level
    if keep.sum() < 4:
        raise NumericError("fewer than 4 nonzero errors; slope fit is degenerate")
    slope, icpt = np.polyfit(np.log(taus[keep]), np.log(errs[keep]), 1)
    return SlopeFit(float(slope), float(icpt), tuple(taus), tuple(errs))
