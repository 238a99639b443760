"""Negative spectrum of ``-h^2 Δ + V`` for radial ``V`` in two and three dimensions.

Each angular channel reduces to a one-dimensional operator
``-h^2 u'' + (h^2 c/r^2 + V) u`` on ``[r_min, R_max]`` with Dirichlet ends,
discretized by a mass-lumped three-point scheme on a graded grid.  Only
negative eigenvalues are extracted, by Sturm inertia counts and bisection.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numba
import numpy as np

from relweyl.errors import DomainError, NumericError
from relweyl.potentials import PairSpec, PotentialSpec, SAMPLE_RANGE

DEFAULT_CHANNEL_CAP = 10_000
DEFAULT_MAX_POINTS = 200_000
# first bisection pass, which only has to fix the magnitude of E_min
COARSE_TOL = 0.25


class ResolutionWarning(UserWarning):
    pass


# ---------------------------------------------------------------- kernels

@numba.njit(cache=True, nogil=True)
def _sturm_count(diag, off2, shift):
    """Eigenvalues below ``shift``, or -1 when a pivot vanishes exactly."""
    n = diag.shape[0]
    count = 0
    d = diag[0] - shift
    for i in range(n):
        if i > 0:
            d = diag[i] - shift - off2[i - 1] / d
        if d == 0.0:
            return -1
        if d < 0.0:
            count += 1
    return count


@numba.njit(cache=True, nogil=True)
def _count_below(diag, off2, shift):
    """Inertia count with a perturbed-shift retry; returns (count, retries)."""
    retries = 0
    c = _sturm_count(diag, off2, shift)
    while c < 0:
        retries += 1
        shift = shift + (abs(shift) + 1.0) * 2.0 ** -50 * retries
        c = _sturm_count(diag, off2, shift)
    return c, retries


@numba.njit(cache=True, nogil=True)
def _bisect(diag, off2, lo, hi, k, tol):
    """Lowest ``k`` eigenvalues in ``(lo, hi)`` by bisection with shared brackets."""
    out = np.empty(k)
    lows = np.full(k, lo)
    highs = np.full(k, hi)
    retries = 0
    for j in range(k):
        a = lows[j]
        b = highs[j]
        while b - a > tol:
            m = 0.5 * (a + b)
            if m <= a or m >= b:
                break
            c, rt = _count_below(diag, off2, m)
            retries += rt
            for q in range(j, k):
                if c > q:
                    if m < highs[q]:
                        highs[q] = m
                elif m > lows[q]:
                    lows[q] = m
            if c > j:
                b = m
            else:
                a = m
        out[j] = 0.5 * (a + b)
    return out, retries


@numba.njit(cache=True, nogil=True)
def _pencil_sturm(kd, ko, md, mo, shift):
    """Negative inertia of ``K - shift M`` for tridiagonal ``K`` and ``M``, or -1."""
    n = kd.shape[0]
    count = 0
    d = kd[0] - shift * md[0]
    for i in range(n):
        if i > 0:
            c = ko[i - 1] - shift * mo[i - 1]
            d = kd[i] - shift * md[i] - c * c / d
        if d == 0.0:
            return -1
        if d < 0.0:
            count += 1
    return count


@numba.njit(cache=True, nogil=True)
def _pencil_count_below(kd, ko, md, mo, shift):
    retries = 0
    c = _pencil_sturm(kd, ko, md, mo, shift)
    while c < 0:
        retries += 1
        shift = shift + (abs(shift) + 1.0) * 2.0 ** -50 * retries
        c = _pencil_sturm(kd, ko, md, mo, shift)
    return c, retries


@numba.njit(cache=True, nogil=True)
def _pencil_bisect(kd, ko, md, mo, lo, hi, k, tol):
    """As :func:`_bisect`, for the generalized problem ``K x = λ M x``."""
    out = np.empty(k)
    lows = np.full(k, lo)
    highs = np.full(k, hi)
    retries = 0
    for j in range(k):
        a = lows[j]
        b = highs[j]
        while b - a > tol:
            m = 0.5 * (a + b)
            if m <= a or m >= b:
                break
            c, rt = _pencil_count_below(kd, ko, md, mo, m)
            retries += rt
            for q in range(j, k):
                if c > q:
                    if m < highs[q]:
                        highs[q] = m
                elif m > lows[q]:
                    lows[q] = m
            if c > j:
                b = m
            else:
                a = m
        out[j] = 0.5 * (a + b)
    return out, retries


# ---------------------------------------------------------------- types

@dataclass(frozen=True)
class RadialGrid:
    """Nodes ``r_j = r_min + (R_max - r_min)(j/N)^γ`` for ``j = 0..N``.

    The two end nodes carry the Dirichlet condition, so operators have
    ``N - 1`` rows.
    """

    r_min: float
    R_max: float
    N: int
    gamma: float = 2.0

    def __post_init__(self):
        if not 0 < self.r_min < self.R_max:
            raise DomainError(f"need 0 < r_min < R_max, got {self.r_min}, {self.R_max}")
        if self.N < 3:
            raise DomainError(f"grid needs at least 3 intervals, got {self.N}")
        if self.gamma < 1:
            raise DomainError(f"grading exponent must be >= 1, got {self.gamma}")

    @property
    def nodes(self) -> np.ndarray:
        j = np.arange(self.N + 1, dtype=float)
        r = self.r_min + (self.R_max - self.r_min) * (j / self.N) ** self.gamma
        r[-1] = self.R_max
        return r

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]

    def refined(self, factor: int = 2) -> "RadialGrid":
        return RadialGrid(self.r_min, self.R_max, self.N * factor, self.gamma)


@dataclass(frozen=True)
class Channel:
    index: int
    multiplicity: int
    c_ang: float

    def __post_init__(self):
        if self.multiplicity < 1:
            raise DomainError("channel multiplicity must be >= 1")
        if self.c_ang < -0.25:
            raise DomainError("centrifugal coefficient must be >= -1/4")


def channel(d: int, index: int) -> Channel:
    if index < 0:
        raise DomainError(f"channel index must be >= 0, got {index}")
    if d == 3:
        return Channel(index, 2 * index + 1, float(index * (index + 1)))
    if d == 2:
        return Channel(index, 1 if index == 0 else 2, index * index - 0.25)
    raise DomainError(f"dimension must be 2 or 3, got {d}")


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    diag: np.ndarray
    off: np.ndarray
    channel: Channel
    grid: RadialGrid
    h: float
    warnings: tuple = ()
    # set for the generalized problem ``K x = λ M x`` (diag/off then hold K)
    mass_diag: Optional[np.ndarray] = None
    mass_off: Optional[np.ndarray] = None
    lower_bound: Optional[float] = None

    @property
    def size(self) -> int:
        return self.diag.shape[0]

    @property
    def is_pencil(self) -> bool:
        return self.mass_diag is not None

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def dense_mass(self) -> np.ndarray:
        if not self.is_pencil:
            return np.eye(self.size)
        return np.diag(self.mass_diag) + np.diag(self.mass_off, 1) + np.diag(self.mass_off, -1)

    @property
    def off2(self) -> np.ndarray:
        return self.off * self.off

    def gerschgorin(self):
        """Bounds ``(lo, hi)`` with ``lo <= λ_min <= hi``."""
        if self.is_pencil:
            return float(self.lower_bound), float(np.min(self.diag / self.mass_diag))
        a = np.abs(self.off)
        rad = np.zeros_like(self.diag)
        rad[:-1] += a
        rad[1:] += a
        return float(np.min(self.diag - rad)), float(np.max(self.diag + rad))


@dataclass(frozen=True, eq=False)
class ChannelSpectrum:
    channel: Channel
    eigenvalues: np.ndarray

    @property
    def count(self) -> int:
        return int(self.eigenvalues.shape[0])

    def riesz(self, beta: float = 1.0) -> float:
        """Multiplicity-weighted ``Σ |E|^β`` for this channel."""
        return self.channel.multiplicity * math.fsum(np.abs(self.eigenvalues) ** beta)


@dataclass(frozen=True, eq=False)
class NegSpectrum:
    channels: tuple
    beta: float
    h: float
    grid: RadialGrid
    sturm_retries: int = 0
    warnings: tuple = ()

    @property
    def n_neg(self) -> int:
        return sum(c.channel.multiplicity * c.count for c in self.channels)

    @property
    def highest_channel(self) -> int:
        """Index of the first empty channel, which ended the sweep."""
        return len(self.channels)

    @property
    def channels_used(self) -> int:
        return len(self.channels)

    def riesz_mean(self, beta: Optional[float] = None) -> float:
        beta = self.beta if beta is None else beta
        return math.fsum(c.riesz(beta) for c in self.channels)

    @property
    def R(self) -> float:
        return self.riesz_mean()

    @property
    def trace(self) -> float:
        return self.riesz_mean(1.0)

    def all_eigenvalues(self) -> np.ndarray:
        if not self.channels:
            return np.empty(0)
        return np.sort(np.concatenate([c.eigenvalues for c in self.channels]))


# ---------------------------------------------------------------- assembly

Potential = Union[PotentialSpec, Callable[[np.ndarray], np.ndarray]]


def _values(potential: Potential, r: np.ndarray) -> np.ndarray:
    fn = potential.value if isinstance(potential, PotentialSpec) else potential
    v = np.asarray(fn(r), dtype=float)
    if v.shape != r.shape:
        v = np.broadcast_to(v, r.shape).copy()
    if not np.all(np.isfinite(v)):
        raise NumericError("potential is not finite on the grid")
    return v


def _stencil(grid: RadialGrid):
    r = grid.nodes
    dr = np.diff(r)
    w = 0.5 * (dr[:-1] + dr[1:])
    return r[1:-1], dr, w


# Gauss points for the potential term of the finite-element channel; four
# points integrate r ψ^2 exactly for piecewise-linear ψ
_FE_X, _FE_W = np.polynomial.legendre.leggauss(4)
_FE_X = 0.5 * (_FE_X + 1.0)
_FE_W = 0.5 * _FE_W


def _uses_pencil(chan: Channel) -> bool:
    """The ``-1/(4r^2)`` channel (d = 2, m = 0) is solved as a finite-element pencil."""
    return chan.c_ang < 0


def _fe_geometry(grid: RadialGrid, h: float):
    """Weighted stiffness and mass of ``-h^2 r^{-1}(r ψ')'`` for linear elements.

    The inner end is natural (ψ regular at the origin), the outer end Dirichlet;
    unknowns are the nodes ``r_0 .. r_{N-1}``.
    """
    r = grid.nodes
    L = np.diff(r)
    a, b = r[:-1], r[1:]
    stiff = h * h * 0.5 * (a + b) / L
    kd = stiff.copy()
    kd[1:] += stiff[:-1]
    ko = -stiff[:-1]
    m_aa = L * (3 * a + b) / 12.0
    m_bb = L * (a + 3 * b) / 12.0
    md = m_aa.copy()
    md[1:] += m_bb[:-1]
    mo = (L * (a + b) / 12.0)[:-1]
    return kd, ko, md, mo


def _fe_potential(potential: Potential, grid: RadialGrid):
    """``∫ V φ_i φ_j r dr`` by 4-point Gauss on each element; also ``min V`` at the points."""
    r = grid.nodes
    L = np.diff(r)
    x = _FE_X[None, :]
    rq = r[:-1, None] + L[:, None] * x
    v = _values(potential, rq.ravel()).reshape(rq.shape)
    wv = L[:, None] * _FE_W[None, :] * v * rq
    p_aa = np.sum(wv * (1 - x) ** 2, axis=1)
    p_ab = np.sum(wv * x * (1 - x), axis=1)
    p_bb = np.sum(wv * x * x, axis=1)
    pd = p_aa.copy()
    pd[1:] += p_bb[:-1]
    return pd, p_ab[:-1], float(np.min(v))


def _resolution_notes(v, ri, dr, h, c_ang, grid, s):
    notes = []
    if s is not None:
        ell = h ** (2.0 / (2.0 - s))
        if grid.r_min > ell / 100.0:
            notes.append(f"r_min {grid.r_min:.3g} is not 100x below the quantum length {ell:.3g}")
    # local wavenumber times spacing; beyond ~0.5 the stencil misses oscillations
    kin = np.maximum(-(v + h * h * c_ang / ri**2), 0.0)
    k_dr = np.sqrt(kin) / h * np.maximum(dr[:-1], dr[1:])
    if k_dr.size and k_dr.max() > 0.5:
        j = int(np.argmax(k_dr))
        notes.append(f"grid under-resolves the local wavelength near r = {ri[j]:.3g}")
    return notes


def discretize(potential: Potential, chan: Channel, h: float, grid: RadialGrid,
               s: Optional[float] = None) -> TridiagonalOperator:
    """Symmetric three-point operator for one channel.

    The lumped mass ``w_j = (Δ_{j-1} + Δ_j)/2`` is split symmetrically, so
    the matrix is ``W^{-1/2} K W^{-1/2} + diag(h^2 c/r^2 + V)`` with ``K``
    the stiffness matrix of ``-h^2 d^2/dr^2``.

    The two-dimensional ``m = 0`` channel is the exception: its ``-1/(4r^2)``
    term defeats the three-point stencil, so it is discretized by linear
    finite elements in ``ψ = u/√r`` and returned as a pencil ``(K, M)``.
    """
    if not h > 0:
        raise DomainError(f"h must be positive, got {h}")
    ri, dr, w = _stencil(grid)
    h2 = h * h
    v = _values(potential, ri)
    if s is None and isinstance(potential, PotentialSpec):
        s = potential.s
    if _uses_pencil(chan):
        notes = _resolution_notes(v, ri, dr, h, 0.0, grid, s)
        kd, ko, md, mo = _fe_geometry(grid, h)
        pd, po, vmin = _fe_potential(potential, grid)
        return TridiagonalOperator(kd + pd, ko + po, chan, grid, h, tuple(notes),
                                   md, mo, min(vmin, 0.0) - 1.0)
    diag = h2 * (1.0 / dr[:-1] + 1.0 / dr[1:]) / w + h2 * chan.c_ang / ri**2 + v
    off = -h2 / (dr[1:-1] * np.sqrt(w[:-1] * w[1:]))
    notes = _resolution_notes(v, ri, dr, h, chan.c_ang, grid, s)
    return TridiagonalOperator(diag, off, chan, grid, h, tuple(notes))


def count_negative(op: TridiagonalOperator, shift: float = 0.0) -> int:
    """Exact number of eigenvalues below ``shift`` (default 0) via LDL^T inertia."""
    if op.is_pencil:
        c, _ = _pencil_count_below(op.diag, op.off, op.mass_diag, op.mass_off, float(shift))
    else:
        c, _ = _count_below(op.diag, op.off2, float(shift))
    return int(c)


def _extract(diag, off2, k, lo, abs_tol):
    """Lowest ``k`` eigenvalues below 0; returns (values, tol used, retries)."""
    # an absolute coarse tolerance: the Gerschgorin bound of a graded grid can
    # exceed the lowest eigenvalue by many orders of magnitude
    e0, rt0 = _bisect(diag, off2, lo, 0.0, 1, COARSE_TOL)
    e0 = e0[0]
    tol = abs_tol if abs_tol is not None else 1e-10 * max(1.0, abs(e0))
    floor = e0 - 2.0 * COARSE_TOL - 1.0
    vals, rt = _bisect(diag, off2, floor, 0.0, k, tol)
    return vals, tol, rt0 + rt


def _extract_pencil(kd, ko, md, mo, k, lo, abs_tol):
    e0, rt0 = _pencil_bisect(kd, ko, md, mo, lo, 0.0, 1, COARSE_TOL)
    e0 = e0[0]
    tol = abs_tol if abs_tol is not None else 1e-10 * max(1.0, abs(e0))
    floor = e0 - 2.0 * COARSE_TOL - 1.0
    vals, rt = _pencil_bisect(kd, ko, md, mo, floor, 0.0, k, tol)
    return vals, tol, rt0 + rt


def negative_eigenvalues(op: TridiagonalOperator, abs_tol: Optional[float] = None) -> np.ndarray:
    """Sorted negative eigenvalues, each within ``abs_tol`` of a matrix eigenvalue.

    The default tolerance is ``1e-10 max(1, |E_min|)``.
    """
    if abs_tol is not None and not abs_tol > 0:
        raise DomainError("abs_tol must be positive")
    k = count_negative(op)
    if k == 0:
        return np.empty(0)
    lo, _ = op.gerschgorin()
    if op.is_pencil:
        vals, _, _ = _extract_pencil(op.diag, op.off, op.mass_diag, op.mass_off, k, lo, abs_tol)
    else:
        vals, _, _ = _extract(op.diag, op.off2, k, lo - 1.0, abs_tol)
    return vals


# ---------------------------------------------------------------- traces

@dataclass(frozen=True, eq=False)
class _Samples:
    """Potential data shared by every channel of one sweep."""

    v: np.ndarray
    pencil: Optional[tuple] = None


def _samples(potential: Potential, d: int, grid: RadialGrid) -> _Samples:
    v = _values(potential, grid.interior)
    return _Samples(v, _fe_potential(potential, grid) if d == 2 else None)


def _potentially_empty(v, ri, h, chan) -> bool:
    """True when ``h^2 c/r^2 + V >= 0`` on every node: the channel has no negative states."""
    return bool(np.all(h * h * chan.c_ang / ri**2 + v >= 0.0))


def _solve_channel(smp, geom, h, chan, abs_tol):
    ri, dr, w, fe = geom
    v = smp.v
    if _potentially_empty(v, ri, h, chan):
        return np.empty(0), 0
    if _uses_pencil(chan):
        kd, ko, md, mo = fe
        pd, po, vmin = smp.pencil
        kd, ko = kd + pd, ko + po
        k, retries = _pencil_count_below(kd, ko, md, mo, 0.0)
        if k == 0:
            return np.empty(0), retries
        vals, _, rt = _extract_pencil(kd, ko, md, mo, k, min(vmin, 0.0) - 1.0, abs_tol)
        return vals, retries + rt
    h2 = h * h
    diag = h2 * (1.0 / dr[:-1] + 1.0 / dr[1:]) / w + h2 * chan.c_ang / ri**2 + v
    off = -h2 / (dr[1:-1] * np.sqrt(w[:-1] * w[1:]))
    off2 = off * off
    k, retries = _count_below(diag, off2, 0.0)
    if k == 0:
        return np.empty(0), retries
    rad = np.zeros_like(diag)
    rad[:-1] += np.abs(off)
    rad[1:] += np.abs(off)
    lo = float(np.min(diag - rad)) - 1.0
    vals, _, rt = _extract(diag, off2, k, lo, abs_tol)
    return vals, retries + rt


def _sweep(potentials, d, h, grid, threads, channel_cap, abs_tol):
    """Solve channels upward for each potential until a channel is empty for all.

    Returns one list of ``ChannelSpectrum`` per potential (all of equal length)
    and the total Sturm retry count.
    """
    ri, dr, w = _stencil(grid)
    geom = (ri, dr, w, _fe_geometry(grid, h) if d == 2 else None)
    samples = [_samples(p, d, grid) for p in potentials]
    nv = len(samples)
    per = [[] for _ in range(nv)]
    retries = 0
    threads = max(1, int(threads))
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        start = 0
        done = False
        while not done:
            batch = list(range(start, start + threads))
            if batch[-1] >= channel_cap:
                raise NumericError(
                    f"more than {channel_cap} angular channels are occupied; "
                    "use a larger h or a weaker potential")
            jobs = [(i, channel(d, l)) for l in batch for i in range(nv)]

            def run(job):
                i, ch = job
                return _solve_channel(samples[i], geom, h, ch, abs_tol)

            results = list(pool.map(run, jobs)) if pool else [run(j) for j in jobs]
            for b, l in enumerate(batch):
                chunk = results[b * nv:(b + 1) * nv]
                if all(ev.shape[0] == 0 for ev, _ in chunk):
                    done = True
                    break
                ch = channel(d, l)
                for i, (ev, rt) in enumerate(chunk):
                    per[i].append(ChannelSpectrum(ch, ev))
                    retries += rt
            start += threads
    finally:
        if pool:
            pool.shutdown()
    return per, retries


def _grid_notes(potential, h, grid):
    d = potential.d if isinstance(potential, PotentialSpec) else 3
    # the lumped channel carries the stricter wavelength check in d = 2 as well
    op = discretize(potential, channel(d, 1 if d == 2 else 0), h, grid)
    return op.warnings


def trace_neg(potential: PotentialSpec, h: float, grid: RadialGrid, beta: float = 1.0,
              *, threads: int = 1, channel_cap: int = DEFAULT_CHANNEL_CAP,
              abs_tol: Optional[float] = None) -> NegSpectrum:
    """Riesz mean ``tr[-h^2 Δ + V]_-^β`` by channel sweep.

    Channels are visited upward and the sweep ends at the first channel with
    no negative eigenvalue.  Sums are compensated and taken in channel order,
    so the result does not depend on ``threads``.
    """
    if not h > 0:
        raise DomainError(f"h must be positive, got {h}")
    if not beta > 0:
        raise DomainError(f"Riesz exponent must be positive, got {beta}")
    per, retries = _sweep([potential], potential.d, h, grid, threads, channel_cap, abs_tol)
    notes = _grid_notes(potential, h, grid)
    for n in notes:
        warnings.warn(n, ResolutionWarning, stacklevel=2)
    return NegSpectrum(tuple(per[0]), beta, h, grid, retries, notes)


@dataclass(frozen=True, eq=False)
class RelativeSpectrum:
    first: NegSpectrum
    second: NegSpectrum
    difference: float

    @property
    def channels_used(self) -> int:
        return self.first.channels_used


def relative_trace(pair: PairSpec, h: float, grid: RadialGrid, beta: float = 1.0, *,
                   threads: int = 1, channel_cap: int = DEFAULT_CHANNEL_CAP,
                   abs_tol: Optional[float] = None) -> RelativeSpectrum:
    """Both traces of a pair on one grid, differenced channel by channel.

    The sweep runs until a channel is empty for both members, so the two
    channel lists coincide and identical members give exactly zero.
    """
    if not h > 0:
        raise DomainError(f"h must be positive, got {h}")
    per, retries = _sweep([pair.first, pair.second], pair.d, h, grid, threads,
                          channel_cap, abs_tol)
    parts = [a.riesz(beta) - b.riesz(beta) for a, b in zip(per[0], per[1])]
    notes = _grid_notes(pair.first, h, grid) + _grid_notes(pair.second, h, grid)
    for n in dict.fromkeys(notes):
        warnings.warn(n, ResolutionWarning, stacklevel=2)
    first = NegSpectrum(tuple(per[0]), beta, h, grid, retries, notes)
    second = NegSpectrum(tuple(per[1]), beta, h, grid, retries, notes)
    return RelativeSpectrum(first, second, math.fsum(parts))


def ground_state_energy(potential: PotentialSpec, h: float, grid: RadialGrid) -> float:
    """Lowest eigenvalue, which sits in the lowest angular channel."""
    if not h > 0:
        raise DomainError(f"h must be positive, got {h}")
    op = discretize(potential, channel(potential.d, 0), h, grid)
    lo, hi = op.gerschgorin()
    if op.is_pencil:
        def bisect(a, b, tol):
            return _pencil_bisect(op.diag, op.off, op.mass_diag, op.mass_off, a, b, 1, tol)[0][0]
    else:
        def bisect(a, b, tol):
            return _bisect(op.diag, op.off2, a, b, 1, tol)[0][0]
    e = bisect(lo - 1.0, hi + 1.0, COARSE_TOL)
    width = 2.0 * COARSE_TOL + 1.0
    return float(bisect(e - width, e + width, 1e-12 * max(1.0, abs(e))))


# ---------------------------------------------------------------- grid policy

@dataclass(frozen=True)
class GridPolicy:
    """How a grid is derived from the potential and ``h``.

    ``r_min = r_min_factor * h^{2/(2-s)}``; the outer radius is the support of
    ``V_-`` (or where ``V > -tail_level``) times ``outer_factor`` plus a
    tunnelling margin; ``N`` resolves the quantum length with ``n_quantum``
    points per unit of ``(R/ℓ)^{1/γ}`` and the local wavelength with
    ``points_per_wavelength``.
    """

    gamma: float = 2.0
    r_min_factor: float = 1e-3
    n_quantum: float = 100.0
    points_per_wavelength: float = 20.0
    outer_factor: float = 1.5
    margin_lengths: float = 20.0
    tail_level: float = 1e-6
    max_points: int = DEFAULT_MAX_POINTS
    R_max: Optional[float] = None
    N: Optional[int] = None


def negative_support(potential: PotentialSpec, tail_level: float = 1e-6) -> float:
    """Outermost sampled radius where ``V < 0``; if ``V_-`` never ends, where ``V > -tail_level``."""
    r = np.logspace(math.log10(SAMPLE_RANGE[0]), math.log10(SAMPLE_RANGE[1]), 4001)
    v = potential.value(r)
    neg = np.flatnonzero(v < 0)
    if neg.size == 0:
        return 0.0
    last = neg[-1]
    if last < r.size - 1:
        return float(r[last + 1])
    radius = r[-1]
    while potential.value(np.array([radius]))[0] < -tail_level:
        radius *= 2.0
        if radius > 1e12:
            raise DomainError("negative part of the potential does not decay")
    return float(radius)


def _tail_value(potential: PotentialSpec) -> float:
    return float(potential.value(np.array([SAMPLE_RANGE[1]]))[0])


def make_grid(potentials, h: float, policy: GridPolicy = GridPolicy(),
              h_min: Optional[float] = None) -> RadialGrid:
    """Grid shared by all ``potentials`` and adequate for every ``h`` in ``[h_min, h]``."""
    if isinstance(potentials, PotentialSpec):
        potentials = [potentials]
    h_small = h if h_min is None else min(h, h_min)
    s = max(p.s for p in potentials)
    ell = h_small ** (2.0 / (2.0 - s))
    r_min = policy.r_min_factor * ell
    if policy.R_max is not None:
        R = policy.R_max
    else:
        R = 0.0
        for p in potentials:
            support = negative_support(p, policy.tail_level)
            tail = _tail_value(p)
            if tail > 0:
                margin = policy.margin_lengths * h / math.sqrt(tail)
            else:
                margin = support
            R = max(R, policy.outer_factor * support + margin)
        R = max(R, 10.0 * ell)
    if policy.N is not None:
        N = policy.N
    else:
        n_core = policy.n_quantum * (R / ell) ** (1.0 / policy.gamma)
        r = np.logspace(math.log10(r_min), math.log10(R), 2000)
        depth = max(float(np.max(np.maximum(-p.value(r), 0.0) * np.minimum(r / ell, 1.0) ** 2))
                    for p in potentials)
        # spacing near R is about γ R / N
        k = math.sqrt(depth) / h_small
        n_wave = policy.points_per_wavelength * k * policy.gamma * R / (2 * math.pi)
        N = int(math.ceil(max(n_core, n_wave, 50)))
        if N > policy.max_points:
            warnings.warn(f"grid capped at {policy.max_points} points (wanted {N}); "
                          "results may be under-resolved", ResolutionWarning, stacklevel=2)
            N = policy.max_points
    return RadialGrid(r_min, R, N, policy.gamma)
