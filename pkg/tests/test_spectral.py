import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from relweyl import potentials as P
from relweyl import spectral as S
from relweyl.errors import DomainError

pytestmark = pytest.mark.filterwarnings("ignore::relweyl.spectral.ResolutionWarning")


def well(d, depth, width):
    """Square well ``-depth`` on ``r < width``."""
    return P.custom(d, lambda r: np.where(r < width, -depth, 0.0),
                    lambda r: np.zeros_like(r), s=1.0, name="square_well")


def assemble_dense(v, c_ang, h, nodes):
    """Independent loop assembly of the lumped three-point operator."""
    n = len(nodes) - 2
    A = np.zeros((n, n))
    for i in range(n):
        j = i + 1
        left = nodes[j] - nodes[j - 1]
        right = nodes[j + 1] - nodes[j]
        wj = (left + right) / 2
        A[i, i] = h * h * (1 / left + 1 / right) / wj + h * h * c_ang / nodes[j] ** 2 + v(nodes[j])
        if i + 1 < n:
            wk = (right + nodes[j + 2] - nodes[j + 1]) / 2
            A[i, i + 1] = A[i + 1, i] = -h * h / (right * math.sqrt(wj * wk))
    return A


# ---------------------------------------------------------------- assembly

def test_free_operator_positive_diagonal():
    grid = S.RadialGrid(1e-3, 5.0, 200)
    zero = P.custom(3, lambda r: np.zeros_like(r), lambda r: np.zeros_like(r))
    op = S.discretize(zero, S.Channel(0, 1, 0.0), 0.3, grid)
    assert np.all(op.diag > 0)
    assert S.count_negative(op) == 0


def test_uniform_stencil():
    grid = S.RadialGrid(0.5, 10.5, 100, gamma=1.0)
    dr, h = 0.1, 0.7
    const = P.custom(3, lambda r: -np.ones_like(r), lambda r: np.zeros_like(r))
    op = S.discretize(const, S.Channel(0, 1, 0.0), h, grid)
    assert np.allclose(op.diag, 2 * h * h / dr**2 - 1, rtol=1e-12, atol=0)
    assert np.allclose(op.off, -h * h / dr**2, rtol=1e-12, atol=0)


@pytest.mark.parametrize("ell", [0, 3])
def test_graded_matches_dense_oracle(ell):
    V = P.pure_power(3, 1.0, 1.3, 0.2)
    grid = S.RadialGrid(1e-3, 12.0, 300, gamma=2.0)
    chan = S.channel(3, ell)
    op = S.discretize(V, chan, 0.4, grid)
    ref = assemble_dense(lambda r: V(r), chan.c_ang, 0.4, grid.nodes)
    scale = np.abs(ref).max()
    assert np.max(np.abs(op.dense() - ref)) <= 1e-14 * scale


def test_channels():
    assert S.channel(3, 2) == S.Channel(2, 5, 6.0)
    assert S.channel(2, 0) == S.Channel(0, 1, -0.25)
    assert S.channel(2, 3) == S.Channel(3, 2, 8.75)
    with pytest.raises(DomainError):
        S.channel(3, -1)


@pytest.mark.parametrize("bad", [(0.0, 1.0, 10), (1.0, 0.5, 10), (1e-3, 1.0, 2)])
def test_grid_validation(bad):
    with pytest.raises(DomainError):
        S.RadialGrid(*bad)


# ---------------------------------------------------------------- inertia

def test_sturm_counts_match_dense_eigenvalues(rng):
    for _ in range(50):
        n = int(rng.integers(2, 40))
        diag = rng.normal(size=n) * 3
        off = rng.normal(size=n - 1)
        grid = S.RadialGrid(0.1, 1.0, n + 1)
        op = S.TridiagonalOperator(diag, off, S.Channel(0, 1, 0.0), grid, 1.0)
        ev = np.linalg.eigvalsh(op.dense())
        for shift in rng.normal(size=5) * 3:
            gap = np.min(np.abs(ev - shift))
            if gap < 1e-9:
                continue
            assert S.count_negative(op, shift) == int(np.sum(ev < shift))
        neg = S.negative_eigenvalues(op, abs_tol=1e-12)
        assert np.allclose(neg, ev[ev < 0], atol=1e-10)
        # counts implied by the bisection list agree with inertia
        for shift in (-1.0, -0.1):
            assert S.count_negative(op, shift) == int(np.sum(neg < shift))


def test_pencil_counts_match_generalized_eigenvalues():
    from scipy.linalg import eigh

    V = P.pure_power(2, 1.0, 1.1, 0.3)
    grid = S.RadialGrid(1e-4, 30.0, 120)
    op = S.discretize(V, S.channel(2, 0), 0.3, grid)
    assert op.is_pencil
    ev = eigh(op.dense(), op.dense_mass(), eigvals_only=True)
    assert S.count_negative(op) == int(np.sum(ev < 0))
    assert np.allclose(S.negative_eigenvalues(op, abs_tol=1e-12), ev[ev < 0], atol=1e-9)
    lo, hi = op.gerschgorin()
    assert lo <= ev[0] <= hi


def test_positive_potential_has_no_negative_spectrum():
    V = P.custom(3, lambda r: 0.5 + r, lambda r: np.ones_like(r))
    grid = S.RadialGrid(1e-3, 10.0, 500)
    op = S.discretize(V, S.channel(3, 0), 0.2, grid)
    assert S.count_negative(op) == 0
    assert S.negative_eigenvalues(op).size == 0
    sp = S.trace_neg(V, 0.2, grid)
    assert sp.trace == 0.0 and sp.n_neg == 0


# ---------------------------------------------------------------- hydrogen

@pytest.fixture(scope="module")
def hydrogen():
    V = P.pure_power(3, 1.0, 1.0, 0.1)
    grid = S.make_grid(V, 0.1)
    return V, grid


def test_hydrogen_s_channel_count(hydrogen):
    V, grid = hydrogen
    op = S.discretize(V, S.channel(3, 0), 0.1, grid)
    # levels -1/(4h^2 n^2) + 0.1 < 0 for n <= 1/(2h sqrt(0.1)) = 15.8
    assert S.count_negative(op) == 15


def test_hydrogen_levels(hydrogen):
    V, grid = hydrogen
    op = S.discretize(V, S.channel(3, 0), 0.1, grid)
    ev = S.negative_eigenvalues(op)
    exact = np.array([-25.0 / n**2 + 0.1 for n in range(1, 16)])
    assert np.allclose(ev, exact, rtol=1e-2)
    assert ev[0] == pytest.approx(-24.9, rel=1e-2)


def test_hydrogen_riesz_mean(hydrogen):
    V, grid = hydrogen
    sp = S.trace_neg(V, 0.1, grid)
    assert sp.trace == pytest.approx(251.0, rel=1e-2)
    assert sp.n_neg == sum(n * n for n in range(1, 16))
    assert sp.highest_channel == 15


def test_ground_state_hydrogen_unit_h():
    V = P.pure_power(3, 1.0, 1.0, 0.0)
    grid = S.make_grid(V, 1.0, S.GridPolicy(R_max=60.0))
    assert S.ground_state_energy(V, 1.0, grid) == pytest.approx(-0.25, rel=5e-3)


def test_ground_state_nonnegative_potential():
    V = P.custom(3, lambda r: np.exp(-r), lambda r: -np.exp(-r))
    assert S.ground_state_energy(V, 0.5, S.RadialGrid(1e-3, 10.0, 400)) >= 0


@pytest.mark.parametrize("s", [1.0, 4 / 3, 1.5])
def test_ground_state_scaling_ratio(s):
    V = P.pure_power(3, 1.0, s, 0.0)
    h1, h2 = 0.4, 0.2
    ell = h2 ** (2 / (2 - s))
    R = 60 * h1 ** (2 / (2 - s))
    # a deep inner cut: the Dirichlet error at r_min grows with s
    grid = S.RadialGrid(1e-6 * ell, R, int(400 * (R / ell) ** 0.5), 2.0)
    ratio = S.ground_state_energy(V, h1, grid) / S.ground_state_energy(V, h2, grid)
    assert ratio == pytest.approx((h1 / h2) ** (-2 * s / (2 - s)), rel=1e-2)


# ---------------------------------------------------------------- oracles

def square_well_count(depth, width, h):
    """s-wave bound states of a 3D square well from the matching condition."""
    k0 = math.sqrt(depth) / h

    def match(E):
        k = math.sqrt(depth + E) / h
        kappa = math.sqrt(-E) / h
        return k * math.cos(k * width) + kappa * math.sin(k * width)

    Es = np.linspace(-depth * (1 - 1e-12), -1e-12 * depth, 20001)
    vals = np.array([match(E) for E in Es])
    roots = [brentq(match, a, b) for a, b, fa, fb in zip(Es[:-1], Es[1:], vals[:-1], vals[1:])
             if fa * fb < 0]
    return len(roots), k0 * width / math.pi


@pytest.mark.parametrize("x, expected", [(1.3, 1), (2.2, 2), (2.8, 3), (3.4, 3)])
def test_square_well_count_matches_matching_condition(x, expected):
    width, h = 1.0, 0.1
    depth = (x * math.pi * h / width) ** 2
    n_oracle, _ = square_well_count(depth, width, h)
    assert n_oracle == expected
    grid = S.RadialGrid(1e-6, 12.0, 24_000, gamma=1.0)
    op = S.discretize(well(3, depth, width), S.channel(3, 0), h, grid)
    assert S.count_negative(op) == n_oracle


def test_decoupled_blocks_give_union():
    ga = S.RadialGrid(1e-3, 10.0, 400)
    A = S.discretize(P.pure_power(3, 1.0, 1.0, 0.2), S.channel(3, 0), 0.3, ga)
    B = S.discretize(well(3, 2.0, 1.5), S.channel(3, 0), 0.3, ga)
    diag = np.concatenate([A.diag, B.diag])
    off = np.concatenate([A.off, [0.0], B.off])
    joint = S.TridiagonalOperator(diag, off, A.channel, ga, 0.3)
    union = np.sort(np.concatenate([S.negative_eigenvalues(A, 1e-12),
                                    S.negative_eigenvalues(B, 1e-12)]))
    assert np.allclose(S.negative_eigenvalues(joint, 1e-12), union, atol=1e-10)


# ---------------------------------------------------------------- properties

@pytest.mark.parametrize("gamma", [1.0, 2.0])
def test_refinement_order(gamma):
    V = P.custom(3, lambda r: -5 * np.exp(-r * r), lambda r: 10 * r * np.exp(-r * r))
    T = [S.trace_neg(V, 0.3, S.RadialGrid(1e-4, 8.0, n, gamma)).trace for n in (400, 800, 1600)]
    order = math.log2(abs(T[0] - T[1]) / abs(T[1] - T[2]))
    assert order >= 1.8


@settings(max_examples=15, deadline=None)
@given(st.integers(100, 400), st.integers(1, 200))
def test_domain_monotonicity(n, extra):
    # same uniform spacing: the smaller matrix is a leading principal block
    V = P.pure_power(3, 1.0, 1.0, 0.02)
    dr = 0.05
    small = S.RadialGrid(dr, dr * (n + 1), n, gamma=1.0)
    big = S.RadialGrid(dr, dr * (n + extra + 1), n + extra, gamma=1.0)
    for ell in (0, 2):
        a = S.count_negative(S.discretize(V, S.channel(3, ell), 0.2, small))
        b = S.count_negative(S.discretize(V, S.channel(3, ell), 0.2, big))
        assert b >= a


def test_two_dimensional_s_channel_monotone_under_refinement():
    V = P.pure_power(2, 1.0, 1.0, 0.0)
    energies = [S.ground_state_energy(V, 1.0, S.RadialGrid(1e-6, 40.0, n)) for n in
                (250, 500, 1000, 2000, 4000)]
    assert all(b <= a for a, b in zip(energies[:-1], energies[1:]))
    # two-dimensional hydrogen ground level -1/(4 (1/2)^2)
    assert energies[-1] == pytest.approx(-1.0, abs=1e-4)


def test_two_dimensional_hydrogen_trace():
    h, mu = 0.1, 0.1
    V = P.pure_power(2, 1.0, 1.0, mu)
    sp = S.trace_neg(V, h, S.make_grid(V, h))
    levels = [(2 * n - 1, 1 / (4 * h * h * (n - 0.5) ** 2) - mu) for n in range(1, 40)]
    exact = sum(g * e for g, e in levels if e > 0)
    assert sp.n_neg == sum(g for g, e in levels if e > 0)
    assert sp.trace == pytest.approx(exact, rel=5e-3)


def test_thread_count_does_not_change_bits():
    pair = P.perturbed_pair(3, 1.0, 1.3, 0.5, 0.5, 1.0, r_t=1.0)
    grid = S.make_grid([pair.first, pair.second], 0.3)
    ref = S.relative_trace(pair, 0.3, grid, threads=1)
    for threads in (2, 4, 8):
        out = S.relative_trace(pair, 0.3, grid, threads=threads)
        assert out.difference == ref.difference
        assert out.first.trace == ref.first.trace


def test_identical_pair_differences_to_zero():
    V = P.pure_power(3, 1.0, 1.3, 0.5)
    pair = P.identical_pair(V)
    grid = S.make_grid(V, 0.3)
    assert S.relative_trace(pair, 0.3, grid).difference == 0.0


def test_riesz_exponent_zero_limit_counts():
    V = P.pure_power(3, 1.0, 1.0, 0.1)
    sp = S.trace_neg(V, 0.2, S.make_grid(V, 0.2), beta=1e-12)
    assert sp.riesz_mean() == pytest.approx(sp.n_neg, rel=1e-9)


def test_resolution_warning_for_coarse_grid():
    V = P.pure_power(3, 1.0, 1.0, 0.1)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        S.trace_neg(V, 0.1, S.RadialGrid(0.1, 40.0, 60))
    assert any(issubclass(w.category, S.ResolutionWarning) for w in caught)


def test_make_grid_reaches_tail_and_quantum_length():
    V = P.pure_power(3, 1.0, 1.0, 0.1)
    grid = S.make_grid(V, 0.1)
    assert grid.r_min == pytest.approx(1e-3 * 0.1**2)
    assert V(grid.R_max) > 0
