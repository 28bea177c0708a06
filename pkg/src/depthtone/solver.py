"""Exact entropy-maximizing level compression under a per-level span bound.

The problem: choose breakpoints 0 = d_0 < d_1 < ... < d_K = N with every gap
d_{k+1} - d_k in [1, tau] maximizing sum_k -P_k log2 P_k, where P_k is the
probability mass of levels [d_k, d_{k+1}). Equivalently: the maximum-weight
path with exactly K edges from node 0 to node N in the DAG whose edge (i, j)
carries weight -P[i,j) log2 P[i,j), with edges longer than tau removed.

The dynamic program fills K layers; a cell (x, k) holds the best k-edge path
from 0 to x and only scans the tau predecessors [x - tau, x - 1], giving
O(K*N*tau) work instead of O(K*N^2). Infeasible cells (unreachable from 0 or
unable to reach N) are pruned up front.

Determinism: all edge weights come from one shared table built by
core._plog2p, paths are accumulated left to right, and every argmax keeps the
smallest predecessor unless a candidate is strictly greater. The brute-force
oracle applies the same selection rule over an exhaustive enumeration, so
solver and oracle agree on breakpoints exactly, not just within tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .core import Histogram, MappingFunction, _plog2p
from .errors import IndexOutOfRange, Infeasible, InvalidTau, MismatchedN, TooLarge

__all__ = [
    "SolverResult",
    "edge_weight",
    "mapping_entropy",
    "solve_gemax",
    "brute_force_oracle",
    "uniform_mapping",
    "he_mapping",
]

ORACLE_MAX_N = 20
ORACLE_MAX_K = 8


@dataclass(frozen=True)
class SolverResult:
    """Optimal mapping plus the diagnostics needed for complexity checks."""

    mapping: MappingFunction
    entropy_bits: float
    max_bin_span: int
    dp_cells_evaluated: int


def edge_weight(hist: Histogram, i: int, j: int) -> float:
    """Weight -P[i,j) log2 P[i,j) of compressing levels [i, j) to one intensity."""
    if not 0 <= i < j <= hist.N:
        raise IndexOutOfRange(f"need 0 <= i < j <= N, got i={i} j={j} N={hist.N}")
    return float(_plog2p(hist._cdf[j] - hist._cdf[i]))


def _segment_weights(hist: Histogram, breakpoints: np.ndarray) -> np.ndarray:
    return _plog2p(np.diff(hist._cdf[breakpoints]))


def mapping_entropy(hist: Histogram, mapping: MappingFunction) -> float:
    """Entropy in bits of the compressed image implied by hist and mapping."""
    if mapping.N != hist.N:
        raise MismatchedN(f"mapping covers {mapping.N} levels but histogram has {hist.N}")
    # left-to-right accumulation matches the DP's path values bit for bit
    total = 0.0
    for w in _segment_weights(hist, mapping.breakpoints):
        total += w
    return total


def _check_feasible(N: int, K: int, tau: int) -> None:
    if tau < 1:
        raise InvalidTau(f"tau must be >= 1, got {tau}")
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if K > N:
        raise Infeasible(f"K ({K}) exceeds N ({N}): gaps of at least 1 cannot fit")
    if K * tau < N:
        raise Infeasible(f"K*tau = {K * tau} < N = {N}: no gap assignment reaches N")


def _weight_table(cdf: np.ndarray, gap_max: int) -> np.ndarray:
    """wgap[x, g-1] = weight of the edge (x-g, x); rows are end levels."""
    n1 = cdf.size
    wgap = np.zeros((n1, gap_max), dtype=np.float64)
    for g in range(1, gap_max + 1):
        wgap[g:, g - 1] = _plog2p(cdf[g:] - cdf[:-g])
    return wgap


@njit(cache=True, parallel=True)
def _dp_fill(wgap, lo, hi, N, K, tau):  # pragma: no cover - exercised via solve_gemax
    w_prev = np.full(N + 1, -np.inf)
    w_prev[0] = 0.0
    parent = np.full((K + 1, N + 1), -1, dtype=np.int32)
    cells = 0
    for k in range(1, K + 1):
        w_cur = np.full(N + 1, -np.inf)
        lo_prev, hi_prev = lo[k - 1], hi[k - 1]
        for x in prange(lo[k], hi[k] + 1):
            v_lo = max(x - tau, lo_prev)
            v_hi = min(x - 1, hi_prev)
            best = -np.inf
            arg = -1
            for v in range(v_lo, v_hi + 1):
                cand = w_prev[v] + wgap[x, x - v - 1]
                if cand > best:
                    best = cand
                    arg = v
            w_cur[x] = best
            parent[k, x] = arg
            cells += max(0, v_hi - v_lo + 1)
        w_prev = w_cur
    return parent, w_prev[N], cells


def _layer_bounds(N: int, K: int, tau: int) -> tuple[np.ndarray, np.ndarray]:
    """Valid cell range per layer: reachable from 0 and able to reach N."""
    ks = np.arange(K + 1, dtype=np.int64)
    lo = np.maximum(ks, N - (K - ks) * tau)
    hi = np.minimum(ks * tau, N - (K - ks))
    return lo, hi


def solve_gemax(hist: Histogram, K: int, tau: int) -> SolverResult:
    """Globally optimal K-level mapping with every gap bounded by tau.

    Raises Infeasible when K*tau < N or K > N, InvalidTau when tau < 1.
    """
    N = hist.N
    _check_feasible(N, K, tau)
    if K < 2:
        raise ValueError("solve_gemax needs K >= 2; a single output level carries no information")
    tau_eff = min(tau, N - K + 1)
    wgap = _weight_table(hist._cdf, tau_eff)
    lo, hi = _layer_bounds(N, K, tau_eff)
    parent, value, cells = _dp_fill(wgap, lo, hi, N, K, tau_eff)
    bp = np.empty(K + 1, dtype=np.int64)
    bp[K] = N
    for k in range(K, 0, -1):
        v = parent[k, bp[k]]
        if v < 0:
            raise Infeasible(f"no feasible path despite bound check (N={N} K={K} tau={tau})")
        bp[k - 1] = v
    mapping = MappingFunction(bp)
    return SolverResult(mapping, float(value), mapping.max_span(), int(cells))


def _compositions(total: int, parts: int, cap: int):
    """All gap vectors of length `parts`, entries in [1, cap], summing to `total`."""
    if parts == 1:
        if 1 <= total <= cap:
            yield (total,)
        return
    # remaining parts bound each choice from both sides
    lo = max(1, total - (parts - 1) * cap)
    hi = min(cap, total - (parts - 1))
    for g in range(lo, hi + 1):
        for rest in _compositions(total - g, parts - 1, cap):
            yield (g,) + rest


def brute_force_oracle(hist: Histogram, K: int, tau: int) -> SolverResult:
    """Exhaustive reference solver for small instances (N <= 20, K <= 8).

    Enumerates every feasible breakpoint vector and selects the maximum with
    the same tie-break as solve_gemax: on exact ties the path whose later
    breakpoints are smaller wins.
    """
    N = hist.N
    _check_feasible(N, K, tau)
    if N > ORACLE_MAX_N or K > ORACLE_MAX_K:
        raise TooLarge(f"oracle guard: need N <= {ORACLE_MAX_N} and K <= {ORACLE_MAX_K}")
    tau_eff = min(tau, N - K + 1)
    wgap = _weight_table(hist._cdf, tau_eff)
    best_val = -np.inf
    best_key = None
    best_bp = None
    evaluated = 0
    for gaps in _compositions(N, K, tau_eff):
        evaluated += 1
        x = 0
        val = 0.0
        for g in gaps:
            x += g
            val += wgap[x, g - 1]
        bp = np.cumsum((0,) + gaps)
        key = tuple(bp[-2::-1])  # compare d_{K-1} first, then d_{K-2}, ...
        if val > best_val or (val == best_val and key < best_key):
            best_val = val
            best_key = key
            best_bp = bp
    if best_bp is None:
        raise Infeasible(f"no feasible breakpoints (N={N} K={K} tau={tau})")
    mapping = MappingFunction(best_bp)
    return SolverResult(mapping, float(best_val), mapping.max_span(), evaluated)


def uniform_mapping(N: int, K: int) -> MappingFunction:
    """Evenly spread breakpoints; when K does not divide N the larger gaps come first."""
    if not 1 <= K <= N:
        raise ValueError(f"need 1 <= K <= N, got K={K} N={N}")
    base, extra = divmod(N, K)
    gaps = np.full(K, base, dtype=np.int64)
    gaps[:extra] += 1
    return MappingFunction(np.concatenate(([0], np.cumsum(gaps))))


def he_mapping(hist: Histogram, K: int) -> MappingFunction:
    """Histogram-equalization breakpoints (unconstrained baseline).

    d_k is the smallest level whose cumulative probability reaches k/K,
    bumped forward to keep the vector strictly increasing and capped so the
    remaining K-k gaps each keep room for at least one level.
    """
    N = hist.N
    if not 1 <= K <= N:
        raise ValueError(f"need 1 <= K <= N, got K={K} N={N}")
    cdf = hist._cdf
    bp = np.empty(K + 1, dtype=np.int64)
    bp[0] = 0
    bp[K] = N
    for k in range(1, K):
        raw = int(np.searchsorted(cdf, k / K, side="left"))
        bp[k] = min(max(raw, bp[k - 1] + 1), N - (K - k))
    return MappingFunction(bp)
