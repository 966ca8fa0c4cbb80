"""
Closed-form reference curves for the three worked measure classes, plus exact
small-depth optima for ball moments.

The closed forms are the acceptance oracles: the alternating two-family
construction has a genuine limit exponent; the block-switched construction has
distinct liminf/limsup branches given by the two single-family exponents; the
switching binomial's branches are the two dyadic moment exponents. The brute
force solves the exact packing/covering optimum over the midpoint-center
class by dynamic programming on the line, certifying the greedy estimators
within that class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterOutOfRange, TooDeep
from .specs import MoranSpec, ball_mass, cells, support_intervals

_BRUTE_FORCE_MAX_CELLS = 1 << 13


def uniform_beta(q: float) -> float:
    """Exponent curve of the uniform dyadic measure: 1 - q."""
    return 1.0 - q


def _check_probs(p, where: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ParameterOutOfRange(f"{where} must be a positive probability vector")
    return p


def periodic_moran_beta(p1, r1: float, p2, r2: float, q: float) -> float:
    """
    Limit exponent of the two-family alternating construction
    (arity-2 family with ratio r1, arity-3 family with ratio r2):

        beta(q) = [log sum p1^q + log sum p2^q] / (-log(r1 r2)).
    """
    p1 = _check_probs(p1, "p1")
    p2 = _check_probs(p2, "p2")
    if not (0.0 < r1 < 0.5):
        raise ParameterOutOfRange("need 0 < r1 < 1/2")
    if not (0.0 < r2 < 1.0 / 3.0):
        raise ParameterOutOfRange("need 0 < r2 < 1/3")
    num = math.log(float(np.sum(p1**q))) + math.log(float(np.sum(p2**q)))
    return num / (-math.log(r1 * r2))


@dataclass(frozen=True)
class BlockBounds:
    liminf: float
    limsup: float
    liminf_branch: int  # 1 or 2: which single-family exponent is the inf
    limsup_branch: int


def block_moran_bounds(p1, r1: float, p2, r2: float, q: float) -> BlockBounds:
    """
    liminf/limsup exponents of the block-switched construction with block
    length ratios growing without bound: the inf and sup of the two
    single-family exponents log(sum p_i^q) / (-log r_i). The branch taken is
    reported rather than assumed from a case split.
    """
    p1 = _check_probs(p1, "p1")
    p2 = _check_probs(p2, "p2")
    if not (0.0 < r1 < 0.5):
        raise ParameterOutOfRange("need 0 < r1 < 1/2")
    if not (0.0 < r2 < 1.0 / 3.0):
        raise ParameterOutOfRange("need 0 < r2 < 1/3")
    e1 = math.log(float(np.sum(p1**q))) / (-math.log(r1))
    e2 = math.log(float(np.sum(p2**q))) / (-math.log(r2))
    if e1 <= e2:
        return BlockBounds(e1, e2, 1, 2)
    return BlockBounds(e2, e1, 2, 1)


def switching_binomial_tau(p: float, p_hat: float, q: float) -> tuple[float, float]:
    """
    The two dyadic moment exponents of the switching binomial measure:

        tau(q)     = log2(p^q + (1-p)^q)
        tau_hat(q) = log2(p_hat^q + (1-p_hat)^q)

    Requires 0 < p < p_hat <= 1/2.
    """
    if not (0.0 < p < p_hat <= 0.5):
        raise ParameterOutOfRange("need 0 < p < p_hat <= 1/2")
    tau = math.log2(p**q + (1.0 - p) ** q)
    tau_hat = math.log2(p_hat**q + (1.0 - p_hat) ** q)
    return tau, tau_hat


def switching_alpha_interval(p_hat: float) -> tuple[float, float]:
    """Admissible local-exponent interval (-log2(1 - p_hat), -log2(p_hat))."""
    if not (0.0 < p_hat <= 0.5):
        raise ParameterOutOfRange("need 0 < p_hat <= 1/2")
    return -math.log2(1.0 - p_hat), -math.log2(p_hat)


# ---------------------------------------------------------------------------
# Oracle curves as grid objects
# ---------------------------------------------------------------------------

@dataclass
class OracleCurve:
    """A closed-form reference curve sampled on a q grid."""

    name: str
    q_grid: np.ndarray
    values: np.ndarray
    provenance: str   # which closed form and parameters produced it
    convex: bool = True  # min-of-branches envelopes are not convex at crossings

    def check_invariants(self, tol: float = 1e-8) -> list[str]:
        out = []
        if not np.all(np.isfinite(self.values)):
            out.append(f"{self.name}: non-finite values")
        if np.any(np.diff(self.values) > tol):
            out.append(f"{self.name}: not non-increasing")
        if self.convex and self.q_grid.size >= 3:
            second = np.diff(np.diff(self.values) / np.diff(self.q_grid))
            if np.any(second < -tol):
                out.append(f"{self.name}: not discretely convex")
        return out


def oracle_curve(name: str, q_grid, fn, provenance: str, convex: bool = True) -> OracleCurve:
    q_grid = np.asarray(q_grid, dtype=float)
    values = np.array([fn(float(q)) for q in q_grid])
    return OracleCurve(name, q_grid, values, provenance, convex)


# ---------------------------------------------------------------------------
# Exact midpoint-class ball-moment optima
# ---------------------------------------------------------------------------

@dataclass
class BruteForceMoments:
    packing: float   # max of sum mu(B)^q over r-separated midpoint sets
    covering: float  # min of sum mu(B)^q over midpoint covers of the support


from functools import lru_cache


@lru_cache(maxsize=64)
def _midpoint_ball_masses_cached(spec: MoranSpec, r: float, depth: int, bd: int):
    lefts, lengths, _ = cells(spec, depth)
    if lefts.size > _BRUTE_FORCE_MAX_CELLS:
        raise TooDeep(f"brute force capped at {_BRUTE_FORCE_MAX_CELLS} cells")
    mids = lefts + 0.5 * lengths
    masses = np.array([ball_mass(spec, float(x), r, bd)[0] for x in mids])
    mids.setflags(write=False)
    masses.setflags(write=False)
    return mids, masses


def midpoint_ball_masses(spec: MoranSpec, r: float, depth: int, ball_depth: int | None = None):
    """Cell midpoints at ``depth`` with their ball masses mu(B(mid, r))."""
    bd = ball_depth if ball_depth is not None else min(spec.depth_cap, depth + 8)
    return _midpoint_ball_masses_cached(spec, float(r), int(depth), int(bd))


def _max_packing_value(points: np.ndarray, weights: np.ndarray, r: float) -> float:
    """
    Exact max of sum(weights) over subsets with pairwise distance >= r:
    prefix-max dynamic program on the sorted line.
    """
    n = points.size
    best = np.empty(n)       # best[i] = max value of a packing whose rightmost point is i
    prefix = np.empty(n)     # running max of best[:i+1]
    for i in range(n):
        j = np.searchsorted(points, points[i] - r, side="right") - 1
        prev = prefix[j] if j >= 0 else 0.0
        best[i] = weights[i] + max(prev, 0.0)
        prefix[i] = best[i] if i == 0 else max(prefix[i - 1], best[i])
    return float(prefix[-1])


def _min_cover_value(
    points: np.ndarray,
    weights: np.ndarray,
    r: float,
    lefts: np.ndarray,
    rights: np.ndarray,
) -> float:
    """
    Exact min of sum(weights) over center subsets whose radius-r balls cover
    the union of [lefts, rights]. Dynamic program over centers in left-to-
    right order: ball j may extend a chain ending at ball i when no support
    point lies in the gap (reach_i, points_j - r), i.e. when points_j - r is
    at most the first support point beyond reach_i.
    """
    n = points.size
    start = float(lefts[0])
    reach = points + r
    # ns[i]: first support point strictly beyond reach[i] (the point the next
    # ball must still cover); +inf when the chain already covers everything.
    idx = np.searchsorted(rights, reach, side="right")
    ns = np.full(n, math.inf)
    inside = idx < lefts.size
    safe_idx = np.minimum(idx, lefts.size - 1)
    piece_left = lefts[safe_idx]
    ns[inside] = np.where(piece_left[inside] <= reach[inside], reach[inside], piece_left[inside])

    cost = np.full(n, math.inf)
    init = (points - r <= start) & (start <= reach)
    cost[init] = weights[init]
    for j in range(1, n):
        thresh = points[j] - r
        ok = ns[:j] >= thresh
        if ok.any():
            prev = cost[:j][ok].min()
            if prev + weights[j] < cost[j]:
                cost[j] = prev + weights[j]
    done = ~np.isfinite(ns)
    if not done.any() or not np.isfinite(cost[done]).any():
        return math.inf
    return float(cost[done].min())


def brute_force_ball_moments(spec: MoranSpec, q: float, r: float, depth: int) -> BruteForceMoments:
    """
    Certified packing/covering moment optima over midpoint centers at
    ``depth`` (<= 12 in practice; hard cell cap applies). The packing side is
    an exact interval-graph DP; the covering side an exact shortest-cover DP.
    """
    if depth > 12:
        raise TooDeep("brute force is limited to depth <= 12")
    mids, masses = midpoint_ball_masses(spec, r, depth)
    weights = masses**q
    lefts, lengths = support_intervals(spec, depth)
    pack = _max_packing_value(mids, weights, r)
    cover = _min_cover_value(mids, weights, r, lefts, lefts + lengths)
    return BruteForceMoments(packing=pack, covering=cover)
