"""
Scaling exponents from moment statistics.

The central object is the generation-k normalization exponent beta_k(q): the
unique root in t of sum over generation-k cells of mass^q length^t = 1. The
map t -> log S_k(q, t) is strictly decreasing (lengths lie in (0, 1)), so the
root exists and is unique. When every family contracts its children by one
common ratio the root has the closed form

    beta_k(q) = sum_i log(sum_j p_ij^q) / sum_i -log(c_i),

which vectorizes over k through per-family generation counts; otherwise a
bracket-safeguarded Newton iteration is used.

The lower/upper separator functions are the liminf/limsup of beta_k over k.
From a finite run these are estimated by the min/max of beta_k over a sampled
window of generations. The default window is the full range [1, k_max] with a
schedule-aware sampling stride: for periodic schedules the samples are
period-aligned (where beta_k equals its limit exactly, with no O(1/k)
truncation wobble), and for block schedules every generation is evaluated so
that the oscillation envelope is actually seen. A half-range tail window
[k_max/2, k_max] provably spans less than a factor-2 range of block mixing
fractions and cannot see both envelope branches, so it is not the default;
callers may still request any window.

Independently of the beta route, Theta(q) and Delta(q) are liminf/limsup
estimates of log(moment sum)/(-log r) read off a moment table, reported next
to b and B so discrepancies between the two routes surface.

Per-q computations are independent and safe to parallelize; the only
sequential structure is the running product over generations inside a single
envelope evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import InsufficientScales, NoBracket, TooDeep
from .specs import (
    BlockSchedule,
    MoranSpec,
    family_generation_counts,
)
from .counting import MomentTable, partition_moment_table

FULL_WINDOW = (0.0, 1.0)
TAIL_WINDOW = (0.5, 1.0)
_MAX_DENSE_KS = 1 << 21
_CONVERGED_TOL = 1e-6


# ---------------------------------------------------------------------------
# beta_k(q)
# ---------------------------------------------------------------------------

def _family_terms(spec: MoranSpec, q: float) -> tuple[np.ndarray, np.ndarray, bool]:
    """
    Per-family (A_f, L_f) with A_f = log sum_j p_fj^q and L_f = -log c_f when
    the family ratio is constant. The bool says whether the closed form
    applies to every referenced family.
    """
    n = len(spec.families)
    A = np.zeros(n)
    L = np.zeros(n)
    closed = True
    for f, fam in enumerate(spec.families):
        A[f] = float(logsumexp(q * fam.log_probs))
        if fam.constant_ratio:
            L[f] = -math.log(fam.ratios[0])
        else:
            closed = False
    return A, L, closed


def _partition_terms(spec: MoranSpec, q: float, counts: np.ndarray):
    """Per-family (count, q*log_probs, log_ratios) for the root solve."""
    terms = []
    for f, fam in enumerate(spec.families):
        c = float(counts[f])
        if c:
            terms.append((c, q * fam.log_probs, fam.log_ratios))
    return terms


def _g_and_slope(terms, beta: float) -> tuple[float, float]:
    """log S_k(q, beta) and its beta-derivative (both per the factorization)."""
    g = 0.0
    dg = 0.0
    for c, qlp, lr in terms:
        v = qlp + beta * lr
        m = v.max()
        w = np.exp(v - m)
        s = w.sum()
        g += c * (m + math.log(s))
        dg += c * float((w @ lr) / s)
    return g, dg


def solve_beta_k(spec: MoranSpec, q: float, k: int) -> float:
    """
    The generation-k normalization exponent. Closed form under constant
    per-family ratios, else a bracket-safeguarded Newton iteration on the
    strictly decreasing convex map beta -> log S_k(q, beta); the residual is
    held to |log S_k| <= 1e-13 * k.
    """
    if k > spec.depth_cap:
        raise TooDeep(f"generation {k} exceeds depth_cap {spec.depth_cap}")
    counts = family_generation_counts(spec, k)[:, 0]
    A, L, closed = _family_terms(spec, q)
    if closed:
        num = float(np.dot(counts, A))
        den = float(np.dot(counts, L))
        return num / den
    terms = _partition_terms(spec, q, counts)
    lo, hi = -64.0, 64.0
    glo, _ = _g_and_slope(terms, lo)
    ghi, _ = _g_and_slope(terms, hi)
    tries = 0
    while glo < 0.0 or ghi > 0.0:
        lo *= 2.0
        hi *= 2.0
        glo, _ = _g_and_slope(terms, lo)
        ghi, _ = _g_and_slope(terms, hi)
        tries += 1
        if tries > 12:
            raise NoBracket(f"no sign change for beta in [{lo}, {hi}] at q={q}, k={k}")
    beta = 0.0 if lo < 0.0 < hi else 0.5 * (lo + hi)
    tol = 1e-13 * max(k, 1)
    for _ in range(100):
        g, dg = _g_and_slope(terms, beta)
        if abs(g) <= tol:
            return beta
        if g > 0.0:
            lo = beta
        else:
            hi = beta
        step = beta - g / dg if dg != 0.0 else 0.5 * (lo + hi)
        beta = step if lo < step < hi else 0.5 * (lo + hi)
    return beta


def _beta_bulk(spec: MoranSpec, q: float, ks: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """beta_k(q) for many k at once; counts is family_generation_counts(spec, ks)."""
    A, L, closed = _family_terms(spec, q)
    if closed:
        num = A @ counts
        den = L @ counts
        return num / den
    return np.array([solve_beta_k(spec, q, int(k)) for k in ks])


# ---------------------------------------------------------------------------
# Sequences and envelope estimates
# ---------------------------------------------------------------------------

@dataclass
class BetaSequence:
    """Sampled beta_k values for one q with envelope estimates over a window."""

    q: float
    k_samples: np.ndarray
    beta_values: np.ndarray
    liminf_est: float
    limsup_est: float
    window: tuple[float, float]

    @property
    def oscillation(self) -> float:
        return self.limsup_est - self.liminf_est

    def check_invariants(self) -> list[str]:
        out = []
        if not np.all(np.diff(self.k_samples) > 0):
            out.append("k_samples not increasing")
        if not (np.isfinite(self.liminf_est) and np.isfinite(self.limsup_est)):
            out.append("envelope estimates not finite")
        if self.liminf_est > self.limsup_est + 1e-12:
            out.append("liminf exceeds limsup")
        return out


def default_stride(spec: MoranSpec, k_max: int, target: int = 2048) -> int:
    """
    Schedule-aware sampling stride: a multiple of the schedule period when one
    exists (period-aligned beta_k has no truncation wobble), 1 for block
    schedules small enough to evaluate densely.
    """
    period = spec.schedule.period
    if period is None:
        return 1
    per = max(1, (k_max // period) // target)
    return period * per


def sample_generations(spec: MoranSpec, k_max: int, stride: int | None = None) -> np.ndarray:
    """Generation indices at which beta_k is evaluated."""
    if stride is not None and stride >= 1:
        ks = np.arange(stride, k_max + 1, stride, dtype=np.int64)
        if ks.size == 0 or ks[-1] != k_max:
            ks = np.append(ks, k_max)
        return np.unique(ks)
    sched = spec.schedule
    if isinstance(sched, BlockSchedule):
        constant = all(spec.families[i].constant_ratio for i in spec.referenced_families)
        if constant and k_max <= _MAX_DENSE_KS:
            return np.arange(1, k_max + 1, dtype=np.int64)
        pts = set()
        for t in sched.boundaries:
            for d in (-1, 0, 1):
                if 1 <= t + d <= k_max:
                    pts.add(t + d)
        geo = np.unique(np.round(np.geomspace(1, k_max, 512)).astype(np.int64))
        pts.update(int(g) for g in geo)
        pts.add(k_max)
        return np.array(sorted(pts), dtype=np.int64)
    return sample_generations(spec, k_max, default_stride(spec, k_max))


def beta_sequence(
    spec: MoranSpec,
    q: float,
    k_max: int,
    stride: int | None = None,
    window: tuple[float, float] = FULL_WINDOW,
) -> BetaSequence:
    """
    Evaluate beta_k(q) on the sampled generations and estimate the
    liminf/limsup as the min/max over the window (fractions of k_max).
    """
    if k_max > spec.depth_cap:
        raise TooDeep(f"k_max {k_max} exceeds depth_cap {spec.depth_cap}")
    ks = sample_generations(spec, k_max, stride)
    counts = family_generation_counts(spec, ks).astype(float)
    vals = _beta_bulk(spec, q, ks, counts)
    lo = max(1, int(math.ceil(window[0] * k_max)))
    hi = int(math.floor(window[1] * k_max))
    mask = (ks >= lo) & (ks <= hi)
    if not mask.any():
        mask = np.ones_like(ks, dtype=bool)
    return BetaSequence(
        q=q,
        k_samples=ks,
        beta_values=vals,
        liminf_est=float(vals[mask].min()),
        limsup_est=float(vals[mask].max()),
        window=window,
    )


def numeric_derivative(q_grid, values, q: float) -> float:
    """
    Second-order central difference of a sampled curve at a grid point q
    (one-sided at the boundary). The grid must contain q.
    """
    q_grid = np.asarray(q_grid, dtype=float)
    values = np.asarray(values, dtype=float)
    i = int(np.argmin(np.abs(q_grid - q)))
    if abs(q_grid[i] - q) > 1e-9 * max(1.0, abs(q)):
        raise ValueError(f"q={q} is not a grid point")
    if 0 < i < q_grid.size - 1:
        return float((values[i + 1] - values[i - 1]) / (q_grid[i + 1] - q_grid[i - 1]))
    if i == 0:
        return float((values[1] - values[0]) / (q_grid[1] - q_grid[0]))
    return float((values[-1] - values[-2]) / (q_grid[-1] - q_grid[-2]))


def derivative_curve(q_grid, values) -> np.ndarray:
    """Central differences at interior points, one-sided at the boundary."""
    q_grid = np.asarray(q_grid, dtype=float)
    values = np.asarray(values, dtype=float)
    return np.gradient(values, q_grid)


# ---------------------------------------------------------------------------
# Theta/Delta from moment tables
# ---------------------------------------------------------------------------

@dataclass
class ThetaDelta:
    theta: float
    delta: float
    lsq_slope: float


def theta_delta_from_moments(table: MomentTable, q: float) -> ThetaDelta:
    """
    liminf/limsup of log(moment)/(-log r) over the finest half of the table's
    scales (min/max there), with the least-squares slope of log value against
    -log r as a diagnostic. Requires >= 8 scales spanning >= 4 octaves.
    """
    if table.scales.size < 8:
        raise InsufficientScales("need at least 8 scales")
    if table.scales[0] / table.scales[-1] < 16.0:
        raise InsufficientScales("scales must span at least 4 octaves")
    vals = table.row(q)
    neg_log_r = -np.log(table.scales)
    x = np.log(vals) / neg_log_r
    half = table.scales.size // 2
    fine = x[half:]
    slope = float(np.polyfit(neg_log_r, np.log(vals), 1)[0])
    return ThetaDelta(theta=float(fine.min()), delta=float(fine.max()), lsq_slope=slope)


# ---------------------------------------------------------------------------
# Separator grids
# ---------------------------------------------------------------------------

@dataclass
class SeparatorGrid:
    """Estimated separator functions over a q grid, with per-q diagnostics."""

    q_grid: np.ndarray
    b: np.ndarray
    B: np.ndarray
    Lambda: np.ndarray
    Theta: np.ndarray
    Delta: np.ndarray
    diagnostics: list[dict] = field(default_factory=list)

    def check_invariants(self, tol: float = 1e-8, zero_tol: float = 1e-9) -> list[str]:
        """Empty list when all grid invariants hold; else one message each."""
        out = []
        if np.any(self.b > self.B + tol) or np.any(self.B > self.Lambda + tol):
            out.append("chain b <= B <= Lambda violated")
        for name, curve in (("b", self.b), ("B", self.B), ("Lambda", self.Lambda)):
            if np.any(np.diff(curve) > tol):
                out.append(f"{name} not non-increasing in q")
        for name, curve in (("B", self.B), ("Lambda", self.Lambda)):
            if self.q_grid.size >= 3:
                h1 = np.diff(self.q_grid[:-1])
                second = np.diff(np.diff(curve) / np.diff(self.q_grid)) * np.sign(h1)
                if np.any(second < -tol):
                    out.append(f"{name} not discretely convex")
        ones = np.isclose(self.q_grid, 1.0, atol=1e-12)
        if ones.any():
            if abs(float(self.b[ones][0])) > zero_tol:
                out.append("b(1) != 0")
            if abs(float(self.Lambda[ones][0])) > zero_tol:
                out.append("Lambda(1) != 0")
        return out

    def rows_csv(self):
        from .output import fmt

        for i, q in enumerate(self.q_grid):
            d = self.diagnostics[i] if i < len(self.diagnostics) else {}
            yield (
                fmt(q),
                fmt(self.b[i]),
                fmt(self.B[i]),
                fmt(self.Lambda[i]),
                fmt(self.Theta[i]),
                fmt(self.Delta[i]),
                fmt(d.get("oscillation", float("nan"))),
                "true" if d.get("converged", False) else "false",
            )


def _log_max_length(spec: MoranSpec, k: int) -> float:
    counts = family_generation_counts(spec, k)[:, 0]
    return float(
        sum(c * math.log(spec.families[f].max_ratio) for f, c in enumerate(counts) if c)
    )


def _table_generations(spec: MoranSpec, k_max: int, q_grid: np.ndarray) -> list[int]:
    """Generations for the cross-check partition table, capped (by bisection
    on the exact log scales) so raw moment values and scales stay
    representable across the q grid."""
    As = [
        _family_terms(spec, q)[0]
        for q in (float(q_grid.min()), float(q_grid.max()), 0.0)
    ]

    def representable(k: int) -> bool:
        counts = family_generation_counts(spec, k)[:, 0].astype(float)
        if -_log_max_length(spec, k) > 600.0:
            return False
        return all(abs(float(counts @ A)) <= 600.0 for A in As)

    hi = min(k_max, 1 << 20)
    if not representable(hi):
        lo = 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if representable(mid):
                lo = mid
            else:
                hi = mid - 1
    cap = max(hi, 8)
    period = spec.schedule.period or 1
    ks = sorted(
        {max(period, period * round(k / period)) for k in np.linspace(cap / 16, cap, 16)}
    )
    if len(ks) < 8:
        ks = sorted(set(range(period, cap + 1, period)))[:16] or [period]
    return [k for k in ks if k >= 1]


def separator_grid(
    spec: MoranSpec,
    q_grid,
    k_max: int,
    stride: int | None = None,
    window: tuple[float, float] = FULL_WINDOW,
    theta_table: MomentTable | None = None,
) -> SeparatorGrid:
    """
    Estimate b, B, Lambda over a q grid from the beta_k envelope (b the
    windowed min, B = Lambda the windowed max), plus Theta/Delta from a
    partition-moment table as an independent cross-check route.
    """
    q_grid = np.asarray(q_grid, dtype=float)
    ks = sample_generations(spec, k_max, stride)
    counts = family_generation_counts(spec, ks).astype(float)
    lo = max(1, int(math.ceil(window[0] * k_max)))
    hi = int(math.floor(window[1] * k_max))
    mask = (ks >= lo) & (ks <= hi)
    if not mask.any():
        mask = np.ones_like(ks, dtype=bool)

    b = np.empty(q_grid.size)
    B = np.empty(q_grid.size)
    diagnostics = []
    for i, q in enumerate(q_grid):
        vals = _beta_bulk(spec, q, ks, counts)
        sel = vals[mask]
        b[i] = float(sel.min())
        B[i] = float(sel.max())
        diagnostics.append(
            {
                "q": float(q),
                "window": [int(ks[mask][0]), int(ks[mask][-1])],
                "oscillation": float(B[i] - b[i]),
                "converged": bool(B[i] - b[i] <= _CONVERGED_TOL),
            }
        )

    if theta_table is None:
        table_ks = _table_generations(spec, k_max, q_grid)
        theta_table = partition_moment_table(spec, q_grid, table_ks)
    Theta = np.empty(q_grid.size)
    Delta = np.empty(q_grid.size)
    for i, q in enumerate(q_grid):
        td = theta_delta_from_moments(theta_table, float(q))
        Theta[i] = td.theta
        Delta[i] = td.delta

    return SeparatorGrid(
        q_grid=q_grid,
        b=b,
        B=B,
        Lambda=B.copy(),
        Theta=Theta,
        Delta=Delta,
        diagnostics=diagnostics,
    )
