"""
Moran interval measures with per-generation probability and contraction families.

A measure spec consists of

* generation families: a probability vector ``probs`` (child masses, summing
  to 1) and a contraction vector ``ratios`` (child lengths as fractions of the
  parent, each in (0, 1), summing to at most 1), both of the same arity n >= 2;
* a schedule assigning one family to every generation 1..depth_cap
  (constant, periodic, or block-switched at a strictly increasing boundary
  sequence starting at 1);
* a gap policy fixing the geometric realization on [0, 1]: children are laid
  out left to right, either abutting (``no_gaps``, requires ratio sums == 1,
  support is all of [0, 1]) or separated by equal gaps (``equal_gaps``,
  requires ratio sums < 1, which yields strictly positive sibling separation
  proportional to the parent length);
* ``depth_cap``: the working depth for all finite computations.

Addresses are 1-based tuples ``(i_1, ..., i_k)``, one child index per
generation. Interval masses are products of child probabilities along the
address; lengths are products of ratios. Deep products are accumulated in log
space where underflow matters.

Specs are immutable after construction; every function here is pure given its
inputs (plus an explicit seed for sampling) and safe to call concurrently.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Union

import numpy as np

from .errors import (
    AddressOutOfRange,
    ScaleTooSmall,
    SpecValidationError,
    TooDeep,
    Violation,
)

PROB_TOL = 1e-12
# Hard cap for exhaustive cell enumeration (counts, coarse histograms, oracles).
MAX_ENUM_CELLS = 1 << 21


class GapPolicy(str, Enum):
    EQUAL_GAPS = "equal_gaps"
    NO_GAPS = "no_gaps"


@dataclass(frozen=True)
class GenerationFamily:
    """One generation's child masses and contraction ratios."""

    probs: tuple[float, ...]
    ratios: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        object.__setattr__(self, "ratios", tuple(float(c) for c in self.ratios))

    @property
    def arity(self) -> int:
        return len(self.probs)

    @property
    def prob_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    @property
    def ratio_array(self) -> np.ndarray:
        return np.asarray(self.ratios, dtype=float)

    @property
    def log_probs(self) -> np.ndarray:
        return np.log(self.prob_array)

    @property
    def log_ratios(self) -> np.ndarray:
        return np.log(self.ratio_array)

    @property
    def ratio_sum(self) -> float:
        return float(math.fsum(self.ratios))

    @property
    def constant_ratio(self) -> bool:
        """True when every child contracts by the same factor."""
        return all(c == self.ratios[0] for c in self.ratios)

    @property
    def max_ratio(self) -> float:
        return max(self.ratios)

    def as_dict(self) -> dict:
        return {"probs": list(self.probs), "ratios": list(self.ratios)}


@dataclass(frozen=True)
class ConstantSchedule:
    """Every generation uses the same family."""

    family: int

    kind = "constant"

    @property
    def period(self) -> int:
        return 1

    @property
    def referenced(self) -> tuple[int, ...]:
        return (self.family,)

    def family_index(self, generation: int) -> int:
        return self.family

    def index_array(self, k_max: int) -> np.ndarray:
        return np.full(k_max, self.family, dtype=np.int64)

    def as_dict(self) -> dict:
        return {"type": "constant", "family": self.family}


@dataclass(frozen=True)
class PeriodicSchedule:
    """Generations cycle through ``pattern`` (generation 1 uses pattern[0])."""

    pattern: tuple[int, ...]

    kind = "periodic"

    def __post_init__(self):
        object.__setattr__(self, "pattern", tuple(int(i) for i in self.pattern))

    @property
    def period(self) -> int:
        return len(self.pattern)

    @property
    def referenced(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.pattern)))

    def family_index(self, generation: int) -> int:
        return self.pattern[(generation - 1) % len(self.pattern)]

    def index_array(self, k_max: int) -> np.ndarray:
        reps = -(-k_max // len(self.pattern))
        return np.tile(np.asarray(self.pattern, dtype=np.int64), reps)[:k_max]

    def as_dict(self) -> dict:
        return {"type": "periodic", "pattern": list(self.pattern)}


@dataclass(frozen=True)
class BlockSchedule:
    """
    Block-switched schedule: generations in [boundaries[j], boundaries[j+1])
    use families[j]; the final block extends to the depth cap.

    boundaries must be strictly increasing with boundaries[0] == 1, one family
    index per block.
    """

    boundaries: tuple[int, ...]
    families: tuple[int, ...]

    kind = "blocks"

    def __post_init__(self):
        object.__setattr__(self, "boundaries", tuple(int(t) for t in self.boundaries))
        object.__setattr__(self, "families", tuple(int(i) for i in self.families))

    @property
    def period(self) -> None:
        return None

    @property
    def referenced(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.families)))

    @property
    def boundary_ratios(self) -> tuple[float, ...]:
        b = self.boundaries
        return tuple(b[j + 1] / b[j] for j in range(len(b) - 1))

    def family_index(self, generation: int) -> int:
        j = bisect_right(self.boundaries, generation) - 1
        return self.families[j]

    def index_array(self, k_max: int) -> np.ndarray:
        out = np.empty(k_max, dtype=np.int64)
        b = list(self.boundaries) + [k_max + 1]
        for j, fam in enumerate(self.families):
            lo = min(b[j], k_max + 1)
            hi = min(b[j + 1], k_max + 1)
            if hi > lo:
                out[lo - 1 : hi - 1] = fam
        return out

    def as_dict(self) -> dict:
        return {
            "type": "blocks",
            "boundaries": list(self.boundaries),
            "families": list(self.families),
        }


Schedule = Union[ConstantSchedule, PeriodicSchedule, BlockSchedule]


@dataclass(frozen=True)
class MoranSpec:
    """Immutable generative description of a Moran measure on [0, 1]."""

    families: tuple[GenerationFamily, ...]
    schedule: Schedule
    gap_policy: GapPolicy
    depth_cap: int

    def __post_init__(self):
        fams = tuple(
            f if isinstance(f, GenerationFamily) else GenerationFamily(**f)
            for f in self.families
        )
        object.__setattr__(self, "families", fams)
        object.__setattr__(self, "gap_policy", GapPolicy(self.gap_policy))
        object.__setattr__(self, "depth_cap", int(self.depth_cap))

    def family_at(self, generation: int) -> GenerationFamily:
        return self.families[self.schedule.family_index(generation)]

    def family_index_array(self, k_max: int) -> np.ndarray:
        return self.schedule.index_array(k_max)

    @property
    def referenced_families(self) -> tuple[int, ...]:
        return self.schedule.referenced

    def family_gap(self, family: GenerationFamily) -> float:
        """Sibling gap in parent-length units (0 under NoGaps)."""
        if self.gap_policy is GapPolicy.NO_GAPS:
            return 0.0
        return (1.0 - family.ratio_sum) / (family.arity - 1)

    @property
    def separation_delta(self) -> float:
        """
        Uniform sibling-separation constant inf_k gap_k / max_j c_kj over the
        families the schedule can reach (0 for NoGaps layouts).
        """
        if self.gap_policy is GapPolicy.NO_GAPS:
            return 0.0
        vals = [
            self.family_gap(self.families[i]) / self.families[i].max_ratio
            for i in self.referenced_families
        ]
        return min(vals)

    def as_dict(self) -> dict:
        return {
            "families": [f.as_dict() for f in self.families],
            "schedule": self.schedule.as_dict(),
            "gap_policy": self.gap_policy.value,
            "depth_cap": self.depth_cap,
        }


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def check_spec(spec: MoranSpec) -> list[Violation]:
    """Check every spec invariant; return the (possibly empty) violation list."""
    out: list[Violation] = []
    for i, fam in enumerate(spec.families):
        where = f"families[{i}]"
        if len(fam.probs) != len(fam.ratios):
            out.append(
                Violation(
                    "RatioOutOfRange",
                    where,
                    f"probs and ratios lengths differ ({len(fam.probs)} vs {len(fam.ratios)})",
                )
            )
            continue
        if fam.arity < 2:
            out.append(Violation("NonProbabilityVector", where, "family arity must be >= 2"))
            continue
        if any(p <= 0.0 for p in fam.probs):
            out.append(Violation("NonProbabilityVector", f"{where}.probs", "entries must be > 0"))
        elif abs(math.fsum(fam.probs) - 1.0) > PROB_TOL:
            out.append(
                Violation(
                    "NonProbabilityVector",
                    f"{where}.probs",
                    f"sum is {math.fsum(fam.probs)!r}, expected 1 within {PROB_TOL}",
                )
            )
        if any(not (0.0 < c < 1.0) for c in fam.ratios):
            out.append(Violation("RatioOutOfRange", f"{where}.ratios", "entries must lie in (0, 1)"))
        elif fam.ratio_sum > 1.0 + PROB_TOL:
            out.append(
                Violation("RatioOutOfRange", f"{where}.ratios", f"sum {fam.ratio_sum!r} exceeds 1")
            )
        else:
            if spec.gap_policy is GapPolicy.NO_GAPS and abs(fam.ratio_sum - 1.0) > PROB_TOL:
                out.append(
                    Violation(
                        "GapPolicyMismatch",
                        f"{where}.ratios",
                        f"no_gaps requires ratio sum 1, got {fam.ratio_sum!r}",
                    )
                )
            if spec.gap_policy is GapPolicy.EQUAL_GAPS and fam.ratio_sum >= 1.0 - PROB_TOL:
                out.append(
                    Violation(
                        "GapPolicyMismatch",
                        f"{where}.ratios",
                        f"equal_gaps requires ratio sum < 1, got {fam.ratio_sum!r}",
                    )
                )

    sched = spec.schedule
    n_fam = len(spec.families)
    if spec.depth_cap < 1:
        out.append(Violation("BadSchedule", "depth_cap", "must be a positive integer"))
    if isinstance(sched, BlockSchedule):
        b = sched.boundaries
        if not b or b[0] != 1:
            out.append(Violation("BadSchedule", "schedule.boundaries", "must start at 1"))
        if any(b[j + 1] <= b[j] for j in range(len(b) - 1)):
            out.append(Violation("BadSchedule", "schedule.boundaries", "must be strictly increasing"))
        if len(sched.families) != len(b):
            out.append(
                Violation(
                    "BadSchedule",
                    "schedule.families",
                    "need exactly one family index per block",
                )
            )
    if isinstance(sched, PeriodicSchedule) and sched.period == 0:
        out.append(Violation("BadSchedule", "schedule.pattern", "must be non-empty"))
    for idx in sched.referenced:
        if not (0 <= idx < n_fam):
            out.append(
                Violation("BadSchedule", "schedule", f"family index {idx} out of range (have {n_fam})")
            )
    return out


def validate_spec(spec: MoranSpec) -> MoranSpec:
    """Return the spec unchanged if valid, else raise SpecValidationError."""
    violations = check_spec(spec)
    if violations:
        raise SpecValidationError(violations)
    return spec


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def child_layout(family: GenerationFamily, gap_policy: GapPolicy) -> tuple[tuple[float, ...], float]:
    """
    Left offsets of the children inside a unit parent, plus the sibling gap
    (both in parent-length units). Children are ordered left to right; under
    equal gaps the first child starts at 0 and the last child ends at 1.
    """
    c = family.ratios
    gap = 0.0
    if gap_policy is GapPolicy.EQUAL_GAPS:
        gap = (1.0 - math.fsum(c)) / (family.arity - 1)
    offsets = []
    pos = 0.0
    for j in range(family.arity):
        offsets.append(pos)
        pos += c[j] + gap
    return tuple(offsets), gap


def interval_of(spec: MoranSpec, address: tuple[int, ...]) -> tuple[float, float, float]:
    """
    Return ``(left, length, mass)`` of the basic interval at a 1-based address.

    Disjointness of siblings (equal gaps) or abutment (no gaps) and the
    left-to-right child order follow from the layout.
    """
    if len(address) > spec.depth_cap:
        raise AddressOutOfRange(f"address depth {len(address)} exceeds depth_cap {spec.depth_cap}")
    left = 0.0
    length = 1.0
    mass = 1.0
    for g, idx in enumerate(address, start=1):
        fam = spec.family_at(g)
        if not (1 <= idx <= fam.arity):
            raise AddressOutOfRange(f"index {idx} at generation {g} outside 1..{fam.arity}")
        offsets, _ = child_layout(fam, spec.gap_policy)
        left += offsets[idx - 1] * length
        length *= fam.ratios[idx - 1]
        mass *= fam.probs[idx - 1]
    return left, length, mass


def log_interval_of(spec: MoranSpec, address: tuple[int, ...]) -> tuple[float, float, float]:
    """(left, log_length, log_mass) variant for deep addresses."""
    if len(address) > spec.depth_cap:
        raise AddressOutOfRange(f"address depth {len(address)} exceeds depth_cap {spec.depth_cap}")
    left = 0.0
    length = 1.0
    log_length = 0.0
    log_mass = 0.0
    for g, idx in enumerate(address, start=1):
        fam = spec.family_at(g)
        if not (1 <= idx <= fam.arity):
            raise AddressOutOfRange(f"index {idx} at generation {g} outside 1..{fam.arity}")
        offsets, _ = child_layout(fam, spec.gap_policy)
        left += offsets[idx - 1] * length
        length *= fam.ratios[idx - 1]
        log_length += math.log(fam.ratios[idx - 1])
        log_mass += math.log(fam.probs[idx - 1])
    return left, log_length, log_mass


def ball_mass(spec: MoranSpec, x: float, r: float, depth: int) -> tuple[float, float]:
    """
    Evaluate mu(B(x, r)) by tree descent truncated at ``depth``.

    The window [x - r, x + r] is clamped to [0, 1]. Subtrees fully inside the
    window contribute their whole mass; generation-``depth`` cells that only
    partly overlap are included iff their midpoint lies in the window, and
    their total mass is returned as a rigorous two-sided error bound (the true
    value lies in [mass - error, mass + error]). Zero-length overlaps are
    ignored: the measures here are atomless.
    """
    if depth > spec.depth_cap:
        raise TooDeep(f"depth {depth} exceeds depth_cap {spec.depth_cap}")
    lo = max(0.0, x - r)
    hi = min(1.0, x + r)
    if hi <= lo:
        return 0.0, 0.0
    mass = 0.0
    error = 0.0
    # stack entries: (generation of the node, left, length, log_mass)
    stack = [(0, 0.0, 1.0, 0.0)]
    while stack:
        g, left, length, logm = stack.pop()
        right = left + length
        if left >= hi or right <= lo:
            continue
        if lo <= left and right <= hi:
            mass += math.exp(logm)
            continue
        if g >= depth:
            mid = left + 0.5 * length
            m = math.exp(logm)
            if lo <= mid <= hi:
                mass += m
            error += m
            continue
        fam = spec.family_at(g + 1)
        offsets, _ = child_layout(fam, spec.gap_policy)
        for j in range(fam.arity):
            stack.append(
                (
                    g + 1,
                    left + offsets[j] * length,
                    fam.ratios[j] * length,
                    logm + math.log(fam.probs[j]),
                )
            )
    return mass, error


def local_exponent_ball(spec: MoranSpec, x: float, r: float, depth: int) -> float:
    """Coarse local dimension log mu(B(x, r)) / log r at a single scale."""
    m, _ = ball_mass(spec, x, r, depth)
    if m <= 0.0:
        return math.inf
    return math.log(m) / math.log(r)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def _tilt_weights(fam: GenerationFamily, q: float, t: float) -> np.ndarray:
    logw = q * fam.log_probs + t * fam.log_ratios
    logw -= logw.max()
    w = np.exp(logw)
    return w / w.sum()


def sample_paths(
    spec: MoranSpec,
    q: float,
    t: float,
    depth: int,
    n: int,
    seed: int,
    with_logs: bool = False,
):
    """
    Draw ``n`` tilted addresses of length ``depth``: at generation j, child i
    is chosen with probability p_ji^q c_ji^t / sum_m p_jm^q c_jm^t. The draw
    is deterministic given ``seed``. (q, t) = (1, 0) samples from the measure
    itself; (0, 0) picks children uniformly.

    Returns a 1-based (n, depth) int array, plus per-path (log_mass,
    log_length) arrays when ``with_logs`` is set.
    """
    if depth > spec.depth_cap:
        raise TooDeep(f"depth {depth} exceeds depth_cap {spec.depth_cap}")
    rng = np.random.default_rng(seed)
    paths = np.empty((n, depth), dtype=np.int64)
    log_mass = np.zeros(n)
    log_len = np.zeros(n)
    for g in range(1, depth + 1):
        fam = spec.family_at(g)
        w = _tilt_weights(fam, q, t)
        cum = np.cumsum(w)
        cum[-1] = 1.0
        idx = np.searchsorted(cum, rng.random(n), side="right")
        idx = np.minimum(idx, fam.arity - 1)
        paths[:, g - 1] = idx + 1
        if with_logs:
            log_mass += fam.log_probs[idx]
            log_len += fam.log_ratios[idx]
    if with_logs:
        return paths, log_mass, log_len
    return paths


def sample_path(spec: MoranSpec, q: float, t: float, depth: int, seed: int) -> tuple[int, ...]:
    """Single tilted address (1-based), deterministic given the seed."""
    return tuple(int(i) for i in sample_paths(spec, q, t, depth, 1, seed)[0])


# ---------------------------------------------------------------------------
# Enumeration and scale matching
# ---------------------------------------------------------------------------

def _num_cells(spec: MoranSpec, k: int) -> int:
    n = 1
    for g in range(1, k + 1):
        n *= spec.family_at(g).arity
        if n > MAX_ENUM_CELLS:
            return n
    return n


def cells(spec: MoranSpec, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    All generation-k cells as ``(lefts, lengths, masses)`` arrays in
    left-to-right order. Exhaustive: guarded by MAX_ENUM_CELLS.
    """
    if k > spec.depth_cap:
        raise TooDeep(f"generation {k} exceeds depth_cap {spec.depth_cap}")
    if _num_cells(spec, k) > MAX_ENUM_CELLS:
        raise TooDeep(f"generation {k} has more than {MAX_ENUM_CELLS} cells")
    lefts = np.zeros(1)
    lengths = np.ones(1)
    masses = np.ones(1)
    for g in range(1, k + 1):
        fam = spec.family_at(g)
        offsets, _ = child_layout(fam, spec.gap_policy)
        off = np.asarray(offsets)
        ratios = fam.ratio_array
        probs = fam.prob_array
        lefts = (lefts[:, None] + lengths[:, None] * off[None, :]).ravel()
        masses = (masses[:, None] * probs[None, :]).ravel()
        lengths = (lengths[:, None] * ratios[None, :]).ravel()
    return lefts, lengths, masses


def support_intervals(spec: MoranSpec, k: int) -> tuple[np.ndarray, np.ndarray]:
    """
    The generation-k support as merged ``(lefts, lengths)``. Under NoGaps this
    is just [0, 1]; under EqualGaps the cells are pairwise separated already.
    """
    if spec.gap_policy is GapPolicy.NO_GAPS:
        return np.array([0.0]), np.array([1.0])
    lefts, lengths, _ = cells(spec, k)
    return lefts, lengths


def cell_endpoints(spec: MoranSpec, k: int) -> np.ndarray:
    """Sorted distinct generation-k cell endpoints (all of them lie in supp mu)."""
    lefts, lengths, _ = cells(spec, k)
    return np.unique(np.concatenate([lefts, lefts + lengths]))


def max_length_at(spec: MoranSpec, k: int) -> float:
    out = 1.0
    for g in range(1, k + 1):
        out *= spec.family_at(g).max_ratio
    return out


def matched_generation(spec: MoranSpec, r: float) -> int:
    """
    Smallest generation whose largest cell is no longer than ``r`` (0 when
    r >= 1). Raises ScaleTooSmall when no generation within depth_cap is fine
    enough.
    """
    if r <= 0.0:
        raise ScaleTooSmall("radius must be positive")
    k = 0
    length = 1.0
    while length > r:
        k += 1
        if k > spec.depth_cap:
            raise ScaleTooSmall(f"radius {r!r} is below generation {spec.depth_cap} resolution")
        length *= spec.family_at(k).max_ratio
    return k


def family_generation_counts(spec: MoranSpec, ks) -> np.ndarray:
    """
    Number of generations in 1..k assigned to each family, for every k in
    ``ks``; returns an (n_families, len(ks)) array. Closed-form per schedule,
    no per-generation scan.
    """
    ks = np.atleast_1d(np.asarray(ks, dtype=np.int64))
    n_fam = len(spec.families)
    out = np.zeros((n_fam, ks.size), dtype=np.int64)
    sched = spec.schedule
    if isinstance(sched, ConstantSchedule):
        out[sched.family] = ks
    elif isinstance(sched, PeriodicSchedule):
        pat = np.asarray(sched.pattern, dtype=np.int64)
        period = pat.size
        full, rem = np.divmod(ks, period)
        for f in range(n_fam):
            per_cycle = int(np.sum(pat == f))
            prefix = np.concatenate([[0], np.cumsum(pat == f)])
            out[f] = full * per_cycle + prefix[rem]
    else:
        b = list(sched.boundaries) + [np.iinfo(np.int64).max]
        for j, fam in enumerate(sched.families):
            inside = np.clip(np.minimum(ks, b[j + 1] - 1) - b[j] + 1, 0, None)
            out[fam] += inside
    return out


# ---------------------------------------------------------------------------
# JSON spec files
# ---------------------------------------------------------------------------

def _expect_keys(d: dict, allowed: set[str], where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ValueError(f"unknown keys {sorted(unknown)} in {where}")


def schedule_from_dict(d: dict) -> Schedule:
    if not isinstance(d, dict) or "type" not in d:
        raise ValueError("schedule must be an object with a 'type' key")
    kind = d["type"]
    if kind == "constant":
        _expect_keys(d, {"type", "family"}, "schedule")
        return ConstantSchedule(family=int(d["family"]))
    if kind == "periodic":
        _expect_keys(d, {"type", "pattern"}, "schedule")
        return PeriodicSchedule(pattern=tuple(d["pattern"]))
    if kind == "blocks":
        _expect_keys(d, {"type", "boundaries", "families"}, "schedule")
        return BlockSchedule(boundaries=tuple(d["boundaries"]), families=tuple(d["families"]))
    raise ValueError(f"unknown schedule type {kind!r}")


def spec_from_dict(d: dict) -> MoranSpec:
    """Build a spec from parsed JSON; unknown keys are rejected at every level."""
    _expect_keys(d, {"families", "schedule", "gap_policy", "depth_cap"}, "spec")
    for miss in ("families", "schedule", "gap_policy", "depth_cap"):
        if miss not in d:
            raise ValueError(f"missing key {miss!r} in spec")
    fams = []
    for i, fd in enumerate(d["families"]):
        _expect_keys(fd, {"probs", "ratios"}, f"families[{i}]")
        fams.append(GenerationFamily(probs=tuple(fd["probs"]), ratios=tuple(fd["ratios"])))
    return MoranSpec(
        families=tuple(fams),
        schedule=schedule_from_dict(d["schedule"]),
        gap_policy=GapPolicy(d["gap_policy"]),
        depth_cap=int(d["depth_cap"]),
    )


def load_spec(path) -> MoranSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return spec_from_dict(json.load(fh))


def save_spec(spec: MoranSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
