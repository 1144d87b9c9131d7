"""Optimal rate allocation for broadcast data exchange.

The cut-set region {R : R(S) >= H(X_S | X_{S^c})} is optimized through its
dual polyhedron: for a total budget beta the shifted cut function
f(S) = beta - H(X_{S^c} | X_S) is intersecting submodular, and a modified
greedy sweep (one constrained submodular minimization per user) produces a
vertex of P(f, <=) whose coordinate sum equals the Dilworth truncation
value g(M, beta).

Three layers build on that sweep:

* the minimum sum rate is the smallest beta with g(M, beta) = beta, found
  by intersecting successive linear segments of the concave piecewise
  linear g (at most m steps);
* the weighted objective h(beta) = min sum(alpha_i R_i) over the budget-
  beta slice is convex piecewise linear; each sweep also reports its local
  segment R_i = b_i * beta + c_i, so the minimum is located by slope-sign
  bracketing plus one exact line intersection;
* block-length-n solutions round beta to the nearest feasible multiples of
  1/n and keep the cheaper one.

Every sweep records how many candidate sets its inner minimizations
evaluated, which callers use as a complexity regression ceiling.

All functions here are pure computations over an immutable oracle (only
its memo cache mutates, safely for concurrent readers), so independent
solver calls may run concurrently on the same oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .errors import (
    DimensionMismatch,
    InfeasibleBeta,
    InvalidN,
    NonConvergence,
    NonTermination,
    TooLarge,
)
from .setfun import (
    DELTA,
    SetFunction,
    Value,
    bit,
    check_costs,
    members,
    iter_submasks,
    order_by_weight,
    sfm_constrained,
    value_eq,
    value_le,
    value_lt,
)
from .sources import EntropyOracle

MAX_WEIGHTED_ITERATIONS = 10_000
FEASIBILITY_CAP = 20
PARTITION_FORMULA_CAP = 12


@dataclass(frozen=True)
class LinearSegment:
    """Affine map R_i = b_i * beta + c_i valid on one segment.

    sum(b) equals the size of the optimal partition at beta (the local
    slope of g); on the feasible range, where the partition is trivial,
    every segment therefore satisfies sum(b) == 1.
    """

    b: tuple[int, ...]
    c: tuple[Value, ...]

    def rates_at(self, beta: Value) -> tuple[Value, ...]:
        return tuple(bi * beta + ci for bi, ci in zip(self.b, self.c))

    def slope(self, alpha: Sequence[Value]) -> Value:
        total = 0
        for a, bi in zip(alpha, self.b):
            total = total + a * bi
        return total

    def intercept(self, alpha: Sequence[Value]) -> Value:
        total = 0
        for a, ci in zip(alpha, self.c):
            total = total + a * ci
        return total


@dataclass(frozen=True)
class RateVector:
    """Per-user broadcast rates with a tracked common denominator."""

    values: tuple[Value, ...]
    denominator: int = 1
    unit: str = ""

    @property
    def m(self) -> int:
        return len(self.values)

    def total(self) -> Value:
        total = 0
        for v in self.values:
            total = total + v
        return total

    def of(self, mask: int) -> Value:
        total = 0
        for i in members(mask):
            total = total + self.values[i]
        return total


@dataclass(frozen=True)
class PartitionResult:
    """A partition of the user set (block masks, ordered by lowest member)
    together with the partition value sum(f(V, beta))."""

    blocks: tuple[int, ...]
    g_value: Value

    @property
    def size(self) -> int:
        return len(self.blocks)

    def as_sets(self) -> tuple[tuple[int, ...], ...]:
        return tuple(members(b) for b in self.blocks)


@dataclass(frozen=True)
class ModifiedEdmondResult:
    z: tuple[Value, ...]
    segment: LinearSegment
    tight_sets: tuple[int, ...]
    partition: PartitionResult
    g_value: Value
    evaluations: int


@dataclass(frozen=True)
class SumRateResult:
    value: Value
    rates: RateVector
    partition: PartitionResult
    iterations: int
    evaluations: int


@dataclass(frozen=True)
class HPoint:
    beta: Value
    value: Value
    rates: RateVector
    segment: LinearSegment
    evaluations: int


@dataclass(frozen=True)
class WeightedResult:
    beta_star: Value
    rates: RateVector
    cost: Value
    segment: LinearSegment
    iterations: int
    evaluations: int


@dataclass(frozen=True)
class IlpResult:
    rates: RateVector
    cost: Value
    beta: Value
    gap_bound: Value


def _zero(exact: bool) -> Value:
    return 0 if exact else 0.0


def _sorted_blocks(blocks: Sequence[int]) -> tuple[int, ...]:
    return tuple(sorted(blocks, key=lambda mask: (mask & -mask).bit_length()))


def _merge_block(blocks: list[int], new: int) -> None:
    merged = new
    keep = []
    for blk in blocks:
        if blk & new:
            merged |= blk
        else:
            keep.append(blk)
    keep.append(merged)
    blocks[:] = keep


def modified_edmond(oracle: EntropyOracle, beta: Value,
                    alpha: Optional[Sequence[Value]] = None,
                    ordering: str = "descending",
                    unit: Optional[str] = None) -> ModifiedEdmondResult:
    """One greedy sweep over f(., beta) with symbolic segment tracking.

    Visits users ordered by weight (descending for maximization over
    P(f,<=), ascending for minimization over the base polyhedron) and sets
    Z_j to the constrained minimum of f(S, beta) - Z(S) over j in S within
    the visited prefix.  Each Z_j is recorded as an affine function of
    beta, taken from the maximal minimizer, so the result carries the
    local linear segment of g / h alongside the numbers.

    Ties in the inner minimization are resolved toward the union of all
    minimizers, which keeps the induced partition maximally merged and
    deterministic.
    """
    oracle.check_unit(unit)
    if value_lt(beta, 0, oracle.exact and not isinstance(beta, float)):
        raise InfeasibleBeta(f"beta = {beta} must be nonnegative")
    m = oracle.m
    if alpha is None:
        alpha = (1,) * m
    alpha = check_costs(alpha, m)
    if ordering == "descending":
        order = order_by_weight(alpha, descending=True)
    elif ordering == "ascending":
        order = order_by_weight(alpha, descending=False)
    else:
        raise ValueError(f"ordering must be 'descending' or 'ascending', got {ordering!r}")

    exact = oracle.exact and not isinstance(beta, float)
    total = oracle.total()
    zero = _zero(exact)
    b_coef = [0] * m
    c_coef: list[Value] = [zero] * m
    z: list[Value] = [zero] * m
    tight: list[int] = []
    blocks: list[int] = []
    evaluations = 0
    seen = 0

    for j in order:
        best: Value | None = None
        union = 0
        for sub in iter_submasks(seen):
            s = sub | bit(j)
            bb = 1
            cc = oracle.entropy(s) - total
            for k in members(sub):
                bb -= b_coef[k]
                cc = cc - c_coef[k]
            v = bb * beta + cc
            evaluations += 1
            if best is None:
                best, union = v, s
            elif exact:
                if v < best:
                    best, union = v, s
                elif v == best:
                    union |= s
            else:
                if v < best - DELTA:
                    best, union = v, s
                else:
                    if v <= best + DELTA:
                        union |= s
                    if v < best:
                        best = v
        rest = union & ~bit(j)
        bu = 1
        cu = oracle.entropy(union) - total
        for k in members(rest):
            bu -= b_coef[k]
            cu = cu - c_coef[k]
        vu = bu * beta + cu
        if exact and vu != best:
            raise NonConvergence(
                "union of minimizers is not a minimizer; the oracle violates "
                "intersecting submodularity")
        b_coef[j], c_coef[j] = bu, cu
        z[j] = vu
        tight.append(union)
        _merge_block(blocks, union)
        seen |= bit(j)

    g_value = zero
    for v in z:
        g_value = g_value + v
    partition = PartitionResult(blocks=_sorted_blocks(blocks), g_value=g_value)
    segment = LinearSegment(b=tuple(b_coef), c=tuple(c_coef))
    return ModifiedEdmondResult(
        z=tuple(z), segment=segment, tight_sets=tuple(tight),
        partition=partition, g_value=g_value, evaluations=evaluations)


def modified_edmond_setfn(f: SetFunction, alpha: Sequence[Value],
                          ordering: str = "descending",
                          ) -> tuple[tuple[Value, ...], tuple[int, ...], PartitionResult, int]:
    """Sweep for a raw intersecting-submodular set function (no beta)."""
    m = f.m
    alpha = check_costs(alpha, m)
    order = order_by_weight(alpha, descending=(ordering == "descending"))
    z: list[Value] = [_zero(f.exact)] * m
    tight: list[int] = []
    blocks: list[int] = []
    evaluations = 0
    seen = 0
    for j in order:
        val, minimizer = sfm_constrained(f, z, j, seen | bit(j))
        evaluations += 1 << bin(seen).count("1")
        z[j] = val
        tight.append(minimizer)
        _merge_block(blocks, minimizer)
        seen |= bit(j)
    g_value = _zero(f.exact)
    for v in z:
        g_value = g_value + v
    partition = PartitionResult(blocks=_sorted_blocks(blocks), g_value=g_value)
    return tuple(z), tuple(tight), partition, evaluations


def optimal_partition(oracle: EntropyOracle, beta: Value) -> PartitionResult:
    """Partition of the user set minimizing sum(f(V, beta)) over blocks.

    Built from the greedy sweep by merging each step's minimizer with the
    blocks it touches; the value equals the Dilworth truncation g(M, beta).
    """
    return modified_edmond(oracle, beta).partition


def rco_sum_rate(oracle: EntropyOracle) -> SumRateResult:
    """Minimum sum rate for omniscience plus an achieving rate vector.

    Walks the concave piecewise linear g(M, beta) from beta = 0: each step
    intersects the current segment's line with the 45-degree line, which
    lands on a segment strictly to the right, so at most m steps reach the
    breakpoint where the optimal partition collapses to {M}.  Returns the
    last non-trivial partition, whose size determines the exact
    denominator of the result.
    """
    exact = oracle.exact
    beta: Value = _zero(exact)
    evaluations = 0
    iterations = 0
    last_nontrivial: Optional[PartitionResult] = None
    result = modified_edmond(oracle, beta)
    evaluations += result.evaluations
    while result.partition.size > 1:
        iterations += 1
        if iterations > oracle.m:
            raise NonTermination(
                f"sum-rate iteration exceeded {oracle.m} steps; the entropy "
                f"oracle is not behaving submodularly")
        last_nontrivial = result.partition
        # Line intersection with the 45-degree segment: the current segment
        # of g has value |P|*beta - sum over blocks of H(X_{S^c} | X_S).
        num = _zero(exact)
        for blk in result.partition.blocks:
            num = num + (oracle.total() - oracle.entropy(blk))
        k = result.partition.size
        beta = Fraction(num) / (k - 1) if exact else num / (k - 1)
        result = modified_edmond(oracle, beta)
        evaluations += result.evaluations

    if last_nontrivial is None:
        last_nontrivial = result.partition
    final = modified_edmond(oracle, beta, ordering="ascending")
    evaluations += final.evaluations
    rates = RateVector(values=final.z, denominator=1, unit=oracle.unit)
    return SumRateResult(value=beta, rates=rates, partition=last_nontrivial,
                         iterations=iterations, evaluations=evaluations)


def rco_partition_formula(oracle: EntropyOracle) -> Value:
    """Independent minimum-sum-rate oracle by partition enumeration:
    H(X_M) - min over partitions with at least two blocks of
    (sum of block entropies - H(X_M)) / (number of blocks - 1).
    """
    m = oracle.m
    if m > PARTITION_FORMULA_CAP:
        raise TooLarge(f"partition enumeration capped at m={PARTITION_FORMULA_CAP}")
    total = oracle.total()
    best: Value | None = None

    def recurse(i: int, blocks: list[int]):
        nonlocal best
        if i == m:
            if len(blocks) < 2:
                return
            s = _zero(oracle.exact)
            for blk in blocks:
                s = s + oracle.entropy(blk)
            diff = s - total
            if oracle.exact:
                cand = Fraction(diff) / (len(blocks) - 1)
            else:
                cand = diff / (len(blocks) - 1)
            if best is None or cand < best:
                best = cand
            return
        e = bit(i)
        for k in range(len(blocks)):
            blocks[k] |= e
            recurse(i + 1, blocks)
            blocks[k] &= ~e
        blocks.append(e)
        recurse(i + 1, blocks)
        blocks.pop()

    if m == 1:
        return _zero(oracle.exact)
    recurse(1, [bit(0)])
    assert best is not None
    return total - best


def h_eval(oracle: EntropyOracle, alpha: Sequence[Value], beta: Value,
           unit: Optional[str] = None) -> HPoint:
    """Minimum weighted cost at total rate exactly beta.

    Runs the ascending-weight sweep; the output lies in the budget-beta
    base polyhedron iff its coordinate sum equals beta, which fails
    exactly when beta is below the minimum sum rate.
    """
    result = modified_edmond(oracle, beta, alpha, ordering="ascending", unit=unit)
    exact = oracle.exact and not isinstance(beta, float)
    if not value_eq(result.g_value, beta, exact):
        raise InfeasibleBeta(
            f"total rate {beta} is below the minimum sum rate "
            f"(achievable maximum is {result.g_value})")
    alpha = check_costs(alpha, oracle.m)
    cost = _zero(exact)
    for a, r in zip(alpha, result.z):
        cost = cost + a * r
    rates = RateVector(values=result.z, denominator=1, unit=oracle.unit)
    return HPoint(beta=beta, value=cost, rates=rates, segment=result.segment,
                  evaluations=result.evaluations)


def minimize_weighted(oracle: EntropyOracle, alpha: Sequence[Value],
                      tolerance: float = 1e-9,
                      rco: Optional[SumRateResult] = None) -> WeightedResult:
    """Minimize the convex piecewise linear h(beta) over the bracket
    [minimum sum rate, H(X_M)] by slope-sign bracketing.

    Each probe returns the local segment, so the candidate minimizer is
    the exact intersection of the bracketing segment lines; the loop stops
    once h at the intersection matches the intersection value, which
    certifies a kink with a sign change.  Exact for rational oracles; for
    float oracles the bracket is additionally stopped at ``tolerance``
    width and the better endpoint returned.
    """
    alpha = check_costs(alpha, oracle.m)
    if rco is None:
        rco = rco_sum_rate(oracle)
    evaluations = rco.evaluations
    exact = oracle.exact
    lo = rco.value
    hi = oracle.total()

    lo_pt = h_eval(oracle, alpha, lo)
    evaluations += lo_pt.evaluations
    lo_slope = lo_pt.segment.slope(alpha)
    if not value_lt(lo_slope, 0, exact) or value_eq(lo, hi, exact):
        return WeightedResult(beta_star=lo, rates=lo_pt.rates, cost=lo_pt.value,
                              segment=lo_pt.segment, iterations=0,
                              evaluations=evaluations)

    hi_pt = h_eval(oracle, alpha, hi)
    evaluations += hi_pt.evaluations
    hi_slope = hi_pt.segment.slope(alpha)
    if value_le(hi_slope, 0, exact):
        # h is nonincreasing on the whole bracket.
        return WeightedResult(beta_star=hi, rates=hi_pt.rates, cost=hi_pt.value,
                              segment=hi_pt.segment, iterations=0,
                              evaluations=evaluations)

    iterations = 0
    while True:
        iterations += 1
        if iterations > MAX_WEIGHTED_ITERATIONS:
            raise NonConvergence("weighted minimization exceeded its iteration budget")
        lo_slope = lo_pt.segment.slope(alpha)
        hi_slope = hi_pt.segment.slope(alpha)
        lo_int = lo_pt.segment.intercept(alpha)
        hi_int = hi_pt.segment.intercept(alpha)
        denom = lo_slope - hi_slope
        if exact:
            cross = Fraction(hi_int - lo_int) / Fraction(denom)
        else:
            cross = (hi_int - lo_int) / denom
        if cross < lo or cross > hi:
            cross = min(max(cross, lo), hi)
        predicted = lo_slope * cross + lo_int

        if not exact and (hi - lo) <= tolerance:
            best = lo_pt if lo_pt.value <= hi_pt.value else hi_pt
            return WeightedResult(beta_star=best.beta, rates=best.rates,
                                  cost=best.value, segment=best.segment,
                                  iterations=iterations, evaluations=evaluations)

        probe = h_eval(oracle, alpha, cross)
        evaluations += probe.evaluations
        if value_eq(probe.value, predicted, exact):
            # Two supporting lines of opposite slope meet on the graph of h:
            # this kink is the global minimum.
            return WeightedResult(beta_star=cross, rates=probe.rates,
                                  cost=probe.value, segment=probe.segment,
                                  iterations=iterations, evaluations=evaluations)
        if value_lt(probe.segment.slope(alpha), 0, exact):
            lo, lo_pt = cross, probe
        else:
            hi, hi_pt = cross, probe


def _snap_scaled(value: Value, n: int, exact: bool) -> Value:
    """n * value with float noise snapped to the nearest integer."""
    scaled = value * n
    if not exact:
        nearest = round(scaled)
        if abs(scaled - nearest) <= DELTA * max(1.0, abs(nearest)):
            return nearest
    return scaled


def ilp_rates(oracle: EntropyOracle, alpha: Sequence[Value], n: int,
              rco: Optional[SumRateResult] = None,
              tolerance: float = 1e-9) -> IlpResult:
    """Best rate vector whose entries are multiples of 1/n.

    Restricting the budget to multiples of 1/n makes every sweep output a
    multiple of 1/n as well, so it suffices to compare h at the floor and
    ceiling roundings of the unconstrained optimum, clamped upward to the
    rounded-up minimum sum rate.  The cost exceeds the unconstrained
    optimum by at most max(alpha)/n.
    """
    if not isinstance(n, int) or n < 1:
        raise InvalidN(f"block length n must be a positive integer, got {n!r}")
    alpha = check_costs(alpha, oracle.m)
    if rco is None:
        rco = rco_sum_rate(oracle)
    weighted = minimize_weighted(oracle, alpha, tolerance=tolerance, rco=rco)
    exact = oracle.exact

    lower_scaled = _snap_scaled(rco.value, n, exact)
    lower = Fraction(math.ceil(lower_scaled), n) if exact else math.ceil(lower_scaled) / n
    star_scaled = _snap_scaled(weighted.beta_star, n, exact)
    if exact:
        candidates = {Fraction(math.floor(star_scaled), n),
                      Fraction(math.ceil(star_scaled), n)}
    else:
        candidates = {math.floor(star_scaled) / n, math.ceil(star_scaled) / n}
    candidates = sorted({max(c, lower) for c in candidates})

    best: Optional[HPoint] = None
    for cand in candidates:
        pt = h_eval(oracle, alpha, cand)
        if best is None or value_lt(pt.value, best.value, exact) or (
                value_eq(pt.value, best.value, exact) and cand < best.beta):
            best = pt
    assert best is not None
    if exact:
        for v in best.rates.values:
            if (n * Fraction(v)).denominator != 1:
                raise NonConvergence(f"rate {v} is not a multiple of 1/{n}")
    rates = RateVector(values=best.rates.values, denominator=n, unit=oracle.unit)
    amax = max(alpha)
    gap_bound = amax / n if isinstance(amax, float) else Fraction(amax) / n
    return IlpResult(rates=rates, cost=best.value, beta=best.beta,
                     gap_bound=gap_bound)


def verify_feasible(oracle: EntropyOracle, rates: RateVector) -> bool:
    """Check R(S) >= H(X_S | X_{S^c}) for every nonempty proper subset."""
    if oracle.m > FEASIBILITY_CAP:
        raise TooLarge(f"feasibility check capped at m={FEASIBILITY_CAP}")
    if rates.m != oracle.m:
        raise DimensionMismatch(
            f"rate vector has {rates.m} entries, expected {oracle.m}")
    exact = oracle.exact
    full = oracle.full_mask
    for s in range(1, full):
        if not value_le(oracle.cond_entropy(s), rates.of(s), exact):
            return False
    return True
