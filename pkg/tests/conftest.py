"""Shared test helpers: seeded source corpora and independent oracles.

The oracles here (exact vertex enumeration, Fraction-valued Gaussian
elimination, partition enumeration) deliberately avoid the library's own
solver paths so they can serve as ground truth.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from omniex import (
    EntropyOracle,
    FieldMatrix,
    LinearSource,
    RateVector,
    make_linear_source,
    stack,
    verify_feasible,
)


def random_matrix_rows(rng: random.Random, rows: int, cols: int, p: int):
    return [[rng.randrange(p) for _ in range(cols)] for _ in range(rows)]


def random_linear_source(rng: random.Random, m: int | None = None,
                         n_packets: int | None = None, p: int | None = None,
                         m_max: int = 6, n_max: int = 8,
                         primes=(5, 7, 11)) -> LinearSource:
    """Random linear source with guaranteed full collective rank."""
    m = m if m is not None else rng.randint(2, m_max)
    n_packets = n_packets if n_packets is not None else rng.randint(2, n_max)
    p = p if p is not None else rng.choice(primes)
    mats = [random_matrix_rows(rng, rng.randint(1, n_packets), n_packets, p)
            for _ in range(m)]

    def collective_rank(matrices):
        parts = [FieldMatrix.from_rows(r, p, cols=n_packets) for r in matrices]
        return stack(parts, cols=n_packets, p=p).rank()

    # Top up random users with unit rows until W is determined collectively.
    r = collective_rank(mats)
    while r < n_packets:
        for c in range(n_packets):
            unit = [0] * n_packets
            unit[c] = 1
            probe = [list(rows) for rows in mats]
            probe[rng.randrange(m)].append(unit)
            pr = collective_rank(probe)
            if pr > r:
                mats, r = probe, pr
                break
    return make_linear_source(mats, p=p, N=n_packets)


def corpus(seed: int, count: int, **kwargs) -> list[LinearSource]:
    rng = random.Random(seed)
    return [random_linear_source(rng, **kwargs) for _ in range(count)]


# ---------------------------------------------------------------------------
# Exact rational linear algebra (independent of omniex.field)
# ---------------------------------------------------------------------------

def solve_unique_fractions(a_rows: list[list[Fraction]], rhs: list[Fraction]
                           ) -> list[Fraction] | None:
    """Solve a square exact system; None when singular."""
    n = len(a_rows)
    work = [list(map(Fraction, row)) + [Fraction(b)]
            for row, b in zip(a_rows, rhs)]
    for c in range(n):
        pivot = next((r for r in range(c, n) if work[r][c] != 0), None)
        if pivot is None:
            return None
        work[c], work[pivot] = work[pivot], work[c]
        inv = 1 / work[c][c]
        work[c] = [x * inv for x in work[c]]
        for r in range(n):
            if r != c and work[r][c] != 0:
                f = work[r][c]
                work[r] = [x - f * y for x, y in zip(work[r], work[c])]
    return [work[r][n] for r in range(n)]


def fraction_matrix_rank(rows: list[list[Fraction]]) -> int:
    work = [list(map(Fraction, r)) for r in rows]
    rank = 0
    cols = len(work[0]) if work else 0
    for c in range(cols):
        pivot = next((r for r in range(rank, len(work)) if work[r][c] != 0), None)
        if pivot is None:
            continue
        work[rank], work[pivot] = work[pivot], work[rank]
        inv = 1 / work[rank][c]
        work[rank] = [x * inv for x in work[rank]]
        for r in range(len(work)):
            if r != rank and work[r][c] != 0:
                f = work[r][c]
                work[r] = [x - f * y for x, y in zip(work[r], work[rank])]
        rank += 1
    return rank


def indicator_row(mask: int, m: int) -> list[Fraction]:
    return [Fraction(1 if mask >> j & 1 else 0) for j in range(m)]


def region_vertices(oracle: EntropyOracle) -> list[tuple[Fraction, ...]]:
    """All vertices of {R : R(S) >= H(X_S | X_{S^c})} by enumerating
    m-subsets of tight cut constraints."""
    m = oracle.m
    full = oracle.full_mask
    subsets = list(range(1, full))
    verts: set[tuple[Fraction, ...]] = set()
    for combo in itertools.combinations(subsets, m):
        rows = [indicator_row(s, m) for s in combo]
        rhs = [Fraction(oracle.cond_entropy(s)) for s in combo]
        x = solve_unique_fractions(rows, rhs)
        if x is None:
            continue
        cand = RateVector(values=tuple(x), unit=oracle.unit)
        if all(v >= 0 for v in x) and verify_feasible(oracle, cand):
            verts.add(tuple(x))
    return sorted(verts)


def min_cost_by_vertex_enumeration(oracle: EntropyOracle, alpha
                                   ) -> tuple[Fraction, tuple[Fraction, ...]]:
    best = None
    best_v = None
    for v in region_vertices(oracle):
        cost = sum(Fraction(a) * x for a, x in zip(alpha, v))
        if best is None or cost < best:
            best, best_v = cost, v
    assert best is not None, "region has no vertices"
    return best, best_v


def slice_vertices(oracle: EntropyOracle, beta) -> list[tuple[Fraction, ...]]:
    """Vertices of the budget slice {R(M) = beta} of the rate region."""
    m = oracle.m
    full = oracle.full_mask
    subsets = list(range(1, full))
    verts: set[tuple[Fraction, ...]] = set()
    for combo in itertools.combinations(subsets, m - 1):
        rows = [indicator_row(s, m) for s in combo]
        rows.append(indicator_row(full, m))
        rhs = [Fraction(oracle.cond_entropy(s)) for s in combo]
        rhs.append(Fraction(beta))
        x = solve_unique_fractions(rows, rhs)
        if x is None:
            continue
        cand = RateVector(values=tuple(x), unit=oracle.unit)
        if all(v >= 0 for v in x) and verify_feasible(oracle, cand):
            verts.add(tuple(x))
    return sorted(verts)


def partitions_of(elems: tuple[int, ...]):
    """All set partitions, as tuples of tuples."""
    if not elems:
        yield ()
        return
    first, rest = elems[0], elems[1:]
    for sub in partitions_of(rest):
        for k in range(len(sub)):
            yield sub[:k] + ((first,) + sub[k],) + sub[k + 1:]
        yield ((first,),) + sub


def figure1_source() -> LinearSource:
    return make_linear_source(
        [[[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]],
         [[1, 0, 0, 0], [0, 0, 1, 0]],
         [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1]]], p=5)


def example1_source(p: int = 5) -> LinearSource:
    return make_linear_source(
        [[[1, 0, 0], [0, 1, 0]],
         [[1, 0, 0], [0, 0, 1]],
         [[0, 1, 0], [0, 0, 1]]], p=p)
