"""Entropy oracles for the two side-information models.

A linear source gives each user a matrix slice of a uniform packet vector
over F_p; its subset entropies are matrix ranks, measured in F_p-symbols
and computed exactly.  A general discrete memoryless source is described
by an explicit joint pmf table; entropies are floats in bits.  A raw
entropy table is also accepted, mainly for diagnostics: it lets the
selfcheck command exercise a hand-edited (possibly non-submodular) "H".

Oracles memoize per subset mask; evaluation is pure, so the cache is safe
to share between readers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import field as ff
from .errors import UnitMismatch, ValidationError
from .setfun import DELTA, SetFunction, Value, members

UNIT_BITS = "bits"


def linear_unit(p: int) -> str:
    return f"F_{p}-symbols"


@dataclass(frozen=True)
class LinearSource:
    """Users observe A_i @ W for a uniform packet vector W in F_p^N."""

    m: int
    N: int
    p: int
    matrices: tuple[ff.FieldMatrix, ...]

    def stacked(self, mask: int) -> ff.FieldMatrix:
        return ff.stack([self.matrices[i] for i in members(mask)],
                        cols=self.N, p=self.p)

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(a.rows for a in self.matrices)


@dataclass(frozen=True)
class DmmsSource:
    """Joint pmf over a finite product alphabet; probabilities are floats."""

    alphabets: tuple[int, ...]
    pmf: np.ndarray

    @property
    def m(self) -> int:
        return len(self.alphabets)


@dataclass(frozen=True)
class TableSource:
    """Explicit subset-entropy table, keyed by bitmask over m users."""

    m: int
    entries: dict[int, Value]
    unit: str = UNIT_BITS

    @property
    def exact(self) -> bool:
        return all(not isinstance(v, float) for v in self.entries.values())


Source = Union[LinearSource, DmmsSource, TableSource]


def make_linear_source(matrices, p: int, N: Optional[int] = None) -> LinearSource:
    mats = []
    for rows in matrices:
        if isinstance(rows, ff.FieldMatrix):
            mats.append(rows)
        else:
            mats.append(ff.FieldMatrix.from_rows(rows, p, cols=N))
    if N is None:
        if not mats:
            raise ValidationError("linear source needs at least one user")
        N = mats[0].cols
    return LinearSource(m=len(mats), N=N, p=p, matrices=tuple(mats))


def make_dmms_source(alphabets, pmf) -> DmmsSource:
    alphabets = tuple(int(a) for a in alphabets)
    table = np.asarray(pmf, dtype=float)
    if table.shape != alphabets:
        table = table.reshape(alphabets)
    return DmmsSource(alphabets=alphabets, pmf=table)


def validate(source: Source) -> list[str]:
    """Return a list of violations; empty means the source is usable."""
    problems: list[str] = []
    if isinstance(source, LinearSource):
        if source.m < 1:
            problems.append("no users")
        if not ff.is_prime(source.p) or not 2 <= source.p < ff.MAX_MODULUS:
            problems.append(
                f"modulus {source.p} is not a prime in [2, 2^61); extension "
                f"fields are unsupported, pick a prime p > m instead")
            return problems
        for i, a in enumerate(source.matrices):
            if a.cols != source.N:
                problems.append(f"user {i + 1}: matrix has {a.cols} cols, expected N={source.N}")
            if a.p != source.p:
                problems.append(f"user {i + 1}: matrix modulus {a.p} != {source.p}")
        if not problems:
            r = source.stacked((1 << source.m) - 1).rank()
            if r != source.N:
                problems.append(
                    f"collective observations do not determine W: "
                    f"stacked rank {r} < N = {source.N}")
    elif isinstance(source, DmmsSource):
        if len(source.alphabets) < 1:
            problems.append("no users")
        if any(a < 1 for a in source.alphabets):
            problems.append("alphabet sizes must be >= 1")
        if source.pmf.shape != source.alphabets:
            problems.append(
                f"pmf table shape {source.pmf.shape} != alphabets {source.alphabets}")
            return problems
        if float(source.pmf.min(initial=0.0)) < -DELTA:
            problems.append("pmf has negative entries")
        total = float(source.pmf.sum())
        if abs(total - 1.0) > 1e-6:
            problems.append(f"pmf sums to {total!r}, expected 1")
    elif isinstance(source, TableSource):
        if source.m < 1:
            problems.append("no users")
        full = (1 << source.m) - 1
        missing = [s for s in range(1, full + 1) if s not in source.entries]
        if missing:
            problems.append(f"entropy table is missing {len(missing)} subsets")
        zero = source.entries.get(0, 0)
        if zero != 0:
            problems.append(f"entropy of the empty set must be 0, got {zero}")
    else:
        problems.append(f"unknown source type {type(source).__name__}")
    return problems


class EntropyOracle:
    """Uniform interface answering H(X_S) for subset masks S.

    ``unit`` labels the measurement unit and is propagated to every rate
    quantity derived from the oracle; ``exact`` tells whether values are
    exact rationals (linear sources) or tolerance-compared floats.
    """

    __slots__ = ("source", "m", "unit", "exact", "_cache", "calls")

    def __init__(self, source: Source):
        problems = validate(source)
        if problems:
            raise ValidationError("; ".join(problems))
        self.source = source
        self.m = source.m
        if isinstance(source, LinearSource):
            self.unit = linear_unit(source.p)
            self.exact = True
        elif isinstance(source, DmmsSource):
            self.unit = UNIT_BITS
            self.exact = False
        else:
            self.unit = source.unit
            self.exact = source.exact
        self._cache: dict[int, Value] = {}
        self.calls = 0

    @property
    def full_mask(self) -> int:
        return (1 << self.m) - 1

    def check_unit(self, unit: Optional[str]) -> None:
        if unit is not None and unit != self.unit:
            raise UnitMismatch(f"value in {unit!r} mixed with oracle in {self.unit!r}")

    def entropy(self, mask: int) -> Value:
        self.calls += 1
        if mask == 0:
            return 0 if self.exact else 0.0
        cached = self._cache.get(mask)
        if cached is not None:
            return cached
        value = self._compute(mask)
        self._cache[mask] = value
        return value

    def _compute(self, mask: int) -> Value:
        src = self.source
        if isinstance(src, LinearSource):
            return src.stacked(mask).rank()
        if isinstance(src, TableSource):
            return src.entries[mask]
        keep = members(mask)
        drop = tuple(i for i in range(self.m) if i not in keep)
        marg = src.pmf.sum(axis=drop) if drop else src.pmf
        q = marg.reshape(-1)
        q = q[q > 0.0]
        return float(-(q * np.log2(q)).sum())

    def total(self) -> Value:
        return self.entropy(self.full_mask)

    def cond_entropy(self, mask: int) -> Value:
        """H(X_S | X_{S^c}) computed as H(X_M) - H(X_{S^c})."""
        comp = self.full_mask & ~mask
        return self.total() - self.entropy(comp)

    def oracle_queries(self) -> int:
        """Distinct subsets evaluated so far (cache misses)."""
        return len(self._cache)

    def f_beta(self, beta: Value, unit: Optional[str] = None) -> SetFunction:
        """The shifted cut function f(S) = beta - H(X_M) + H(X_S) for
        nonempty S and f(empty) = 0.

        Intersecting submodular for every beta >= 0; fully submodular once
        beta >= H(X_M).
        """
        self.check_unit(unit)
        total = self.total()
        exact = self.exact and not isinstance(beta, float)

        def fn(mask: int) -> Value:
            if mask == 0:
                return 0 if exact else 0.0
            return beta - total + self.entropy(mask)

        return SetFunction(self.m, fn, exact=exact)

    def entropy_setfunction(self) -> SetFunction:
        return SetFunction(self.m, self.entropy, exact=self.exact)


def oracle_for(source: Source) -> EntropyOracle:
    return EntropyOracle(source)


def dmms_from_linear(src: LinearSource) -> DmmsSource:
    """Push a uniform W through the observation matrices to get the joint
    pmf of the user observations.  Feasible only for tiny p^N."""
    if src.p ** src.N > 1 << 20:
        raise ValidationError("p^N too large to tabulate the joint pmf")
    lengths = src.lengths
    alphabets = tuple(src.p ** l for l in lengths)
    table = np.zeros(alphabets, dtype=float)
    weight = 1.0 / src.p ** src.N
    w = [0] * src.N
    for _ in range(src.p ** src.N):
        idx = []
        for i in range(src.m):
            obs = src.matrices[i].mul_vector(w)
            code = 0
            for sym in obs:
                code = code * src.p + sym
            idx.append(code)
        table[tuple(idx)] += weight
        for pos in range(src.N - 1, -1, -1):
            w[pos] += 1
            if w[pos] < src.p:
                break
            w[pos] = 0
    return DmmsSource(alphabets=alphabets, pmf=table)
