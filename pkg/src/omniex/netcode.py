"""Explicit finite-field transmission schemes for linear sources.

Given integer per-user transmission counts n*R_i, each user broadcasts
linear combinations of its own block-expanded observations; omniscience
holds iff every receiver's side information stacked with all received
broadcasts has full column rank n*N.

Construction draws the coefficient matrices uniformly at random with a
seeded generator and verifies deterministically, retrying up to a budget;
for tiny instances over small fields an exhaustive coefficient search is
the fallback.  The classical multicast conversion (super node, sender and
relay nodes, expanded transfer matrices) is kept as an independent
verification view: the determinant of a completed expanded transfer
matrix is nonzero exactly when the corresponding receiver can decode.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from . import field as ff
from .errors import (
    ConstraintViolation,
    ConstructionFailed,
    DimensionMismatch,
    FieldTooSmall,
    InconsistentObservations,
    InfeasibleRates,
    InvalidN,
    NonIntegerRates,
    UnknownReceiver,
)
from .rates import RateVector, verify_feasible
from .sources import EntropyOracle, LinearSource

EXHAUSTIVE_SLOT_CAP = 16


def _integer_tx_counts(rates: RateVector, n: int, m: int) -> tuple[int, ...]:
    if not isinstance(n, int) or n < 1:
        raise InvalidN(f"block length n must be a positive integer, got {n!r}")
    if rates.m != m:
        raise DimensionMismatch(f"rate vector has {rates.m} entries, expected {m}")
    counts = []
    for i, r in enumerate(rates.values):
        scaled = Fraction(r) * n
        if scaled.denominator != 1 or scaled < 0:
            raise NonIntegerRates(f"n*R_{i + 1} = {scaled} is not a nonnegative integer")
        counts.append(int(scaled))
    return tuple(counts)


@dataclass(frozen=True)
class MulticastNetwork:
    """Multicast model of the exchange: a super node S feeding sender
    nodes s_i, relay nodes t_i enforcing the broadcast constraint, and
    receiver nodes r_i.  Capacities are in F_p symbols per n-block."""

    m: int
    n: int
    N: int
    p: int
    lengths: tuple[int, ...]       # observation rows per user (per instance)
    tx: tuple[int, ...]            # n * R_i, integers

    @property
    def node_count(self) -> int:
        return 3 * self.m + 1

    def edges(self) -> list[tuple[str, int, Optional[int], int]]:
        """Deterministic edge list as (kind, i, j, capacity)."""
        out: list[tuple[str, int, Optional[int], int]] = []
        for i in range(self.m):
            out.append(("source", i, None, self.n * self.lengths[i]))
            out.append(("side", i, None, self.n * self.lengths[i]))
            out.append(("relay_in", i, None, self.tx[i]))
            for j in range(self.m):
                if j != i:
                    out.append(("relay_out", i, j, self.tx[i]))
        return out

    def unit_edges(self) -> list[tuple[str, int, Optional[int], int]]:
        """One entry per F_p symbol: (kind, i, j, slot-within-edge)."""
        out: list[tuple[str, int, Optional[int], int]] = []
        for kind, i, j, cap in self.edges():
            out.extend((kind, i, j, k) for k in range(cap))
        return out


def build_network(src: LinearSource, rates: RateVector, n: int) -> MulticastNetwork:
    """Multicast network for the given integer rate point.

    Edge capacities: S->s_i and s_i->r_i carry the full observation block
    n*l_i, s_i->t_i carries the n*R_i broadcast symbols, and t_i->r_j
    copies them to every other receiver.  Zero-rate users keep their relay
    node with empty edges so indexing stays uniform.
    """
    tx = _integer_tx_counts(rates, n, src.m)
    oracle = EntropyOracle(src)
    if not verify_feasible(oracle, rates):
        raise InfeasibleRates("rate vector violates a cut constraint")
    return MulticastNetwork(m=src.m, n=n, N=src.N, p=src.p,
                            lengths=src.lengths, tx=tx)


@dataclass(frozen=True)
class TransmissionScheme:
    """Per-user coefficient matrices over the block-expanded observations.

    User i broadcasts C_i @ (I_n (x) A_i) @ W, i.e. C_i has one row per
    transmitted symbol and one column per observed symbol, so every
    broadcast is a function of that user's own observations only.
    """

    n: int
    p: int
    coefficients: tuple[ff.FieldMatrix, ...]

    @property
    def m(self) -> int:
        return len(self.coefficients)

    @property
    def tx(self) -> tuple[int, ...]:
        return tuple(c.rows for c in self.coefficients)

    def check_source(self, src: LinearSource) -> None:
        if self.m != src.m or self.p != src.p:
            raise DimensionMismatch("scheme does not match the source shape")
        for i, c in enumerate(self.coefficients):
            want = self.n * src.matrices[i].rows
            if c.cols != want or c.p != src.p:
                raise DimensionMismatch(
                    f"user {i + 1}: coefficient matrix is {c.rows}x{c.cols} "
                    f"mod {c.p}, expected {c.rows}x{want} mod {src.p}")

    def broadcast_matrix(self, src: LinearSource, i: int) -> ff.FieldMatrix:
        """Map from the full packet block W to user i's broadcast symbols."""
        return self.coefficients[i].mul(ff.kron_block(self.n, src.matrices[i]))

    def broadcast_matrices(self, src: LinearSource) -> tuple[ff.FieldMatrix, ...]:
        return tuple(self.broadcast_matrix(src, i) for i in range(self.m))


def _receiver_stack(src: LinearSource, scheme: TransmissionScheme,
                    receiver: int) -> ff.FieldMatrix:
    parts = [ff.kron_block(scheme.n, src.matrices[receiver])]
    parts.extend(scheme.broadcast_matrix(src, i)
                 for i in range(src.m) if i != receiver)
    return ff.stack(parts, cols=scheme.n * src.N, p=src.p)


def receiver_ranks(src: LinearSource, scheme: TransmissionScheme
                   ) -> list[tuple[int, int]]:
    """Per receiver: (achieved stacked rank, required rank n*N)."""
    scheme.check_source(src)
    need = scheme.n * src.N
    return [(_receiver_stack(src, scheme, j).rank(), need) for j in range(src.m)]


def verify_omniscience(src: LinearSource, scheme: TransmissionScheme) -> bool:
    """True iff every receiver's side information plus received broadcasts
    determines the whole packet block."""
    return all(got == need for got, need in receiver_ranks(src, scheme))


def user_observation(src: LinearSource, i: int, w: Sequence[int], n: int
                     ) -> tuple[int, ...]:
    """X_i over an n-block: (I_n (x) A_i) @ W."""
    return ff.kron_block(n, src.matrices[i]).mul_vector(w)


def broadcast_symbols(src: LinearSource, scheme: TransmissionScheme,
                      w: Sequence[int]) -> list[tuple[int, ...]]:
    return [scheme.broadcast_matrix(src, i).mul_vector(w) for i in range(src.m)]


def decode(src: LinearSource, scheme: TransmissionScheme, receiver: int,
           side_info: Sequence[int], broadcasts: Sequence[Sequence[int]]
           ) -> tuple[int, ...]:
    """Recover the packet block W at one receiver.

    ``side_info`` is the receiver's own observation block and
    ``broadcasts`` the per-user broadcast symbol vectors.  Raises
    InconsistentObservations when the equations are contradictory or do
    not pin W down uniquely (tampered or truncated inputs).
    """
    scheme.check_source(src)
    if not 0 <= receiver < src.m:
        raise UnknownReceiver(f"receiver {receiver} outside 1..{src.m}")
    if len(broadcasts) != src.m:
        raise DimensionMismatch(f"need {src.m} broadcast vectors, got {len(broadcasts)}")
    parts = [ff.kron_block(scheme.n, src.matrices[receiver])]
    rhs: list[int] = list(side_info)
    if len(side_info) != parts[0].rows:
        raise DimensionMismatch(
            f"side information has {len(side_info)} symbols, expected {parts[0].rows}")
    for i in range(src.m):
        if i == receiver:
            continue
        t = scheme.broadcast_matrix(src, i)
        if len(broadcasts[i]) != t.rows:
            raise DimensionMismatch(
                f"user {i + 1} broadcast has {len(broadcasts[i])} symbols, "
                f"expected {t.rows}")
        parts.append(t)
        rhs.extend(broadcasts[i])
    system = ff.stack(parts, cols=scheme.n * src.N, p=src.p)
    if system.rank() < scheme.n * src.N:
        raise InconsistentObservations(
            "received symbols do not determine the packet block uniquely")
    solution = system.solve(rhs)
    if solution is None:
        raise InconsistentObservations("received symbols are contradictory")
    return solution


def _random_scheme(src: LinearSource, tx: Sequence[int], n: int,
                   rng: random.Random) -> TransmissionScheme:
    coeffs = [ff.FieldMatrix.random(tx[i], n * src.matrices[i].rows, src.p, rng)
              for i in range(src.m)]
    return TransmissionScheme(n=n, p=src.p, coefficients=tuple(coeffs))


def _repeat_scheme(src: LinearSource, base: TransmissionScheme, times: int
                   ) -> TransmissionScheme:
    """Repeat a scheme built for a shorter block: the coefficient matrix
    becomes block diagonal over the repetitions."""
    if times == 1:
        return base
    coeffs = []
    for i in range(src.m):
        c = base.coefficients[i]
        coeffs.append(ff.kron_block(times, c))
    return TransmissionScheme(n=base.n * times, p=base.p, coefficients=tuple(coeffs))


def construct_code(src: LinearSource, rates: RateVector, n: int,
                   seed: int = 0, max_tries: int = 64) -> TransmissionScheme:
    """Find a transmission scheme achieving omniscience at the given rates.

    Requires p > m (with p <= m some simultaneous completions provably do
    not exist).  Strategy: divide out gcd(n*R_1, .., n*R_m, n) and build at
    the reduced block length, drawing every coefficient uniformly at
    random and verifying all receivers, with up to ``max_tries``
    redraws.  On exhaustion, instances over small fields with at most
    EXHAUSTIVE_SLOT_CAP coefficients are retried by exhaustive
    enumeration; anything else fails, which signals either infeasible
    rates or astronomically bad luck.
    """
    if src.p <= src.m:
        raise FieldTooSmall(
            f"field size {src.p} must exceed the number of users {src.m}")
    tx = _integer_tx_counts(rates, n, src.m)
    if max_tries < 1:
        raise ConstructionFailed("max_tries must be at least 1")

    g = math.gcd(n, *tx) if any(tx) else n
    reduced_n = n // g
    reduced_tx = tuple(t // g for t in tx)

    rng = random.Random(seed)
    for _ in range(max_tries):
        scheme = _random_scheme(src, reduced_tx, reduced_n, rng)
        if verify_omniscience(src, scheme):
            return _repeat_scheme(src, scheme, g)

    slots = sum(reduced_tx[i] * reduced_n * src.matrices[i].rows
                for i in range(src.m))
    if src.p <= 2 * src.m and slots <= EXHAUSTIVE_SLOT_CAP:
        for assignment in itertools.product(range(src.p), repeat=slots):
            coeffs = []
            pos = 0
            for i in range(src.m):
                count = reduced_tx[i] * reduced_n * src.matrices[i].rows
                coeffs.append(ff.FieldMatrix(
                    reduced_tx[i], reduced_n * src.matrices[i].rows, src.p,
                    assignment[pos:pos + count]))
                pos += count
            scheme = TransmissionScheme(n=reduced_n, p=src.p,
                                        coefficients=tuple(coeffs))
            if verify_omniscience(src, scheme):
                return _repeat_scheme(src, scheme, g)
    raise ConstructionFailed(
        f"no valid scheme after {max_tries} random draws; the rate vector "
        f"is most likely infeasible")


@dataclass(frozen=True)
class GreedySelection:
    """Result of the greedy per-receiver row selection."""

    ordering: tuple[int, ...]
    selections: tuple[tuple[int, ...], ...]   # per user, selected row indices
    ranks: tuple[int, ...]                    # stacked rank after each user
    rates: tuple[int, ...]                    # |selection| per user


class _IncrementalRank:
    """Row space tracker over F_p with O(rows * cols) insertion."""

    def __init__(self, cols: int, p: int):
        self.cols = cols
        self.p = p
        self.pivot_rows: dict[int, list[int]] = {}

    def reduce(self, row: Sequence[int]) -> list[int]:
        p = self.p
        work = [x % p for x in row]
        for c, prow in self.pivot_rows.items():
            f = work[c]
            if f:
                work = [(x - f * y) % p for x, y in zip(work, prow)]
        return work

    def try_add(self, row: Sequence[int]) -> bool:
        work = self.reduce(row)
        for c, x in enumerate(work):
            if x:
                inv = pow(x, self.p - 2, self.p)
                self.pivot_rows[c] = [(v * inv) % self.p for v in work]
                return True
        return False

    @property
    def rank(self) -> int:
        return len(self.pivot_rows)


def greedy_row_selection(src: LinearSource, receiver: int,
                         ordering: Optional[Sequence[int]] = None
                         ) -> GreedySelection:
    """Greedily pick, user by user, the observation rows that strictly grow
    the stacked rank seen from one receiver.

    The selection has the maximum-rank property: after any prefix of
    users, the selected rows span the same space as all their rows
    stacked, so the per-user counts equal the marginal ranks along the
    ordering and always total N minus the receiver's own rank.
    """
    if not 0 <= receiver < src.m:
        raise UnknownReceiver(f"receiver {receiver} outside 1..{src.m}")
    if ordering is None:
        ordering = (receiver, *[i for i in range(src.m) if i != receiver])
    ordering = tuple(ordering)
    if sorted(ordering) != list(range(src.m)) or ordering[0] != receiver:
        raise ConstraintViolation(
            f"ordering must be a permutation of the users starting at {receiver}")
    tracker = _IncrementalRank(src.N, src.p)
    selections: list[tuple[int, ...]] = [()] * src.m
    ranks: list[int] = []
    for a in src.matrices[receiver].to_rows():
        tracker.try_add(a)
    ranks.append(tracker.rank)
    for u in ordering[1:]:
        chosen = []
        for k, row in enumerate(src.matrices[u].to_rows()):
            if tracker.try_add(row):
                chosen.append(k)
        selections[u] = tuple(chosen)
        ranks.append(tracker.rank)
    rates = tuple(len(selections[i]) for i in range(src.m))
    return GreedySelection(ordering=ordering, selections=tuple(selections),
                           ranks=tuple(ranks), rates=rates)


# ---------------------------------------------------------------------------
# Expanded transfer matrices (verification cross-check)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Slot:
    """Identifier of one unresolved coding coefficient.

    kind "code": entry (row, col) of user ``user``'s coefficient matrix;
    shared by every receiver's matrix.  kind "dec": receiver ``user``'s
    decoder coefficient from its local incoming symbol ``row`` to output
    ``col``.  ``negated`` marks occurrences inside I - Gamma; assignments
    are always keyed by the plain (un-negated) slot.
    """

    kind: str
    user: int
    row: int
    col: int
    negated: bool = False

    def key(self) -> "Slot":
        if not self.negated:
            return self
        return Slot(self.kind, self.user, self.row, self.col)


@dataclass(frozen=True)
class ExpandedTransferMatrix:
    """Square matrix [[A, 0], [I - Gamma, B(r)]] for one receiver.

    Entries are field elements or Slot placeholders; after a full
    assignment the matrix is nonsingular exactly when the receiver can
    decode.  Coding slots are shared across receivers, so completing all
    m matrices at once is the multicast code design problem.
    """

    receiver: int
    p: int
    grid: tuple[tuple[object, ...], ...]

    @property
    def size(self) -> int:
        return len(self.grid)

    def unassigned_slots(self) -> list[Slot]:
        out: list[Slot] = []
        seen = set()
        for row in self.grid:
            for x in row:
                if isinstance(x, Slot):
                    k = x.key()
                    if k not in seen:
                        seen.add(k)
                        out.append(k)
        return out

    def substitute(self, assignment: dict[Slot, int]) -> "ExpandedTransferMatrix":
        p = self.p

        def resolve(x):
            if not isinstance(x, Slot):
                return x
            v = assignment.get(x.key())
            if v is None:
                return x
            return (-v) % p if x.negated else v % p

        grid = tuple(tuple(resolve(x) for x in row) for row in self.grid)
        return ExpandedTransferMatrix(receiver=self.receiver, p=p, grid=grid)

    def to_field_matrix(self) -> ff.FieldMatrix:
        remaining = self.unassigned_slots()
        if remaining:
            raise ConstraintViolation(
                f"{len(remaining)} coefficients are still unassigned")
        flat = [int(x) for row in self.grid for x in row]
        return ff.FieldMatrix(self.size, self.size, self.p, flat)

    def det(self) -> int:
        return self.to_field_matrix().det()


def _receiver_incoming(net: MulticastNetwork, receiver: int) -> list[tuple]:
    """Unit edges entering one receiver: own side link first, then relay
    links from the other users in ascending order."""
    incoming = [("side", receiver, None, k)
                for k in range(net.n * net.lengths[receiver])]
    for i in range(net.m):
        if i != receiver:
            incoming.extend(("relay_out", i, receiver, k) for k in range(net.tx[i]))
    return incoming


def _network_blocks(net: MulticastNetwork, src: LinearSource):
    """Shared structure: unit-edge index, source block A and Gamma with
    coding slots in place."""
    if src.m != net.m or src.p != net.p or src.lengths != net.lengths:
        raise DimensionMismatch("network was built from a different source")
    units = net.unit_edges()
    index = {e: k for k, e in enumerate(units)}
    ell = len(units)
    dim = net.n * net.N

    expanded = [ff.kron_block(net.n, src.matrices[i]) for i in range(net.m)]
    a_grid = [[0] * ell for _ in range(dim)]
    gamma: list[list[object]] = [[0] * ell for _ in range(ell)]
    for e, col in index.items():
        kind, i, _j, k = e
        if kind == "source":
            obs_row = expanded[i].row(k)
            for w in range(dim):
                a_grid[w][col] = obs_row[w]
        elif kind == "side":
            gamma[index[("source", i, None, k)]][col] = 1
        elif kind == "relay_in":
            for obs in range(net.n * net.lengths[i]):
                gamma[index[("source", i, None, obs)]][col] = Slot("code", i, k, obs)
        elif kind == "relay_out":
            gamma[index[("relay_in", i, None, k)]][col] = 1
    return index, ell, dim, a_grid, gamma


def expanded_transfer_matrix(net: MulticastNetwork, src: LinearSource,
                             receiver: int,
                             assignment: Optional[dict[Slot, int]] = None
                             ) -> ExpandedTransferMatrix:
    """Build [[A, 0], [I - Gamma, B(r)]] for one receiver.

    A injects the fixed observation blocks on the super-node edges; Gamma
    forwards side links and relay copies verbatim and carries the coding
    coefficients on the s_i -> t_i links; B reads the receiver's incoming
    symbols through decoder coefficients.  Unassigned coefficients appear
    as Slot placeholders.
    """
    if not 0 <= receiver < net.m:
        raise UnknownReceiver(f"receiver {receiver} outside 1..{net.m}")
    index, ell, dim, a_grid, gamma = _network_blocks(net, src)
    p = net.p

    incoming = _receiver_incoming(net, receiver)
    b_grid: list[list[object]] = [[0] * dim for _ in range(ell)]
    for local, e in enumerate(incoming):
        row = index[e]
        for c in range(dim):
            b_grid[row][c] = Slot("dec", receiver, local, c)

    grid: list[tuple[object, ...]] = []
    for r in range(dim):
        grid.append(tuple(a_grid[r] + [0] * dim))
    for r in range(ell):
        row: list[object] = []
        for c in range(ell):
            g = gamma[r][c]
            diag = 1 if r == c else 0
            if isinstance(g, Slot):
                row.append(Slot(g.kind, g.user, g.row, g.col, negated=True))
            else:
                row.append((diag - g) % p)
        row.extend(b_grid[r])
        grid.append(tuple(row))
    etm = ExpandedTransferMatrix(receiver=receiver, p=p, grid=tuple(grid))
    if assignment:
        etm = etm.substitute(assignment)
    return etm


def scheme_assignment(net: MulticastNetwork, src: LinearSource,
                      scheme: TransmissionScheme) -> dict[Slot, int]:
    """Full slot assignment induced by a concrete scheme.

    Coding slots copy the scheme's coefficient matrices.  Decoder slots
    select, per receiver, a greedy maximal independent subset of its
    incoming symbols as outputs (a 0/1 selection), padding with zero
    columns when the receiver cannot reach full rank.
    """
    scheme.check_source(src)
    if scheme.tx != net.tx or scheme.n != net.n:
        raise DimensionMismatch("scheme rates differ from the network capacities")
    out: dict[Slot, int] = {}
    for i in range(net.m):
        c = scheme.coefficients[i]
        for r in range(c.rows):
            row = c.row(r)
            for k in range(c.cols):
                out[Slot("code", i, r, k)] = row[k]
    dim = net.n * net.N
    for j in range(net.m):
        rows = ff.kron_block(net.n, src.matrices[j]).to_rows()
        for i in range(net.m):
            if i != j:
                rows.extend(scheme.broadcast_matrix(src, i).to_rows())
        tracker = _IncrementalRank(dim, net.p)
        chosen = [local for local, row in enumerate(rows) if tracker.try_add(row)]
        for c, local in enumerate(chosen[:dim]):
            out[Slot("dec", j, local, c)] = 1
        for local in range(len(rows)):
            for c in range(dim):
                out.setdefault(Slot("dec", j, local, c), 0)
    return out


def transfer_matrix(net: MulticastNetwork, src: LinearSource, receiver: int,
                    assignment: dict[Slot, int]) -> ff.FieldMatrix:
    """Concrete transfer matrix A @ (I - Gamma)^-1 @ B(r) for a fully
    assigned code; its determinant matches the expanded matrix's up to
    sign."""
    if not 0 <= receiver < net.m:
        raise UnknownReceiver(f"receiver {receiver} outside 1..{net.m}")
    index, ell, dim, a_grid, gamma = _network_blocks(net, src)
    p = net.p

    def resolve(x) -> int:
        if isinstance(x, Slot):
            v = assignment.get(x.key())
            if v is None:
                raise ConstraintViolation(f"slot {x} is unassigned")
            return v % p
        return x % p

    a_mat = ff.FieldMatrix(dim, ell, p, [x for row in a_grid for x in row])
    i_minus_gamma = ff.FieldMatrix(
        ell, ell, p,
        [((1 if r == c else 0) - resolve(gamma[r][c])) % p
         for r in range(ell) for c in range(ell)])
    incoming = _receiver_incoming(net, receiver)
    b = [[0] * dim for _ in range(ell)]
    for local, e in enumerate(incoming):
        row = index[e]
        for c in range(dim):
            b[row][c] = resolve(Slot("dec", receiver, local, c))
    b_mat = ff.FieldMatrix(ell, dim, p, [x for row in b for x in row])
    return a_mat.mul(i_minus_gamma.inv()).mul(b_mat)
