import math
import random
from fractions import Fraction

import numpy as np
import pytest

from omniex import (
    EntropyOracle,
    TableSource,
    UnitMismatch,
    ValidationError,
    dmms_from_linear,
    is_intersecting_submodular,
    is_submodular,
    make_dmms_source,
    make_linear_source,
    validate,
)
from omniex.setfun import DELTA

from conftest import example1_source, figure1_source, random_linear_source


def test_linear_entropies_are_ranks():
    oracle = EntropyOracle(example1_source())
    assert oracle.entropy(0b001) == 2
    assert oracle.entropy(0b011) == 3
    assert oracle.entropy(0) == 0
    assert oracle.total() == 3


def test_linear_entropy_values_are_integers():
    rng = random.Random(1)
    for _ in range(10):
        oracle = EntropyOracle(random_linear_source(rng, m_max=5, n_max=6))
        for s in range(1 << oracle.m):
            h = oracle.entropy(s)
            assert isinstance(h, int)
            c = oracle.cond_entropy(s)
            assert isinstance(c, int) and c >= 0


def test_cond_entropy_examples():
    ex1 = EntropyOracle(example1_source())
    assert ex1.cond_entropy(0b001) == 0  # users 2,3 jointly know everything
    fig = EntropyOracle(figure1_source())
    assert fig.cond_entropy(0b010) == 0  # users 1,3 hold all four packets
    assert fig.cond_entropy(fig.full_mask) == fig.total() == 4


def test_cond_entropy_never_exceeds_entropy():
    rng = random.Random(2)
    for _ in range(10):
        oracle = EntropyOracle(random_linear_source(rng, m_max=5, n_max=6))
        for s in range(1, 1 << oracle.m):
            assert oracle.cond_entropy(s) <= oracle.entropy(s)


def test_validate_accepts_the_fixtures():
    assert validate(example1_source()) == []
    assert validate(figure1_source()) == []


def test_validate_flags_rank_deficient_sources():
    # Two users that both miss the last packet.
    src = make_linear_source(
        [[[1, 0, 0]], [[0, 1, 0]]], p=5)
    problems = validate(src)
    assert any("collective observations do not determine W" in p
               for p in problems)
    with pytest.raises(ValidationError):
        EntropyOracle(src)


def test_validate_flags_bad_pmf():
    src = make_dmms_source((2, 2), [[0.4, 0.3], [0.1, 0.1]])
    problems = validate(src)
    assert any("sums to" in p for p in problems)
    ok = make_dmms_source((2, 2), [[0.4, 0.3], [0.1, 0.2]])
    assert validate(ok) == []


def test_validate_flags_incomplete_table():
    src = TableSource(m=2, entries={0b01: 1})
    assert any("missing" in p for p in validate(src))


def test_dmms_entropy_known_values():
    # Two identical uniform bits: every marginal has one bit of entropy.
    pmf = np.zeros((2, 2))
    pmf[0, 0] = pmf[1, 1] = 0.5
    oracle = EntropyOracle(make_dmms_source((2, 2), pmf))
    assert oracle.unit == "bits" and not oracle.exact
    assert abs(oracle.entropy(0b01) - 1.0) <= DELTA
    assert abs(oracle.entropy(0b10) - 1.0) <= DELTA
    assert abs(oracle.total() - 1.0) <= DELTA
    assert abs(oracle.cond_entropy(0b01) - 0.0) <= DELTA


def test_budget_function_values():
    oracle = EntropyOracle(example1_source())
    f = oracle.f_beta(Fraction(3, 2))
    assert f(0b001) == Fraction(1, 2)
    assert f(0) == 0
    f_total = oracle.f_beta(oracle.total())
    assert f_total(oracle.full_mask) == oracle.total()


def test_budget_function_submodularity_regimes():
    rng = random.Random(3)
    for _ in range(8):
        oracle = EntropyOracle(random_linear_source(rng, m_max=5, n_max=6))
        assert is_intersecting_submodular(oracle.f_beta(0))
        assert is_submodular(oracle.f_beta(oracle.total()))


def test_entropy_is_submodular_both_models():
    rng = random.Random(4)
    for _ in range(5):
        src = random_linear_source(rng, m=rng.randint(2, 4), n_packets=4, p=5)
        lin = EntropyOracle(src)
        full = lin.full_mask
        for s in range(full + 1):
            for t in range(full + 1):
                assert (lin.entropy(s) + lin.entropy(t)
                        >= lin.entropy(s | t) + lin.entropy(s & t))
    pmf = np.random.RandomState(7).dirichlet(np.ones(8)).reshape((2, 2, 2))
    dm = EntropyOracle(make_dmms_source((2, 2, 2), pmf))
    for s in range(8):
        for t in range(8):
            lhs = dm.entropy(s) + dm.entropy(t)
            rhs = dm.entropy(s | t) + dm.entropy(s & t)
            assert rhs <= lhs + DELTA


def test_entropy_is_monotone():
    rng = random.Random(5)
    oracle = EntropyOracle(random_linear_source(rng, m=5, n_packets=6, p=7))
    for s in range(1 << 5):
        for i in range(5):
            assert oracle.entropy(s) <= oracle.entropy(s | 1 << i)


def test_cross_model_consistency():
    # A uniform packet vector pushed through the observation matrices has
    # pmf entropy rank * log2(p) in every marginal.
    rng = random.Random(6)
    for p, n_packets in ((2, 4), (3, 3), (5, 2)):
        src = random_linear_source(rng, m=3, n_packets=n_packets, p=p)
        lin = EntropyOracle(src)
        dm = EntropyOracle(dmms_from_linear(src))
        for s in range(1 << 3):
            expected = lin.entropy(s) * math.log2(p)
            assert abs(dm.entropy(s) - expected) <= 1e-6


def test_memoization_counts_distinct_subsets():
    oracle = EntropyOracle(example1_source())
    for _ in range(5):
        oracle.entropy(0b011)
        oracle.entropy(0b101)
    assert oracle.oracle_queries() == 2
    assert oracle.calls == 10


def test_unit_checking():
    oracle = EntropyOracle(example1_source())
    assert oracle.unit == "F_5-symbols"
    with pytest.raises(UnitMismatch):
        oracle.f_beta(1, unit="bits")
    oracle.f_beta(1, unit="F_5-symbols")


def test_nonprime_modulus_rejected_with_hint():
    with pytest.raises(ValueError, match="prime"):
        make_linear_source([[[1, 0], [0, 1]]], p=4)
