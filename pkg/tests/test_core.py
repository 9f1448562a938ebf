import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bandseg.core import (
    BorderChain, EmptySegmentError, ModelError, ScoreModel, SegmentStats, Staircase, ValueGrid,
    compare_density, density, enumerate_staircases, segment_score, segment_scores,
    validate_staircase,
)
from oracles import numeric_sup_score

# frozen from oracles.numeric_sup_score (1-D bounded search of the likelihood)
BERNOULLI_4_2 = -2.772588722239781
POISSON_2_4 = -1.2274112777602189
GAUSSIAN_2_2_4 = -1.0


def test_density_examples():
    assert density(SegmentStats(4, 2)) == 0.5
    assert density(SegmentStats(3, 3)) == 1.0
    assert density(SegmentStats(5, 0)) == 0.0
    with pytest.raises(EmptySegmentError):
        density(SegmentStats(0, 0))


def test_compare_density_examples():
    assert compare_density(SegmentStats(2, 1), SegmentStats(4, 2)) == 0
    assert compare_density(SegmentStats(3, 2), SegmentStats(3, 1)) == 1
    assert compare_density(SegmentStats(3, 1), SegmentStats(3, 2)) == -1
    assert compare_density(SegmentStats(2, 0.6), SegmentStats(2, 0.6 + 1e-15)) == 0


def test_compare_density_integral_is_exact():
    # 1e-13 apart in density but integral: cross-multiplication separates them
    big = 10 ** 13
    assert compare_density(SegmentStats(big, big - 1), SegmentStats(big + 1, big)) == -1


def test_segment_score_examples():
    assert segment_score(SegmentStats(4, 2, 2), ScoreModel.bernoulli()) == pytest.approx(BERNOULLI_4_2, abs=1e-12)
    assert segment_score(SegmentStats(3, 3, 3), ScoreModel.bernoulli()) == 0.0
    assert segment_score(SegmentStats(2, 4, 10), ScoreModel.poisson()) == pytest.approx(POISSON_2_4, abs=1e-12)
    assert segment_score(SegmentStats(2, 2, 4), ScoreModel.gaussian(1.0)) == pytest.approx(GAUSSIAN_2_2_4, abs=1e-12)


def test_frozen_scores_match_oracle():
    assert numeric_sup_score("bernoulli", 4, 2) == pytest.approx(BERNOULLI_4_2, abs=1e-9)
    assert numeric_sup_score("poisson", 2, 4) == pytest.approx(POISSON_2_4, abs=1e-9)
    assert numeric_sup_score("gaussian", 2, 2, 4) == pytest.approx(GAUSSIAN_2_2_4, abs=1e-9)


def test_closed_forms():
    assert BERNOULLI_4_2 == pytest.approx(-4 * math.log(2))
    assert POISSON_2_4 == pytest.approx(4 * math.log(2) - 4)


def test_empty_segment_scores_zero():
    for m in (ScoreModel.bernoulli(), ScoreModel.poisson(), ScoreModel.gaussian()):
        assert segment_score(SegmentStats(0, 0, 0), m) == 0.0


def test_model_value_checks():
    with pytest.raises(ModelError):
        segment_score(SegmentStats(2, 3, 3), ScoreModel.bernoulli())
    with pytest.raises(ModelError):
        segment_score(SegmentStats(2, -1, 1), ScoreModel.poisson())
    with pytest.raises(ModelError):
        ScoreModel.bernoulli().check_values(np.array([0.0, 0.5]))
    with pytest.raises(ValueError):
        ScoreModel("laplace")
    with pytest.raises(ValueError):
        ScoreModel.gaussian(0.0)


def test_model_inference():
    assert ScoreModel.infer(np.array([0, 1, 1.0])).kind == "bernoulli"
    assert ScoreModel.infer(np.array([0, 3, 1.0])).kind == "poisson"
    assert ScoreModel.infer(np.array([0.5, -1.0])).kind == "gaussian"


binary_stats = st.integers(1, 50).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(0, n)))


@given(binary_stats, st.lists(st.floats(-20, 20), min_size=1, max_size=10))
def test_bernoulli_sup_property(ns, rs):
    n, s = ns
    stats = SegmentStats(n, float(s), float(s))
    m = ScoreModel.bernoulli()
    best = segment_score(stats, m)
    for r in rs:
        assert best >= m.conditional_score(stats, r) - 1e-9


@given(st.integers(1, 40), st.integers(0, 200), st.lists(st.floats(-10, 5), min_size=1, max_size=10))
def test_poisson_sup_property(n, s, rs):
    stats = SegmentStats(n, float(s), float(s * s))
    m = ScoreModel.poisson()
    best = segment_score(stats, m)
    for r in rs:
        assert best >= m.conditional_score(stats, r) - 1e-9


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=20),
       st.lists(st.floats(-50, 50), min_size=1, max_size=10), st.floats(0.1, 10))
def test_gaussian_sup_property(values, rs, var):
    stats = SegmentStats.of(values)
    m = ScoreModel.gaussian(var)
    best = segment_score(stats, m)
    for r in rs:
        assert best >= m.conditional_score(stats, r) - 1e-9 * max(1.0, abs(best))


@given(st.lists(st.floats(-100, 100), min_size=2, max_size=20), st.floats(0.1, 10))
def test_gaussian_scale_covariance(values, var):
    stats = SegmentStats.of(values)
    a = segment_score(stats, ScoreModel.gaussian(var))
    b = segment_score(stats, ScoreModel.gaussian(2 * var))
    assert b == pytest.approx(a / 2, rel=1e-12, abs=1e-12)


@given(st.lists(st.integers(0, 5), max_size=20), st.lists(st.integers(0, 5), max_size=20))
def test_stats_additivity(x, y):
    assert SegmentStats.of(x) + SegmentStats.of(y) == SegmentStats.of(x + y)


def test_segment_scores_vectorised_matches_scalar():
    rng = np.random.default_rng(0)
    n = rng.integers(0, 30, size=50)
    s = np.array([rng.integers(0, k + 1) for k in n], dtype=float)
    out = segment_scores(n, s, s, ScoreModel.bernoulli())
    for k in range(50):
        assert out[k] == pytest.approx(segment_score(SegmentStats(int(n[k]), s[k], s[k]), ScoreModel.bernoulli()))


def test_validate_staircase_examples():
    rect = ValueGrid(np.zeros((4, 3)))
    assert validate_staircase(Staircase([3, 3, 1, 0]), rect)
    assert not validate_staircase(Staircase([1, 2]), ValueGrid(np.zeros((2, 2))))
    tri = ValueGrid(np.zeros((3, 3)), triangle=True)
    # 1-based band ends 2 and 3 on the first two rows, last row empty
    assert validate_staircase(Staircase([1, 1, 0]), tri)
    assert not validate_staircase(Staircase([2, 0, 0]), tri)
    assert not validate_staircase(Staircase([4, 0, 0, 0]), rect)


@pytest.mark.parametrize("m,n", [(m, n) for m in range(1, 6) for n in range(1, 6)])
def test_staircase_count_is_binomial(m, n):
    grid = ValueGrid(np.zeros((m, n)))
    valid = sum(validate_staircase(Staircase(w), grid)
                for w in itertools.product(range(n + 1), repeat=m))
    assert valid == math.comb(n + m, m)
    assert len(enumerate_staircases(grid)) == valid


def test_triangle_corner_count():
    # corners of the strict upper triangle of an n x n matrix are Catalan numbers
    for n, cat in [(2, 2), (3, 5), (4, 14), (5, 42)]:
        assert len(enumerate_staircases(ValueGrid(np.zeros((n, n)), triangle=True))) == cat


def test_grid_domains():
    g = ValueGrid(np.arange(9.0).reshape(3, 3), triangle=True)
    assert g.size == 3
    assert list(g.flat_values) == [1.0, 2.0, 5.0]
    assert list(g.row_start) == [1, 2, 3]
    b = ValueGrid(np.ones((2, 3)), base=[2, 1])
    assert b.size == 3
    with pytest.raises(ValueError):
        ValueGrid(np.ones((2, 3)), base=[1, 2])
    with pytest.raises(ValueError):
        ValueGrid(np.ones((2, 3)), triangle=True)
    with pytest.raises(ValueError):
        ValueGrid(np.array([[np.nan]]))


def test_border_chain_from_labels():
    grid = ValueGrid(np.array([[1.0, 1.0], [1.0, 0.0]]))
    chain = BorderChain.from_labels(np.array([[0, 0], [0, 1]]), grid)
    assert len(chain) == 2
    assert list(chain.counts) == [3, 1]
    assert list(chain.densities) == [1.0, 0.0]
    assert chain.is_strictly_decreasing()
    assert chain.staircase(1) == Staircase([2, 1])
    assert chain.staircases()[0] == grid.empty_staircase()
    assert chain.staircases()[-1] == grid.full_staircase()
    assert chain.score(ScoreModel.bernoulli()) == 0.0
