import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bandseg.core import BandsegError, InstanceTooLargeError, ScoreModel, ValueGrid, segment_scores
from bandseg.exact import exact_borders
from bandseg.segmentation import bands_to_staircases, brute_force_segmentation, segment_dp
from oracles import all_splits

BERN = ScoreModel.bernoulli()


def chain_of(counts, sums, sumsqs=None):
    counts = np.asarray(counts, dtype=np.int64)
    sums = np.asarray(sums, dtype=float)
    sumsqs = sums.copy() if sumsqs is None else np.asarray(sumsqs, dtype=float)
    return SimpleNamespace(counts=counts, sums=sums, sumsqs=sumsqs)


def split_score(chain, bounds, model):
    b = np.asarray(bounds)
    pc = np.concatenate([[0], np.cumsum(chain.counts)])
    ps = np.concatenate([[0.0], np.cumsum(chain.sums)])
    pq = np.concatenate([[0.0], np.cumsum(chain.sumsqs)])
    return math.fsum(segment_scores(pc[b[1:]] - pc[b[:-1]], ps[b[1:]] - ps[b[:-1]],
                                    pq[b[1:]] - pq[b[:-1]], model))


def random_chain(rng, L):
    """Bernoulli chain with strictly decreasing segment densities."""
    counts = rng.integers(1, 30, size=L)
    dens = np.sort(rng.random(L))[::-1]
    sums = np.floor(dens * counts)
    # strict decrease may fail after rounding; pooling is not needed for the DP
    return chain_of(counts, sums)


def test_bernoulli_example():
    chain = chain_of([2, 3, 5], [2, 1, 0])
    seg = segment_dp(chain, 2, BERN)
    best = max(all_splits(3, 2), key=lambda b: split_score(chain, b, BERN))
    assert tuple(seg.boundaries) == best
    assert seg.score == pytest.approx(split_score(chain, best, BERN), abs=1e-12)
    # (2,2) alone, then (3,1)+(5,0)
    assert tuple(seg.boundaries) == (0, 1, 3)


def test_trivial_cases():
    chain = chain_of([2, 3, 5], [2, 1, 0])
    ident = segment_dp(chain, 3, BERN)
    assert list(ident.boundaries) == [0, 1, 2, 3]
    assert ident.score == pytest.approx(math.fsum(segment_scores(chain.counts, chain.sums, chain.sumsqs, BERN)))
    one = segment_dp(chain, 1, BERN)
    assert list(one.counts) == [10] and one.sums[0] == 3
    single = brute_force_segmentation(chain_of([4], [1]), 1, BERN)
    assert list(single.boundaries) == [0, 1]


def test_more_bands_than_segments():
    chain = chain_of([2, 3], [2, 0])
    seg = segment_dp(chain, 4, BERN)
    assert seg.K == 4 and seg.effective_K == 2
    assert list(seg.boundaries) == [0, 0, 0, 1, 2]
    assert np.isnan(seg.densities[0]) and seg.densities[3] == 0.0


def test_errors():
    with pytest.raises(BandsegError):
        segment_dp(chain_of([], []), 1, BERN)
    with pytest.raises(ValueError):
        segment_dp(chain_of([1], [0]), 0, BERN)
    big = chain_of(np.ones(40, int), np.zeros(40))
    with pytest.raises(InstanceTooLargeError):
        brute_force_segmentation(big, 12, BERN)


@given(st.integers(1, 12), st.integers(1, 4), st.integers(0, 10_000))
def test_dp_equals_brute_force(L, K, seed):
    chain = random_chain(np.random.default_rng(seed), L)
    dp = segment_dp(chain, K, BERN)
    bf = brute_force_segmentation(chain, K, BERN)
    assert dp.score == bf.score
    assert dp.same_split(bf)


def test_oracle_beats_random_splits():
    rng = np.random.default_rng(1)
    for _ in range(10):
        chain = random_chain(rng, 10)
        bf = brute_force_segmentation(chain, 4, BERN)
        for _ in range(100):
            cut = np.sort(rng.choice(np.arange(1, 10), size=3, replace=False))
            assert bf.score >= split_score(chain, [0, *cut, 10], BERN) - 1e-12


def test_gaussian_and_poisson_chains():
    rng = np.random.default_rng(3)
    for kind in ("poisson", "gaussian"):
        model = ScoreModel(kind)
        for _ in range(20):
            L = int(rng.integers(1, 9))
            counts = rng.integers(1, 10, size=L)
            sums = np.sort(rng.random(L) * 5)[::-1] * counts
            sumsqs = sums ** 2 / counts + rng.random(L)
            chain = chain_of(counts, sums, sumsqs)
            K = int(rng.integers(1, 5))
            assert segment_dp(chain, K, model).score == pytest.approx(
                brute_force_segmentation(chain, K, model).score, abs=1e-9)


@given(st.integers(0, 10_000))
def test_densities_monotone_and_score_grows_with_k(seed):
    rng = np.random.default_rng(seed)
    grid = ValueGrid(rng.integers(0, 2, size=(7, 7)).astype(float))
    chain = exact_borders(grid)
    prev = -np.inf
    for K in range(1, 6):
        seg = segment_dp(chain, K, BERN)
        d = seg.densities[seg.counts > 0]
        assert np.all(np.diff(d) <= 0)
        assert seg.score >= prev - 1e-9
        prev = seg.score


def test_tie_prefers_smaller_inner_bands():
    # two identical segments: every split into 2 scores the same
    chain = chain_of([2, 2, 2], [1, 1, 1])
    assert list(segment_dp(chain, 2, BERN).boundaries) == [0, 1, 3]
    assert list(brute_force_segmentation(chain, 2, BERN).boundaries) == [0, 1, 3]


def test_bands_to_staircases():
    rng = np.random.default_rng(5)
    for _ in range(10):
        grid = ValueGrid(rng.integers(0, 2, size=(6, 6)).astype(float), triangle=True)
        chain = exact_borders(grid)
        seg = segment_dp(chain, 3, BERN)
        stairs = bands_to_staircases(chain, seg)
        assert len(stairs) == 4
        assert stairs[0] == grid.empty_staircase() and stairs[-1] == grid.full_staircase()
        for k, (a, b) in enumerate(zip(stairs, stairs[1:])):
            assert b.contains(a)
            assert b.area - a.area == seg.counts[k]
        one = bands_to_staircases(chain, segment_dp(chain, 1, BERN))
        assert one == [grid.empty_staircase(), grid.full_staircase()]
