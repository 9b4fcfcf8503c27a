import numpy as np
import pytest

from betdetect.baselines import (
    PermutationConfig,
    batched_permutation_run,
    geometric_thresholds,
    mean_gap,
    permutation_pvalue,
)
from betdetect.detectors import DECLARED_ANYTIME, RETAINED
from betdetect.errors import ConfigurationError, InputDataError
from betdetect.simulation import ScoreStream, StreamSpec, generate

from oracles import exhaustive_permutation_pvalue


def test_exhaustive_small_case():
    x, y = (0, 0), (1, 1)
    exact = float(exhaustive_permutation_pvalue(x, y))
    assert exact == 0.0  # the observed split is the most extreme; nothing exceeds it strictly
    p = permutation_pvalue(x, y, 20_000, np.random.default_rng(0))
    assert p == exact


def test_exhaustive_random_small_batches():
    rng = np.random.default_rng(1)
    for _ in range(5):
        x, y = rng.normal(size=4).round(2), rng.normal(size=4).round(2)
        exact = float(exhaustive_permutation_pvalue(list(x), list(y)))
        p = permutation_pvalue(x, y, 40_000, rng)
        assert p == pytest.approx(exact, abs=0.01)


def test_constant_pool_gives_zero():
    assert permutation_pvalue([2.0] * 5, [2.0] * 5, 100, np.random.default_rng(0)) == 0.0


def test_identical_nonconstant_batches_near_one():
    x = [0.1, 0.5, 0.9, 1.3]
    exact = float(exhaustive_permutation_pvalue(x, x))
    assert exact > 0.5
    assert permutation_pvalue(x, x, 20_000, np.random.default_rng(0)) == pytest.approx(exact, abs=0.01)


def test_length_mismatch():
    with pytest.raises(InputDataError):
        permutation_pvalue([1, 2], [1], 10, np.random.default_rng(0))


def test_pvalue_monotone_in_gap():
    base = np.random.default_rng(2).normal(size=10)
    y = base.copy()
    ps = []
    for shift in (0.0, 0.3, 0.8, 1.5):
        ps.append(permutation_pvalue(base + shift, y, 3000, np.random.default_rng(5)))
    assert all(0 <= p <= 1 for p in ps)
    assert all(b <= a for a, b in zip(ps, ps[1:]))


def test_geometric_thresholds_sum_below_alpha():
    for n in (1, 5, 50, 1000):
        assert sum(geometric_thresholds(0.05, n)) <= 0.05
    cfg = PermutationConfig(batch_size=25, alpha=0.1, correction="geometric")
    assert [cfg.threshold(i) for i in (1, 2, 3)] == [0.05, 0.025, 0.0125]


def test_config_validation():
    with pytest.raises(ConfigurationError):
        PermutationConfig(batch_size=1, alpha=0.05)
    with pytest.raises(ConfigurationError):
        PermutationConfig(batch_size=5, alpha=0.05, n_permutations=0)
    with pytest.raises(ConfigurationError):
        PermutationConfig(batch_size=5, alpha=0.05, correction="bonferroni")
    cfg = PermutationConfig(batch_size=5, alpha=0.05, seed=3)
    assert PermutationConfig.from_dict(cfg.to_dict()) == cfg


def test_gate_closed_never_tests():
    s = generate(StreamSpec.gaussian(0, 1, seed=1), StreamSpec.gaussian(3, 1, seed=1), 500)
    cfg = PermutationConfig(batch_size=50, alpha=0.05, epsilon=1e9)
    out = batched_permutation_run(cfg, s, 500)
    assert out.decision == RETAINED and out.rejection_time == 500
    assert len(out.batches) == 10 and all(b["p_value"] is None for b in out.batches)


def test_huge_gap_rejects_at_first_batch():
    s = generate(StreamSpec.gaussian(0, 1, seed=2), StreamSpec.gaussian(100, 1, seed=2), 500)
    out = batched_permutation_run(PermutationConfig(batch_size=25, alpha=0.05), s, 500)
    assert out.decision == DECLARED_ANYTIME and out.rejection_time == 25
    assert out.batches[0]["p_value"] == 0.0


def test_partial_batch_discarded():
    s = ScoreStream(np.zeros(60), np.zeros(60))
    out = batched_permutation_run(PermutationConfig(batch_size=25, alpha=0.05), s, 60)
    assert [b["index"] for b in out.batches] == [1, 2]
    assert out.rejection_time == 60


def test_same_seed_same_outcome():
    s = generate(StreamSpec.gaussian(0, 1, seed=3), StreamSpec.gaussian(0.2, 1, seed=3), 500)
    cfg = PermutationConfig(batch_size=50, alpha=0.1, seed=11)
    assert batched_permutation_run(cfg, s).to_dict() == batched_permutation_run(cfg, s).to_dict()


def test_short_stream():
    with pytest.raises(InputDataError):
        batched_permutation_run(PermutationConfig(batch_size=5, alpha=0.1), ScoreStream([0.0], [0.0]), 10)


def test_mean_gap():
    assert mean_gap([1, 2, 3], [0, 0, 0]) == 2.0


def test_per_batch_h0_rejection_rate():
    rng = np.random.default_rng(13)
    alpha, k, trials = 0.1, 20, 600
    rejections = 0
    for _ in range(trials):
        x, y = rng.normal(size=k), rng.normal(size=k)
        rejections += permutation_pvalue(x, y, 400, rng) < alpha
    rate = rejections / trials
    assert rate <= alpha + 3 * np.sqrt(alpha * (1 - alpha) / trials)
