"""Sampling, likelihood, MLE, and estimator statistics."""

import mpmath
import numpy as np
import pytest
from scipy.stats import chi2

from starkprobe import (
    DomainError,
    EstimationError,
    LatticeSpec,
    MeasurementRecord,
    ProbabilityVector,
    configuration_model,
    estimator_statistics,
    log_likelihood,
    mle,
    sample_configurations,
)
from starkprobe.estimation import CachedModel, likelihood_grid, model_cfi, repetition_seeds


def table_model(table):
    """Model backed by a {h: p} lookup table."""
    return lambda h: ProbabilityVector(np.asarray(table[h], dtype=float))


def test_delta_distribution_sampling():
    pv = ProbabilityVector(np.array([0.0, 1.0, 0.0]))
    rec = sample_configurations(pv, 250, seed=0)
    np.testing.assert_array_equal(rec.counts, [0, 250, 0])


def test_counts_always_sum_to_m():
    rng = np.random.default_rng(42)
    for trial in range(20):
        p = rng.dirichlet(np.ones(6))
        rec = sample_configurations(ProbabilityVector(p), 137, seed=trial)
        assert rec.counts.sum() == 137


def test_sampling_rejects_bad_input():
    with pytest.raises(DomainError):
        sample_configurations(ProbabilityVector(np.array([0.5, 0.5])), 0, seed=1)
    with pytest.raises(DomainError):
        sample_configurations(ProbabilityVector(np.array([0.8, 0.1])), 10, seed=1)


def test_chi_square_of_seeded_draws():
    # 1000 seeded multinomial draws from a uniform 4-outcome distribution:
    # the chi-square statistic should exceed the 1% critical value about
    # 1% of the time (this seed sequence gives a count in a safe band)
    p = np.full(4, 0.25)
    M = 1000
    crit = chi2.ppf(0.99, df=3)
    exceed = 0
    for seed in range(1000):
        counts = sample_configurations(ProbabilityVector(p), M, seed=seed).counts
        stat = np.sum((counts - M * p) ** 2 / (M * p))
        exceed += stat > crit
    assert 2 <= exceed <= 25


def test_reproducibility_bit_for_bit():
    pv = ProbabilityVector(np.array([0.2, 0.3, 0.5]))
    a = sample_configurations(pv, 500, seed=987)
    b = sample_configurations(pv, 500, seed=987)
    np.testing.assert_array_equal(a.counts, b.counts)
    seeds1 = [s.generate_state(2).tolist() for s in repetition_seeds(7, 5)]
    seeds2 = [s.generate_state(2).tolist() for s in repetition_seeds(7, 5)]
    assert seeds1 == seeds2


def test_log_likelihood_values_and_zeros():
    model = table_model({0.0: [0.5, 0.5, 0.0], 1.0: [0.25, 0.25, 0.5]})
    rec = MeasurementRecord(np.array([3, 5, 0]), 8)
    assert log_likelihood(rec, model, 0.0) == pytest.approx(8 * np.log(0.5))
    rec_hit_zero = MeasurementRecord(np.array([3, 4, 1]), 8)
    assert log_likelihood(rec_hit_zero, model, 0.0) == -np.inf
    assert np.isfinite(log_likelihood(rec_hit_zero, model, 1.0))


def test_log_likelihood_uniform_is_count_independent():
    K, M = 5, 60
    model = table_model({0.0: np.full(K, 1 / K)})
    for counts in ([60, 0, 0, 0, 0], [12, 12, 12, 12, 12], [30, 10, 10, 5, 5]):
        rec = MeasurementRecord(np.array(counts), M)
        assert log_likelihood(rec, model, 0.0) == pytest.approx(-M * np.log(K))


def test_log_likelihood_against_extended_precision_product():
    rng = np.random.default_rng(17)
    p = rng.dirichlet(np.ones(8))
    counts = rng.multinomial(300, p)
    rec = MeasurementRecord(counts, 300)
    model = table_model({0.3: p})
    mine = log_likelihood(rec, model, 0.3)
    with mpmath.workdps(60):
        product = mpmath.mpf(1)
        for n, prob in zip(counts, p):
            product *= mpmath.mpf(prob) ** int(n)
        oracle = float(mpmath.log(product))
    assert abs(mine - oracle) < 1e-10 * abs(oracle)


def test_log_likelihood_invariant_under_relabeling():
    rng = np.random.default_rng(23)
    p = rng.dirichlet(np.ones(6))
    counts = rng.multinomial(100, p)
    perm = rng.permutation(6)
    a = log_likelihood(MeasurementRecord(counts, 100), table_model({0.0: p}), 0.0)
    b = log_likelihood(MeasurementRecord(counts[perm], 100), table_model({0.0: p[perm]}), 0.0)
    assert a == pytest.approx(b, rel=1e-14)


def test_mle_recovers_exact_proportions():
    grid = np.array([-0.2, -0.1, 0.0, 0.1, 0.2])
    table = {h: np.array([0.5 + h, 0.5 - h]) for h in grid}
    model = table_model(table)
    rec = MeasurementRecord(np.array([60, 40]), 100)  # exactly p(0.1)
    assert mle(rec, model, grid) == pytest.approx(0.1)


def test_mle_tie_breaks_toward_smaller_h():
    grid = np.array([0.0, 1.0, 2.0])
    model = table_model({0.0: [0.5, 0.5], 1.0: [0.5, 0.5], 2.0: [0.4, 0.6]})
    rec = MeasurementRecord(np.array([5, 5]), 10)
    assert mle(rec, model, grid) == 0.0


def test_mle_all_impossible_raises():
    grid = np.array([0.0, 1.0])
    model = table_model({0.0: [1.0, 0.0], 1.0: [1.0, 0.0]})
    rec = MeasurementRecord(np.array([0, 3]), 3)
    with pytest.raises(EstimationError):
        mle(rec, model, grid)


def test_likelihood_grid_requires_ascending():
    model = table_model({0.0: [1.0]})
    with pytest.raises(DomainError):
        likelihood_grid(MeasurementRecord(np.array([1]), 1), model, [0.1, 0.1])


def test_quadratic_refinement_moves_toward_vertex():
    grid = np.array([0.0, 1.0, 2.0])
    # loglik = -(h - 1.25)^2 up to a constant: vertex at 1.25
    probs = {h: np.array([np.exp(-((h - 1.25) ** 2)), 1 - np.exp(-((h - 1.25) ** 2))]) for h in grid}
    model = table_model(probs)
    rec = MeasurementRecord(np.array([1, 0]), 1)
    assert mle(rec, model, grid) == 1.0
    refined = mle(rec, model, grid, refine=True)
    assert abs(refined - 1.25) < 0.01


def test_mle_consistency_with_growing_samples():
    # a biased-phase two-outcome model (identifiable over the grid):
    # estimates tighten onto the truth as M grows
    t, bias = 3.0, 0.3
    grid = np.round(np.arange(-0.2, 0.2001, 0.01), 10)
    table = {h: np.array([np.cos((h + bias) * t / 2) ** 2, np.sin((h + bias) * t / 2) ** 2]) for h in grid}
    model = table_model(table)
    h_true = 0.07

    def spread(M, seeds):
        vals = []
        for s in seeds:
            rec = sample_configurations(ProbabilityVector(table[h_true]), M, seed=s)
            vals.append(mle(rec, model, grid))
        return np.std(vals), np.mean(vals)

    sd_small, _ = spread(100, range(200))
    sd_large, mean_large = spread(100_000, range(200, 400))
    assert sd_large < sd_small
    assert abs(mean_large - h_true) <= 0.01  # within one grid step


def test_model_cache_evaluates_once():
    calls = []

    def expensive(h):
        calls.append(h)
        return ProbabilityVector(np.array([0.5, 0.5]))

    cached = CachedModel(expensive)
    for _ in range(5):
        cached(0.3)
        cached(0.7)
    assert len(calls) == 2


def test_estimator_statistics_against_crb():
    # edge-site probe (an h -> -h asymmetric state, like the estimation
    # protocol uses): estimates should straddle the Cramer-Rao bound
    from starkprobe import single_site_initial

    spec = LatticeSpec(8, 1.0, 0.0)
    model = configuration_model(spec, t=60.0, N=None, initial=single_site_initial(8, 1))
    grid = np.round(np.arange(-0.01, 0.010001, 0.001), 12)
    res = estimator_statistics(0.003, model, grid, M=100, repetitions=200, seed=5)
    assert res.repetitions == 200
    assert abs(res.h_es_mean - 0.003) <= 0.001
    assert 0.5 * res.crb <= res.delta_h <= 2.0 * res.crb


def test_estimator_statistics_reproducible_and_monotone_in_m():
    spec = LatticeSpec(6, 1.0, 0.0)
    model = configuration_model(spec, t=40.0, N=None)
    grid = np.round(np.arange(-0.02, 0.02001, 0.002), 12)
    a = estimator_statistics(0.004, model, grid, M=100, repetitions=120, seed=11)
    b = estimator_statistics(0.004, model, grid, M=100, repetitions=120, seed=11)
    assert a.h_es_mean == b.h_es_mean and a.delta_h == b.delta_h
    big = estimator_statistics(0.004, model, grid, M=1000, repetitions=120, seed=11)
    assert big.delta_h <= a.delta_h


def test_estimator_statistics_degenerate_model():
    model = table_model({h: [0.5, 0.5] for h in np.arange(-0.002, 0.0021, 0.001)})
    grid = np.round(np.arange(-0.002, 0.0021, 0.001), 12)
    res = estimator_statistics(
        0.0, CachedModel(lambda h: ProbabilityVector(np.array([0.5, 0.5]))), grid,
        M=50, repetitions=10, seed=3, dh_crb=0.001,
    )
    assert res.degenerate
    assert res.crb == np.inf
    # grid-floor behavior: the argmax always lands on the smallest grid point
    assert res.delta_h < 1e-12
    assert res.h_es_mean == pytest.approx(grid[0])


def test_repetitions_precondition():
    model = table_model({0.0: [1.0]})
    with pytest.raises(DomainError):
        estimator_statistics(0.0, model, [0.0], M=10, repetitions=1, seed=0)


def test_model_cfi_positive_for_informative_model():
    spec = LatticeSpec(8, 1.0, 0.0)
    model = configuration_model(spec, t=60.0)
    assert model_cfi(model, 0.002) > 0
