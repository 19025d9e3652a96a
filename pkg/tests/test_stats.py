from math import ceil, log

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bosonid import linopt, stats
from bosonid.errors import InputError

from oracles import cp_beta


# ---------------------------------------------------------------- delta method


def test_delta_leaves_linear_functions_alone():
    assert stats.delta_correct(3.5, np.zeros((2, 2)), np.eye(2), 10) == 3.5


def test_delta_square_correction_is_variance_over_n():
    assert stats.delta_correct(0.25, [[2.0]], [[0.3]], 30) == pytest.approx(0.25 - 0.3 / 30)


def test_delta_shape_mismatch():
    with pytest.raises(InputError):
        stats.delta_correct(0.0, np.eye(2), np.eye(3), 10)


def test_numerical_hessian_of_ratio():
    x, y = 0.7, 1.9
    h = stats.numerical_hessian(lambda v: v[0] / v[1], [x, y])
    exact = np.array([[0.0, -1 / y**2], [-1 / y**2, 2 * x / y**3]])
    np.testing.assert_allclose(h, exact, atol=1e-6)


def test_delta_ratio_reduces_to_closed_form():
    x, y, n = 0.3, 0.8, 50
    cov = np.array([[0.02, 0.005], [0.005, 0.04]])
    hess = np.array([[0.0, -1 / y**2], [-1 / y**2, 2 * x / y**3]])
    closed = x / y + cov[0, 1] / (n * y**2) - cov[1, 1] * x / (n * y**3)
    assert stats.delta_correct(x / y, hess, cov, n) == pytest.approx(closed, rel=1e-14)


def test_multinomial_sample_cov():
    p = np.array([0.2, 0.5, 0.3])
    c = stats.multinomial_sample_cov(p, 11)
    np.testing.assert_allclose(c, 1.1 * (np.diag(p) - np.outer(p, p)))
    np.testing.assert_allclose(c.sum(axis=1), 0, atol=1e-15)


def test_delta_removes_square_bias_in_simulation():
    rng = np.random.default_rng(0)
    p, n, reps = 0.3, 20, 10_000
    draws = rng.random((reps, n)) < p
    means = draws.mean(axis=1)
    raw = means**2
    corrected = np.array(
        [stats.delta_correct(m**2, [[2.0]], stats.multinomial_sample_cov([m], n)[:1, :1], n) for m in means]
    )
    se = corrected.std(ddof=1) / np.sqrt(reps)
    assert abs(corrected.mean() - p**2) <= 3 * se
    assert raw.mean() - p**2 > 3 * se


def test_delta_removes_ratio_bias_in_simulation():
    rng = np.random.default_rng(1)
    n, reps = 5, 10_000
    mean = np.array([1.0, 1.0])
    cov = np.array([[0.01, 0.0], [0.0, 0.04]])
    truth = mean[0] / mean[1]
    samples = rng.multivariate_normal(mean, cov, size=(reps, n))
    xbar = samples.mean(axis=1)
    centered = samples - xbar[:, None, :]
    sample_cov = np.einsum("rna,rnb->rab", centered, centered) / (n - 1)
    raw = xbar[:, 0] / xbar[:, 1]
    corrected = np.empty(reps)
    for r in range(reps):
        x, y = xbar[r]
        hess = np.array([[0.0, -1 / y**2], [-1 / y**2, 2 * x / y**3]])
        corrected[r] = stats.delta_correct(raw[r], hess, sample_cov[r], n)
    se = corrected.std(ddof=1) / np.sqrt(reps)
    assert abs(corrected.mean() - truth) <= 3 * se
    assert raw.mean() - truth > 3 * se


# ---------------------------------------------------------------- bootstrap


def _linear_quantile(sorted_values, q):
    h = (len(sorted_values) - 1) * q
    lo = int(np.floor(h))
    hi = min(lo + 1, len(sorted_values) - 1)
    return sorted_values[lo] + (h - lo) * (sorted_values[hi] - sorted_values[lo])


def test_bc_symmetric_replicates_give_percentile_interval():
    reps = list(range(1, 101))
    res = stats.bootstrap_bc_interval(reps, 50, 0.16)
    assert res.z0 == pytest.approx(0.0, abs=1e-12)
    assert res.interval[0] == pytest.approx(_linear_quantile(reps, 0.16))
    assert res.interval[1] == pytest.approx(_linear_quantile(reps, 0.84))


def test_bc_shift_follows_bias_constant():
    from statistics import NormalDist

    reps = list(range(1, 101))
    res = stats.bootstrap_bc_interval(reps, 70, 0.16)
    nd = NormalDist()
    z0 = nd.inv_cdf(0.70)
    a1 = nd.cdf(2 * z0 + nd.inv_cdf(0.16))
    a2 = nd.cdf(2 * z0 + nd.inv_cdf(0.84))
    assert res.interval[0] == pytest.approx(_linear_quantile(reps, a1))
    assert res.interval[1] == pytest.approx(_linear_quantile(reps, a2))


def test_bc_clip():
    reps = np.linspace(0.9, 1.1, 401)
    res = stats.bootstrap_bc_interval(reps, 1.0, 0.16, clip_hi=1.0)
    assert res.interval[1] == 1.0
    assert res.interval[0] < 1.0


def test_bc_degenerate_and_order_invariance():
    res = stats.bootstrap_bc_interval([0.5] * 10, 0.5, 0.16)
    assert res.degenerate and res.interval == (0.5, 0.5)
    rng = np.random.default_rng(2)
    reps = rng.normal(size=200)
    a = stats.bootstrap_bc_interval(reps, 0.1, 0.16).interval
    b = stats.bootstrap_bc_interval(rng.permutation(reps), 0.1, 0.16).interval
    assert a == b
    with pytest.raises(InputError):
        stats.bootstrap_bc_interval([1.0], 1.0, 0.16)


# ---------------------------------------------------------------- binomial intervals


def test_clopper_pearson_endpoints():
    assert stats.clopper_pearson(0, 10, 0.05, "lower") == 0.0
    assert stats.clopper_pearson(10, 10, 0.05, "upper") == 1.0
    with pytest.raises(InputError):
        stats.clopper_pearson(3, 10, 0.05, "middle")


@pytest.mark.parametrize("k,n,alpha", [(5, 10, 0.025), (0, 7, 0.1), (3, 50, 0.16), (49, 50, 0.004), (12, 200, 0.05)])
def test_clopper_pearson_matches_beta_quantiles(k, n, alpha):
    for side in ("lower", "upper"):
        assert stats.clopper_pearson(k, n, alpha, side) == pytest.approx(cp_beta(k, n, alpha, side), abs=1e-8)


def test_clopper_pearson_coverage():
    rng = np.random.default_rng(3)
    n, alpha, trials = 40, 0.05, 10_000
    upper = np.array([stats.clopper_pearson(k, n, alpha, "upper") for k in range(n + 1)])
    lower = np.array([stats.clopper_pearson(k, n, alpha, "lower") for k in range(n + 1)])
    p = rng.uniform(0.02, 0.98, size=trials)
    k = rng.binomial(n, p)
    assert np.mean(upper[k] >= p) >= 1 - alpha - 0.01
    assert np.mean(lower[k] <= p) >= 1 - alpha - 0.01


def test_union_interval_defaults_and_zero_numerator():
    res = stats.union_ratio_interval((0, 1000), (300, 1000))
    assert res.lower == 0.0
    assert np.isfinite(res.upper) and not res.unbounded
    inf = stats.union_ratio_interval((3, 100), (0, 100))
    assert inf.unbounded and inf.upper == float("inf")
    with pytest.raises(InputError):
        stats.union_ratio_interval((1, 10), (5, 10), alpha=0.1, beta_upper=0.2)


def test_union_interval_coverage():
    rng = np.random.default_rng(4)
    trials, n = 10_000, 500
    pn, pd = 0.03, 0.4
    kn = rng.binomial(n, pn, size=trials)
    kd = rng.binomial(n, pd, size=trials)
    cache = {}
    hits = 0
    for a, b in zip(kn, kd):
        key = (int(a), int(b))
        if key not in cache:
            cache[key] = stats.union_ratio_interval((key[0], n), (key[1], n))
        r = cache[key]
        hits += r.lower <= pn / pd <= r.upper
    assert hits / trials >= 1 - 2 * stats.DEFAULT_ALPHA - 0.02


# ---------------------------------------------------------------- sample sizes


def test_chernoff_matches_direct_formula():
    p, eps, delta = 0.1, 0.1, 0.05
    a = p * (1 + eps)
    div = a * log(a / p) + (1 - a) * log((1 - a) / (1 - p))
    assert stats.chernoff_samples(p, eps, delta) == ceil(2 * log(1 / delta) / div)
    assert stats.chernoff_samples(p, eps, delta, cap=100) == 100


def test_chernoff_rejects_zero_divergence_and_is_monotone():
    with pytest.raises(InputError):
        stats.chernoff_samples(0.1, 0.0, 0.05)
    values = [stats.chernoff_samples(0.1, 0.1, d) for d in (0.01, 0.05, 0.1, 0.3)]
    assert values == sorted(values, reverse=True)


def test_hoeffding():
    assert stats.hoeffding_samples(0.05, 0.02, 2.0) == 0
    assert stats.hoeffding_samples(0.05, 0.02, 0.05) == ceil(log(2 / 0.05) / (2 * 0.001**2))
    ratio = stats.hoeffding_samples(0.5, 0.01, 0.05) / stats.hoeffding_samples(0.5, 0.02, 0.05)
    assert ratio == pytest.approx(4, rel=1e-3)


# ---------------------------------------------------------------- loss and time labeling


def test_loss_examples():
    assert stats.loss_from_single_survival(0.0) == 0.0
    assert stats.loss_from_single_survival(0.5) == 0.5
    assert stats.loss_from_single_survival(0.18) == pytest.approx(0.1, abs=1e-15)
    with pytest.raises(InputError):
        stats.loss_from_single_survival(0.51)


def test_loss_round_trip_exact_on_dyadic_grid():
    for j in range(33):
        p = j / 64
        assert stats.loss_from_single_survival(2 * p * (1 - p)) == p


@settings(max_examples=200)
@given(st.floats(0, 0.5))
def test_loss_round_trip(p):
    # conditioning of the square root near p = 1/2 limits float accuracy
    assert stats.loss_from_single_survival(2 * p * (1 - p)) == pytest.approx(p, abs=1e-7)


def test_time_labeling_examples():
    assert stats.time_label_two_particle({1: 1.0}, {3: 1.0}) == {(1, 3): 1.0}
    out = stats.time_label_two_particle({1: 0.5, 2: 0.5}, {1: 0.5, 2: 0.5})
    assert out == {(1, 1): 0.25, (1, 2): 0.5, (2, 2): 0.25}


def test_time_labeling_matches_distinguishable_model():
    rng = np.random.default_rng(5)
    u = linopt.random_unitary(4, rng)
    i = (2, 4)
    da = {l + 1: abs(u[l, 1]) ** 2 for l in range(4)}
    db = {l + 1: abs(u[l, 3]) ** 2 for l in range(4)}
    pairs = stats.time_label_two_particle(da, db)
    for (a, b), p in pairs.items():
        g = [0] * 4
        g[a - 1] += 1
        g[b - 1] += 1
        assert p == pytest.approx(linopt.distinguishable_probability(u, i, g), abs=1e-14)
