import itertools
import warnings
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bosonid import bunching as bu
from bosonid import hidden_dof as hd
from bosonid import linopt, symrep
from bosonid.errors import InputError

from oracles import naive_permanent


def distinct_inputs(n, m, rng):
    return tuple(int(x) + 1 for x in rng.choice(m, size=n, replace=False))


# ---------------------------------------------------------------- two-particle quantities


def test_beam_splitter_coincidences_vanish():
    u = linopt.beam_splitter()
    assert bu.coincidence_probability(u, (1, 2), (1, 2), 1.0) == pytest.approx(0.0, abs=1e-15)
    assert bu.coincidence_probability(u, (1, 2), (1, 2), 0.0) == pytest.approx(0.5, abs=1e-15)


def test_coincidence_is_affine_in_indistinguishability():
    rng = np.random.default_rng(1)
    for _ in range(20):
        u = linopt.random_unitary(5, rng)
        i, l = distinct_inputs(2, 5, rng), distinct_inputs(2, 5, rng)
        p0 = bu.coincidence_probability(u, i, l, 0.0)
        a, b, c, d = u[l[0] - 1, i[0] - 1], u[l[1] - 1, i[1] - 1], u[l[0] - 1, i[1] - 1], u[l[1] - 1, i[0] - 1]
        assert p0 == pytest.approx(abs(a * b) ** 2 + abs(c * d) ** 2, abs=1e-14)
        t = bu.tau(u, ([l[0]], [l[1]]), i)
        for indist in (0.3, 0.8, 1.0):
            assert bu.coincidence_probability(u, i, l, indist) == pytest.approx(p0 * (1 - indist * t), abs=1e-13)


def test_coincidence_matches_mixture_model():
    rng = np.random.default_rng(2)
    u = linopt.random_unitary(4, rng)
    rho_a = np.diag([1.0, 0.0])
    theta = 0.7
    v = np.array([np.cos(theta), np.sin(theta)])
    rho_b = np.outer(v, v)
    indist = float(np.trace(rho_a @ rho_b).real)
    aux = hd.ExplicitAuxiliaryState.product([rho_a, rho_b])
    g = (0, 1, 0, 1)
    assert bu.coincidence_probability(u, (1, 3), (2, 4), indist) == pytest.approx(
        hd.direct_model_probability(u, (1, 3), aux, g), abs=1e-13
    )


def test_tau_examples():
    assert bu.tau(linopt.beam_splitter(), ([1], [2]), (1, 2)) == pytest.approx(1.0, abs=1e-14)
    assert bu.tau(np.eye(2), ([1], [2]), (1, 2)) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_tau_at_most_one(seed):
    rng = np.random.default_rng(seed)
    u = linopt.random_unitary(6, rng)
    sites = rng.permutation(6) + 1
    cut = int(rng.integers(1, 6))
    s1, s2 = sites[:cut].tolist(), sites[cut:].tolist()
    assert bu.tau(u, (s1, s2), distinct_inputs(2, 6, rng)) <= 1 + 1e-12


def test_tau_degenerate_and_overlapping():
    u = np.eye(3)
    with pytest.raises(InputError):
        bu.tau(u, ([3], [2]), (1, 2))
    with pytest.raises(InputError):
        bu.tau(linopt.random_unitary(3, np.random.default_rng(0)), ([1, 2], [2]), (1, 2))


def test_tau_of_kronecker_product_columns():
    rng = np.random.default_rng(3)
    ux, uy = linopt.random_unitary(3, rng), linopt.random_unitary(4, rng)
    u = np.kron(ux, uy)

    def site(x, y):
        return 4 * x + y + 1

    y0 = 2
    inputs = (site(0, y0), site(2, y0))
    for a, b in [(0, 1), (1, 2), (0, 2)]:
        col_a = [site(a, y) for y in range(4)]
        col_b = [site(b, y) for y in range(4)]
        full = bu.tau(u, (col_a, col_b), inputs)
        single = bu.tau(ux, ([a + 1], [b + 1]), (1, 3))
        assert full == pytest.approx(single, abs=1e-12)


def test_indistinguishability_estimator_examples():
    assert bu.estimate_indistinguishability(0.0, 1.0) == 1.0
    assert bu.estimate_indistinguishability(1.0, 0.7) == 0.0
    assert bu.estimate_indistinguishability(0.01, 0.8) == 1.0
    assert (1 - 0.01) / 0.8 == pytest.approx(1.2375)
    assert bu.indistinguishability_lower_bound(0.25) == 0.75
    with pytest.raises(InputError):
        bu.estimate_indistinguishability(0.5, 0.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1), st.floats(0.01, 1))
def test_estimator_round_trip(indist, t):
    q = bu.coincidence_ratio(indist, t)
    assert bu.estimate_indistinguishability(q, t) == pytest.approx(min(indist, 1.0), abs=1e-12)
    assert bu.indistinguishability_lower_bound(q) <= indist + 1e-12


def _vacuum_inputs(indist, p_loss, u):
    same_site = sum(abs(u[l, 0]) ** 2 * abs(u[l, 1]) ** 2 for l in range(u.shape[0]))
    p2 = p_loss**2 + (1 - p_loss) ** 2 * (1 + indist) * same_site
    observed_same_site = (1 - p_loss) ** 2 * same_site
    return p2, p_loss, p_loss, observed_same_site


@pytest.mark.parametrize("indist", [0.0, 0.4, 1.0])
def test_vacuum_estimator_inverts_forward_model(indist):
    u = linopt.beam_splitter()
    assert bu.indistinguishability_from_vacuum(*_vacuum_inputs(indist, 0.1, u)) == pytest.approx(indist, abs=1e-13)
    u = linopt.random_unitary(5, np.random.default_rng(4))
    assert bu.indistinguishability_from_vacuum(*_vacuum_inputs(indist, 0.25, u)) == pytest.approx(indist, abs=1e-13)


def test_vacuum_estimator_numerator_zero():
    assert bu.indistinguishability_from_vacuum(0.02 + 0.3, 0.1, 0.2, 0.3) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(InputError):
        bu.indistinguishability_from_vacuum(0.1, 0.1, 0.1, 0.0)


# ---------------------------------------------------------------- immanants


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_immanant_endpoints(n):
    rng = np.random.default_rng(n)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    assert bu.normalized_immanant(a, (n,)) == pytest.approx(naive_permanent(a), rel=1e-10)
    assert bu.normalized_immanant(a, (1,) * n) == pytest.approx(np.linalg.det(a), rel=1e-10)
    for lam in symrep.partitions_of(n):
        assert bu.normalized_immanant(np.eye(n), lam) == pytest.approx(1.0, abs=1e-14)


def test_immanant_of_hermitian_is_real():
    rng = np.random.default_rng(5)
    for n in (3, 4):
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        h = a + a.conj().T
        for lam in symrep.partitions_of(n):
            assert abs(bu.normalized_immanant(h, lam).imag) <= 1e-10


def test_immanant_shape_mismatch():
    with pytest.raises(InputError):
        bu.normalized_immanant(np.eye(3), (2,))


# ---------------------------------------------------------------- bunching


def _outcome_sum(u, i, subset, prob):
    m, n = u.shape[0], len(i)
    inside = {s - 1 for s in subset}
    return sum(prob(g) for g in linopt.occupations(n, m) if all(c == 0 or s in inside for s, c in enumerate(g)))


def test_bunching_matches_outcome_sum_for_every_subset():
    rng = np.random.default_rng(6)
    for n in (1, 2, 3):
        for m in range(n, 6):
            u = linopt.random_unitary(m, rng)
            i = distinct_inputs(n, m, rng)
            mixes = {"bos": hd.bosonic_mixture(n), "dist": hd.plancherel_weights(n), "ferm": hd.fermionic_mixture(n)}
            if n == 3:
                mixes["mixed"] = hd.thermal_partition_weights(0.4, n)
            for size in range(1, m + 1):
                for subset in itertools.combinations(range(1, m + 1), size):
                    for mix in mixes.values():
                        oracle = _outcome_sum(u, i, subset, lambda g: hd.mixture_probability(mix, u, i, g))
                        assert bu.generalized_bunching(u, i, subset, mix) == pytest.approx(oracle, abs=1e-10)


def test_bunching_with_plancherel_is_distinguishable_outcome_sum():
    rng = np.random.default_rng(7)
    u = linopt.random_unitary(5, rng)
    i = (1, 2, 4)
    for subset in [(1, 2), (2, 3, 5), (1, 3, 4, 5)]:
        oracle = _outcome_sum(u, i, subset, lambda g: linopt.distinguishable_probability(u, i, g))
        assert bu.generalized_bunching(u, i, subset, hd.plancherel_weights(3)) == pytest.approx(oracle, abs=1e-12)


def test_bunching_over_all_sites_is_one():
    u = linopt.random_unitary(4, np.random.default_rng(8))
    for lam in symrep.partitions_of(3):
        assert bu.generalized_bunching(u, (1, 2, 3), (1, 2, 3, 4), hd.PartitionMixture.single(lam)) == pytest.approx(1.0)


def test_averaged_bunching_equals_subset_average():
    rng = np.random.default_rng(9)
    for n, m in [(2, 4), (3, 5), (3, 6)]:
        u = linopt.random_unitary(m, rng)
        i = distinct_inputs(n, m, rng)
        mix = hd.thermal_partition_weights(0.5, n)
        for k in range(n, m + 1):
            assert bu.average_generalized_bunching(u, i, k, mix) == pytest.approx(
                bu.subset_average_bunching(u, i, k, mix), abs=1e-12
            )


def test_fermionic_average_is_constant():
    rng = np.random.default_rng(10)
    for n, m in [(2, 4), (3, 5), (3, 6)]:
        u = linopt.random_unitary(m, rng)
        for k in range(n, m + 1):
            floor = bu.fermionic_floor(m, n, k)
            assert floor * comb(m, k) == comb(m - n, k - n)
            value = bu.average_generalized_bunching(u, distinct_inputs(n, m, rng), k, hd.fermionic_mixture(n))
            assert value == pytest.approx(float(floor), abs=1e-12)


def test_averaged_bunching_monotone_in_k():
    rng = np.random.default_rng(11)
    for n, m in [(2, 5), (3, 6)]:
        u = linopt.random_unitary(m, rng)
        i = distinct_inputs(n, m, rng)
        for mix in (hd.bosonic_mixture(n), hd.plancherel_weights(n), hd.fermionic_mixture(n)):
            values = [bu.average_generalized_bunching(u, i, k, mix) for k in range(n, m + 1)]
            assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))
            assert values[-1] == pytest.approx(1.0)


def test_averaged_bunching_below_particle_number_warns():
    u = linopt.random_unitary(4, np.random.default_rng(12))
    with pytest.warns(UserWarning):
        value = bu.average_generalized_bunching(u, (1, 2, 3), 2, hd.bosonic_mixture(3))
    assert value == pytest.approx(bu.subset_average_bunching(u, (1, 2, 3), 2, hd.bosonic_mixture(3)), abs=1e-12)
    with pytest.raises(InputError):
        bu.average_generalized_bunching(u, (1, 2), 5, hd.bosonic_mixture(2))


def test_optimal_k():
    assert bu.optimal_k(10, 2) == 5
    assert bu.optimal_k(9, 3) == 6
    assert bu.optimal_k(7, 3) == 5
    assert bu.optimal_k(12, 5) == 10


# ---------------------------------------------------------------- Monte Carlo


def test_mc_deterministic_distinct_sites():
    data = [{1: 100}, {3: 50}]
    assert bu.modified_bunching_mc(data, 4, 3, 1000, seed=0) == pytest.approx(0.5)


def test_mc_pairs_on_one_site_cancel_and_loss_is_ignored():
    assert bu.modified_bunching_mc([{2: 10}, {2: 7}], 4, 3, 500, seed=1) == pytest.approx(1.0)
    assert bu.modified_bunching_mc([{None: 5}, {4: 3}], 4, 2, 500, seed=1) == pytest.approx(comb(3, 1) / comb(4, 2))


def _exact_parity_average(data, m, k):
    dists = []
    for d in data:
        total = sum(d.values())
        dists.append([(s, c / total) for s, c in d.items()])
    value = 0.0
    for combo in itertools.product(*dists):
        occ = [0] * m
        p = 1.0
        for s, q in combo:
            p *= q
            if s is not None:
                occ[s - 1] ^= 1
        value += p * bu.binomial_ratio(m, k, sum(occ))
    return value


def test_mc_converges_to_exact_average():
    data = [{1: 30, 2: 50, None: 20}, {2: 40, 3: 40, 4: 20}, {1: 10, 4: 80, None: 10}]
    exact = _exact_parity_average(data, 5, 3)
    est = bu.modified_bunching_mc(data, 5, 3, 200_000, seed=3)
    assert est == pytest.approx(exact, abs=5e-3)


def test_mc_seed_stability():
    data = [{1: 3, 2: 5}, {2: 4, 3: 4}]
    a = bu.modified_bunching_mc(data, 4, 2, 10_000, seed=42)
    b = bu.modified_bunching_mc(data, 4, 2, 10_000, seed=42)
    assert a == b


def test_mc_input_validation():
    with pytest.raises(InputError):
        bu.modified_bunching_mc([], 4, 2, 10, seed=0)
    with pytest.raises(InputError):
        bu.modified_bunching_mc([{5: 1}], 4, 2, 10, seed=0)
    with pytest.raises(InputError):
        bu.modified_bunching_mc([{1: 0}], 4, 2, 10, seed=0)


# ---------------------------------------------------------------- permanental dominance


def test_dominance_scan_reports_no_violation_on_small_sample():
    rng = np.random.default_rng(13)
    for n in (2, 3, 4):
        violations = bu.permanental_dominance_scan(n, n + 2, 40, rng)
        assert violations == []
