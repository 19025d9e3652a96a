import numpy as np
import pytest

from bosonid import bunching, hom, linopt
from bosonid.errors import InputError

SCALE = 10**12


def exact_counts(dist):
    return {k: int(round(v * SCALE)) for k, v in dist.items()}


def test_distributions_normalize():
    u = linopt.random_unitary(4, np.random.default_rng(0))
    for indist in (0.0, 0.6, 1.0):
        d = hom.two_particle_distribution(u, (1, 3), indist, 0.15)
        assert sum(d.values()) == pytest.approx(1.0, abs=1e-14)
        assert min(d.values()) >= 0
    assert sum(hom.single_particle_distribution(u, 2, 0.15).values()) == pytest.approx(1.0, abs=1e-14)


def test_parity_pairs_on_one_site_read_as_empty():
    u = linopt.beam_splitter()
    d = hom.two_particle_distribution(u, (1, 2), 1.0, 0.0)
    assert d[()] == pytest.approx(1.0)
    assert d[(1, 2)] == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("indist,p_loss", [(0.0, 0.1), (0.5, 0.2), (0.95, 0.05)])
def test_exact_frequencies_recover_coincidence_ratio(indist, p_loss):
    u = linopt.random_unitary(4, np.random.default_rng(1))
    i, sets = (1, 2), ((1, 2), (3, 4))
    t = bunching.tau(u, sets, i)
    est = hom.estimate_hom(
        exact_counts(hom.single_particle_distribution(u, 1, p_loss)),
        exact_counts(hom.single_particle_distribution(u, 2, p_loss)),
        exact_counts(hom.two_particle_distribution(u, i, indist, p_loss)),
        sets=sets,
        tau=t,
    )
    assert est.q_plugin == pytest.approx(1 - indist * t, abs=1e-9)
    assert est.p_loss == pytest.approx(p_loss, abs=1e-9)
    assert est.indist == pytest.approx(indist, abs=1e-8)


def test_no_coincidences_gives_full_indistinguishability():
    u = linopt.beam_splitter()
    est = hom.estimate_hom(
        exact_counts(hom.single_particle_distribution(u, 1, 0.1)),
        exact_counts(hom.single_particle_distribution(u, 2, 0.1)),
        exact_counts(hom.two_particle_distribution(u, (1, 2), 1.0, 0.1)),
        tau=1.0,
    )
    assert est.indist == 1.0
    assert est.lower_bound == pytest.approx(1.0, abs=1e-9)


def test_bootstrap_is_seeded_and_brackets_point():
    rng = np.random.default_rng(2)
    u = linopt.beam_splitter()
    sa = hom.sample_counts(hom.single_particle_distribution(u, 1, 0.1), 5000, rng)
    sb = hom.sample_counts(hom.single_particle_distribution(u, 2, 0.1), 5000, rng)
    pairs = hom.sample_counts(hom.two_particle_distribution(u, (1, 2), 0.8, 0.1), 5000, rng)
    a = hom.estimate_hom(sa, sb, pairs, tau=1.0, n_boot=300, seed=7)
    b = hom.estimate_hom(sa, sb, pairs, tau=1.0, n_boot=300, seed=7)
    assert a.interval == b.interval
    lo, hi = a.interval
    assert lo <= hi <= 1.0
    assert a.lower_bound_interval[0] <= 1 - a.q_plugin <= a.lower_bound_interval[1]
    with pytest.raises(InputError):
        hom.estimate_hom(sa, sb, pairs, n_boot=10)


def test_delta_correction_is_small_at_large_counts():
    rng = np.random.default_rng(3)
    u = linopt.beam_splitter()
    sa = hom.sample_counts(hom.single_particle_distribution(u, 1, 0.1), 10**5, rng)
    sb = hom.sample_counts(hom.single_particle_distribution(u, 2, 0.1), 10**5, rng)
    pairs = hom.sample_counts(hom.two_particle_distribution(u, (1, 2), 0.9, 0.1), 10**5, rng)
    est = hom.estimate_hom(sa, sb, pairs)
    assert est.q != est.q_plugin
    assert abs(est.q - est.q_plugin) < 1e-3


def test_input_validation():
    good = {(1,): 5, (2,): 5, (): 1}
    with pytest.raises(InputError):
        hom.estimate_hom({(1, 2): 3, (1,): 1}, good, {(1, 2): 1, (1,): 1, (): 5})
    with pytest.raises(InputError):
        hom.estimate_hom(good, good, {(1, 2): 1, (): 5}, sets=((1,), (1, 2)))
    with pytest.raises(InputError):
        hom.estimate_hom({}, good, {(1, 2): 1, (): 5})
