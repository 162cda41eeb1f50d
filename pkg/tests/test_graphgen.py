import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from spdtnet.contact import LinkKind
from spdtnet.fitting import empirical_pmf, powerlaw_mixture_pmf, rse
from spdtnet.graphgen import (ADNParams, GraphGenParams, NeighborSelector, generate_adn_baseline,
                              generate_network, generate_timelines, link_delay_from_uniform,
                              link_delay_pmf, sample_activation_degree, sample_active_period,
                              sample_attractiveness, sample_link_delay, sample_link_duration,
                              sample_waiting_period, select_neighbor,
                              stationary_active_probability)

# q / (q + rho) at rho = 0.085, q = 0.0048, evaluated by hand
PI_ACTIVE = 0.05345211581
MILLION = 1_000_000


def quad_mixture_pmf(d, alpha, xi, psi):
    """Oracle: integrate the geometric pmf against the power-law density numerically."""
    norm = xi ** -alpha - psi ** -alpha
    dens = lambda lam: alpha * lam ** (-alpha - 1) / norm * (1 - lam) * lam ** (d - 1)
    return quad(dens, xi, psi, epsabs=1e-13, epsrel=1e-11)[0]


def test_active_period_moments():
    draws = sample_active_period(0.085, np.random.default_rng(1), MILLION)
    assert draws.mean() == pytest.approx(1 / 0.085, abs=0.1)
    assert np.mean(draws == 1) == pytest.approx(0.085, abs=0.002)
    assert np.all(sample_active_period(1.0, np.random.default_rng(1), 100) == 1)


def test_waiting_period_moments():
    draws = sample_waiting_period(0.0048, np.random.default_rng(2), MILLION)
    assert draws.mean() == pytest.approx(1 / 0.0048, rel=0.01)
    assert draws.var() == pytest.approx((1 - 0.0048) / 0.0048 ** 2, rel=0.02)
    assert np.all(sample_waiting_period(1.0, np.random.default_rng(1), 100) == 1)


def test_stationary_probability():
    assert stationary_active_probability(0.085, 0.0048) == pytest.approx(PI_ACTIVE, abs=1e-10)
    assert stationary_active_probability(0.2, 0.2) == 0.5


def test_activation_degree_moments():
    draws = sample_activation_degree(0.32, np.random.default_rng(3), MILLION)
    assert draws.mean() == pytest.approx(1 / 0.68, abs=0.01)
    assert np.all(sample_activation_degree(0.0, np.random.default_rng(3), 100) == 1)


def test_mixture_pmf_matches_quadrature():
    for d in (1, 2, 5, 20, 60):
        assert powerlaw_mixture_pmf(d, 2.963, 0.26, 0.999) == pytest.approx(
            quad_mixture_pmf(d, 2.963, 0.26, 0.999), rel=1e-7)


def test_heterogeneous_degrees_match_mixture():
    rng = np.random.default_rng(4)
    lam = sample_attractiveness(2.963, 0.26, 0.999, rng, MILLION)
    assert lam.min() >= 0.26 and lam.max() <= 0.999
    support, observed = empirical_pmf(sample_activation_degree(lam, rng))
    reference = np.array([quad_mixture_pmf(int(d), 2.963, 0.26, 0.999) for d in support])
    assert rse(observed, reference) < 0.02


def test_link_delay_pmf_and_sampler():
    pmf = link_delay_pmf(np.arange(48), 0.02, 12, 36)
    assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
    assert link_delay_pmf(48, 0.02, 12, 36) == 0.0
    far = link_delay_pmf(np.arange(5), 0.02, 10_000, 36)
    assert far == pytest.approx(0.02 * 0.98 ** np.arange(5))
    draws = sample_link_delay(0.02, np.full(MILLION, 12), 36, np.random.default_rng(5))
    assert draws.min() >= 0 and draws.max() <= 47
    counts = np.bincount(draws, minlength=48) / MILLION
    assert np.max(np.abs(counts - pmf)) < 0.003
    # the top of the unit interval maps to the last support point
    assert link_delay_from_uniform(np.nextafter(1.0, 0.0), 0.02, 12, 36) == 47


def test_link_duration():
    draws = sample_link_duration(0.085, np.random.default_rng(6), MILLION)
    assert draws.mean() == pytest.approx(1 / 0.085, abs=0.1)
    assert np.all(sample_link_duration(1.0, np.random.default_rng(6), 10) == 1)


def test_long_run_active_fraction():
    rng = np.random.default_rng(8)
    total = 10 ** 7
    active = rng.geometric(0.085, 200_000)
    waiting = rng.geometric(0.0048, 200_000)
    ends = np.cumsum(active + waiting)
    cycles = int(np.searchsorted(ends, total))
    assert cycles < len(ends)
    fraction = active[:cycles].sum() / ends[cycles - 1]
    assert fraction == pytest.approx(PI_ACTIVE, rel=0.01)


def test_timelines_do_not_overlap():
    node, start, length = generate_timelines(500, 2016, 0.085, 0.0048, np.random.default_rng(9))
    order = np.lexsort((start, node))
    node, start, length = node[order], start[order], length[order]
    same = node[1:] == node[:-1]
    assert np.all(start[1:][same] > (start + length)[:-1][same])
    assert np.all(start < 2016) and np.all(length >= 1)


def test_selector_reinforcement_frequency():
    rng = np.random.default_rng(10)
    repeats = 0
    trials = 20_000
    for _ in range(trials):
        sel = NeighborSelector(50, 0.1, 0.0, rng)
        first = select_neighbor(sel, 0)
        repeats += select_neighbor(sel, 0) == first
    assert repeats / trials == pytest.approx(1 / 1.1, abs=0.01)


def test_selector_triadic_closure_with_mu_one():
    sel = NeighborSelector(100, 0.0, 1.0, np.random.default_rng(11))
    sel.contacts[0], sel.contact_sets[0] = [1], {1}
    sel.contacts[1], sel.contact_sets[1] = [2, 3, 0], {2, 3, 0}
    for _ in range(20):
        assert select_neighbor(sel, 0, {1}) in {2, 3} or len(sel.contacts[0]) > 2


def test_selector_never_returns_self_or_used():
    sel = NeighborSelector(4, 0.1, 0.4, np.random.default_rng(12))
    for _ in range(200):
        used = set()
        for _ in range(3):
            v = select_neighbor(sel, 0, used)
            assert v != 0 and v not in used
            used.add(v)
    assert 0 not in sel.contact_sets[0]


SMALL = GraphGenParams(N=300, T_days=3)


def test_generator_is_deterministic():
    a = generate_network(SMALL, seed=5)
    assert a == generate_network(SMALL, seed=5)
    assert a != generate_network(SMALL, seed=6)
    assert a.name == "GDT"


def test_zero_days_is_empty():
    assert len(generate_network(GraphGenParams(N=10, T_days=0), seed=1)) == 0


def test_generated_links_respect_window():
    params = GraphGenParams(N=2000, T_days=7)
    net = generate_network(params, seed=13)
    delta = params.delta_steps * params.dt_s
    assert np.all(net.tsp <= net.tl + delta)
    assert np.all(net.host != net.nbr)
    assert np.all(net.tlp <= params.T_days * 86400)
    assert np.mean(net.kinds() == LinkKind.INDIRECT_ONLY) > 0
    # daily activation frequency z rho q / (q + rho), about 1.31 per day
    details = generate_network(GraphGenParams(N=10_000, T_days=7), seed=14, return_details=True)
    per_day = details.copies / (10_000 * 7)
    assert per_day == pytest.approx(288 * 0.085 * 0.0048 / (0.0048 + 0.085), rel=0.03)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2), st.integers(0, 1000),
       st.sampled_from(["homogeneous", "heterogeneous"]))
def test_generator_invariants(n_nodes, days, seed, mode):
    params = GraphGenParams(N=n_nodes, T_days=days, degree_mode=mode, rho=0.2, q=0.05)
    net = generate_network(params, seed=seed)
    assert np.all(net.host != net.nbr)
    assert np.all((net.ts <= net.tl) & (net.tsp <= net.tlp) & (net.ts <= net.tsp))
    assert np.all(net.tsp <= net.tl + params.delta_steps * params.dt_s)
    assert np.all(net.ts % params.dt_s == 0)


def test_param_validation():
    with pytest.raises(ValueError):
        GraphGenParams(rho=0)
    with pytest.raises(ValueError):
        GraphGenParams(degree_mode="heterogeneous", xi=0.9, psi=0.5)
    with pytest.raises(ValueError):
        GraphGenParams(N=1)
    assert GraphGenParams().p_b_effective == 0.085


def test_adn_baseline():
    params = ADNParams(N=500, T_days=20, activity=0.1)
    net = generate_adn_baseline(params, seed=3)
    assert net == generate_adn_baseline(params, seed=3)
    assert np.all(net.kinds() == LinkKind.DIRECT_ONLY)
    assert np.all(net.tl - net.ts == params.dt_s)
    steps = 86400 // params.dt_s
    assert len(net) / (500 * 20 * steps * 3) == pytest.approx(0.1, rel=0.03)
