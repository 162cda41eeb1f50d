from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import trapezoid

from spdtnet.contact import LinkKind, SPDTLink, classify_times
from spdtnet.exposure import (DecayConfig, ExposureParams, concentration, infection_probability,
                              link_exposure, link_exposures, sample_decay_rate)

PARAMS = ExposureParams()
B_HOUR = 1.0 / 3600.0

# Frozen oracle values, computed independently (explicit Euler with dt = 1e-3 s over
# 40 h for the steady state; trapezoid rule at dt = 0.1 s for the 1 h dose).
EULER_STEADY_STATE = 0.4356687889
TRAPEZOID_ONE_HOUR_DOSE = 0.07212311591086575


def reference_concentration(t, ts, tl, b, params=PARAMS):
    """Direct solution of dC/dt = g/V - bC while the host is present, -bC after."""
    source = params.g / params.V
    c_at_leave = source / b * (1.0 - np.exp(-b * (tl - ts)))
    present = source / b * (1.0 - np.exp(-b * (np.clip(t, ts, tl) - ts)))
    return np.where(t < ts, 0.0, np.where(t <= tl, present, c_at_leave * np.exp(-b * (t - tl))))


def trapezoid_dose(ts, tl, tsp, tlp, b, dt=0.1, params=PARAMS):
    steps = int(round((tlp - tsp) / dt))
    grid = tsp + dt * np.arange(steps + 1)
    return params.p * trapezoid(reference_concentration(grid, ts, tl, b, params), dx=dt)


def random_config(rng, kind):
    b = 1.0 / (60.0 * rng.uniform(5, 300))
    ts = int(rng.integers(0, 86400))
    tl = ts + int(rng.integers(60, 3 * 3600))
    if kind == LinkKind.DIRECT_ONLY:
        tsp = int(rng.integers(ts, tl))
        tlp = int(rng.integers(tsp + 1, tl + 1))
    elif kind == LinkKind.MIXED:
        tsp = int(rng.integers(ts, tl))
        tlp = tl + int(rng.integers(1, 2 * 3600))
    else:
        tsp = tl + int(rng.integers(0, 3 * 3600))
        tlp = tsp + int(rng.integers(1, 2 * 3600))
    return ts, tl, tsp, tlp, b


def test_steady_state_matches_euler_oracle():
    assert concentration(1e7, 0, 2e7, PARAMS, B_HOUR) == pytest.approx(EULER_STEADY_STATE, rel=1e-8)
    assert PARAMS.g / (B_HOUR * PARAMS.V) == pytest.approx(EULER_STEADY_STATE, rel=1e-8)


def test_one_hour_direct_dose_frozen():
    dose = link_exposure(SPDTLink(0, 1, 0, 3600, 0, 3600), PARAMS, B_HOUR)
    assert dose == pytest.approx(TRAPEZOID_ONE_HOUR_DOSE, rel=1e-8)


def test_concentration_examples():
    assert concentration(5, 10, 20, PARAMS, B_HOUR) == 0.0
    assert concentration(10, 10, 20, PARAMS, B_HOUR) == 0.0
    peak = concentration(20, 10, 20, PARAMS, B_HOUR)
    assert concentration(20 + 3600, 10, 20, PARAMS, B_HOUR) == pytest.approx(peak / np.e)
    with pytest.raises(ValueError):
        concentration(-1, 0, 1, PARAMS, B_HOUR)


def test_trapezoid_equivalence_1000_configs():
    rng = np.random.default_rng(2024)
    kinds = [LinkKind.DIRECT_ONLY, LinkKind.MIXED, LinkKind.INDIRECT_ONLY] * 334
    worst = 0.0
    for kind in kinds[:1000]:
        ts, tl, tsp, tlp, b = random_config(rng, kind)
        assert classify_times(tl, tsp, tlp) == kind
        closed = float(link_exposures(ts, tl, tsp, tlp, b, PARAMS))
        worst = max(worst, abs(closed / trapezoid_dose(ts, tl, tsp, tlp, b) - 1))
    assert worst < 1e-6


def product_form_exact(ts, tl, tsp, tlp, b, params=PARAMS):
    getcontext().prec = 50
    b = Decimal(b)
    scale = Decimal(params.g) * Decimal(params.p) / (Decimal(params.V) * b * b)
    exp = lambda x: (-b * Decimal(x)).exp()
    return scale * (1 - exp(tl - ts)) * (exp(tsp - tl) - exp(tlp - tl))


def test_indirect_identity_10k_cases():
    rng = np.random.default_rng(7)
    n = 10_000
    b = 1.0 / (60.0 * rng.uniform(5, 300, n))
    ts = rng.integers(0, 86400, n)
    tl = ts + rng.integers(1, 4 * 3600, n)
    tsp = tl + rng.integers(0, 3 * 3600, n)
    tlp = tsp + rng.integers(1, 4 * 3600, n)
    closed = link_exposures(ts, tl, tsp, tlp, b, PARAMS)
    exact = np.array([float(product_form_exact(*args)) for args in
                      zip(ts.tolist(), tl.tolist(), tsp.tolist(), tlp.tolist(), b.tolist())])
    assert np.max(np.abs(closed / exact - 1)) < 1e-12


def test_epoch_scale_timestamps_are_stable():
    base = 1_700_000_000
    near = link_exposures(0, 600, 1200, 1800, B_HOUR, PARAMS)
    far = link_exposures(base, base + 600, base + 1200, base + 1800, B_HOUR, PARAMS)
    assert far == pytest.approx(near, rel=1e-12)


def test_half_infection_dose():
    assert infection_probability(2.1, 0.33) == pytest.approx(0.50, abs=0.01)
    assert infection_probability(2.1, 0.33) == pytest.approx(0.4999264, abs=1e-7)
    assert infection_probability(TRAPEZOID_ONE_HOUR_DOSE, 0.33) == pytest.approx(0.0235196, abs=1e-7)
    assert infection_probability(0.0, 0.33) == 0.0
    with pytest.raises(ValueError):
        infection_probability(-1.0, 0.33)


def test_decay_rate_median_and_bounds():
    cfg = DecayConfig()
    rates = sample_decay_rate(cfg, np.random.default_rng(0), 200_000)
    lo, hi = cfg.b_bounds
    assert rates.min() >= lo and rates.max() <= hi
    assert np.median(1.0 / (60.0 * rates)) == pytest.approx(60.0, rel=0.01)
    with pytest.raises(ValueError):
        DecayConfig(r_min=10, r_median=5, r_max=300)


def test_params_validation():
    with pytest.raises(ValueError):
        ExposureParams(V=0)
    assert ExposureParams.from_lpm(0.304, 7.5, 2512, 0.33) == PARAMS


times = st.integers(0, 20_000)
rates = st.floats(1.0 / (60 * 300), 1.0 / (60 * 5))


@given(times, times, times, times, rates)
def test_dose_non_negative_and_finite(a, c, d, e, b):
    ts, tl = sorted((a, c))
    tsp, tlp = sorted((d, e))
    tsp = max(tsp, ts)
    tlp = max(tlp, tsp)
    dose = float(link_exposures(ts, tl, tsp, tlp, b, PARAMS))
    assert np.isfinite(dose) and dose >= 0


@given(st.integers(1, 7200), st.integers(0, 7200), st.integers(1, 7200), st.integers(0, 3600), rates)
def test_dose_monotone_in_neighbor_stay(stay, lag, extra, more, b):
    tl = stay
    tsp = tl + lag
    shorter = float(link_exposures(0, tl, tsp, tsp + extra, b, PARAMS))
    longer = float(link_exposures(0, tl, tsp, tsp + extra + more, b, PARAMS))
    assert longer >= shorter * (1 - 1e-12)


@given(st.integers(1, 7200), st.integers(0, 7200), st.integers(1, 3600), st.integers(1, 3600), rates)
def test_later_arrival_gets_less_indirect_dose(stay, lag, extra, shift, b):
    early = float(link_exposures(0, stay, stay + lag, stay + lag + extra, b, PARAMS))
    late = float(link_exposures(0, stay, stay + lag + shift, stay + lag + shift + extra, b, PARAMS))
    assert late <= early * (1 + 1e-12)
