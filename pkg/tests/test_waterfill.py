"""Water-filling: closed forms, KKT conditions, optimality, saturation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import sampcap as sc
from sampcap.errors import ConvergenceError, DomainError, NoUsableSpectrumError
from sampcap.spectrum import Constant, Grid, SnrDensity, SpectralDensity
from sampcap.support import FrequencySet
from sampcap.waterfill import capacity_upper_bound, water_level, waterfill_over_set

HALF_LN4 = 0.5 * math.log(4.0)
LN2_5 = math.log(2.5)


def _segment_channel(gammas, width=0.5):
    """Piecewise-constant SNR: one gamma per segment, unit noise."""
    n = len(gammas)
    half = n * width / 2.0
    pieces = []
    for i, gam in enumerate(gammas):
        lo = -half + i * width
        pieces.append((lo, lo + width, Constant(float(gam))))
    gain = SpectralDensity.gain(pieces)
    noise = SpectralDensity.noise([(-half, half, Constant(1.0))], 1.0)
    return SnrDensity(gain, noise, (-half, half))


# --- examples ---------------------------------------------------------------

def test_flat_band_closed_form(flat, grid_of):
    g = grid_of(flat)
    B = FrequencySet.from_intervals([(-0.5, 0.5)])
    wf = waterfill_over_set(flat, B, 3.0, g)
    assert wf.nu == pytest.approx(4.0, abs=1e-9)
    assert wf.capacity_nats == pytest.approx(HALF_LN4, abs=1e-9)
    assert wf.total_power == pytest.approx(3.0, rel=1e-9)


def test_zero_power(flat, grid_of):
    g = grid_of(flat)
    B = FrequencySet.from_intervals([(-0.5, 0.5)])
    wf = waterfill_over_set(flat, B, 0.0, g)
    assert wf.capacity_nats == 0.0
    assert np.all(wf.allocation == 0.0)


def test_rolloff_analytic_value(rolloff, grid_of):
    # with budget 2-2ln2 the water level sits at exactly 2 and the rate
    # integral evaluates to ln2 - 1/2
    g = grid_of(rolloff)
    B = FrequencySet.from_intervals([(-0.5, 0.5)])
    P = 2.0 - 2.0 * math.log(2.0)
    wf = waterfill_over_set(rolloff, B, P, g)
    assert wf.nu == pytest.approx(2.0, abs=1e-6)
    assert wf.capacity_nats == pytest.approx(math.log(2.0) - 0.5, abs=1e-6)


def test_upper_bound_flat(flat, grid_of):
    g = grid_of(flat)
    _, wf1 = capacity_upper_bound(flat, 1.0, 3.0, g)
    assert wf1.capacity_nats == pytest.approx(HALF_LN4, abs=1e-9)
    _, wf2 = capacity_upper_bound(flat, 2.0, 3.0, g)
    assert wf2.capacity_nats == pytest.approx(LN2_5, abs=1e-9)
    assert wf2.nu == pytest.approx(2.5, abs=1e-9)


def test_upper_bound_edge_band(edge_band, grid_of):
    g = grid_of(edge_band)
    sol, wf = capacity_upper_bound(edge_band, 1.0, 1.0, g)
    assert wf.nu == pytest.approx(1.25, abs=1e-9)
    assert wf.capacity_nats == pytest.approx(0.5 * math.log(5.0), abs=1e-9)
    assert len(sol.set.intervals) == 2


# --- error paths ------------------------------------------------------------

def test_negative_power_rejected(flat, grid_of):
    g = grid_of(flat)
    B = FrequencySet.from_intervals([(-0.5, 0.5)])
    with pytest.raises(DomainError):
        waterfill_over_set(flat, B, -1.0, g)


def test_dead_band_rejected(flat, grid_of):
    g = grid_of(flat)
    dead = FrequencySet.from_intervals([(1.1, 1.4)])  # inside window, zero gain
    with pytest.raises(NoUsableSpectrumError):
        waterfill_over_set(flat, dead, 1.0, g)
    # zero power on a dead band is fine
    wf = waterfill_over_set(flat, dead, 0.0, g)
    assert wf.capacity_nats == 0.0


def test_set_outside_window_rejected(flat, grid_of):
    g = grid_of(flat)
    with pytest.raises(DomainError):
        waterfill_over_set(flat, FrequencySet.from_intervals([(1.0, 2.0)]), 1.0, g)


def test_water_level_iteration_cap():
    with pytest.raises(ConvergenceError):
        water_level([1.0, 2.0, 7.0], [0.3, 0.3, 0.4], 5.0, max_iter=1)


def test_water_level_extends_naive_bracket():
    # a steep profile puts the root above min(1/gamma) + P/measure; the
    # solver must grow the bracket rather than bisect a root-free interval
    u = np.array([1.0, 10.0, 100.0])
    w = np.array([0.01, 0.01, 0.98])
    P = 1.0
    naive_top = u.min() + P / w.sum()
    nu = water_level(u, w, P)
    assert nu > naive_top
    assert np.sum(w * np.maximum(nu - u, 0.0)) == pytest.approx(P, rel=1e-9)


# --- invariants -------------------------------------------------------------

def test_kkt_complementarity(all_channels):
    rng = np.random.default_rng(5)
    for s in all_channels.values():
        g = Grid.for_snr(s, 1024)
        span = s.window[1] - s.window[0]
        for _ in range(5):
            f_s = float(rng.uniform(0.2, span))
            P = float(rng.uniform(0.1, 20.0))
            sol, wf = capacity_upper_bound(s, f_s, P, g)
            gamma = s.gamma_clipped(g.centers)
            on = wf.allocation > 0
            assert np.all(wf.nu * gamma[on] >= 1.0 - 1e-9)
            off = (~on) & (gamma > 0) & (wf.allocation == 0.0)
            # off-bins inside the selected set must sit at or below the water
            inb = np.zeros(g.n_bins, dtype=bool)
            for a, b in sol.set.intervals:
                inb |= (g.centers >= a) & (g.centers <= b)
            assert np.all(wf.nu * gamma[off & inb] <= 1.0 + 1e-9)
            assert wf.total_power == pytest.approx(P, rel=1e-6)


def test_capacity_formula_consistency(rolloff, grid_of):
    g = grid_of(rolloff)
    sol, wf = capacity_upper_bound(rolloff, 1.3, 2.0, g)
    gamma = rolloff.gamma_clipped(g.centers)
    # boundary bins count with their overlap against the set, not full width
    overlap = np.zeros(g.n_bins)
    for a, b in sol.set.intervals:
        overlap += np.maximum(
            np.minimum(g.edges[1:], b) - np.maximum(g.edges[:-1], a), 0.0
        )
    on = wf.allocation > 0
    direct = float(np.sum(0.5 * np.log(wf.nu * gamma[on]) * overlap[on]))
    assert wf.capacity_nats == pytest.approx(direct, rel=1e-12)


def test_monotone_in_rate_and_power(all_channels):
    for s in all_channels.values():
        g = Grid.for_snr(s, 1024)
        span = s.window[1] - s.window[0]
        caps = [
            capacity_upper_bound(s, float(f_s), 3.0, g)[1].capacity_nats
            for f_s in np.linspace(0.2, span, 20)
        ]
        assert all(b >= a - 1e-9 for a, b in zip(caps, caps[1:]))
        powers = [
            capacity_upper_bound(s, 1.0, float(P), g)[1].capacity_nats
            for P in np.linspace(0.1, 10.0, 15)
        ]
        assert all(b > a for a, b in zip(powers, powers[1:]))


def test_nyquist_saturation(flat, rolloff):
    for s, support_measure in ((flat, 2.0), (rolloff, 2.0)):
        g = Grid.for_snr(s, 2048)
        span = s.window[1] - s.window[0]
        caps = [
            capacity_upper_bound(s, f_s, 3.0, g)[1].capacity_nats
            for f_s in np.linspace(support_measure, span, 4)
        ]
        assert max(caps) - min(caps) <= 1e-12


def test_monte_carlo_domination():
    rng = np.random.default_rng(17)
    gammas = rng.uniform(0.2, 5.0, 6)
    s = _segment_channel(gammas)
    g = Grid.aligned(s.window, 6, s.breakpoints())
    assert g.n_bins == 6
    B = FrequencySet.from_intervals([s.window])
    P = 4.0
    wf = waterfill_over_set(s, B, P, g)

    n_draws = 20000
    raw = rng.exponential(1.0, (n_draws, 6))
    # normalize each draw to the same total power (density * width)
    dens = raw * (P / (raw @ g.widths))[:, None]
    rates = 0.5 * np.log1p(gammas[None, :] * dens) @ g.widths
    assert float(rates.max()) <= wf.capacity_nats + 1e-9


def test_ternary_search_two_bins():
    gammas = np.array([3.0, 0.8])
    s = _segment_channel(gammas, width=1.0)
    g = Grid.aligned(s.window, 2, s.breakpoints())
    B = FrequencySet.from_intervals([s.window])
    P = 2.5
    wf = waterfill_over_set(s, B, P, g)

    w1, w2 = g.widths

    def rate(x):
        return 0.5 * (
            w1 * math.log1p(gammas[0] * x / w1) + w2 * math.log1p(gammas[1] * (P - x) / w2)
        )

    lo, hi = 0.0, P
    for _ in range(300):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if rate(m1) < rate(m2):
            lo = m1
        else:
            hi = m2
    assert wf.capacity_nats == pytest.approx(rate(0.5 * (lo + hi)), abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(
    st.floats(min_value=0.05, max_value=8.0),
    st.floats(min_value=0.2, max_value=2.4),
)
def test_budget_always_met_property(P, f_s):
    s = sc.rolloff_channel()
    g = Grid.for_snr(s, 512)
    _, wf = capacity_upper_bound(s, f_s, P, g)
    assert wf.total_power == pytest.approx(P, rel=1e-6)
    assert np.all(wf.allocation >= 0.0)
