"""Aliased matrix assembly, whitened eigenvalues, periodic-system capacity."""

import json
import math

import numpy as np
import pytest
import scipy.linalg

import sampcap as sc
from sampcap.aliasing import (
    AliasWindowError,
    BranchChain,
    DegenerateSamplerError,
    LtiStage,
    Modulator,
    PeriodicSamplingSystem,
    alias_grid,
    assemble_matrices,
    assemble_over_grid,
    auto_alias_count,
    parse_system_spec,
    periodic_capacity,
    system_spec_json,
    whitened_eigenvalues,
)
from sampcap.errors import DomainError, NoUsableSpectrumError, ValidationError
from sampcap.spectrum import Constant, Grid, SnrDensity, SpectralDensity
from sampcap.waterfill import capacity_upper_bound

from conftest import make_random_system

HALF_LN3 = 0.5 * math.log(3.0)
HALF_LN4 = 0.5 * math.log(4.0)
HALF_LN45 = 0.5 * math.log(4.5)


def _allpass_system(offsets=(0.0,), T_q=1.0):
    return PeriodicSamplingSystem(T_q, (BranchChain((LtiStage.allpass(),), offsets),))


def _brickwall_system(lo=-0.5, hi=0.5, T_q=1.0, offsets=(0.0,)):
    return PeriodicSamplingSystem(
        T_q, (BranchChain((LtiStage.brickwall([(lo, hi)]),), offsets),)
    )


# --- assembly examples ------------------------------------------------------

def test_allpass_eigenvalue(flat):
    am = assemble_matrices(_allpass_system(), flat, 2, 0.2)
    assert am.eigenvalues.shape == (1, 1)
    # three unit noise aliases, one in-band: |<w, h>|^2 = 1/3 * 2 = 2/3
    assert am.eigenvalues[0, 0] == pytest.approx(2.0 / 3.0, abs=1e-12)


def test_brickwall_eigenvalue(flat):
    am = assemble_matrices(_brickwall_system(), flat, 2, 0.2)
    assert am.eigenvalues[0, 0] == pytest.approx(1.0, abs=1e-12)


def test_two_sample_allpass_eigenvalues(flat):
    am = assemble_matrices(_allpass_system(offsets=(0.0, 0.5)), flat, 2, 0.2)
    lam = np.sort(am.eigenvalues[0])[::-1]
    # out-of-band noise at f+1 folds in and costs the second direction half
    # its SNR: {1, 1/2}, not {1, 1}
    assert lam[0] == pytest.approx(1.0, abs=1e-12)
    assert lam[1] == pytest.approx(0.5, abs=1e-12)


def test_zero_channel_all_eigenvalues_zero():
    gain = SpectralDensity.gain([(-1.0, 1.0, Constant(0.0))])
    noise = SpectralDensity.noise([(-1.5, 1.5, Constant(1.0))], 1.0)
    dead = SnrDensity(gain, noise, (-1.5, 1.5))
    am = assemble_matrices(_allpass_system(), dead, 2, 0.2)
    assert np.all(am.eigenvalues == 0.0)
    g = alias_grid(_allpass_system(), dead, 64)
    with pytest.raises(NoUsableSpectrumError):
        periodic_capacity(_allpass_system(), dead, 1.0, g)


def test_eigenvalues_real_nonnegative_sorted(flat):
    sysd = _allpass_system(offsets=(0.0, 0.3, 0.7))
    am = assemble_matrices(sysd, flat, 2, 0.1)
    lam = am.eigenvalues[0]
    assert lam.shape == (3,)
    assert np.all(lam >= 0.0)
    assert np.all(np.diff(lam) <= 1e-15)


def test_frequency_domain_check(flat):
    with pytest.raises(DomainError):
        assemble_matrices(_allpass_system(), flat, 2, 0.8)  # beyond f_q/2


# --- capacity examples ------------------------------------------------------

def test_allpass_capacity(flat):
    sysd = _allpass_system()
    g = alias_grid(sysd, flat, 256)
    wf = periodic_capacity(sysd, flat, 3.0, g)
    assert wf.nu == pytest.approx(4.5, abs=1e-9)
    assert wf.capacity_nats == pytest.approx(HALF_LN3, abs=1e-9)


def test_brickwall_capacity_meets_bound(flat):
    sysd = _brickwall_system()
    g = alias_grid(sysd, flat, 256)
    wf = periodic_capacity(sysd, flat, 3.0, g)
    assert wf.capacity_nats == pytest.approx(HALF_LN4, abs=1e-9)


def test_two_sample_allpass_capacity(flat):
    # noise folding from outside the signal band keeps this strictly below
    # the rate-2 bound ln(2.5): eigenvalues {1, 1/2} water-fill to 0.5*ln(4.5)
    sysd = _allpass_system(offsets=(0.0, 0.5))
    g = alias_grid(sysd, flat, 256)
    wf = periodic_capacity(sysd, flat, 3.0, g)
    assert wf.capacity_nats == pytest.approx(HALF_LN45, abs=1e-9)


def test_declared_period_is_canonical(flat):
    # one branch sampling twice per unit period == uniform sampling at
    # half the period; capacity must not depend on the declaration
    a = _allpass_system(offsets=(0.0, 0.5), T_q=1.0)
    b = _allpass_system(offsets=(0.0,), T_q=0.5)
    ga = alias_grid(a, flat, 256)
    gb = alias_grid(b, flat, 256)
    ca = periodic_capacity(a, flat, 3.0, ga).capacity_nats
    cb = periodic_capacity(b, flat, 3.0, gb).capacity_nats
    assert ca == pytest.approx(cb, abs=1e-10)


def test_identity_modulator_is_transparent(flat):
    plain = _brickwall_system()
    modded = PeriodicSamplingSystem(
        1.0,
        (
            BranchChain(
                (LtiStage.brickwall([(-0.5, 0.5)]), Modulator(((0, 1.0 + 0j),), 1)),
                (0.0,),
            ),
        ),
    )
    gp = alias_grid(plain, flat, 128)
    gm = alias_grid(modded, flat, 128)
    cp = periodic_capacity(plain, flat, 3.0, gp).capacity_nats
    cm = periodic_capacity(modded, flat, 3.0, gm).capacity_nats
    assert cp == pytest.approx(cm, abs=1e-12)


def test_zero_power(flat):
    sysd = _allpass_system()
    g = alias_grid(sysd, flat, 64)
    wf = periodic_capacity(sysd, flat, 0.0, g)
    assert wf.capacity_nats == 0.0
    assert np.all(wf.allocation == 0.0)


def test_allocation_shape_and_budget(flat):
    sysd = _allpass_system(offsets=(0.0, 0.5))
    g = alias_grid(sysd, flat, 128)
    wf = periodic_capacity(sysd, flat, 2.0, g)
    assert wf.allocation.shape == (g.n_bins, 2)
    assert wf.total_power == pytest.approx(2.0, rel=1e-9)


# --- error paths ------------------------------------------------------------

def test_alias_window_too_small(flat):
    with pytest.raises(AliasWindowError):
        assemble_matrices(_allpass_system(), flat, 0, 0.2)


def test_degenerate_sampler(flat):
    # passband entirely outside the channel window: the sampler sees nothing
    sysd = PeriodicSamplingSystem(
        1.0, (BranchChain((LtiStage.brickwall([(10.0, 11.0)]),), (0.0,)),)
    )
    with pytest.raises(DegenerateSamplerError):
        assemble_matrices(sysd, flat, 12, 0.2)


def test_system_validation():
    with pytest.raises(ValidationError):
        PeriodicSamplingSystem(1.0, (BranchChain((LtiStage.allpass(),), (0.0, 1.5)),))
    with pytest.raises(ValidationError):
        PeriodicSamplingSystem(1.0, (BranchChain((LtiStage.allpass(),), (0.5, 0.5)),))
    with pytest.raises(ValidationError):
        PeriodicSamplingSystem(-1.0, (BranchChain((LtiStage.allpass(),), (0.0,)),))
    with pytest.raises(ValidationError):
        PeriodicSamplingSystem(1.0, ())


# --- spec documents ---------------------------------------------------------

def test_system_json_round_trip(flat):
    sysd = PeriodicSamplingSystem(
        1.0,
        (
            BranchChain(
                (
                    LtiStage.brickwall([(-0.75, 0.25)], gain=1.3, phase=0.4),
                    Modulator(((-1, 0.5 - 0.5j), (1, 0.5 + 0.5j)), 2),
                ),
                (0.0, 0.4),
            ),
            BranchChain((LtiStage.allpass(),), (0.1,)),
        ),
    )
    doc = system_spec_json(sysd)
    back = parse_system_spec(json.dumps(doc))
    g = alias_grid(sysd, flat, 128)
    c1 = periodic_capacity(sysd, flat, 2.0, g).capacity_nats
    c2 = periodic_capacity(back, flat, 2.0, g).capacity_nats
    assert c1 == pytest.approx(c2, abs=1e-14)


def test_system_spec_rejects_bad_documents():
    with pytest.raises(ValidationError):
        parse_system_spec("{")
    with pytest.raises(ValidationError, match="unknown"):
        parse_system_spec(json.dumps({"T_q": 1.0, "branches": [], "bogus": 1}))
    with pytest.raises(ValidationError):
        parse_system_spec(json.dumps({"T_q": 1.0, "branches": []}))
    bad_stage = {
        "T_q": 1.0,
        "branches": [{"stages": [{"kind": "warp"}], "offsets": [0.0]}],
    }
    with pytest.raises(ValidationError):
        parse_system_spec(json.dumps(bad_stage))


# --- whitening and eigenvalue structure -------------------------------------

def test_unitary_row_operations_preserve_eigenvalues(flat):
    rng = np.random.default_rng(3)
    sysd = _allpass_system(offsets=(0.0, 0.25, 0.6))
    am = assemble_matrices(sysd, flat, 2, 0.15)
    base = am.eigenvalues[0]

    # unit-modulus row scaling
    phases = np.exp(2j * np.pi * rng.uniform(0, 1, 3))
    _, lam = whitened_eigenvalues(am.sampler * phases[None, :, None], am.channel)
    assert np.allclose(np.sort(lam[0]), np.sort(base), atol=1e-12)

    # row permutation
    perm = rng.permutation(3)
    _, lam = whitened_eigenvalues(am.sampler[:, perm, :], am.channel)
    assert np.allclose(np.sort(lam[0]), np.sort(base), atol=1e-12)


def test_whitening_matches_generalized_eigenproblem(flat, rolloff):
    rng = np.random.default_rng(23)
    for s in (flat, rolloff):
        for _ in range(6):
            sysd = make_random_system(rng, s)
            L = auto_alias_count(sysd, s)
            g = alias_grid(sysd, s, 32)
            try:
                am = assemble_over_grid(sysd, s, L, g)
            except (DegenerateSamplerError, AliasWindowError):
                continue
            idx = rng.integers(0, len(am.freqs), size=4)
            for i in idx:
                Q = am.sampler[i]
                h = am.channel[i]
                G = Q @ Q.conj().T
                # skip ill-conditioned noise Grams: the pinv cutoff and the
                # generalized solver legitimately disagree there
                ev = np.linalg.eigvalsh(G)
                if ev[0] <= 1e-8 * ev[-1]:
                    continue
                S = (Q * h[None, :]) @ (Q * h[None, :]).conj().T
                lam_gen = np.sort(scipy.linalg.eigh(S, G, eigvals_only=True))[::-1]
                lam_gen = np.maximum(lam_gen, 0.0)
                assert np.allclose(am.eigenvalues[i], lam_gen, atol=1e-10)


def test_top_eigenvalue_bounded_by_folded_snr(flat, edge_band):
    rng = np.random.default_rng(29)
    for s in (flat, edge_band):
        for _ in range(8):
            sysd = make_random_system(rng, s)
            f_q = sysd.f_q
            L = auto_alias_count(sysd, s)
            g = alias_grid(sysd, s, 16)
            try:
                am = assemble_over_grid(sysd, s, L, g)
            except (DegenerateSamplerError, AliasWindowError):
                continue
            lo_w, hi_w = s.window
            for i, f in enumerate(am.freqs):
                shifts = f + f_q * np.arange(-L - 2, L + 3)
                inside = (shifts >= lo_w) & (shifts <= hi_w)
                folded = float(np.sum(s.gamma_clipped(shifts[inside])))
                assert am.eigenvalues[i, 0] <= folded + 1e-9


def test_converse_random_systems(flat):
    rng = np.random.default_rng(41)
    g_u = Grid.for_snr(flat, 1024)
    span = flat.window[1] - flat.window[0]
    checked = 0
    for _ in range(20):
        sysd = make_random_system(rng, flat)
        g = alias_grid(sysd, flat, 64)
        try:
            cap = periodic_capacity(sysd, flat, 3.0, g).capacity_nats
        except (DegenerateSamplerError, NoUsableSpectrumError):
            cap = 0.0
        except AliasWindowError:
            continue
        f_s = min(sysd.f_s, span - 1e-9)
        _, wf = capacity_upper_bound(flat, f_s, 3.0, g_u)
        assert cap <= wf.capacity_nats + 1e-6
        checked += 1
    assert checked >= 15


# --- grids ------------------------------------------------------------------

def test_alias_grid_layout(flat):
    sysd = _brickwall_system()
    g = alias_grid(sysd, flat, 64)
    f_q = sysd.f_q
    assert g.window[0] == pytest.approx(-f_q / 2)
    assert g.window[1] == pytest.approx(f_q / 2)
    # channel breakpoints fold onto grid edges: 1.5 folds to -0.5, 1.0 to 0.0
    assert np.min(np.abs(g.edges - 0.0)) < 1e-12


def test_auto_alias_count(flat):
    # window reaches 1.5, f_q = 1: need aliases out to ceil(1.5 + 0.5) = 2
    assert auto_alias_count(_allpass_system(), flat) == 2
    assert auto_alias_count(_allpass_system(T_q=2.0), flat) >= 3
