"""Finite-block time-domain capacity oracle.

Independent cross-check for the frequency-domain capacity machinery: a
block of n_periods system periods is spanned by unit-norm complex
tones, the sampler chain is applied to each tone directly in the time
domain, and the capacity of the resulting finite Gaussian MIMO channel
(noise whitening, SVD, discrete water-filling under the block power
budget) is divided by the block length.  Agreement with the
frequency-domain value improves as O(1/n_periods): the only modelling
error is the block edge, where tone aliases and true spectra differ.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .aliasing import PeriodicSamplingSystem, _expand_paths
from .errors import DegenerateSamplerError, DomainError, ValidationError
from .spectrum import SnrDensity
from .systems import FiniteSet, KadecReport, kadec_check
from .waterfill import water_level

EPS_NOISE = 1e-12  # relative cutoff for noiseless sample directions
EPS_LEAK = 1e-9    # signal energy tolerated in dropped directions


@dataclass(frozen=True)
class BlockModel:
    """Finite MIMO model y = signal @ a + noise, tones as inputs.

    `signal` maps tone coefficients (power-constrained) to samples and
    already contains the channel gain; `noise_cov` is the sample noise
    covariance.  The tone coefficient budget for average power P is
    P * T_blk.
    """

    times: np.ndarray
    tone_freqs: np.ndarray
    signal: np.ndarray
    noise_cov: np.ndarray
    T_blk: float
    n_periods: int


@dataclass(frozen=True)
class BlockCapacity:
    capacity_nats: float
    gains: np.ndarray  # squared singular values of the whitened map
    nu: float
    T_blk: float


def _sample_times(system: PeriodicSamplingSystem, n_periods: int):
    """Branch-major, time-ascending sample instants over the block."""
    groups = []
    for br in system.branches:
        off = np.asarray(br.offsets, dtype=float)
        k = np.arange(n_periods, dtype=float)
        groups.append((k[:, None] * system.T_q + off[None, :]).ravel())
    return groups


def build_block_model(
    system: PeriodicSamplingSystem,
    s: SnrDensity,
    n_periods: int,
    n_tones=None,
    time_offsets=None,
) -> BlockModel:
    if n_periods < 1 or int(n_periods) != n_periods:
        raise ValidationError("n_periods must be a positive integer")
    T_blk = n_periods * system.T_q
    f_q = system.f_q

    if n_tones is None:
        half = int(math.ceil(s.f_max * T_blk - 1e-9))
    else:
        half = int(n_tones) // 2
        if half / T_blk < s.f_max - 1e-12:
            raise DomainError("tone set does not cover the analysis window")
    m = np.arange(-half, half + 1)
    tone_freqs = m / T_blk

    groups = _sample_times(system, n_periods)
    all_times = np.concatenate(groups)
    if time_offsets is not None:
        time_offsets = np.asarray(time_offsets, dtype=float)
        if time_offsets.shape != all_times.shape:
            raise ValidationError("time_offsets must match the sample count")
        pos = 0
        shifted = []
        for gt in groups:
            shifted.append(gt + time_offsets[pos : pos + gt.size])
            pos += gt.size
        groups = shifted
        all_times = np.concatenate(groups)

    blocks = []
    for br, gt in zip(system.branches, groups):
        resp = np.zeros((gt.size, tone_freqs.size), dtype=complex)
        for shift, coeff, evals in _expand_paths(br.stages):
            amp = np.full(tone_freqs.size, coeff, dtype=complex)
            for stage, sh_before in evals:
                amp = amp * stage.transfer(tone_freqs + sh_before * f_q)
            if not np.any(amp):
                continue
            f_out = tone_freqs + shift * f_q
            resp += amp[None, :] * np.exp(2j * np.pi * gt[:, None] * f_out[None, :])
        blocks.append(resp)
    chain = np.concatenate(blocks, axis=0) / math.sqrt(T_blk)

    noise_var = s.noise_clipped(tone_freqs)
    gain = s.gain_clipped(tone_freqs)
    signal = chain * np.sqrt(gain)[None, :]
    noise_cov = (chain * noise_var[None, :]) @ chain.conj().T
    return BlockModel(all_times, tone_freqs, signal, noise_cov, float(T_blk), int(n_periods))


def block_capacity(model: BlockModel, P: float) -> BlockCapacity:
    if P < 0:
        raise DomainError("power budget must be nonnegative")
    e, u = np.linalg.eigh(model.noise_cov)
    e_max = float(e[-1]) if e.size else 0.0
    if e_max <= 0:
        raise DegenerateSamplerError("no noise reaches any sample; model is degenerate")
    keep = e > EPS_NOISE * e_max
    sig_total = float(np.sum(np.abs(model.signal) ** 2))
    if not np.all(keep):
        drop_proj = u[:, ~keep].conj().T @ model.signal
        leak = float(np.sum(np.abs(drop_proj) ** 2))
        if leak > EPS_LEAK * max(sig_total, 1e-300):
            raise DegenerateSamplerError(
                "signal reaches noise-free sample directions; "
                "the finite model is singular"
            )
    w = (u[:, keep].conj().T @ model.signal) / np.sqrt(e[keep])[:, None]
    sigma = np.linalg.svd(w, compute_uv=False)
    gains = sigma**2
    gains = gains[gains > 0]
    budget = P * model.T_blk
    if budget == 0 or gains.size == 0:
        return BlockCapacity(0.0, gains, 0.0, model.T_blk)
    nu = water_level(1.0 / gains, np.ones_like(gains), budget)
    active = nu * gains > 1.0
    cap = float(np.sum(0.5 * np.log(nu * gains[active]))) / model.T_blk
    return BlockCapacity(cap, gains, float(nu), model.T_blk)


def oracle_capacity(system, s, P, n_periods, n_tones=None) -> BlockCapacity:
    """Convenience: build the block model and water-fill it."""
    return block_capacity(build_block_model(system, s, n_periods, n_tones), P)


def perturbed_block_capacity(
    system,
    s,
    P,
    n_periods,
    deviations,
    n_tones=None,
):
    """Oracle capacity with per-sample timing deviations.

    Returns (BlockCapacity, [KadecReport per branch]); each report
    measures the perturbed branch instants against the branch's own
    uniform reference rate, flagging quarter-period violations.
    """
    deviations = np.asarray(deviations, dtype=float)
    groups = _sample_times(system, n_periods)
    reports = []
    pos = 0
    for br, gt in zip(system.branches, groups):
        dev = deviations[pos : pos + gt.size]
        pos += gt.size
        times = gt + dev
        rate = len(br.offsets) / system.T_q
        reports.append(kadec_check(FiniteSet(tuple(times - times[0])), rate))
    model = build_block_model(system, s, n_periods, n_tones, time_offsets=deviations)
    return block_capacity(model, P), reports
