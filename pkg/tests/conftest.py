"""Shared fixtures: reference channels, grids, and a random-system factory."""

import numpy as np
import pytest

import sampcap as sc
from sampcap.aliasing import BranchChain, LtiStage, Modulator, PeriodicSamplingSystem


@pytest.fixture(scope="session")
def flat():
    return sc.flat_channel()


@pytest.fixture(scope="session")
def rolloff():
    return sc.rolloff_channel()


@pytest.fixture(scope="session")
def edge_band():
    return sc.edge_band_channel()


@pytest.fixture(scope="session")
def all_channels(flat, rolloff, edge_band):
    return {"flat": flat, "rolloff": rolloff, "edge_band": edge_band}


@pytest.fixture()
def grid_of():
    def make(s, n_bins=4096):
        return sc.Grid.for_snr(s, n_bins)

    return make


def make_random_system(rng, s, max_branches=2):
    """Random periodic sampling chain inside the window of channel s.

    Branches mix brickwall filters (random passbands, gains, phases),
    all-pass stages, and modulators with up to 5 harmonics; offsets are
    random within the declared period.  Everything stays exactly
    representable so runs are reproducible.
    """
    f_hi = s.window[1]
    T_q = float(rng.choice([0.5, 0.8, 1.0, 1.25, 2.0]))
    branches = []
    for _ in range(rng.integers(1, max_branches + 1)):
        stages = []
        for _ in range(rng.integers(1, 3)):
            kind = rng.integers(0, 3)
            if kind == 0:
                # random passband(s), kept inside the channel window
                n_iv = int(rng.integers(1, 3))
                cuts = np.sort(rng.uniform(-f_hi, f_hi, 2 * n_iv))
                ivs = [
                    (cuts[2 * i], cuts[2 * i + 1])
                    for i in range(n_iv)
                    if cuts[2 * i + 1] - cuts[2 * i] > 1e-3
                ]
                if not ivs:
                    ivs = [(-0.4 * f_hi, 0.4 * f_hi)]
                stages.append(
                    LtiStage.brickwall(
                        ivs,
                        gain=float(rng.uniform(0.3, 2.0)),
                        phase=float(rng.uniform(0, 2 * np.pi)),
                    )
                )
            elif kind == 1:
                stages.append(
                    LtiStage.allpass(
                        gain=float(rng.uniform(0.3, 2.0)),
                        phase=float(rng.uniform(0, 2 * np.pi)),
                    )
                )
            else:
                n_h = int(rng.integers(1, 6))
                ms = rng.choice(np.arange(-3, 4), size=n_h, replace=False)
                coeffs = {}
                for m in ms:
                    re, im = rng.uniform(-1, 1, 2)
                    coeffs[int(m)] = complex(re, im)
                stages.append(
                    Modulator(tuple(sorted(coeffs.items())), int(rng.integers(1, 3)))
                )
        n_off = int(rng.integers(1, 3))
        offsets = np.sort(rng.uniform(0.0, T_q, n_off))
        # keep offsets separated so the sampler is not numerically degenerate
        while n_off > 1 and np.min(np.diff(offsets)) < 1e-2 * T_q:
            offsets = np.sort(rng.uniform(0.0, T_q, n_off))
        branches.append(BranchChain(tuple(stages), tuple(float(t) for t in offsets)))
    return PeriodicSamplingSystem(T_q, tuple(branches))
