"""Water-filling over a frequency set and the rate-constrained capacity bound.

The optimal input density on a set B with SNR density gamma is
[nu - 1/gamma]^+ where the water level nu balances the power budget;
the resulting rate is the integral of 0.5*[ln(nu*gamma)]^+.  Combined
with the SNR-maximizing support this gives the capacity bound that no
rate-f_s time-preserving sampler can beat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, NoUsableSpectrumError
from .spectrum import Grid, SnrDensity
from .support import FrequencySet, SupportSolution, select_support

LN2 = math.log(2.0)


@dataclass(frozen=True)
class WaterfillSolution:
    nu: float
    capacity_nats: float
    allocation: np.ndarray  # power density per grid bin (or per (bin, branch-dim))
    total_power: float

    @property
    def capacity_bits(self):
        return self.capacity_nats / LN2


def water_level(inv_gains, weights, budget, max_iter=200, tol=1e-9):
    """Solve sum_i w_i * [nu - u_i]^+ = budget for nu by bisection.

    The starting bracket is [min u, min u + budget/sum(w)]; for non-flat
    profiles that upper end can sit below the root, so it is extended
    geometrically until the budget is covered before bisecting.  `tol`
    is relative to the budget and only guards the final residual; the
    bisection itself runs the bracket down to float resolution.
    """
    u = np.asarray(inv_gains, dtype=float)
    w = np.asarray(weights, dtype=float)
    if u.size == 0:
        raise NoUsableSpectrumError("no usable spectrum for a positive power budget")
    tol = tol * max(budget, 1.0)

    def phi(nu):
        return float(np.sum(w * np.maximum(nu - u, 0.0)))

    lo = float(u.min())
    hi = lo + budget / float(w.sum())
    grow = 0
    while phi(hi) < budget - tol:
        hi = lo + 2.0 * (hi - lo)
        grow += 1
        if grow > 200:
            raise ConvergenceError("water level bracket extension failed")

    # run the bracket down to rounding before accepting, so nu carries no
    # slack beyond float resolution; the budget check is a final guard
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 4.0 * np.finfo(float).eps * max(abs(mid), 1.0):
            break
        if phi(mid) < budget:
            lo = mid
        else:
            hi = mid
    if abs(phi(mid) - budget) <= tol:
        return mid
    raise ConvergenceError("water level bisection did not converge in 200 iterations")


def waterfill_over_set(s: SnrDensity, B, P: float, g: Grid, tol=1e-9) -> WaterfillSolution:
    """Water-fill power P over the frequency set B.

    Returns the water level, the capacity in nats (natural log
    throughout; bits are derived), the per-bin power density, and the
    realized total power.  Bins where the SNR density vanishes carry
    zero allocation; if the whole set is dead and P > 0 this raises.
    """
    if P < 0:
        raise DomainError("power budget must be nonnegative")
    ivals = np.asarray(getattr(B, "intervals", B), dtype=float).reshape(-1, 2)
    lo_w, hi_w = s.window
    if ivals.size and (ivals[:, 0].min() < lo_w - 1e-9 or ivals[:, 1].max() > hi_w + 1e-9):
        raise DomainError("set extends outside the analysis window")

    overlap = np.zeros(g.n_bins)
    for a, b in ivals:
        olo = np.maximum(g.edges[:-1], a)
        ohi = np.minimum(g.edges[1:], b)
        overlap += np.maximum(ohi - olo, 0.0)
    gamma = s.gamma_clipped(g.centers)

    usable = (overlap > 0) & (gamma > 0)
    alloc = np.zeros(g.n_bins)
    if P == 0:
        nu = float((1.0 / gamma[usable]).min()) if usable.any() else 0.0
        return WaterfillSolution(nu, 0.0, alloc, 0.0)
    if not usable.any():
        raise NoUsableSpectrumError("no usable spectrum for a positive power budget")

    u = 1.0 / gamma[usable]
    w = overlap[usable]
    nu = water_level(u, w, P, tol=tol)

    alloc[usable] = np.maximum(nu - u, 0.0)
    active = alloc > 0
    cap = float(np.sum(overlap[active] * 0.5 * np.log(nu * gamma[active])))
    total = float(np.sum(overlap * alloc))
    return WaterfillSolution(float(nu), cap, alloc, total)


def capacity_upper_bound(s: SnrDensity, f_s: float, P: float, g: Grid, tol=1e-9):
    """Best support at rate f_s, then water-fill: the sampled-capacity bound.

    Returns (SupportSolution, WaterfillSolution).
    """
    sol = select_support(s, f_s, g)
    wf = waterfill_over_set(s, sol.set, P, g, tol=tol)
    return sol, wf
