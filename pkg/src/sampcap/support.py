"""Selection of the SNR-maximizing spectral support at a given rate.

Among all measurable frequency sets of total measure f_s, the one that
maximizes the captured SNR integral is a level set {gamma >= theta}.
On a grid this reduces to sorting bins by SNR density and keeping the
top ones, splitting the marginal bin so the measure lands on f_s.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .spectrum import Grid, SnrDensity, integrate_over

# below this fraction of the window the selected sliver is dropped
_SLIVER = 1e-12


@dataclass(frozen=True)
class FrequencySet:
    """Finite union of disjoint closed intervals, sorted ascending."""

    intervals: np.ndarray  # (n, 2)

    @classmethod
    def from_intervals(cls, items, merge_tol=0.0):
        arr = np.asarray(list(items), dtype=float).reshape(-1, 2)
        for a, b in arr:
            if not np.isfinite(a) or not np.isfinite(b) or a >= b:
                raise ValidationError("frequency set: interval reversed or empty")
        order = np.argsort(arr[:, 0])
        arr = arr[order]
        merged = []
        for a, b in arr:
            if merged and a < merged[-1][1] - merge_tol - 1e-15:
                raise ValidationError("frequency set: intervals overlap")
            if merged and a <= merged[-1][1] + merge_tol:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        out = np.asarray(merged, dtype=float)
        out.setflags(write=False)
        return cls(out)

    @classmethod
    def empty(cls):
        arr = np.zeros((0, 2))
        arr.setflags(write=False)
        return cls(arr)

    @property
    def measure(self):
        if self.intervals.size == 0:
            return 0.0
        return float(np.sum(self.intervals[:, 1] - self.intervals[:, 0]))

    def contains(self, f):
        f = np.asarray(f, dtype=float)
        out = np.zeros(f.shape, dtype=bool)
        for a, b in self.intervals:
            out |= (f >= a) & (f <= b)
        return out

    def to_json(self):
        return [[float(a), float(b)] for a, b in self.intervals]


def intersection_measure(x: FrequencySet, y: FrequencySet):
    total = 0.0
    for a, b in x.intervals:
        for c, d in y.intervals:
            total += max(0.0, min(b, d) - max(a, c))
    return total


def symmetric_difference_measure(x: FrequencySet, y: FrequencySet):
    inter = intersection_measure(x, y)
    return x.measure + y.measure - 2.0 * inter


@dataclass(frozen=True)
class SupportSolution:
    set: FrequencySet
    threshold: float
    captured_snr: float


def select_support(s: SnrDensity, f_s: float, g: Grid) -> SupportSolution:
    """Pick the measure-f_s frequency set with maximal integrated SNR.

    Bins are ranked by SNR density (ties broken toward smaller |f|, then
    negative f), accumulated until their width reaches f_s, and the
    marginal bin is split fractionally so the measure is exact.  The
    reported threshold is the SNR density of the marginal bin.
    """
    lo, hi = g.window
    span = hi - lo
    if not (0.0 < f_s <= span * (1 + 1e-12)):
        raise DomainError("target rate must satisfy 0 < f_s <= window length")
    f_s = min(f_s, span)

    gamma = s.gamma(g.centers)
    # lexsort: last key is primary
    order = np.lexsort(((g.centers > 0).astype(int), np.abs(g.centers), -gamma))
    cum = np.cumsum(g.widths[order])

    k = int(np.searchsorted(cum, f_s * (1 - 1e-15)))
    k = min(k, g.n_bins - 1)
    prev = cum[k - 1] if k > 0 else 0.0
    frac_w = min(max(f_s - prev, 0.0), g.widths[order[k]])

    full = np.zeros(g.n_bins, dtype=bool)
    full[order[:k]] = True
    marginal = order[k]
    threshold = float(gamma[marginal])

    if frac_w >= g.widths[marginal] * (1 - 1e-12):
        full[marginal] = True
        frac_w = 0.0

    intervals = _runs_to_intervals(full, g)
    if frac_w > _SLIVER * span:
        left_in = marginal > 0 and full[marginal - 1]
        right_in = marginal + 1 < g.n_bins and full[marginal + 1]
        e0, e1 = g.edges[marginal], g.edges[marginal + 1]
        if left_in:
            part = (e0, e0 + frac_w)
        elif right_in:
            part = (e1 - frac_w, e1)
        else:
            c = 0.5 * (e0 + e1)
            part = (c - frac_w / 2, c + frac_w / 2)
        intervals.append(part)

    intervals = [iv for iv in intervals if iv[1] - iv[0] > _SLIVER * span]
    if not intervals:
        raise DomainError("selected support is empty")
    fset = FrequencySet.from_intervals(intervals, merge_tol=1e-12 * span)
    captured = integrate_over(s, fset, g)
    return SupportSolution(fset, threshold, captured)


def _runs_to_intervals(mask, g: Grid):
    out = []
    start = None
    for i, m in enumerate(mask):
        if m and start is None:
            start = i
        elif not m and start is not None:
            out.append((float(g.edges[start]), float(g.edges[i])))
            start = None
    if start is not None:
        out.append((float(g.edges[start]), float(g.edges[len(mask)])))
    return out


def is_level_set(sol: SupportSolution, s: SnrDensity, g: Grid, tol=1e-9) -> bool:
    """Check the level-set property of a support solution on this grid.

    Bins fully inside the set must have SNR density >= threshold - tol
    and bins fully outside must be <= threshold + tol; partial bins are
    marginal by construction and are skipped.
    """
    lo, hi = g.window
    if sol.set.intervals.size:
        if sol.set.intervals[0, 0] < lo - 1e-9 or sol.set.intervals[-1, 1] > hi + 1e-9:
            raise DomainError("support solution lies outside this grid window")
    overlap = np.zeros(g.n_bins)
    for a, b in sol.set.intervals:
        olo = np.maximum(g.edges[:-1], a)
        ohi = np.minimum(g.edges[1:], b)
        overlap += np.maximum(ohi - olo, 0.0)
    gamma = s.gamma(g.centers)
    w = g.widths
    inside = overlap >= w * (1 - 1e-9)
    outside = overlap <= w * 1e-9
    if np.any(gamma[inside] < sol.threshold - tol):
        return False
    if np.any(gamma[outside] > sol.threshold + tol):
        return False
    return True
