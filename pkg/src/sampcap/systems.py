"""Sampling sets and capacity-achieving sampler designs.

Two halves.  The first models sampling sets (uniform, periodic
pattern, explicit finite) with Beurling-density and uniform-deviation
(quarter-period) diagnostics.  The second builds periodic sampling
systems that achieve the channel capacity upper bound at a given rate:
a bank of bandpass branches, one per maximal interval of the optimal
support, and a single modulated branch that relocates the optimal
sub-bands into a contiguous block before uniform sampling.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .aliasing import BranchChain, LtiStage, Modulator, PeriodicSamplingSystem
from .errors import DomainError, InfeasibleDesignError, ValidationError
from .support import FrequencySet

KADEC_BOUND = 0.25  # max |t_n - n/f| in sample periods for a stable basis


# ---------------------------------------------------------------------------
# sampling sets

@dataclass(frozen=True)
class UniformSet:
    """t_n = n / rate + offset for all integers n."""

    rate: float
    offset: float = 0.0

    def __post_init__(self):
        if not (self.rate > 0) or not math.isfinite(self.rate):
            raise ValidationError("rate must be positive and finite")

    def times(self, n_lo, n_hi):
        return np.arange(n_lo, n_hi) / self.rate + self.offset


@dataclass(frozen=True)
class PeriodicPatternSet:
    """t = k*T_q + p_j for integers k and a fixed pattern p in [0, T_q)."""

    T_q: float
    pattern: tuple

    def __post_init__(self):
        if not (self.T_q > 0) or not math.isfinite(self.T_q):
            raise ValidationError("T_q must be positive and finite")
        p = np.asarray(self.pattern, dtype=float)
        if p.size == 0:
            raise ValidationError("pattern must be non-empty")
        if np.any(p < 0) or np.any(p >= self.T_q):
            raise ValidationError("pattern points must lie in [0, T_q)")
        if np.any(np.diff(p) <= 0):
            raise ValidationError("pattern must be strictly increasing")

    @property
    def rate(self):
        return len(self.pattern) / self.T_q

    def times(self, k_lo, k_hi):
        p = np.asarray(self.pattern, dtype=float)
        k = np.arange(k_lo, k_hi, dtype=float)
        return (k[:, None] * self.T_q + p[None, :]).ravel()


@dataclass(frozen=True)
class FiniteSet:
    """An explicit finite collection of sampling instants."""

    instants: tuple

    def __post_init__(self):
        t = np.asarray(self.instants, dtype=float)
        if t.size == 0:
            raise ValidationError("finite set must be non-empty")
        if not np.all(np.isfinite(t)):
            raise ValidationError("sampling instants must be finite")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("sampling instants must be strictly increasing")

    def times(self):
        return np.asarray(self.instants, dtype=float)


@dataclass(frozen=True)
class DensityReport:
    lower: float
    upper: float
    exact: bool
    window: float


def beurling_density(sampling_set, window=None) -> DensityReport:
    """Average sampling density, exact for periodic sets.

    For a finite set the asymptotic density is not defined, so the
    report carries sliding-window estimates: the min and max number of
    points in any length-`window` interval inside the span, divided by
    the window length.
    """
    if isinstance(sampling_set, UniformSet):
        r = sampling_set.rate
        return DensityReport(r, r, True, math.inf)
    if isinstance(sampling_set, PeriodicPatternSet):
        r = sampling_set.rate
        return DensityReport(r, r, True, math.inf)
    t = sampling_set.times() if isinstance(sampling_set, FiniteSet) else np.sort(
        np.asarray(sampling_set, dtype=float)
    )
    if t.size < 2:
        raise DomainError("need at least two instants to estimate density")
    span = t[-1] - t[0]
    r = span / 4 if window is None else float(window)
    if not (0 < r <= span):
        raise DomainError("density window must lie in (0, span]")
    # window anchored at each point, and just after each point
    hi = 0
    lo = math.inf
    for i in range(t.size):
        a = t[i]
        if a + r <= t[-1] + 1e-15 * max(1.0, abs(t[-1])):
            n_in = int(np.searchsorted(t, a + r, side="right") - i)
            hi = max(hi, n_in)
        if a + r <= t[-1]:
            n_after = int(np.searchsorted(t, a + r, side="right") - (i + 1))
            lo = min(lo, n_after)
    if not math.isfinite(lo):
        lo = t.size
    return DensityReport(lo / r, hi / r, False, r)


@dataclass(frozen=True)
class KadecReport:
    rate: float
    max_deviation: float          # seconds
    deviation_periods: float      # max |t_n - n/rate| * rate
    bound_periods: float
    satisfied: bool


def kadec_check(sampling_set, rate=None) -> KadecReport:
    """Uniform-deviation check against the quarter-period bound.

    Deviations are measured against the reference lattice n/rate; the
    sampled exponentials stay a stable (Riesz) basis when the largest
    deviation is strictly below a quarter period.
    """
    if isinstance(sampling_set, UniformSet):
        # a rigid offset of the whole lattice is a time shift, not jitter
        r = sampling_set.rate if rate is None else float(rate)
        return KadecReport(r, 0.0, 0.0, KADEC_BOUND, True)
    if isinstance(sampling_set, PeriodicPatternSet):
        r = sampling_set.rate if rate is None else float(rate)
        t = np.asarray(sampling_set.pattern, dtype=float)
    elif isinstance(sampling_set, FiniteSet):
        if rate is None:
            raise DomainError("finite sets need an explicit reference rate")
        r = float(rate)
        t = sampling_set.times()
    else:
        if rate is None:
            raise DomainError("explicit instants need a reference rate")
        r = float(rate)
        t = np.sort(np.asarray(sampling_set, dtype=float))
    if not (r > 0):
        raise DomainError("reference rate must be positive")
    n0 = round(t[0] * r)
    ref = (n0 + np.arange(t.size)) / r
    dev = float(np.max(np.abs(t - ref)))
    periods = dev * r
    return KadecReport(r, dev, periods, KADEC_BOUND, periods < KADEC_BOUND)


def parse_sampling_set(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"sampling set is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ValidationError("sampling set must be an object with a 'kind'")
    kind = doc["kind"]
    if kind == "uniform":
        extra = set(doc) - {"kind", "rate", "offset"}
        if extra:
            raise ValidationError(f"sampling set: unknown keys {sorted(extra)}")
        return UniformSet(float(doc["rate"]), float(doc.get("offset", 0.0)))
    if kind == "pattern":
        extra = set(doc) - {"kind", "T_q", "pattern"}
        if extra:
            raise ValidationError(f"sampling set: unknown keys {sorted(extra)}")
        return PeriodicPatternSet(float(doc["T_q"]), tuple(float(p) for p in doc["pattern"]))
    if kind == "finite":
        extra = set(doc) - {"kind", "times"}
        if extra:
            raise ValidationError(f"sampling set: unknown keys {sorted(extra)}")
        return FiniteSet(tuple(float(p) for p in doc["times"]))
    raise ValidationError(f"sampling set: unknown kind {kind!r}")


def sampling_set_json(sampling_set) -> dict:
    if isinstance(sampling_set, UniformSet):
        return {"kind": "uniform", "rate": sampling_set.rate, "offset": sampling_set.offset}
    if isinstance(sampling_set, PeriodicPatternSet):
        return {"kind": "pattern", "T_q": sampling_set.T_q, "pattern": list(sampling_set.pattern)}
    if isinstance(sampling_set, FiniteSet):
        return {"kind": "finite", "times": list(sampling_set.instants)}
    raise ValidationError(f"unknown sampling set type {type(sampling_set).__name__}")


# ---------------------------------------------------------------------------
# rational helpers

def _as_fraction(x, max_denominator):
    return Fraction(float(x)).limit_denominator(max_denominator)


def _fraction_gcd(a: Fraction, b: Fraction) -> Fraction:
    if a == 0:
        return abs(b)
    if b == 0:
        return abs(a)
    num = math.gcd(a.numerator, b.numerator)
    den = math.lcm(a.denominator, b.denominator)
    return Fraction(num, den)


# ---------------------------------------------------------------------------
# filter-bank design

@dataclass(frozen=True)
class FilterbankDesign:
    """One bandpass branch per maximal interval of the target support.

    Branch i passes interval i untouched and samples uniformly at a
    rate equal to the (rationalized) interval length, so each branch
    folds its band injectively and the bank as a whole is lossless on
    the support.
    """

    system: PeriodicSamplingSystem
    intervals: np.ndarray
    rates: tuple
    f_s: float


def build_filterbank(support, f_s=None, max_denominator=64) -> FilterbankDesign:
    fset = getattr(support, "set", support)
    if not isinstance(fset, FrequencySet) or fset.intervals.shape[0] == 0:
        raise InfeasibleDesignError("filter bank needs a non-empty frequency support")
    ivs = fset.intervals
    lengths = ivs[:, 1] - ivs[:, 0]
    total = float(fset.measure if f_s is None else f_s)
    if total <= 0:
        raise InfeasibleDesignError("total sampling rate must be positive")

    rates = [_as_fraction(L, max_denominator) for L in lengths[:-1]]
    target = _as_fraction(total, max_denominator)
    last = target - sum(rates, Fraction(0))
    if last <= 0:
        raise InfeasibleDesignError(
            "rate rationalization left no budget for the last branch; "
            "raise max_denominator"
        )
    rates.append(last)

    T_q = Fraction(math.lcm(*(r.denominator for r in rates)))
    branches = []
    for (a, b), r in zip(ivs, rates):
        n = r * T_q
        assert n.denominator == 1
        n = n.numerator
        offsets = tuple(float(Fraction(j, 1) * T_q / n) for j in range(n))
        branches.append(BranchChain((LtiStage.brickwall([(a, b)]),), offsets))
    system = PeriodicSamplingSystem(float(T_q), tuple(branches))
    return FilterbankDesign(system, ivs.copy(), tuple(float(r) for r in rates), float(target))


# ---------------------------------------------------------------------------
# single-branch modulated design

@dataclass(frozen=True)
class SingleBranchDesign:
    """Bandpass -> periodic modulator -> lowpass -> uniform sampling.

    The optimal support is snapped to a lattice of width-f_mod cells;
    the modulator shifts each occupied cell into one of the
    floor(f_s/f_mod) slots around dc, the lowpass keeps only the slots,
    and a single uniform sampler at f_s reads them out.  `alias_free`
    reports whether every stray modulation image misses the slots.
    """

    system: PeriodicSamplingSystem
    f_mod: float
    coeffs: dict
    sub_bands: tuple
    slots: tuple
    support: FrequencySet
    alias_free: bool
    snapped: bool


def best_aligned_support(s, f_mod, n_cells, g) -> FrequencySet:
    """The n_cells width-f_mod lattice cells with the largest captured SNR.

    Candidate cells tile the analysis window on the f_mod lattice; ties
    are broken toward smaller |center|, negative first, mirroring the
    bin-level selection rule.  This is the support a cell-granular
    single-branch design can actually relocate, so comparing its
    water-filled capacity against the unconstrained bound isolates the
    cost of the lattice constraint.
    """
    from .spectrum import integrate_over

    if n_cells < 1:
        raise InfeasibleDesignError("need at least one cell")
    lo, hi = s.window
    m_lo = int(math.floor(lo / f_mod + 1e-9))
    m_hi = int(math.ceil(hi / f_mod - 1e-9))
    cells = []
    for m in range(m_lo, m_hi):
        a, b = m * f_mod, (m + 1) * f_mod
        a, b = max(a, lo), min(b, hi)
        if b - a <= 0:
            continue
        snr = integrate_over(s, [(a, b)], g)
        center = 0.5 * (a + b)
        cells.append((-snr, abs(center), 0 if center < 0 else 1, (a, b)))
    if len(cells) < n_cells:
        raise InfeasibleDesignError("window holds fewer cells than requested")
    cells.sort()
    chosen = [iv for *_, iv in cells[:n_cells]]
    return FrequencySet.from_intervals(chosen, merge_tol=1e-12 * f_mod)


def _auto_cell_rate(ivs, max_denominator):
    fr = Fraction(0)
    for e in np.asarray(ivs).ravel():
        fr = _fraction_gcd(fr, _as_fraction(e, max_denominator))
    if fr == 0:
        raise InfeasibleDesignError("cannot infer a cell rate from the support endpoints")
    return fr


def build_single_branch(support, f_s, f_mod=None, max_denominator=64) -> SingleBranchDesign:
    fset = getattr(support, "set", support)
    if not isinstance(fset, FrequencySet) or fset.intervals.shape[0] == 0:
        raise InfeasibleDesignError("single-branch design needs a non-empty support")
    if not (f_s > 0):
        raise InfeasibleDesignError("sampling rate must be positive")
    ivs = fset.intervals

    if f_mod is None:
        f_mod_frac = _auto_cell_rate(ivs, max_denominator)
    else:
        f_mod_frac = _as_fraction(f_mod, max_denominator * 1024)
        if f_mod_frac <= 0:
            raise InfeasibleDesignError("cell rate must be positive")
    f_mod = float(f_mod_frac)

    # snap interval endpoints onto the cell lattice
    cells = set()
    snapped = False
    snapped_ivs = []
    for a, b in ivs:
        m_lo = round(a / f_mod)
        m_hi = round(b / f_mod)
        if abs(m_lo * f_mod - a) > 1e-9 * max(1.0, abs(a)) or abs(
            m_hi * f_mod - b
        ) > 1e-9 * max(1.0, abs(b)):
            snapped = True
        if m_hi <= m_lo:
            continue
        cells.update(range(m_lo, m_hi))
        snapped_ivs.append((m_lo * f_mod, m_hi * f_mod))
    if not cells:
        raise InfeasibleDesignError("support vanished after snapping to the cell lattice")
    if snapped:
        warnings.warn(
            "support endpoints were snapped to the cell lattice; "
            "capacity is computed for the snapped support",
            stacklevel=2,
        )
    sub_bands = tuple(sorted(cells))
    snapped_set = FrequencySet.from_intervals(snapped_ivs, merge_tol=1e-12 * f_mod)

    n_slots = int(math.floor(f_s / f_mod + 1e-9))
    if n_slots < 1:
        raise InfeasibleDesignError("sampling rate is below a single cell width")
    if len(sub_bands) > n_slots:
        raise InfeasibleDesignError(
            f"support occupies {len(sub_bands)} cells but the rate provides "
            f"only {n_slots} slots"
        )

    n_used = len(sub_bands)
    start = -(n_used // 2)
    slots = tuple(range(start, start + n_used))
    shifts = [slot - band for band, slot in zip(sub_bands, slots)]
    coeffs = {}
    for s in shifts:
        coeffs[s] = 1.0 + 0.0j

    slot_set = set(slots)
    alias_free = True
    for band, own in zip(sub_bands, shifts):
        for s in coeffs:
            if s != own and (band + s) in slot_set:
                alias_free = False

    pre = LtiStage.brickwall(snapped_set.intervals)
    post = LtiStage.brickwall([(slots[0] * f_mod, (slots[-1] + 1) * f_mod)])

    f_s_frac = _as_fraction(f_s, max_denominator * 1024)
    f_sys = _fraction_gcd(f_mod_frac, f_s_frac)
    T_sys = Fraction(1) / f_sys
    divisor = f_mod_frac / f_sys
    assert divisor.denominator == 1
    n_samp = f_s_frac * T_sys
    assert n_samp.denominator == 1
    offsets = tuple(float(Fraction(j) / f_s_frac) for j in range(n_samp.numerator))

    stages = [pre]
    if set(coeffs) != {0}:
        mod_pairs = tuple(sorted((m, complex(c)) for m, c in coeffs.items()))
        stages.append(Modulator(mod_pairs, int(divisor)))
    stages.append(post)
    system = PeriodicSamplingSystem(
        float(T_sys), (BranchChain(tuple(stages), offsets),)
    )
    return SingleBranchDesign(
        system,
        f_mod,
        {int(k): complex(v) for k, v in coeffs.items()},
        sub_bands,
        slots,
        snapped_set,
        alias_free,
        snapped,
    )
