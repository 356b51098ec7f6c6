"""Aliased channel matrices and exact capacity of periodic sampling systems.

A sampling system with period T_q (bank of branches, each a chain of
LTI filters and periodic modulators followed by pointwise sampling at
fixed offsets) folds the input spectrum onto the fundamental window
[-f_q/2, f_q/2], f_q = 1/T_q.  At each f the system is a finite MIMO
channel from alias components f + l*f_q to the per-period samples.
Whitening the folded noise and water-filling over the eigenvalues of
the whitened Gram across (f, branch-dimension) gives the capacity.

Conventions: matrix rows are (branch, offset) pairs; a component that
lands at alias l' when sampled at offset t_k carries the relative phase
exp(2j*pi*l'*f_q*t_k) (the common per-row phase exp(2j*pi*f*t_k) is a
unit-modulus row factor and is dropped).  The noise scaling sqrt(S) is
folded into the sampler matrix and divided out of the channel diagonal,
so the whitened Gram is scale-free.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AliasWindowError,
    DegenerateSamplerError,
    DomainError,
    ValidationError,
)
from .spectrum import Grid, SnrDensity, profile_from_json, Constant
from .waterfill import WaterfillSolution, water_level

EPS_PINV = 1e-10  # relative cutoff for null sample directions
EPS_ALIAS = 1e-9  # relative row energy allowed beyond the alias window


# ---------------------------------------------------------------------------
# stages and systems

@dataclass(frozen=True)
class LtiStage:
    """LTI filter given as piecewise transfer-amplitude profiles.

    Each piece is (lo, hi, profile, phase); the transfer is
    profile(f) * exp(1j*phase) on [lo, hi] and zero elsewhere.  An
    interval of (-inf, inf) makes the stage all-pass.
    """

    pieces: tuple

    @classmethod
    def brickwall(cls, intervals, gain=1.0, phase=0.0):
        ivs = np.asarray(getattr(intervals, "intervals", intervals), dtype=float)
        ivs = ivs.reshape(-1, 2)
        return cls(tuple((float(a), float(b), Constant(gain), phase) for a, b in ivs))

    @classmethod
    def allpass(cls, gain=1.0, phase=0.0):
        return cls(((-math.inf, math.inf, Constant(gain), phase),))

    def transfer(self, f):
        f = np.asarray(f, dtype=float)
        out = np.zeros(f.shape, dtype=complex)
        for lo, hi, prof, phase in self.pieces:
            mask = (f >= lo) & (f <= hi)
            if mask.any():
                out[mask] = prof.evaluate(f[mask]) * np.exp(1j * phase)
        return out

    def breakpoints(self):
        pts = []
        for lo, hi, _, _ in self.pieces:
            if math.isfinite(lo):
                pts.append(lo)
            if math.isfinite(hi):
                pts.append(hi)
        return pts


@dataclass(frozen=True)
class Modulator:
    """Multiplication by sum_m c_m exp(2j*pi*m*rate*t), rate = divisor/T_q.

    `coeffs` maps harmonic index m to a complex coefficient; the period
    T_q/divisor must divide the system period, so every harmonic shifts
    the spectrum by an integer number of f_q steps.
    """

    coeffs: tuple  # of (m, complex)
    period_divisor: int = 1

    def __post_init__(self):
        if self.period_divisor < 1 or int(self.period_divisor) != self.period_divisor:
            raise ValidationError("modulator period_divisor must be a positive integer")
        if not self.coeffs:
            raise ValidationError("modulator needs at least one coefficient")


@dataclass(frozen=True)
class BranchChain:
    """One preprocessing chain plus its per-period sampling offsets."""

    stages: tuple
    offsets: tuple

    def __post_init__(self):
        if not self.stages:
            raise ValidationError("branch needs at least one stage")
        if not self.offsets:
            raise ValidationError("branch needs at least one sampling offset")


@dataclass(frozen=True)
class PeriodicSamplingSystem:
    T_q: float
    branches: tuple

    def __post_init__(self):
        if not (self.T_q > 0) or not math.isfinite(self.T_q):
            raise ValidationError("T_q must be positive and finite")
        if not self.branches:
            raise ValidationError("system needs at least one branch")
        for br in self.branches:
            off = np.asarray(br.offsets, dtype=float)
            if np.any(off < 0) or np.any(off >= self.T_q):
                raise ValidationError("offsets must lie in [0, T_q)")
            if np.any(np.diff(off) <= 0):
                raise ValidationError("offsets must be strictly increasing")

    @property
    def f_q(self):
        return 1.0 / self.T_q

    @property
    def n_rows(self):
        return sum(len(br.offsets) for br in self.branches)

    @property
    def f_s(self):
        return self.n_rows / self.T_q

    def row_offsets(self):
        return [(bi, t) for bi, br in enumerate(self.branches) for t in br.offsets]

    def breakpoints(self):
        pts = []
        for br in self.branches:
            for st in br.stages:
                if isinstance(st, LtiStage):
                    pts.extend(st.breakpoints())
        return pts


@dataclass(frozen=True)
class AliasedMatrices:
    """Per-frequency alias matrices over a grid of fundamental frequencies.

    sampler[i] is the n x (2L+1) noise-scaled response of every
    (branch, offset) row to each input alias, channel[i] the diagonal
    of per-alias signal-to-sqrt-noise gains, whitened[i] the
    noise-whitened compound map, and eigenvalues[i] the descending
    eigenvalues of its Gram.
    """

    L: int
    freqs: np.ndarray
    sampler: np.ndarray      # (n_f, n, 2L+1) complex
    channel: np.ndarray      # (n_f, 2L+1) real
    whitened: np.ndarray     # (n_f, n, 2L+1) complex
    eigenvalues: np.ndarray  # (n_f, n) descending


def _expand_paths(stages):
    """All modulator-harmonic choices through the chain.

    Returns a list of (total_shift, coeff, lti_evals) with shifts in
    units of the system's f_q; lti_evals pairs each LTI stage with the
    accumulated shift at its input.
    """
    paths = [(0, 1.0 + 0.0j, ())]
    for st in stages:
        if isinstance(st, LtiStage):
            paths = [(sh, c, ev + ((st, sh),)) for sh, c, ev in paths]
        elif isinstance(st, Modulator):
            j = st.period_divisor
            paths = [
                (sh + m * j, c * cm, ev)
                for sh, c, ev in paths
                for m, cm in st.coeffs
                if cm != 0
            ]
        else:
            raise ValidationError(f"unknown stage type {type(st).__name__}")
    return paths


def _branch_response(branch, f, f_q, cols, cache):
    """Row response (per offset) of one branch to each input alias column.

    f: (n_f,) fundamental frequencies; cols: integer alias indices.
    Returns array (n_offsets, n_f, n_cols).
    """
    paths = _expand_paths(branch.stages)
    n_f, n_c = f.size, cols.size
    t = np.asarray(branch.offsets, dtype=float)
    rows = np.zeros((t.size, n_f, n_c), dtype=complex)
    for shift, coeff, evals in paths:
        amp = np.full((n_f, n_c), coeff, dtype=complex)
        for stage, sh_before in evals:
            key = (id(stage), sh_before)
            if key not in cache:
                freqs = f[:, None] + (cols[None, :] + sh_before) * f_q
                cache[key] = stage.transfer(freqs)
            amp = amp * cache[key]
        if not np.any(amp):
            continue
        l_out = cols + shift
        phases = np.exp(2j * np.pi * f_q * t[:, None] * l_out[None, :])
        rows += amp[None, :, :] * phases[:, None, :]
    return rows


def _assemble(sys: PeriodicSamplingSystem, s: SnrDensity, L: int, freqs):
    f_q = sys.f_q
    freqs = np.asarray(freqs, dtype=float)
    # columns wide enough to cover everything inside the analysis window
    L_cov = int(math.ceil((s.f_max + f_q / 2) / f_q - 1e-12))
    L_ext = max(L, L_cov)
    cols = np.arange(-L_ext, L_ext + 1)

    if s.gain.support_bound() > (L + 0.5) * f_q + 1e-12:
        raise AliasWindowError(
            "alias window too small: channel gain extends beyond (L+1/2)*f_q"
        )

    alias_f = freqs[:, None] + cols[None, :] * f_q
    noise_al = s.noise_clipped(alias_f)
    gain_al = s.gain_clipped(alias_f)
    sqrt_noise = np.sqrt(noise_al)
    channel = np.sqrt(np.divide(gain_al, noise_al, out=np.zeros_like(gain_al), where=noise_al > 0))

    cache = {}
    rows = [
        _branch_response(br, freqs, f_q, cols, cache) for br in sys.branches
    ]
    raw = np.concatenate(rows, axis=0)  # (n, n_f, n_cols)
    sampler = raw * sqrt_noise[None, :, :]

    if L_ext > L:
        drop = np.abs(cols) > L
        row_sig = np.abs(sampler) ** 2 + np.abs(sampler * channel[None, :, :]) ** 2
        e_total = row_sig.sum(axis=(1, 2))
        e_drop = row_sig[:, :, drop].sum(axis=(1, 2))
        bad = e_drop > EPS_ALIAS * np.maximum(e_total, 1e-300)
        if np.any(bad & (e_total > 0)):
            raise AliasWindowError(
                "alias window too small: sampler rows carry energy beyond +-L aliases"
            )
        keep = ~drop
        sampler = sampler[:, :, keep]
        channel = channel[:, keep]

    if not np.any(np.abs(sampler) > 0):
        raise DegenerateSamplerError("sampler response is identically zero")

    sampler = np.ascontiguousarray(np.moveaxis(sampler, 0, 1))  # (n_f, n, 2L+1)
    whitened, lam = whitened_eigenvalues(sampler, channel)
    return AliasedMatrices(int(L), freqs, sampler, channel, whitened, lam)


def whitened_eigenvalues(sampler, channel):
    """Noise-whitened compound map and its Gram eigenvalues, batched.

    sampler: (n_f, n, n_cols) noise-scaled alias responses; channel:
    (n_f, n_cols) per-alias signal-to-sqrt-noise diagonal.  Whitening
    uses the pseudo-inverse square root of sampler @ sampler*: sample
    directions whose noise eigenvalue falls below EPS_PINV of the
    largest are treated as redundant and dropped.
    """
    gram = np.einsum("fal,fbl->fab", sampler, sampler.conj())
    evals, evecs = np.linalg.eigh(gram)
    cutoff = EPS_PINV * np.maximum(evals[:, -1:], 0.0)
    inv_sqrt = np.where(evals > cutoff, 1.0 / np.sqrt(np.maximum(evals, 1e-300)), 0.0)

    compound = sampler * channel[:, None, :]
    rot = np.einsum("fba,fbl->fal", evecs.conj(), compound)  # U^H (Fq Fh)
    w_rows = inv_sqrt[:, :, None] * rot
    whitened = np.einsum("fab,fbl->fal", evecs, w_rows)

    wgram = np.einsum("fal,fbl->fab", w_rows, w_rows.conj())
    lam = np.linalg.eigvalsh(wgram)[:, ::-1]
    return whitened, np.maximum(lam, 0.0)


def assemble_matrices(sys, s: SnrDensity, L: int, f: float) -> AliasedMatrices:
    """Alias matrices at one fundamental frequency f in [-f_q/2, f_q/2]."""
    if abs(f) > sys.f_q / 2 + 1e-12:
        raise DomainError("f outside the fundamental window [-f_q/2, f_q/2]")
    return _assemble(sys, s, L, np.array([float(f)]))


def assemble_over_grid(sys, s: SnrDensity, L: int, g: Grid) -> AliasedMatrices:
    lo, hi = g.window
    half = sys.f_q / 2
    if abs(lo + half) > 1e-9 * half or abs(hi - half) > 1e-9 * half:
        raise DomainError("grid must span the fundamental window [-f_q/2, f_q/2]")
    return _assemble(sys, s, L, g.centers)


def auto_alias_count(sys: PeriodicSamplingSystem, s: SnrDensity) -> int:
    return int(math.ceil(s.f_max / sys.f_q + 0.5))


def _fold(beta, f_q):
    return beta - np.round(beta / f_q) * f_q


def alias_grid(sys: PeriodicSamplingSystem, s: SnrDensity, n_bins) -> Grid:
    """Fundamental-window grid with every induced breakpoint on a bin edge.

    Spectral piece boundaries and filter band edges reappear in the
    folded tables at their values mod f_q; aligning bins there keeps the
    eigenvalue tables smooth inside each bin.
    """
    f_q = sys.f_q
    pts = set(s.breakpoints()) | set(sys.breakpoints())
    folded = sorted({float(_fold(b, f_q)) for b in pts})
    return Grid.aligned((-f_q / 2, f_q / 2), n_bins, folded)


def periodic_capacity(sys, s: SnrDensity, P: float, g: Grid, L=None, tol=1e-9) -> WaterfillSolution:
    """Exact capacity (nats/sec) of a periodic sampling system.

    Water-fills the power budget jointly over frequency and the
    eigen-channels of the whitened alias Gram; allocation comes back as
    an (n_f, n) table aligned with the grid and eigenvalue order.
    """
    if P < 0:
        raise DomainError("power budget must be nonnegative")
    if L is None:
        L = auto_alias_count(sys, s)
    am = assemble_over_grid(sys, s, L, g)
    lam = am.eigenvalues  # (n_f, n)
    w = np.broadcast_to(g.widths[:, None], lam.shape)

    usable = lam > 0
    alloc = np.zeros(lam.shape)
    if P == 0:
        nu = float((1.0 / lam[usable]).min()) if usable.any() else 0.0
        return WaterfillSolution(nu, 0.0, alloc, 0.0)
    if not usable.any():
        from .errors import NoUsableSpectrumError

        raise NoUsableSpectrumError("no usable spectrum for a positive power budget")

    nu = water_level(1.0 / lam[usable], w[usable], P, tol=tol)
    alloc[usable] = np.maximum(nu - 1.0 / lam[usable], 0.0)
    active = alloc > 0
    cap = float(np.sum(w[active] * 0.5 * np.log(nu * lam[active])))
    total = float(np.sum(w * alloc))
    return WaterfillSolution(float(nu), cap, alloc, total)


# ---------------------------------------------------------------------------
# system-spec documents

def parse_system_spec(text: str) -> PeriodicSamplingSystem:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"system spec is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("system spec must be a JSON object")
    extra = set(doc) - {"T_q", "branches"}
    if extra:
        raise ValidationError(f"system spec: unknown keys {sorted(extra)}")
    if "T_q" not in doc or "branches" not in doc:
        raise ValidationError("system spec: needs 'T_q' and 'branches'")
    branches = []
    if not isinstance(doc["branches"], list) or not doc["branches"]:
        raise ValidationError("branches: must be a non-empty list")
    for bi, bdoc in enumerate(doc["branches"]):
        extra = set(bdoc) - {"stages", "offsets"}
        if extra:
            raise ValidationError(f"branches[{bi}]: unknown keys {sorted(extra)}")
        stages = []
        for si, sdoc in enumerate(bdoc.get("stages", [])):
            stages.append(_parse_stage(sdoc, f"branches[{bi}].stages[{si}]"))
        offsets = tuple(float(t) for t in bdoc.get("offsets", []))
        branches.append(BranchChain(tuple(stages), offsets))
    return PeriodicSamplingSystem(float(doc["T_q"]), tuple(branches))


def _parse_stage(doc, where):
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ValidationError(f"{where}: stage must be an object with a 'kind'")
    kind = doc["kind"]
    if kind == "lti":
        extra = set(doc) - {"kind", "pieces"}
        if extra:
            raise ValidationError(f"{where}: unknown keys {sorted(extra)}")
        pieces = []
        for pi, pdoc in enumerate(doc.get("pieces", [])):
            extra = set(pdoc) - {"interval", "profile", "phase"}
            if extra:
                raise ValidationError(f"{where}.pieces[{pi}]: unknown keys {sorted(extra)}")
            iv = pdoc.get("interval")
            if iv is None:
                lo, hi = -math.inf, math.inf
            elif isinstance(iv, list) and len(iv) == 2:
                lo, hi = float(iv[0]), float(iv[1])
            else:
                raise ValidationError(f"{where}.pieces[{pi}].interval: must be [lo, hi] or null")
            prof = profile_from_json(pdoc.get("profile"), f"{where}.pieces[{pi}].profile")
            pieces.append((lo, hi, prof, float(pdoc.get("phase", 0.0))))
        if not pieces:
            raise ValidationError(f"{where}: lti stage needs at least one piece")
        return LtiStage(tuple(pieces))
    if kind == "mod":
        extra = set(doc) - {"kind", "coeffs", "period_divisor"}
        if extra:
            raise ValidationError(f"{where}: unknown keys {sorted(extra)}")
        coeffs = doc.get("coeffs")
        if not isinstance(coeffs, dict) or not coeffs:
            raise ValidationError(f"{where}.coeffs: must map harmonic index to [re, im]")
        pairs = []
        for m, val in coeffs.items():
            try:
                mi = int(m)
            except ValueError as exc:
                raise ValidationError(f"{where}.coeffs: bad harmonic index {m!r}") from exc
            if not (isinstance(val, list) and len(val) == 2):
                raise ValidationError(f"{where}.coeffs[{m}]: must be [re, im]")
            pairs.append((mi, complex(float(val[0]), float(val[1]))))
        pairs.sort()
        return Modulator(tuple(pairs), int(doc.get("period_divisor", 1)))
    raise ValidationError(f"{where}: unknown stage kind {kind!r}")


def system_spec_json(sys: PeriodicSamplingSystem) -> dict:
    branches = []
    for br in sys.branches:
        stages = []
        for st in br.stages:
            if isinstance(st, LtiStage):
                pieces = []
                for lo, hi, prof, phase in st.pieces:
                    iv = None if math.isinf(lo) or math.isinf(hi) else [lo, hi]
                    piece = {"interval": iv, "profile": prof.to_json()}
                    if phase:
                        piece["phase"] = phase
                    pieces.append(piece)
                stages.append({"kind": "lti", "pieces": pieces})
            else:
                stages.append(
                    {
                        "kind": "mod",
                        "coeffs": {str(m): [c.real, c.imag] for m, c in st.coeffs},
                        "period_divisor": st.period_divisor,
                    }
                )
        branches.append({"stages": stages, "offsets": list(br.offsets)})
    return {"T_q": sys.T_q, "branches": branches}
