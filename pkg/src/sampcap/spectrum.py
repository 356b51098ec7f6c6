"""Piecewise spectral densities, SNR density, and aligned-grid quadrature.

Channel gain |H(f)|^2 and noise PSD are piecewise profiles over closed
frequency intervals inside a symmetric analysis window [-F, F].  Outside
its pieces the gain is zero and the noise sits at a strictly positive
floor; outside the window nothing exists (both are treated as zero), so
every downstream integral and alias sum stays finite.

Quadrature is the midpoint rule on a grid whose bin edges are forced
onto every piece boundary, so discontinuities never bisect a bin and
the rule is second order on each smooth piece.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError

DEFAULT_N_BINS = 4096


# ---------------------------------------------------------------------------
# profiles

@dataclass(frozen=True)
class Constant:
    value: float

    def evaluate(self, f):
        return np.full(np.shape(f), float(self.value))

    def scaled(self, c):
        return Constant(self.value * c)

    def min_on(self, lo, hi):
        return self.value

    def to_json(self):
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class Linear:
    """a + b*f on its interval."""

    a: float
    b: float

    def evaluate(self, f):
        return self.a + self.b * np.asarray(f, dtype=float)

    def scaled(self, c):
        return Linear(self.a * c, self.b * c)

    def min_on(self, lo, hi):
        return min(self.a + self.b * lo, self.a + self.b * hi)

    def to_json(self):
        return {"kind": "linear", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class PowerLaw:
    """scale / (1 + (f/f0)^(2k)), a Butterworth-style rolloff."""

    f0: float
    k: int
    scale: float = 1.0

    def evaluate(self, f):
        return self.scale / (1.0 + (np.asarray(f, dtype=float) / self.f0) ** (2 * self.k))

    def scaled(self, c):
        return PowerLaw(self.f0, self.k, self.scale * c)

    def min_on(self, lo, hi):
        worst = max(abs(lo), abs(hi))
        return self.scale / (1.0 + (worst / self.f0) ** (2 * self.k))

    def to_json(self):
        return {"kind": "powerlaw", "f0": self.f0, "k": self.k, "scale": self.scale}


_PROFILE_KEYS = {
    "constant": ({"kind", "value"}, lambda d: Constant(float(d["value"]))),
    "linear": ({"kind", "a", "b"}, lambda d: Linear(float(d["a"]), float(d["b"]))),
    "powerlaw": (
        {"kind", "f0", "k", "scale"},
        lambda d: PowerLaw(float(d["f0"]), int(d["k"]), float(d.get("scale", 1.0))),
    ),
}


def profile_from_json(doc, where):
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ValidationError(f"{where}: profile must be an object with a 'kind'")
    kind = doc["kind"]
    if kind not in _PROFILE_KEYS:
        raise ValidationError(f"{where}: unknown profile kind {kind!r}")
    allowed, build = _PROFILE_KEYS[kind]
    extra = set(doc) - allowed
    if extra:
        raise ValidationError(f"{where}: unknown keys {sorted(extra)}")
    try:
        prof = build(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{where}: bad profile parameters ({exc})") from exc
    if isinstance(prof, PowerLaw):
        if prof.f0 <= 0:
            raise ValidationError(f"{where}: powerlaw needs f0 > 0")
        if prof.k < 1:
            raise ValidationError(f"{where}: powerlaw needs integer k >= 1")
        if prof.scale < 0:
            raise ValidationError(f"{where}: powerlaw needs scale >= 0")
    return prof


# ---------------------------------------------------------------------------
# piecewise densities

@dataclass(frozen=True)
class SpectralDensity:
    """Nonnegative piecewise density; `fill` applies outside all pieces.

    Gain densities use fill = 0.  Noise densities use fill = floor > 0 so
    the SNR ratio is always defined inside the analysis window.
    """

    pieces: tuple  # of (lo, hi, profile)
    fill: float = 0.0

    @classmethod
    def gain(cls, pieces):
        return cls(_validate_pieces(pieces, "gain", allow_zero=True), 0.0)

    @classmethod
    def noise(cls, pieces, floor):
        if not (floor > 0) or not math.isfinite(floor):
            raise ValidationError("noise.floor: must be a positive finite number")
        return cls(_validate_pieces(pieces, "noise", allow_zero=False), float(floor))

    def evaluate(self, f):
        f = np.asarray(f, dtype=float)
        out = np.full(f.shape, self.fill)
        for lo, hi, prof in self.pieces:
            mask = (f >= lo) & (f <= hi)
            if mask.any():
                out[mask] = prof.evaluate(f[mask])
        return out

    def breakpoints(self):
        pts = []
        for lo, hi, _ in self.pieces:
            pts.extend((lo, hi))
        return sorted(set(pts))

    def support_bound(self):
        """Largest |f| where a piece can be nonzero (0 if no pieces)."""
        if not self.pieces:
            return 0.0
        return max(max(abs(lo), abs(hi)) for lo, hi, _ in self.pieces)

    def scaled(self, c):
        if c <= 0:
            raise DomainError("scale factor must be positive")
        return SpectralDensity(
            tuple((lo, hi, p.scaled(c)) for lo, hi, p in self.pieces), self.fill * c
        )

    def to_json(self):
        return [
            {"interval": [lo, hi], "profile": p.to_json()} for lo, hi, p in self.pieces
        ]


def _validate_pieces(pieces, label, allow_zero):
    norm = []
    prev_hi = -math.inf
    for i, item in enumerate(pieces):
        lo, hi, prof = item
        lo, hi = float(lo), float(hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValidationError(f"{label}[{i}].interval: endpoints must be finite")
        if lo >= hi:
            raise ValidationError(f"{label}[{i}].interval: interval reversed or empty")
        if lo < prev_hi:
            raise ValidationError(f"{label}[{i}].interval: overlaps previous piece")
        prev_hi = hi
        low = prof.min_on(lo, hi)
        if allow_zero and low < 0:
            raise ValidationError(f"{label}[{i}].profile: negative on its interval")
        if not allow_zero and low <= 0:
            raise ValidationError(f"{label}[{i}].profile: must stay positive")
        norm.append((lo, hi, prof))
    return tuple(norm)


@dataclass(frozen=True)
class SnrDensity:
    """Channel gain and noise PSD over a symmetric analysis window."""

    gain: SpectralDensity
    noise: SpectralDensity
    window: tuple  # (-F, F)

    def __post_init__(self):
        lo, hi = self.window
        if not (lo < 0 < hi) or abs(lo + hi) > 1e-12 * hi:
            raise ValidationError("window: must be symmetric [-F, F] with F > 0")
        if self.gain.support_bound() > hi + 1e-12 * hi:
            raise ValidationError("window: must contain the gain support")

    @property
    def f_max(self):
        return self.window[1]

    def gamma(self, f):
        """SNR density gain/noise; raises outside the analysis window."""
        f = np.asarray(f, dtype=float)
        lo, hi = self.window
        if np.any(f < lo) or np.any(f > hi):
            raise DomainError("frequency outside the analysis window")
        g = self.gain.evaluate(f)
        n = self.noise.evaluate(f)
        return g / n

    def gamma_clipped(self, f):
        """SNR density, zero outside the window (for alias tables)."""
        f = np.asarray(f, dtype=float)
        inside = self._inside(f)
        out = np.zeros(f.shape)
        if inside.any():
            fi = f[inside]
            out[inside] = self.gain.evaluate(fi) / self.noise.evaluate(fi)
        return out

    def gain_clipped(self, f):
        f = np.asarray(f, dtype=float)
        out = np.zeros(f.shape)
        inside = self._inside(f)
        if inside.any():
            out[inside] = self.gain.evaluate(f[inside])
        return out

    def noise_clipped(self, f):
        f = np.asarray(f, dtype=float)
        out = np.zeros(f.shape)
        inside = self._inside(f)
        if inside.any():
            out[inside] = self.noise.evaluate(f[inside])
        return out

    def _inside(self, f):
        lo, hi = self.window
        return (f >= lo) & (f <= hi)

    def breakpoints(self):
        pts = set(self.gain.breakpoints()) | set(self.noise.breakpoints())
        pts |= set(self.window)
        return sorted(pts)

    def scaled(self, c):
        """Same SNR density, both spectra multiplied by c > 0."""
        return SnrDensity(self.gain.scaled(c), self.noise.scaled(c), self.window)


def eval_gamma(s: SnrDensity, f):
    """SNR density at f (scalar or array); domain error outside the window."""
    out = s.gamma(f)
    if np.ndim(f) == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# grids

class Grid:
    """Midpoint-rule grid whose edges include every supplied breakpoint."""

    def __init__(self, edges):
        edges = np.asarray(edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValidationError("grid edges must be strictly increasing")
        self.edges = edges
        self.centers = 0.5 * (edges[:-1] + edges[1:])
        self.widths = np.diff(edges)
        span = edges[-1] - edges[0]
        if not math.isclose(float(self.widths.sum()), span, rel_tol=1e-12):
            raise ValidationError("grid widths do not sum to the window length")

    @property
    def n_bins(self):
        return self.centers.size

    @property
    def window(self):
        return (float(self.edges[0]), float(self.edges[-1]))

    @classmethod
    def aligned(cls, window, n_bins, breakpoints=()):
        """Roughly n_bins bins over window with breakpoints forced onto edges."""
        lo, hi = float(window[0]), float(window[1])
        if not lo < hi:
            raise ValidationError("grid window reversed")
        if n_bins < 1:
            raise ValidationError("n_bins must be >= 1")
        span = hi - lo
        cuts = [lo, hi]
        for b in breakpoints:
            if lo + 1e-12 * span < b < hi - 1e-12 * span:
                cuts.append(float(b))
        cuts = sorted(set(cuts))
        # dedup nearly-coincident cuts
        kept = [cuts[0]]
        for c in cuts[1:]:
            if c - kept[-1] > 1e-12 * span:
                kept.append(c)
        kept[-1] = hi
        pieces = []
        for a, b in zip(kept[:-1], kept[1:]):
            n = max(1, int(round(n_bins * (b - a) / span)))
            pieces.append(np.linspace(a, b, n + 1)[:-1])
        edges = np.concatenate(pieces + [np.array([hi])])
        return cls(edges)

    @classmethod
    def for_snr(cls, s: SnrDensity, n_bins=DEFAULT_N_BINS):
        return cls.aligned(s.window, n_bins, s.breakpoints())


def integrate_over(s: SnrDensity, intervals, g: Grid):
    """Integrate the SNR density over a union of intervals.

    `intervals` is a FrequencySet or an (n, 2) array of disjoint closed
    intervals, each inside the analysis window.  Partial bins at interval
    endpoints are clipped and evaluated at the midpoint of the overlap,
    which keeps the rule second order when the grid is piece-aligned.
    """
    ivals = np.asarray(getattr(intervals, "intervals", intervals), dtype=float)
    if ivals.size == 0:
        return 0.0
    lo_w, hi_w = s.window
    total = 0.0
    for a, b in ivals:
        if a < lo_w - 1e-12 or b > hi_w + 1e-12:
            raise DomainError("integration interval outside the analysis window")
        total += _interval_quad(lambda f: s.gamma_clipped(f), g, a, b)
    return float(total)


def _interval_quad(fn, g: Grid, a, b):
    if b <= a:
        return 0.0
    edges = g.edges
    i0 = max(int(np.searchsorted(edges, a, side="right")) - 1, 0)
    i1 = min(int(np.searchsorted(edges, b, side="left")) - 1, g.n_bins - 1)
    if i1 < i0:
        return 0.0
    idx = np.arange(i0, i1 + 1)
    lo = np.maximum(edges[idx], a)
    hi = np.minimum(edges[idx + 1], b)
    w = hi - lo
    keep = w > 0
    if not keep.any():
        return 0.0
    mids = 0.5 * (lo[keep] + hi[keep])
    return float(np.sum(fn(mids) * w[keep]))


# ---------------------------------------------------------------------------
# channel-spec documents

_TOP_KEYS = {"gain", "noise", "window"}
_PIECE_KEYS = {"interval", "profile"}
_NOISE_KEYS = {"pieces", "floor"}


def parse_channel_spec(text: str) -> SnrDensity:
    """Parse a channel-spec JSON document; unknown keys are rejected."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"channel spec is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("channel spec must be a JSON object")
    extra = set(doc) - _TOP_KEYS
    if extra:
        raise ValidationError(f"channel spec: unknown keys {sorted(extra)}")
    missing = _TOP_KEYS - set(doc)
    if missing:
        raise ValidationError(f"channel spec: missing keys {sorted(missing)}")

    window = doc["window"]
    if not (isinstance(window, list) and len(window) == 2):
        raise ValidationError("window: must be [lo, hi]")

    gain = SpectralDensity.gain(_parse_pieces(doc["gain"], "gain"))

    noise_doc = doc["noise"]
    if not isinstance(noise_doc, dict):
        raise ValidationError("noise: must be an object with 'pieces' and 'floor'")
    extra = set(noise_doc) - _NOISE_KEYS
    if extra:
        raise ValidationError(f"noise: unknown keys {sorted(extra)}")
    if "floor" not in noise_doc:
        raise ValidationError("noise: missing 'floor'")
    noise = SpectralDensity.noise(
        _parse_pieces(noise_doc.get("pieces", []), "noise.pieces"),
        noise_doc["floor"],
    )
    return SnrDensity(gain, noise, (float(window[0]), float(window[1])))


def _parse_pieces(items, label):
    if not isinstance(items, list):
        raise ValidationError(f"{label}: must be a list of pieces")
    out = []
    for i, item in enumerate(items):
        if not isinstance(item, dict):
            raise ValidationError(f"{label}[{i}]: must be an object")
        extra = set(item) - _PIECE_KEYS
        if extra:
            raise ValidationError(f"{label}[{i}]: unknown keys {sorted(extra)}")
        iv = item.get("interval")
        if not (isinstance(iv, list) and len(iv) == 2):
            raise ValidationError(f"{label}[{i}].interval: must be [lo, hi]")
        prof = profile_from_json(item.get("profile"), f"{label}[{i}].profile")
        out.append((float(iv[0]), float(iv[1]), prof))
    return out


def channel_spec_json(s: SnrDensity) -> dict:
    return {
        "window": [s.window[0], s.window[1]],
        "gain": s.gain.to_json(),
        "noise": {"floor": s.noise.fill, "pieces": s.noise.to_json()},
    }
