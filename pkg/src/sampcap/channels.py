"""Canonical test channels.

Three bandlimited Gaussian channels with unit noise density, chosen to
exercise distinct regimes: a flat channel (piecewise-constant SNR), a
triangular roll-off (continuously varying SNR), and a channel whose
best spectrum sits at the band edges (so good samplers must relocate
it).  All use an analysis window equal to the noise support; outside it
nothing exists, inside it the noise floor is 1.
"""

from .spectrum import Constant, Linear, SnrDensity, SpectralDensity

__all__ = ["flat_channel", "rolloff_channel", "edge_band_channel"]


def flat_channel() -> SnrDensity:
    """Unit gain on [-1, 1], unit noise on [-1.5, 1.5].

    SNR is 1 in band and 0 in the guard band, so the capacity bound and
    the level-set support have closed forms.
    """
    gain = SpectralDensity.gain([(-1.0, 1.0, Constant(1.0))])
    noise = SpectralDensity.noise([(-1.5, 1.5, Constant(1.0))], floor=1.0)
    return SnrDensity(gain, noise, (-1.5, 1.5))


def rolloff_channel() -> SnrDensity:
    """Triangular gain 1 - |f| on [-1, 1], unit noise on [-1.25, 1.25].

    SNR peaks at 1 at dc and falls linearly to zero at the band edges,
    so level-set supports and water levels vary continuously with rate
    and power; several related quantities have clean closed forms.
    """
    gain = SpectralDensity.gain(
        [
            (-1.0, 0.0, Linear(1.0, 1.0)),
            (0.0, 1.0, Linear(1.0, -1.0)),
        ]
    )
    noise = SpectralDensity.noise([(-1.25, 1.25, Constant(1.0))], floor=1.0)
    return SnrDensity(gain, noise, (-1.25, 1.25))


def edge_band_channel() -> SnrDensity:
    """Strong gain 4 on the edge bands [1, 1.5] and [-1.5, -1], gain 1 between.

    The SNR-maximal spectrum is split across the two outer bands, so a
    slow uniform sampler aliases them together and anything
    capacity-achieving has to shift them apart first.
    """
    gain = SpectralDensity.gain(
        [
            (-1.5, -1.0, Constant(4.0)),
            (-1.0, 1.0, Constant(1.0)),
            (1.0, 1.5, Constant(4.0)),
        ]
    )
    noise = SpectralDensity.noise([(-1.5, 1.5, Constant(1.0))], floor=1.0)
    return SnrDensity(gain, noise, (-1.5, 1.5))
