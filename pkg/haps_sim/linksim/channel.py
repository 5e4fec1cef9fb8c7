"""
Link impairments: frequency-selective Rician fading, the Gaussian-mixture
carrier frequency offset process and additive white Gaussian noise.
"""
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import ConfigurationError, DimensionError
from .waveform import dft

logger = logging.getLogger(__name__)

MAX_CFO = 0.5

DEFAULT_TAP_PROFILE = (0.8, 0.15, 0.05)
DEFAULT_CFO_MEANS = (-0.2, 0.05, 0.3)
DEFAULT_CFO_VARIANCE = 0.01


def default_tap_profile(num_taps):
    """The three-tap profile for L=3, an exponentially decaying one otherwise."""
    if num_taps == len(DEFAULT_TAP_PROFILE):
        return DEFAULT_TAP_PROFILE
    decay = np.exp(-np.arange(num_taps, dtype=float))
    return tuple(float(p) for p in decay / decay.sum())


@dataclass(frozen=True)
class RicianChannelSpec:
    k_factor: float = 10.0
    num_taps: int = 3
    tap_power_profile: tuple = DEFAULT_TAP_PROFILE

    def __post_init__(self):
        object.__setattr__(self, 'tap_power_profile', tuple(float(p) for p in self.tap_power_profile))
        if not self.k_factor >= 0:
            raise ConfigurationError(f"k_factor must be >= 0, got {self.k_factor}.")
        if self.num_taps < 1:
            raise ConfigurationError("num_taps must be at least 1.")
        if len(self.tap_power_profile) != self.num_taps:
            raise ConfigurationError(
                f"tap_power_profile has {len(self.tap_power_profile)} entries for {self.num_taps} taps."
            )
        if min(self.tap_power_profile) < 0 or not math.isclose(sum(self.tap_power_profile), 1.0, abs_tol=1e-9):
            raise ConfigurationError("tap_power_profile must be non-negative and sum to 1.")

    @property
    def memory(self):
        return self.num_taps - 1


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Tap set of one block-fading draw and its N-point frequency response."""
    taps: np.ndarray
    cfr: np.ndarray

    @classmethod
    def from_taps(cls, taps, fft_size):
        taps = np.asarray(taps, dtype=np.complex128).ravel()
        if taps.size > fft_size:
            raise DimensionError(f"{taps.size} taps do not fit a {fft_size}-point response.")
        padded = np.zeros(fft_size, dtype=np.complex128)
        padded[:taps.size] = taps
        return cls(taps=taps, cfr=dft(padded))

    @classmethod
    def flat(cls, fft_size, gain=1.0):
        return cls.from_taps([gain], fft_size)

    @property
    def num_taps(self):
        return self.taps.size


@dataclass(frozen=True)
class CfoMixture:
    """Gaussian mixture the per-frame CFO is drawn from (variances, not deviations)."""
    weights: tuple
    means: tuple = DEFAULT_CFO_MEANS
    variances: tuple = (DEFAULT_CFO_VARIANCE,) * len(DEFAULT_CFO_MEANS)

    def __post_init__(self):
        for name in ('weights', 'means', 'variances'):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        sizes = {len(self.weights), len(self.means), len(self.variances)}
        if len(sizes) != 1 or not self.weights:
            raise ConfigurationError("weights, means and variances need one entry per component.")
        if min(self.weights) < 0 or not math.isclose(sum(self.weights), 1.0, abs_tol=1e-9):
            raise ConfigurationError("Mixture weights must be non-negative and sum to 1.")
        if min(self.variances) <= 0:
            raise ConfigurationError("Mixture variances must be positive.")

    @classmethod
    def with_random_weights(cls, rng, means=DEFAULT_CFO_MEANS, variances=None):
        """Draw the component weights from a flat Dirichlet distribution."""
        if variances is None:
            variances = (DEFAULT_CFO_VARIANCE,) * len(means)
        weights = rng.dirichlet(np.ones(len(means)))
        # Renormalise in float64 so the sum check holds exactly enough.
        weights = weights / weights.sum()
        return cls(weights=tuple(weights), means=tuple(means), variances=tuple(variances))

    @property
    def components(self):
        return len(self.weights)


class ChannelOutput(NamedTuple):
    samples: np.ndarray
    cp_too_short: bool


def draw_channel(spec, rng, fft_size=256):
    """
    One Rician block-fading draw.

    Tap 0 carries the line-of-sight part √(K/(K+1)) plus the scattered part
    √(1/(K+1))·CN(0,1); the remaining taps are pure CN(0,1). Every tap is
    scaled by the square root of its profile power.
    """
    powers = np.sqrt(np.asarray(spec.tap_power_profile))
    scattered = (rng.standard_normal(spec.num_taps) + 1j * rng.standard_normal(spec.num_taps)) / np.sqrt(2.0)
    taps = powers * scattered
    if math.isinf(spec.k_factor):
        los, nlos = 1.0, 0.0
    else:
        los = math.sqrt(spec.k_factor / (spec.k_factor + 1.0))
        nlos = math.sqrt(1.0 / (spec.k_factor + 1.0))
    taps[0] = powers[0] * (los + nlos * scattered[0])
    return ChannelRealization.from_taps(taps, fft_size)


def apply_channel(samples, ch, cp_length=None):
    """
    Linear convolution with the channel taps, truncated to the input length.

    ``cp_too_short`` is set when a cyclic prefix length is given and it
    cannot absorb the channel memory.
    """
    samples = np.asarray(samples, dtype=np.complex128)
    out = np.convolve(samples, ch.taps)[:samples.size]
    too_short = cp_length is not None and cp_length < ch.num_taps - 1
    if too_short:
        logger.warning(
            "Cyclic prefix of %d samples is shorter than the channel memory of %d samples.",
            cp_length, ch.num_taps - 1,
        )
    return ChannelOutput(out, too_short)


def apply_cfo(samples, epsilon, cfg, start_index=0):
    """Rotate sample n (global index ``start_index + n``) by e^{j2πεn/N}."""
    samples = np.asarray(samples, dtype=np.complex128)
    if epsilon == 0:
        return samples.copy()
    n = start_index + np.arange(samples.shape[-1])
    return samples * np.exp(2j * np.pi * epsilon * n / cfg.fft_size)


def cfo_attenuation(epsilon, n):
    """Amplitude of the desired subcarrier under CFO: sin(πε) / (N·sin(πε/N))."""
    if n < 1:
        raise ConfigurationError(f"Transform size must be >= 1, got {n}.")
    return float(np.sinc(epsilon) / np.sinc(epsilon / n))


def draw_cfo(mix, rng):
    component = rng.choice(mix.components, p=mix.weights)
    value = rng.normal(mix.means[component], math.sqrt(mix.variances[component]))
    return float(np.clip(value, -MAX_CFO, MAX_CFO))


def draw_cfo_sequence(mix, rng, count):
    """``count`` independent per-frame draws; the time-varying CFO of consecutive frames."""
    components = rng.choice(mix.components, p=mix.weights, size=count)
    means = np.asarray(mix.means)[components]
    deviations = np.sqrt(np.asarray(mix.variances))[components]
    return np.clip(rng.normal(means, deviations), -MAX_CFO, MAX_CFO)


def noise_power(snr_db, signal_power):
    if signal_power <= 0:
        raise ConfigurationError(f"signal_power must be positive, got {signal_power}.")
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return signal_power / 10.0 ** (snr_db / 10.0)


def add_awgn(samples, snr_db, signal_power, rng):
    """Add CN(0, N₀) noise with N₀ = signal_power / 10^(snr_db/10)."""
    samples = np.asarray(samples, dtype=np.complex128)
    n0 = noise_power(snr_db, signal_power)
    if n0 == 0.0:
        return samples.copy()
    noise = rng.standard_normal(samples.shape) + 1j * rng.standard_normal(samples.shape)
    return samples + math.sqrt(n0 / 2.0) * noise
