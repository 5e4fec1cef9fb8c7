"""Small link configurations shared by the test modules."""
from fractions import Fraction

from ..channel import CfoMixture, RicianChannelSpec
from ..link import FrameSpec
from ..scenario import ScenarioConfig
from ..waveform import OfdmConfig


def small_ofdm(**overrides):
    """64-point transform, 32 occupied bins, 4 pilots, 2 payload symbols."""
    values = dict(fft_size=64, num_subcarriers=32, cp_length=8, pilot_ratio=Fraction(1, 8),
                  preamble_half_len=32, num_symbols=2)
    values.update(overrides)
    return OfdmConfig(**values)


def small_spec(**overrides):
    return FrameSpec.from_config(small_ofdm(**overrides))


def flat_channel():
    """Pure line of sight with a single unit tap."""
    return RicianChannelSpec(k_factor=float('inf'), num_taps=1, tap_power_profile=(1.0,))


def fixed_cfo(value=0.0):
    """A mixture that practically always yields ``value``."""
    return CfoMixture(weights=(1.0,), means=(value,), variances=(1e-30,))


def small_scenario(**overrides):
    values = dict(
        ofdm=small_ofdm(),
        snr_grid=(10.0, 20.0),
        trials=4,
        seed=7,
        cfo=CfoMixture(weights=(0.5, 0.3, 0.2)),
    )
    values.update(overrides)
    return ScenarioConfig(**values)
