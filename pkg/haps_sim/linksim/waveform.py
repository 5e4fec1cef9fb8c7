"""
OFDM transmit/receive primitives.

Bit mapping, the transform pair, cyclic prefix handling, the subcarrier
layout (data, pilot and guard bins) and the two-half synchronisation
preamble.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .exceptions import ConfigurationError, DimensionError

logger = logging.getLogger(__name__)

BITS_PER_SYMBOL = 2
PILOT_SYMBOL = 1.0 + 0.0j

_QAM_AMPLITUDE = 1.0 / np.sqrt(2.0)


def is_power_of_two(value):
    return value > 0 and (value & (value - 1)) == 0


@dataclass(frozen=True)
class OfdmConfig:
    """
    Waveform constants of one link.

    The defaults are the HAPS-LEO system parameters: a 256-point transform with
    128 occupied subcarriers, a 16-sample cyclic prefix, one pilot every
    eighth occupied subcarrier and a preamble made of two 160-sample halves.

    Occupied bins sit symmetrically around DC, κ/2 on each side, so
    ``num_subcarriers`` must be even and at most ``fft_size - 2``.
    """
    fft_size: int = 256
    num_subcarriers: int = 128
    cp_length: int = 16
    pilot_ratio: Fraction = Fraction(1, 8)
    preamble_half_len: int = 160
    num_symbols: int = 10
    modulation_order: int = 4
    carrier_frequency_hz: float = 1.2e9

    def __post_init__(self):
        ratio = Fraction(self.pilot_ratio).limit_denominator(max(self.num_subcarriers, 1))
        object.__setattr__(self, 'pilot_ratio', ratio)

        if not is_power_of_two(self.fft_size):
            raise ConfigurationError(f"fft_size must be a power of two, got {self.fft_size}.")
        if self.num_subcarriers <= 0 or self.num_subcarriers % 2:
            raise ConfigurationError("num_subcarriers must be a positive even number.")
        # DC and the Nyquist bin always stay empty.
        if self.num_subcarriers > self.fft_size - 2:
            raise ConfigurationError(
                f"num_subcarriers={self.num_subcarriers} does not fit a "
                f"{self.fft_size}-point transform with DC and Nyquist unused."
            )
        if not 0 <= self.cp_length < self.fft_size:
            raise ConfigurationError("cp_length must satisfy 0 <= cp_length < fft_size.")
        if not 0 < ratio <= 1 or (ratio * self.num_subcarriers).denominator != 1:
            raise ConfigurationError(
                f"pilot_ratio*num_subcarriers must be an integer, got {ratio}*{self.num_subcarriers}."
            )
        if self.preamble_half_len <= 0:
            raise ConfigurationError("preamble_half_len must be positive.")
        if self.num_symbols < 0:
            raise ConfigurationError("num_symbols cannot be negative.")
        if self.modulation_order != 4:
            raise ConfigurationError("Only 4-QAM is supported.")

    @property
    def symbol_length(self):
        return self.fft_size + self.cp_length

    @property
    def num_pilots(self):
        return int(self.pilot_ratio * self.num_subcarriers)

    @property
    def num_data_subcarriers(self):
        return self.num_subcarriers - self.num_pilots

    @property
    def preamble_section_length(self):
        """Samples taken by the cyclic-prefixed preamble at the head of a frame."""
        return self.cp_length + 2 * self.preamble_half_len

    @property
    def occupancy(self):
        """Ratio of transform bins to occupied bins (N/κ)."""
        return self.fft_size / self.num_subcarriers

    @property
    def bits_per_ofdm_symbol(self):
        return BITS_PER_SYMBOL * self.num_data_subcarriers


@dataclass(frozen=True, eq=False)
class FrameLayout:
    """
    Subcarrier layout of one OFDM symbol.

    ``occupied`` lists the occupied bins in ascending frequency order
    (negative frequencies first); pilot and data bins keep that order.
    """
    fft_size: int
    occupied: np.ndarray
    pilot_subcarrier_indices: np.ndarray
    data_subcarrier_indices: np.ndarray
    guard_indices: np.ndarray
    pilot_positions: np.ndarray = field(repr=False)
    data_positions: np.ndarray = field(repr=False)

    @classmethod
    def from_config(cls, cfg):
        return _layout_for(cfg)

    def frequencies(self, bins):
        """Signed subcarrier frequency (in bins) of FFT bin indices."""
        bins = np.asarray(bins)
        return np.where(bins >= self.fft_size // 2, bins - self.fft_size, bins)

    @property
    def occupied_frequencies(self):
        return self.frequencies(self.occupied)

    @property
    def pilot_frequencies(self):
        return self.frequencies(self.pilot_subcarrier_indices)


@lru_cache(maxsize=32)
def _layout_for(cfg):
    n, half = cfg.fft_size, cfg.num_subcarriers // 2
    occupied = np.concatenate([np.arange(n - half, n), np.arange(1, half + 1)])

    num_pilots = cfg.num_pilots
    pilot_positions = (np.arange(num_pilots) * cfg.num_subcarriers) // num_pilots
    data_mask = np.ones(cfg.num_subcarriers, dtype=bool)
    data_mask[pilot_positions] = False
    data_positions = np.flatnonzero(data_mask)

    guard_mask = np.ones(n, dtype=bool)
    guard_mask[occupied] = False

    layout = FrameLayout(
        fft_size=n,
        occupied=occupied,
        pilot_subcarrier_indices=occupied[pilot_positions],
        data_subcarrier_indices=occupied[data_positions],
        guard_indices=np.flatnonzero(guard_mask),
        pilot_positions=pilot_positions,
        data_positions=data_positions,
    )
    for array in (layout.occupied, layout.pilot_subcarrier_indices,
                  layout.data_subcarrier_indices, layout.guard_indices,
                  layout.pilot_positions, layout.data_positions):
        array.setflags(write=False)
    return layout


@dataclass(frozen=True, eq=False)
class Preamble:
    """Two identical unit-power QPSK halves."""
    half: np.ndarray

    @property
    def full(self):
        return np.concatenate([self.half, self.half])

    def __len__(self):
        return 2 * len(self.half)


def qam_modulate(bits):
    """Gray-mapped 4-QAM: 00→(+,+), 01→(+,−), 11→(−,−), 10→(−,+)."""
    bits = np.asarray(bits, dtype=np.int8).ravel()
    if bits.size % BITS_PER_SYMBOL:
        raise DimensionError(f"4-QAM needs an even number of bits, got {bits.size}.")
    pairs = bits.reshape(-1, BITS_PER_SYMBOL)
    return _QAM_AMPLITUDE * ((1 - 2 * pairs[:, 0]) + 1j * (1 - 2 * pairs[:, 1]))


def qam_demodulate(symbols):
    """Hard decision per I/Q sign; a zero component falls on the positive side."""
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    bits = np.empty((symbols.size, BITS_PER_SYMBOL), dtype=np.int8)
    bits[:, 0] = symbols.real < 0
    bits[:, 1] = symbols.imag < 0
    return bits.ravel()


def hard_decision(symbols):
    """Nearest 4-QAM constellation point of each symbol."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    return qam_modulate(qam_demodulate(symbols)).reshape(symbols.shape)


def dft(x, inverse=False):
    """
    N-point transform along the last axis.

    Forward has no scaling; the inverse carries the 1/N factor so that
    ``dft(dft(x), inverse=True) == x``.
    """
    x = np.asarray(x, dtype=np.complex128)
    length = x.shape[-1] if x.ndim else 0
    if not is_power_of_two(length):
        raise DimensionError(f"Transform length must be a power of two, got {length}.")
    if inverse:
        return np.fft.ifft(x, axis=-1)
    return np.fft.fft(x, axis=-1)


def ofdm_modulate(grid, cfg):
    """Inverse transform each grid and prepend its last ``cp_length`` samples."""
    grid = np.asarray(grid, dtype=np.complex128)
    if grid.shape[-1] != cfg.fft_size:
        raise DimensionError(f"Grid length must be {cfg.fft_size}, got {grid.shape[-1]}.")
    body = dft(grid, inverse=True)
    if cfg.cp_length == 0:
        return body
    return np.concatenate([body[..., -cfg.cp_length:], body], axis=-1)


def ofdm_demodulate(samples, cfg):
    samples = np.asarray(samples, dtype=np.complex128)
    if samples.shape[-1] != cfg.symbol_length:
        raise DimensionError(
            f"OFDM symbol length must be {cfg.symbol_length}, got {samples.shape[-1]}."
        )
    return dft(samples[..., cfg.cp_length:])


def insert_pilots(data, layout, pilot_value=PILOT_SYMBOL):
    """Place data on the data bins and ``pilot_value`` on every pilot bin; guards stay zero."""
    data = np.asarray(data, dtype=np.complex128)
    num_data = layout.data_subcarrier_indices.size
    if data.shape[-1] != num_data:
        raise DimensionError(f"Expected {num_data} data symbols per grid, got {data.shape[-1]}.")
    grid = np.zeros(data.shape[:-1] + (layout.fft_size,), dtype=np.complex128)
    grid[..., layout.pilot_subcarrier_indices] = pilot_value
    grid[..., layout.data_subcarrier_indices] = data
    return grid


def extract_pilots(grid, layout):
    """Split a frequency grid into (pilot observations, data observations)."""
    grid = np.asarray(grid, dtype=np.complex128)
    if grid.shape[-1] != layout.fft_size:
        raise DimensionError(f"Grid length must be {layout.fft_size}, got {grid.shape[-1]}.")
    return grid[..., layout.pilot_subcarrier_indices], grid[..., layout.data_subcarrier_indices]


def occupied_view(grid, layout):
    """Occupied bins of a grid in ascending frequency order."""
    return np.asarray(grid)[..., layout.occupied]


def build_preamble(cfg, seed=0):
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=BITS_PER_SYMBOL * cfg.preamble_half_len)
    return Preamble(half=qam_modulate(bits))
