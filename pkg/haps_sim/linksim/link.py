"""
Frame assembly, impairment and the receive-side front end.

Both the CNN dataset generators and the Monte Carlo sweeps build, impair and
front-end process their frames through this module, so training data and
evaluation data see the same link.

A frame is the cyclic-prefixed two-half preamble followed by ``num_symbols``
OFDM symbols. The preamble is scaled to the expected per-sample power of the
payload so one SNR describes the whole frame.
"""
import hashlib
import logging
import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .channel import ChannelRealization, add_awgn, apply_cfo, apply_channel, draw_cfo, draw_channel
from .classical_estimation import (
    ChannelEstimate,
    correct_cfo,
    ls_channel_estimate,
    schmidl_cox_cfo,
    zf_equalize,
)
from .exceptions import DimensionError
from .waveform import (
    BITS_PER_SYMBOL,
    PILOT_SYMBOL,
    FrameLayout,
    build_preamble,
    extract_pilots,
    insert_pilots,
    ofdm_demodulate,
    ofdm_modulate,
    qam_demodulate,
    qam_modulate,
)

logger = logging.getLogger(__name__)

# Stream identifiers for derived random generators.
STREAM_CE_DATASET = 1
STREAM_CFO_DATASET = 2
STREAM_SWEEP = 3
STREAM_MIXTURE = 4
STREAM_TRAINING = 5


def derive_rng(seed, *keys):
    """Independent generator for (seed, *keys); the same keys always give the same stream."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys)))


@dataclass(frozen=True, eq=False)
class FrameSpec:
    ofdm: object
    layout: FrameLayout
    preamble: object

    @classmethod
    def from_config(cls, ofdm, preamble_seed=0):
        return cls(ofdm, FrameLayout.from_config(ofdm), build_preamble(ofdm, preamble_seed))

    @property
    def preamble_gain(self):
        """Amplitude matching the payload's expected per-sample power κ/N²."""
        return math.sqrt(self.ofdm.num_subcarriers) / self.ofdm.fft_size

    @property
    def bits_per_frame(self):
        return self.ofdm.num_symbols * self.ofdm.bits_per_ofdm_symbol

    @property
    def data_shape(self):
        return (self.ofdm.num_symbols, self.ofdm.num_data_subcarriers)

    def with_symbols(self, num_symbols):
        return FrameSpec(replace(self.ofdm, num_symbols=num_symbols), self.layout, self.preamble)


@dataclass(frozen=True, eq=False)
class TxFrame:
    bits: np.ndarray
    data_symbols: np.ndarray
    grids: np.ndarray
    samples: np.ndarray


@dataclass(frozen=True, eq=False)
class Impairments:
    """Ground truth of one frame: channel draw, CFO and SNR."""
    channel: ChannelRealization
    epsilon: float
    snr_db: float


@dataclass(frozen=True, eq=False)
class RxFrame:
    tx: TxFrame
    truth: Impairments
    samples: np.ndarray


class Reception(NamedTuple):
    """Receiver front-end output: CFO estimate, per-symbol CFR estimate and derotated grids."""
    epsilon_hat: float
    channel: ChannelEstimate
    grids: np.ndarray


def preamble_section(spec, amplitude=1.0):
    full = spec.preamble.full
    cp = spec.ofdm.cp_length
    prefixed = np.concatenate([full[len(full) - cp:], full]) if cp else full
    return amplitude * spec.preamble_gain * prefixed


def assemble_frame(spec, data_symbols, pilot_value=PILOT_SYMBOL, preamble_amplitude=1.0):
    """Frequency grids and time samples of a frame carrying ``data_symbols`` (num_symbols × data bins)."""
    data_symbols = np.asarray(data_symbols, dtype=np.complex128)
    if data_symbols.shape != spec.data_shape:
        raise DimensionError(f"Frame payload must be {spec.data_shape}, got {data_symbols.shape}.")
    grids = insert_pilots(data_symbols, spec.layout, pilot_value)
    if spec.ofdm.num_symbols:
        payload = ofdm_modulate(grids, spec.ofdm).ravel()
    else:
        payload = np.empty(0, dtype=np.complex128)
    samples = np.concatenate([preamble_section(spec, preamble_amplitude), payload])
    return grids, samples


def build_frame(spec, bits):
    bits = np.asarray(bits, dtype=np.int8).ravel()
    if bits.size != spec.bits_per_frame:
        raise DimensionError(f"A frame carries {spec.bits_per_frame} bits, got {bits.size}.")
    symbols = qam_modulate(bits).reshape(spec.data_shape)
    grids, samples = assemble_frame(spec, symbols)
    return TxFrame(bits, symbols, grids, samples)


def received_power(samples, occupancy):
    """Per-sample power referenced to the occupied subcarriers (P̂·N/κ)."""
    if samples.size == 0:
        return 0.0
    return float(np.mean(np.abs(samples) ** 2)) * occupancy


def impair(samples, truth, cfg, rng):
    """Channel, then CFO from global sample 0, then AWGN at the per-subcarrier SNR."""
    faded = apply_channel(samples, truth.channel, cfg.cp_length).samples
    rotated = apply_cfo(faded, truth.epsilon, cfg, start_index=0)
    power = received_power(faded, cfg.occupancy)
    if power == 0.0:
        return rotated
    return add_awgn(rotated, truth.snr_db, power, rng)


def simulate_frame(spec, channel_spec, cfo_mixture, snr_db, rng):
    """Random bits → frame → Rician channel → mixture CFO → noise (draws in that order)."""
    bits = rng.integers(0, 2, size=spec.bits_per_frame, dtype=np.int8)
    tx = build_frame(spec, bits)
    truth = Impairments(
        channel=draw_channel(channel_spec, rng, spec.ofdm.fft_size),
        epsilon=draw_cfo(cfo_mixture, rng),
        snr_db=snr_db,
    )
    return RxFrame(tx, truth, impair(tx.samples, truth, spec.ofdm, rng))


def preamble_halves(samples, spec):
    cp, half = spec.ofdm.cp_length, spec.ofdm.preamble_half_len
    return samples[cp:cp + half], samples[cp + half:cp + 2 * half]


def estimate_cfo(samples, spec):
    p1, p2 = preamble_halves(samples, spec)
    return schmidl_cox_cfo(p1, p2, spec.ofdm.fft_size, spec.ofdm.preamble_half_len)


def payload_grids(samples, spec, epsilon_hat):
    """Derotate the payload by ε̂ (global sample index) and return its frequency grids."""
    cfg = spec.ofdm
    start = cfg.preamble_section_length
    length = cfg.num_symbols * cfg.symbol_length
    payload = np.asarray(samples)[start:start + length]
    if payload.size != length:
        raise DimensionError(f"Frame payload has {payload.size} samples, expected {length}.")
    corrected = correct_cfo(payload, epsilon_hat, cfg, start_index=start)
    return ofdm_demodulate(corrected.reshape(cfg.num_symbols, cfg.symbol_length), cfg)


def true_cfr(channel, spec):
    """True response over the occupied band, repeated for every payload symbol."""
    occupied = channel.cfr[spec.layout.occupied]
    return np.broadcast_to(occupied, (spec.ofdm.num_symbols, occupied.size))


class ClassicalFrontEnd:
    """Preamble CFO estimate, correction and per-symbol interpolated LS."""

    def __init__(self, spec, reference_amplitude=1.0):
        self.spec = spec
        self.reference_amplitude = reference_amplitude

    def receive(self, samples, truth=None):
        epsilon_hat = estimate_cfo(samples, self.spec).epsilon_hat
        grids = payload_grids(samples, self.spec, epsilon_hat)
        estimate = ls_channel_estimate(grids, self.spec.layout, self.reference_amplitude)
        return Reception(epsilon_hat, estimate, grids)


class GenieFrontEnd:
    """Perfect CSI: the true CFO and the true response of the reference channel."""

    def __init__(self, spec, reference_amplitude=1.0):
        self.spec = spec
        self.reference_amplitude = reference_amplitude

    def receive(self, samples, truth):
        grids = payload_grids(samples, self.spec, truth.epsilon)
        return Reception(truth.epsilon, ChannelEstimate(np.array(true_cfr(truth.channel, self.spec))), grids)


def equalize(reception, spec):
    """Zero-forcing of the data bins of every payload symbol."""
    _, observations = extract_pilots(reception.grids, spec.layout)
    at_data = reception.channel.cfr_hat[..., spec.layout.data_positions]
    return zf_equalize(observations, at_data)


def detect_bits(symbols, erasures, rng=None):
    """Hard-decided bits of equalized symbols; erased symbols get random bits when ``rng`` is given."""
    bits = qam_demodulate(symbols)
    erased = np.repeat(np.asarray(erasures, dtype=bool).ravel(), BITS_PER_SYMBOL)
    if rng is not None and erased.any():
        bits[erased] = rng.integers(0, 2, size=int(erased.sum()), dtype=np.int8)
    return bits


def frame_digest(frame):
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(frame.tx.bits).tobytes())
    digest.update(np.ascontiguousarray(frame.samples, dtype='<c16').tobytes())
    digest.update(np.float64(frame.truth.epsilon).tobytes())
    return digest.hexdigest()
