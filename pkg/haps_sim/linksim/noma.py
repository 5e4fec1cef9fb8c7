"""
Power-domain NOMA: superposition coding, successive interference
cancellation for the downlink and the uplink, and sum rate.

Users are numbered from 1 in decreasing power order: user 1 is the weak
user with the largest coefficient and is decoded first.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .channel import add_awgn, apply_cfo, apply_channel
from .classical_estimation import ChannelEstimate, CfoEstimate, zf_equalize
from .exceptions import ConfigurationError, DimensionError, EstimationError
from .link import detect_bits, payload_grids, received_power
from .waveform import extract_pilots, hard_decision

logger = logging.getLogger(__name__)

DEFAULT_POWER_COEFFS = (0.761, 0.191, 0.048)


@dataclass(frozen=True)
class NomaConfig:
    power_coeffs: tuple = DEFAULT_POWER_COEFFS
    total_power: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'power_coeffs', tuple(float(a) for a in self.power_coeffs))
        alphas = self.power_coeffs
        if not alphas:
            raise ConfigurationError("At least one power coefficient is required.")
        if min(alphas) <= 0:
            raise ConfigurationError("Power coefficients must be positive.")
        if not math.isclose(sum(alphas), 1.0, rel_tol=0.0, abs_tol=1e-9):
            raise ConfigurationError(f"Power coefficients must sum to 1, got {sum(alphas)!r}.")
        if any(a <= b for a, b in zip(alphas, alphas[1:])):
            raise ConfigurationError("Power coefficients must be strictly decreasing (weak user first).")
        if not self.total_power > 0:
            raise ConfigurationError("total_power must be positive.")

    @property
    def num_users(self):
        return len(self.power_coeffs)

    @property
    def amplitudes(self):
        """√(α_i·P_t) per user."""
        return tuple(math.sqrt(a * self.total_power) for a in self.power_coeffs)

    def alpha(self, user_index):
        if not 1 <= user_index <= self.num_users:
            raise ConfigurationError(f"User index must lie in [1, {self.num_users}], got {user_index}.")
        return self.power_coeffs[user_index - 1]


@dataclass(frozen=True, eq=False)
class UserSignal:
    """
    One user's payload.

    ``channel`` is only used on the uplink. ``waveform`` optionally carries the
    user's time-domain frame; without it the symbols are combined directly.
    """
    user_index: int
    bits: np.ndarray
    symbols: np.ndarray
    channel: object = None
    waveform: np.ndarray = None

    def __post_init__(self):
        if self.user_index < 1:
            raise ConfigurationError(f"User indices start at 1, got {self.user_index}.")

    @property
    def samples(self):
        return self.symbols if self.waveform is None else self.waveform


def _ordered(users, cfg):
    if len(users) != cfg.num_users:
        raise DimensionError(f"{len(users)} users given for a {cfg.num_users}-user configuration.")
    ordered = sorted(users, key=lambda u: u.user_index)
    if [u.user_index for u in ordered] != list(range(1, cfg.num_users + 1)):
        raise ConfigurationError("User indices must be exactly 1..M.")
    lengths = {np.asarray(u.samples).size for u in ordered}
    if len(lengths) != 1:
        raise DimensionError(f"All users must carry the same number of samples, got {sorted(lengths)}.")
    return ordered


def superpose(users, cfg):
    """y = Σ √(α_i·P_t)·x_i."""
    ordered = _ordered(users, cfg)
    return sum(amp * np.asarray(u.samples, dtype=np.complex128)
               for amp, u in zip(cfg.amplitudes, ordered))


def sic_decode_downlink(xbar, i, cfg, detected_priors):
    """
    Symbols of user ``i`` from the equalized superposition.

    The signal is normalised by √P_t. User 1 passes through; user i ≥ 2
    subtracts √α_j·x̂_j for every earlier user j and divides by √α_i. Priors
    beyond user i−1 are ignored.
    """
    cfg.alpha(i)
    if len(detected_priors) < i - 1:
        raise DimensionError(f"User {i} needs {i - 1} prior decisions, got {len(detected_priors)}.")
    residual = np.asarray(xbar, dtype=np.complex128) / math.sqrt(cfg.total_power)
    if i == 1:
        return residual
    for j, prior in enumerate(detected_priors[:i - 1], start=1):
        residual = residual - math.sqrt(cfg.alpha(j)) * np.asarray(prior)
    scale = math.sqrt(cfg.alpha(i))
    if scale == 0:
        raise EstimationError(f"User {i} has no power to decode.")
    return residual / scale


def sic_chain(xbar, cfg, upto=None):
    """Soft symbols of users 1..``upto`` in decoding order, each cancelling the hard decisions before it."""
    upto = cfg.num_users if upto is None else upto
    priors, decoded = [], []
    for i in range(1, upto + 1):
        soft = sic_decode_downlink(xbar, i, cfg, priors)
        decoded.append(soft)
        priors.append(hard_decision(soft))
    return decoded


def uplink_combine(users, cfg, snr_db, rng, *, ofdm=None, epsilon=0.0, signal_power=None, occupancy=1.0):
    """
    x_t = Σ √(α_i·P_t)·(x_i ⊛ h_i) + z.

    Every user is convolved with its own channel in the time domain. One common
    CFO ``epsilon`` is applied when ``ofdm`` is given. Noise power follows the
    measured combined power times ``occupancy`` unless ``signal_power`` is set.
    """
    ordered = _ordered(users, cfg)
    combined = None
    for amp, user in zip(cfg.amplitudes, ordered):
        if user.channel is None:
            raise ConfigurationError(f"User {user.user_index} has no uplink channel.")
        cp_length = ofdm.cp_length if ofdm is not None else None
        faded = apply_channel(user.samples, user.channel, cp_length).samples
        combined = amp * faded if combined is None else combined + amp * faded
    if ofdm is not None and epsilon:
        combined = apply_cfo(combined, epsilon, ofdm, start_index=0)
    if signal_power is None:
        signal_power = received_power(combined, occupancy)
    if signal_power == 0.0:
        return combined
    return add_awgn(combined, snr_db, signal_power, rng)


def uplink_sic_receive(x_t, cfg, channel_estimate, cfo_estimate, spec, rng=None):
    """
    Bits of every user from one uplink frame.

    The payload is derotated by the CFO estimate and equalized once with the
    artificial channel estimate, then decoded user 1 first exactly as on the
    downlink. Erased subcarriers propagate through SIC as random decisions.
    """
    epsilon_hat = cfo_estimate.epsilon_hat if isinstance(cfo_estimate, CfoEstimate) else float(cfo_estimate)
    grids = payload_grids(x_t, spec, epsilon_hat)
    _, observations = extract_pilots(grids, spec.layout)
    h = channel_estimate.cfr_hat if isinstance(channel_estimate, ChannelEstimate) else np.asarray(channel_estimate)
    equalized = zf_equalize(observations, h[..., spec.layout.data_positions])
    return decode_users(equalized, cfg, rng)


def decode_users(equalized, cfg, rng=None, upto=None):
    """Per-user bit decisions of an equalized superposition, users 1..``upto``."""
    soft = sic_chain(equalized.symbols, cfg, upto)
    return [detect_bits(symbols, equalized.erasures, rng) for symbols in soft]


def user_sinrs(cfg, snr):
    """
    Post-SIC SINR of every user at linear SNR γ.

    User i sees the users after it as interference: α_iγ / (Σ_{j>i} α_jγ + 1).
    """
    if snr < 0:
        raise ConfigurationError(f"SNR must be non-negative, got {snr}.")
    alphas = cfg.power_coeffs
    return [a * snr / (sum(alphas[i + 1:]) * snr + 1.0) for i, a in enumerate(alphas)]


def sum_rate(snrs):
    """Σ log₂(1 + γ_i) in bit/s/Hz."""
    snrs = np.asarray(snrs, dtype=np.float64)
    if np.any(snrs < 0):
        raise ConfigurationError("SNR values must be non-negative.")
    return float(np.sum(np.log2(1.0 + snrs)))
