"""
Monte Carlo sweeps over an SNR grid.

Every SNR point runs ``trials`` frames through transmitter, impairments and
one receiver (classical, sequential CNN or perfect CSI) and reduces them to
one ``MetricRecord`` per user. Trial ``t`` of point ``p`` draws from
``derive_rng(seed, STREAM_SWEEP, p, t)``, so results do not depend on the
number of workers. Trials of one point run in order because the CNN
receiver keeps a window over consecutive frames.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple

import numpy as np

from .channel import ChannelRealization, draw_cfo, draw_channel
from .cnn_estimators import SequentialEstimator
from .exceptions import ConfigurationError, DimensionError, MissingModelError
from .link import (
    STREAM_SWEEP,
    ClassicalFrontEnd,
    GenieFrontEnd,
    Impairments,
    assemble_frame,
    derive_rng,
    detect_bits,
    equalize,
    impair,
    simulate_frame,
    true_cfr,
)
from .noma import UserSignal, decode_users, superpose, uplink_combine, uplink_sic_receive
from .storage import load_model
from .waveform import qam_modulate

logger = logging.getLogger(__name__)

PERFECT = 'perfect'


class MetricRecord(NamedTuple):
    """Metrics of one (SNR, estimator, user) triple; user 0 is the OMA link."""
    snr_db: float
    estimator: str
    user: int
    mse_cfo: float
    mse_channel: float
    ber: float
    packet_loss: float


def ber(tx_bits, rx_bits):
    tx = np.asarray(tx_bits).ravel()
    rx = np.asarray(rx_bits).ravel()
    if tx.size != rx.size:
        raise DimensionError(f"Cannot compare {tx.size} transmitted bits with {rx.size} received bits.")
    if tx.size == 0:
        raise DimensionError("BER of an empty bit sequence is undefined.")
    return float(np.count_nonzero(tx != rx)) / tx.size


def mse(estimates, truth):
    e = np.asarray(estimates)
    t = np.asarray(truth)
    if e.shape != t.shape:
        raise DimensionError(f"Estimate shape {e.shape} differs from truth shape {t.shape}.")
    if e.size == 0:
        raise DimensionError("MSE of an empty sequence is undefined.")
    return float(np.mean(np.abs(e - t) ** 2))


def is_packet_lost(epsilon_hat, epsilon):
    """A CFO error beyond half a subcarrier wraps the constellation: the packet is lost."""
    return abs(epsilon_hat - epsilon) > 0.5


def estimator_label(scenario):
    return PERFECT if scenario.perfect_csi else scenario.estimator


def load_cnn_models(scenario):
    """(cfo_model, ce_model) for a CNN sweep, None for the other receivers."""
    if scenario.perfect_csi or scenario.estimator != 'cnn':
        return None
    missing = [name for name in ('cfo_model_path', 'ce_model_path') if not getattr(scenario, name)]
    if missing:
        raise MissingModelError(f"A CNN sweep needs {' and '.join(missing)}.")
    return load_model(scenario.cfo_model_path), load_model(scenario.ce_model_path)


def make_receiver(scenario, spec, models, reference_amplitude=1.0):
    if scenario.perfect_csi:
        return GenieFrontEnd(spec, reference_amplitude)
    if models is not None:
        return SequentialEstimator(models[0], models[1], spec, reference_amplitude)
    return ClassicalFrontEnd(spec, reference_amplitude)


class _Tally:
    """Running sums of one user at one SNR point."""

    def __init__(self):
        self.cfo_error = 0.0
        self.channel_error = 0.0
        self.bit_errors = 0
        self.bits = 0
        self.lost = 0
        self.frames = 0

    def add(self, epsilon_hat, epsilon, channel_hat, channel_true, tx_bits, rx_bits):
        self.cfo_error += (epsilon_hat - epsilon) ** 2
        self.channel_error += mse(channel_hat, channel_true)
        self.bit_errors += int(np.count_nonzero(np.asarray(tx_bits) != np.asarray(rx_bits)))
        self.bits += np.asarray(tx_bits).size
        self.lost += is_packet_lost(epsilon_hat, epsilon)
        self.frames += 1

    def record(self, snr_db, estimator, user):
        return MetricRecord(
            snr_db=float(snr_db),
            estimator=estimator,
            user=user,
            mse_cfo=self.cfo_error / self.frames,
            mse_channel=self.channel_error / self.frames,
            ber=self.bit_errors / self.bits if self.bits else 0.0,
            packet_loss=self.lost / self.frames,
        )


def _link_snr(scenario, snr_db):
    return math.inf if scenario.noiseless else snr_db


def _random_users(spec, num_users, rng):
    users = []
    for index in range(1, num_users + 1):
        bits = rng.integers(0, 2, size=spec.bits_per_frame, dtype=np.int8)
        users.append(UserSignal(index, bits, qam_modulate(bits).reshape(spec.data_shape)))
    return users


def _oma_point(scenario, spec, models, point, snr_db):
    receiver = make_receiver(scenario, spec, models)
    tally = _Tally()
    for trial in range(scenario.trials):
        rng = derive_rng(scenario.seed, STREAM_SWEEP, point, trial)
        frame = simulate_frame(spec, scenario.channel, scenario.cfo, _link_snr(scenario, snr_db), rng)
        reception = receiver.receive(frame.samples, frame.truth)
        equalized = equalize(reception, spec)
        rx_bits = detect_bits(equalized.symbols, equalized.erasures, rng)
        tally.add(reception.epsilon_hat, frame.truth.epsilon, reception.channel.cfr_hat,
                  true_cfr(frame.truth.channel, spec), frame.tx.bits, rx_bits)
    return [tally.record(snr_db, estimator_label(scenario), 0)]


def _noma_dl_point(scenario, spec, models, point, snr_db):
    cfg = scenario.noma
    amplitude = math.sqrt(cfg.total_power)
    receivers = [make_receiver(scenario, spec, models, amplitude) for _ in range(cfg.num_users)]
    tallies = [_Tally() for _ in range(cfg.num_users)]
    for trial in range(scenario.trials):
        rng = derive_rng(scenario.seed, STREAM_SWEEP, point, trial)
        users = _random_users(spec, cfg.num_users, rng)
        _, samples = assemble_frame(spec, superpose(users, cfg), amplitude, amplitude)
        if scenario.dl_shared_channel:
            shared = draw_channel(scenario.channel, rng, spec.ofdm.fft_size)
            channels = [shared] * cfg.num_users
        else:
            channels = [draw_channel(scenario.channel, rng, spec.ofdm.fft_size) for _ in users]
        epsilon = draw_cfo(scenario.cfo, rng)
        truths = [Impairments(h, epsilon, _link_snr(scenario, snr_db)) for h in channels]
        received = [impair(samples, truth, spec.ofdm, rng) for truth in truths]

        for i, user in enumerate(users):
            reception = receivers[i].receive(received[i], truths[i])
            equalized = equalize(reception, spec)
            rx_bits = decode_users(equalized, cfg, rng, upto=user.user_index)[-1]
            tallies[i].add(reception.epsilon_hat, epsilon, reception.channel.cfr_hat,
                           true_cfr(channels[i], spec), user.bits, rx_bits)
    label = estimator_label(scenario)
    return [t.record(snr_db, label, i + 1) for i, t in enumerate(tallies)]


def artificial_channel(channels, fft_size):
    """Mean of the per-user tap sets: the single channel an uplink receiver estimates."""
    width = max(h.num_taps for h in channels)
    taps = np.zeros(width, dtype=np.complex128)
    for h in channels:
        taps[:h.num_taps] += h.taps
    return ChannelRealization.from_taps(taps / len(channels), fft_size)


def uplink_reference_gain(cfg, user_index):
    """Pilot and preamble gain 1/(M·√α_i): every user contributes √P_t/M to the pilots."""
    return 1.0 / (cfg.num_users * math.sqrt(cfg.alpha(user_index)))


def _noma_ul_point(scenario, spec, models, point, snr_db):
    cfg = scenario.noma
    receiver = make_receiver(scenario, spec, models, math.sqrt(cfg.total_power))
    tallies = [_Tally() for _ in range(cfg.num_users)]
    for trial in range(scenario.trials):
        rng = derive_rng(scenario.seed, STREAM_SWEEP, point, trial)
        users = _random_users(spec, cfg.num_users, rng)
        if scenario.ul_shared_channel:
            shared = draw_channel(scenario.channel, rng, spec.ofdm.fft_size)
            channels = [shared] * cfg.num_users
        else:
            channels = [draw_channel(scenario.channel, rng, spec.ofdm.fft_size) for _ in users]
        epsilon = draw_cfo(scenario.cfo, rng)

        transmitted = []
        for user, h in zip(users, channels):
            gain = uplink_reference_gain(cfg, user.user_index)
            _, waveform = assemble_frame(spec, user.symbols, gain, gain)
            transmitted.append(UserSignal(user.user_index, user.bits, user.symbols, h, waveform))
        x_t = uplink_combine(transmitted, cfg, _link_snr(scenario, snr_db), rng,
                             ofdm=spec.ofdm, epsilon=epsilon, occupancy=spec.ofdm.occupancy)

        reference = artificial_channel(channels, spec.ofdm.fft_size)
        reception = receiver.receive(x_t, Impairments(reference, epsilon, snr_db))
        per_user_bits = uplink_sic_receive(x_t, cfg, reception.channel, reception.epsilon_hat, spec, rng)
        truth = true_cfr(reference, spec)
        for tally, user, rx_bits in zip(tallies, users, per_user_bits):
            tally.add(reception.epsilon_hat, epsilon, reception.channel.cfr_hat, truth, user.bits, rx_bits)
    label = estimator_label(scenario)
    return [t.record(snr_db, label, i + 1) for i, t in enumerate(tallies)]


_POINT_RUNNERS = {
    'oma': _oma_point,
    'noma-dl': _noma_dl_point,
    'noma-ul': _noma_ul_point,
}


def _run(scenario, mode):
    spec = scenario.frame_spec()
    if spec.ofdm.num_symbols < 1:
        raise ConfigurationError("A sweep needs at least one payload symbol per frame.")
    models = load_cnn_models(scenario)
    runner = _POINT_RUNNERS[mode]
    logger.info("Starting %s sweep (%s): %d SNR points x %d trials",
                mode, estimator_label(scenario), len(scenario.snr_grid), scenario.trials)

    def point(index):
        snr_db = scenario.snr_grid[index]
        records = runner(scenario, spec, models, index, snr_db)
        lost = sum(r.packet_loss for r in records)
        if lost:
            logger.warning("SNR %g dB: packet loss rate %s", snr_db,
                           ', '.join(f"{r.packet_loss:.3g}" for r in records))
        logger.info("SNR %g dB done: BER %s", snr_db, ', '.join(f"{r.ber:.3g}" for r in records))
        return records

    indices = range(len(scenario.snr_grid))
    if scenario.workers > 1:
        with ThreadPoolExecutor(max_workers=scenario.workers) as pool:
            per_point = list(pool.map(point, indices))
    else:
        per_point = [point(i) for i in indices]
    return [record for records in per_point for record in records]


def run_oma_sweep(cfg):
    return _run(cfg, 'oma')


def run_noma_dl_sweep(cfg):
    return _run(cfg, 'noma-dl')


def run_noma_ul_sweep(cfg):
    return _run(cfg, 'noma-ul')


def run_sweep(cfg):
    """Sweep of the scenario's own mode."""
    return _run(cfg, cfg.mode)


def theory_ls_mse(snr_db):
    """LS channel estimation MSE at unit-power pilots: 1/γ."""
    return 10.0 ** (-snr_db / 10.0)


def theory_qpsk_ber(snr_db):
    """Gray-coded 4-QAM over AWGN: Q(√γ)."""
    gamma = 10.0 ** (snr_db / 10.0)
    return 0.5 * math.erfc(math.sqrt(gamma / 2.0))
