"""
CNN-aided sequential estimation.

CFO-CNN denoises a window of raw preamble CFO estimates; the refined CFO
derotates the payload, and CE-CNN refines the interpolated LS channel
estimate of every payload symbol. The CFO stage always runs first.
"""
import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import MAX_CFO
from .classical_estimation import ChannelEstimate, ls_channel_estimate
from .exceptions import DimensionError, MissingModelError
from .link import (
    STREAM_CE_DATASET,
    STREAM_CFO_DATASET,
    Reception,
    derive_rng,
    estimate_cfo,
    payload_grids,
    simulate_frame,
)

logger = logging.getLogger(__name__)

CE_KIND = 'ce'
CFO_KIND = 'cfo'
DEFAULT_CFO_WINDOW = 1100


def complex_to_planes(v):
    """(..., n) complex → (..., n, 2, 1) real: column 0 real parts, column 1 imaginary parts."""
    v = np.asarray(v, dtype=np.complex128)
    return np.stack([v.real, v.imag], axis=-1)[..., np.newaxis]


def planes_to_complex(t):
    t = np.asarray(t, dtype=np.float64)
    if t.ndim >= 3 and t.shape[-1] == 1:
        t = t[..., 0]
    if t.ndim < 2 or t.shape[-1] != 2:
        raise DimensionError(f"Plane tensors need width 2, got shape {t.shape}.")
    return t[..., 0] + 1j * t[..., 1]


@dataclass(frozen=True, eq=False)
class CnnDataset:
    """Training pairs of one estimator with the header persisted alongside them."""
    kind: str
    inputs: np.ndarray
    targets: np.ndarray
    snr_db: np.ndarray
    seed: int
    scenario_digest: str = ''

    def __len__(self):
        return len(self.inputs)

    @property
    def sample_shape(self):
        return tuple(self.inputs.shape[1:])


def _draw_snr(rng, snr_range):
    low, high = snr_range
    if low == high:
        return float(low)
    return float(rng.uniform(low, high))


def _map_samples(func, count, workers):
    if workers <= 1:
        return [func(j) for j in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, range(count)))


def ce_sample(spec, channel_spec, cfo_mixture, snr_db, rng):
    """One CE-CNN pair from a one-symbol frame: LS planes in, true CFR planes out."""
    frame = simulate_frame(spec, channel_spec, cfo_mixture, snr_db, rng)
    epsilon_hat = estimate_cfo(frame.samples, spec).epsilon_hat
    grids = payload_grids(frame.samples, spec, epsilon_hat)
    estimate = ls_channel_estimate(grids[0], spec.layout)
    truth = frame.truth.channel.cfr[spec.layout.occupied]
    return complex_to_planes(estimate.cfr_hat), complex_to_planes(truth)


def generate_ce_dataset(n, snr_range, scenario, seed, workers=1):
    """
    ``n`` CE-CNN samples, each from its own derived random stream.

    SNR is uniform over ``snr_range`` (dB) per sample.
    """
    spec = scenario.frame_spec().with_symbols(1)

    def make(j):
        rng = derive_rng(seed, STREAM_CE_DATASET, j)
        snr_db = _draw_snr(rng, snr_range)
        x, y = ce_sample(spec, scenario.channel, scenario.cfo, snr_db, rng)
        return x, y, snr_db

    samples = _map_samples(make, n, workers)
    logger.info("Generated %d CE-CNN samples", n)
    return CnnDataset(
        kind=CE_KIND,
        inputs=np.stack([s[0] for s in samples]),
        targets=np.stack([s[1] for s in samples]),
        snr_db=np.array([s[2] for s in samples]),
        seed=seed,
        scenario_digest=scenario.digest(),
    )


def cfo_window_sample(spec, channel_spec, cfo_mixture, snr_db, window, rng):
    """Raw ε̂ and true ε of ``window`` consecutive preamble-only frames."""
    raw = np.empty(window)
    truth = np.empty(window)
    for index in range(window):
        frame = simulate_frame(spec, channel_spec, cfo_mixture, snr_db, rng)
        raw[index] = estimate_cfo(frame.samples, spec).epsilon_hat
        truth[index] = frame.truth.epsilon
    return raw.reshape(window, 1, 1), truth.reshape(window, 1, 1)


def generate_cfo_dataset(n, window, scenario, seed, snr_range=(5.0, 15.0), workers=1):
    if n < 1 or window < 1:
        raise DimensionError("Dataset size and window must both be at least 1.")
    spec = scenario.frame_spec().with_symbols(0)

    def make(j):
        rng = derive_rng(seed, STREAM_CFO_DATASET, j)
        snr_db = _draw_snr(rng, snr_range)
        x, y = cfo_window_sample(spec, scenario.channel, scenario.cfo, snr_db, window, rng)
        return x, y, snr_db

    samples = _map_samples(make, n, workers)
    logger.info("Generated %d CFO-CNN windows of %d frames", n, window)
    return CnnDataset(
        kind=CFO_KIND,
        inputs=np.stack([s[0] for s in samples]),
        targets=np.stack([s[1] for s in samples]),
        snr_db=np.array([s[2] for s in samples]),
        seed=seed,
        scenario_digest=scenario.digest(),
    )


class SequentialEstimator:
    """
    Receiver holding both trained networks and its own window of raw CFO estimates.

    One instance serves one received stream; the window is mutable state.
    """

    def __init__(self, cfo_model, ce_model, spec, reference_amplitude=1.0):
        if cfo_model is None or ce_model is None:
            raise MissingModelError("Both the CFO-CNN and the CE-CNN model are required.")
        kappa = spec.ofdm.num_subcarriers
        if ce_model.input_shape != (kappa, 2, 1) or ce_model.output_shape != (kappa, 2, 1):
            raise DimensionError(f"CE-CNN must map ({kappa}, 2, 1) tensors, got {ce_model.input_shape}.")
        if cfo_model.input_shape[1:] != (1, 1) or cfo_model.output_shape != cfo_model.input_shape:
            raise DimensionError(f"CFO-CNN must map (W, 1, 1) tensors, got {cfo_model.input_shape}.")
        self.cfo_model = cfo_model
        self.ce_model = ce_model
        self.spec = spec
        self.reference_amplitude = reference_amplitude
        self.window = deque(maxlen=cfo_model.input_shape[0])

    @property
    def window_length(self):
        return self.window.maxlen

    def seed_window(self, recent_estimates):
        self.window.clear()
        self.window.extend(float(e) for e in recent_estimates)

    def refine_cfo(self, raw_estimate):
        if not self.window:
            self.window.extend([raw_estimate] * self.window.maxlen)
        else:
            self.window.append(raw_estimate)
            while len(self.window) < self.window.maxlen:
                self.window.appendleft(self.window[0])
        refined = self.cfo_model.predict(np.asarray(self.window).reshape(-1, 1, 1))
        return float(np.clip(refined[-1, 0, 0], -MAX_CFO, MAX_CFO))

    def refine_channel(self, grids):
        h_breve = ls_channel_estimate(grids, self.spec.layout, self.reference_amplitude)
        refined = self.ce_model.predict(complex_to_planes(h_breve.cfr_hat))
        return ChannelEstimate(planes_to_complex(refined))

    def receive(self, samples, truth=None):
        raw = estimate_cfo(samples, self.spec).epsilon_hat
        epsilon_bar = self.refine_cfo(raw)
        grids = payload_grids(samples, self.spec, epsilon_bar)
        return Reception(epsilon_bar, self.refine_channel(grids), grids)


def sequential_estimate(rx_frame, est, recent_eps_window=None):
    """(ε̄, H̄) for one received frame; ``recent_eps_window`` re-seeds the receiver's window."""
    if recent_eps_window is not None:
        est.seed_window(recent_eps_window)
    samples = getattr(rx_frame, 'samples', rx_frame)
    reception = est.receive(samples)
    return reception.epsilon_hat, reception.channel
