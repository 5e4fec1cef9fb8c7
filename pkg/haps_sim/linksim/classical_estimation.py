"""
Classical receiver estimators: preamble CFO estimation, CFO correction,
least-squares channel estimation at the pilots, interpolation over the
occupied band and zero-forcing equalization.
"""
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channel import MAX_CFO, apply_cfo
from .exceptions import DimensionError, EstimationError
from .waveform import PILOT_SYMBOL, extract_pilots

logger = logging.getLogger(__name__)

ERASURE_FLOOR = 1e-12
_WRAP_TOLERANCE = 1e-9


@dataclass(frozen=True)
class CfoEstimate:
    epsilon_hat: float

    def residual(self, epsilon):
        """ξ = ε − ε̂."""
        return epsilon - self.epsilon_hat


@dataclass(frozen=True, eq=False)
class ChannelEstimate:
    """CFR estimate over the occupied subcarriers; the last axis has κ entries."""
    cfr_hat: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.cfr_hat)):
            raise EstimationError("Channel estimate contains non-finite entries.")

    @property
    def num_subcarriers(self):
        return self.cfr_hat.shape[-1]


class Equalized(NamedTuple):
    symbols: np.ndarray
    erasures: np.ndarray


def wrap_cfo(value):
    """Fold a normalized CFO into [−0.5, 0.5]; values within rounding of ±0.5 are clipped, not folded."""
    if abs(value) <= MAX_CFO + _WRAP_TOLERANCE:
        return float(np.clip(value, -MAX_CFO, MAX_CFO))
    return float(value - np.round(value))


def schmidl_cox_cfo(p1_rx, p2_rx, n, separation):
    """
    CFO from the phase of Σ P₁*[k]·P₂[k].

    The two halves are ``separation`` samples apart, so the phase grows by
    2πε·D/N and ε̂ = N/(2πD)·atan2(Im, Re). D = N gives the textbook form.
    """
    p1 = np.asarray(p1_rx, dtype=np.complex128).ravel()
    p2 = np.asarray(p2_rx, dtype=np.complex128).ravel()
    if p1.size != p2.size:
        raise DimensionError(f"Preamble halves differ in length: {p1.size} vs {p2.size}.")
    if separation <= 0:
        raise DimensionError(f"Separation must be positive, got {separation}.")
    correlation = np.vdot(p1, p2)
    if correlation == 0:
        raise EstimationError("Preamble correlation is zero; the CFO angle is undefined.")
    angle = math.atan2(correlation.imag, correlation.real)
    epsilon_hat = float(wrap_cfo(n / (2.0 * math.pi * separation) * angle))
    logger.debug("Preamble CFO estimate %.6f", epsilon_hat)
    return CfoEstimate(epsilon_hat)


def correct_cfo(samples, epsilon_hat, cfg, start_index=0):
    return apply_cfo(samples, -epsilon_hat, cfg, start_index)


def ls_estimate(y_pilots, x_pilots):
    """H′ = X⁻¹Y for a diagonal pilot matrix, i.e. an elementwise ratio."""
    y = np.asarray(y_pilots, dtype=np.complex128)
    try:
        x = np.broadcast_to(np.asarray(x_pilots, dtype=np.complex128), y.shape)
    except ValueError as exc:
        raise DimensionError("Pilot observations and pilot symbols differ in shape.") from exc
    if np.any(x == 0):
        raise EstimationError("A pilot symbol is zero; LS estimation divides by it.")
    return y / x


def interpolation_matrix(pilot_indices, target_indices):
    """
    Matrix W with ``estimates @ W.T`` the piecewise-linear interpolation.

    Targets outside the pilot span hold the nearest pilot value.
    """
    pilots = np.asarray(pilot_indices, dtype=float)
    targets = np.asarray(target_indices, dtype=float)
    if pilots.size < 2:
        raise EstimationError(f"Interpolation needs at least two pilots, got {pilots.size}.")
    if np.any(np.diff(pilots) <= 0):
        raise DimensionError("Pilot indices must be strictly increasing.")
    basis = np.eye(pilots.size)
    return np.stack([np.interp(targets, pilots, column) for column in basis], axis=1)


def interpolate_cfr(pilot_estimates, pilot_indices, target_indices):
    estimates = np.asarray(pilot_estimates, dtype=np.complex128)
    if estimates.shape[-1] != np.size(pilot_indices):
        raise DimensionError("One pilot estimate is needed per pilot index.")
    weights = interpolation_matrix(pilot_indices, target_indices)
    # Real and imaginary parts interpolate independently; W is real.
    return ChannelEstimate(estimates @ weights.T)


def ls_channel_estimate(grids, layout, pilot_value=PILOT_SYMBOL):
    """LS at the pilots of each grid, interpolated over the occupied band."""
    y_pilots, _ = extract_pilots(grids, layout)
    at_pilots = ls_estimate(y_pilots, pilot_value)
    return interpolate_cfr(at_pilots, layout.pilot_frequencies, layout.occupied_frequencies)


def zf_equalize(observations, est, floor=ERASURE_FLOOR):
    """
    X̂[k] = Y[k] / H′[k].

    Subcarriers whose estimate magnitude is below ``floor`` are returned as
    erasures with a zero symbol.
    """
    y = np.asarray(observations, dtype=np.complex128)
    h = est.cfr_hat if isinstance(est, ChannelEstimate) else np.asarray(est, dtype=np.complex128)
    if y.shape[-1] != h.shape[-1]:
        raise DimensionError(f"{y.shape[-1]} observations for {h.shape[-1]} channel estimates.")
    h = np.broadcast_to(h, y.shape)
    erasures = np.abs(h) < floor
    safe = np.where(erasures, 1.0, h)
    symbols = np.where(erasures, 0.0, y / safe)
    if erasures.any():
        logger.warning("Zero-forcing erased %d subcarriers with near-zero channel estimates.",
                       int(erasures.sum()))
    return Equalized(symbols, erasures)
