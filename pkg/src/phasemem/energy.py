"""Hopfield/Kuramoto energies, Gibbs surprise and energy-trace smoothing."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class SurpriseParams:
    beta: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ConfigurationError(f"beta must be positive, got {self.beta}")


def hopfield_energy(phases, k) -> float | np.ndarray:
    """``-sum_{i<j} k_ij cos(phi_i - phi_j)``.

    For a directed (non-symmetric) matrix the pair weight is the mean of
    ``k_ij`` and ``k_ji``.  Leading axes of ``phases`` are batch axes.
    """
    phi = np.asarray(phases, dtype=float)
    k = np.asarray(k, dtype=float)
    n = phi.shape[-1]
    if k.shape != (n, n):
        raise ConfigurationError(f"coupling shape {k.shape} does not match {n} phases")
    ksym = 0.5 * (k + k.T)
    iu, ju = np.triu_indices(n, 1)
    e = -np.sum(ksym[iu, ju] * np.cos(phi[..., iu] - phi[..., ju]), axis=-1)
    return float(e) if np.ndim(e) == 0 else e


def biased_energy(phases, k, freqs) -> float:
    """Hopfield energy minus ``sum_i dw_i * phi_i`` (phases unwrapped).

    Its negative gradient is exactly the Kuramoto velocity field.
    """
    phi = np.asarray(phases, dtype=float)
    freqs = np.asarray(freqs, dtype=float)
    if freqs.shape != phi.shape[-1:]:
        raise ConfigurationError(f"frequency shape {freqs.shape} does not match phases {phi.shape}")
    return hopfield_energy(phi, k) - np.sum(freqs * phi, axis=-1)


def surprise(phases, k, params: SurpriseParams, log_z: float = 0.0) -> float:
    """Gibbs surprise ``beta * E + log Z``; ``log_z`` cancels in differences."""
    return params.beta * hopfield_energy(phases, k) + log_z


def smoothed_energy_trace(energies, window: int) -> np.ndarray:
    """Centred moving average; windows are truncated at the edges."""
    e = np.asarray(energies, dtype=float)
    if int(window) != window or window < 1 or window % 2 == 0:
        raise ConfigurationError(f"window must be an odd positive integer, got {window}")
    if window > e.size:
        raise ConfigurationError(f"window {window} longer than series ({e.size})")
    kernel = np.ones(int(window))
    sums = np.convolve(e, kernel, mode="same")
    counts = np.convolve(np.ones_like(e), kernel, mode="same")
    return sums / counts
