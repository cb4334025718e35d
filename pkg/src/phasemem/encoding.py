"""Binary patterns <-> phases, and outer-product (Hopfield) coupling matrices."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ConfigurationError
from .phase import CouplingMatrix


def as_pattern(bits) -> np.ndarray:
    """Validate a +/-1 vector and return it as an int array."""
    p = np.asarray(bits)
    if p.ndim != 1 or p.size == 0:
        raise ConfigurationError(f"a pattern must be a non-empty vector, got shape {p.shape}")
    if not np.all((p == 1) | (p == -1)):
        raise ConfigurationError(f"pattern entries must be +1 or -1, got {p.tolist()}")
    return p.astype(int)


def as_pattern_set(patterns) -> np.ndarray:
    """Stack patterns into an ``(m, n)`` int array, checking lengths agree."""
    rows = [as_pattern(p) for p in patterns]
    if not rows:
        raise ConfigurationError("pattern set is empty")
    if len({r.size for r in rows}) != 1:
        raise ConfigurationError("patterns in a set must all have the same length")
    return np.vstack(rows)


def pattern_to_phases(pattern) -> np.ndarray:
    """+1 -> 0 rad, -1 -> pi rad."""
    p = as_pattern(pattern)
    return np.where(p > 0, 0.0, np.pi)


def binarize(phases, reference_index: int = 0) -> np.ndarray:
    """Threshold ``cos`` of the phases after rotating the reference oscillator to 0.

    A cosine of exactly zero maps to +1.
    """
    phi = np.asarray(phases, dtype=float)
    if not 0 <= reference_index < phi.shape[-1]:
        raise ConfigurationError(f"reference index {reference_index} out of range")
    rel = phi - phi[..., reference_index, None]
    return np.where(np.cos(rel) >= 0.0, 1, -1)


def gauge_pattern(pattern, reference_index: int = 0) -> np.ndarray:
    """Global sign flip making the reference entry +1 (what ``binarize`` can observe)."""
    p = as_pattern(pattern)
    return p * p[reference_index]


def outer_product_weights(patterns, scale: float = 1.0, mask=None, symmetric: bool = True) -> CouplingMatrix:
    """``scale/m * sum_mu s s^T`` with zeroed diagonal, clipped to [-1, 1].

    ``mask`` (optional) removes entries that the topology does not allow;
    by default every off-diagonal pair is allowed.
    """
    ps = as_pattern_set(patterns).astype(float)
    if scale < 0:
        raise ConfigurationError(f"scale must be non-negative, got {scale}")
    m, n = ps.shape
    k = scale * (ps.T @ ps) / m
    np.fill_diagonal(k, 0.0)
    k = np.clip(k, -1.0, 1.0)
    if mask is None:
        mask = ~np.eye(n, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (n, n):
        raise ConfigurationError(f"mask shape {mask.shape} does not match pattern length {n}")
    k = np.where(mask, k, 0.0)
    return CouplingMatrix(k, mask, symmetric)


def all_binary_states(n: int) -> np.ndarray:
    """Every vector in {+1, -1}^n, shape ``(2**n, n)``, first entry varying slowest."""
    if n < 0:
        raise ConfigurationError("n must be non-negative")
    codes = np.arange(2 ** n)[:, None] >> np.arange(n - 1, -1, -1)[None, :]
    return np.where(codes & 1, -1, 1)


def pattern_inputs(pattern, inputs: Sequence[int]) -> np.ndarray:
    return as_pattern(pattern)[list(inputs)]
