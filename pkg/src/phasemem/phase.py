"""Network topology, coupling matrices and Kuramoto phase dynamics.

Phases live in a rotating frame (carrier frequency removed), so a zero
natural-frequency vector is the homogeneous network.  Phases are kept
unwrapped during integration; only observables reduce them modulo 2*pi.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError

TWO_PI = 2.0 * np.pi


def wrap_phase(x):
    """Map angles to the half-open interval [-pi, pi)."""
    return np.mod(np.asarray(x, dtype=float) + np.pi, TWO_PI) - np.pi


@dataclass(frozen=True)
class NetworkTopology:
    """Which oscillators exist, which may couple, and which play input/output roles.

    Layered topologies couple adjacent layers only (bipartite between
    neighbours, nothing inside a layer).  A flat topology couples every
    distinct pair; its first ``n_inputs`` oscillators are the inputs and
    the remaining ones the outputs.
    """

    layer_sizes: tuple[int, ...]
    coupling_mask: np.ndarray
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]

    def __post_init__(self):
        mask = np.array(self.coupling_mask, dtype=bool)
        mask.setflags(write=False)
        object.__setattr__(self, "coupling_mask", mask)
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))
        object.__setattr__(self, "inputs", tuple(int(i) for i in self.inputs))
        object.__setattr__(self, "outputs", tuple(int(i) for i in self.outputs))
        n = self.n_oscillators
        if not self.layer_sizes or any(s < 1 for s in self.layer_sizes):
            raise ConfigurationError(f"layer sizes must be positive, got {self.layer_sizes}")
        if mask.shape != (n, n):
            raise ConfigurationError(f"coupling mask must be {n}x{n}, got {mask.shape}")
        if not np.array_equal(mask, mask.T) or mask.diagonal().any():
            raise ConfigurationError("coupling mask must be symmetric with an empty diagonal")
        roles = self.inputs + self.outputs
        if len(set(roles)) != len(roles) or any(not 0 <= i < n for i in roles):
            raise ConfigurationError("input/output indices must be distinct and in range")

    @property
    def n_oscillators(self) -> int:
        return int(sum(self.layer_sizes))

    @property
    def hidden(self) -> tuple[int, ...]:
        roles = set(self.inputs) | set(self.outputs)
        return tuple(i for i in range(self.n_oscillators) if i not in roles)

    @property
    def visible(self) -> tuple[int, ...]:
        return self.inputs + self.outputs

    @property
    def is_layered(self) -> bool:
        return len(self.layer_sizes) > 1

    @classmethod
    def flat(cls, n: int, n_inputs: int = 2) -> "NetworkTopology":
        if n < 2 or not 0 < n_inputs < n:
            raise ConfigurationError(f"flat network needs n >= 2 and 0 < n_inputs < n (n={n}, n_inputs={n_inputs})")
        mask = ~np.eye(n, dtype=bool)
        return cls((n,), mask, tuple(range(n_inputs)), tuple(range(n_inputs, n)))

    @classmethod
    def layered(cls, layer_sizes: Sequence[int]) -> "NetworkTopology":
        sizes = [int(s) for s in layer_sizes]
        if len(sizes) < 2:
            raise ConfigurationError("a layered topology needs at least two layers")
        if any(s < 1 for s in sizes):
            raise ConfigurationError(f"layer sizes must be positive, got {sizes}")
        n = sum(sizes)
        starts = np.cumsum([0] + sizes)
        mask = np.zeros((n, n), dtype=bool)
        for a in range(len(sizes) - 1):
            lo, mid, hi = starts[a], starts[a + 1], starts[a + 2]
            mask[lo:mid, mid:hi] = True
            mask[mid:hi, lo:mid] = True
        return cls(tuple(sizes), mask, tuple(range(sizes[0])), tuple(range(starts[-2], n)))

    @classmethod
    def from_sizes(cls, layer_sizes: Sequence[int], n_inputs: int = 2) -> "NetworkTopology":
        """``[4]`` gives the flat network, ``[2, 4, 2]`` the layered one."""
        if len(layer_sizes) == 1:
            return cls.flat(int(layer_sizes[0]), n_inputs)
        return cls.layered(layer_sizes)

    def masked_pairs(self, symmetric: bool = True) -> list[tuple[int, int]]:
        """Coupling entries in row-major order (upper triangle only when symmetric)."""
        rows, cols = np.nonzero(self.coupling_mask)
        pairs = [(int(i), int(j)) for i, j in zip(rows, cols)]
        if symmetric:
            pairs = [(i, j) for i, j in pairs if i < j]
        return pairs


@dataclass(frozen=True)
class CouplingMatrix:
    """Synaptic couplings with the topology mask they must respect.

    Behaves like a plain ``ndarray`` under ``np.asarray``.
    """

    k: np.ndarray
    mask: np.ndarray = field(repr=False)
    symmetric: bool = True

    def __post_init__(self):
        k = np.array(self.k, dtype=float)
        mask = np.array(self.mask, dtype=bool)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise ConfigurationError(f"coupling matrix must be square, got shape {k.shape}")
        if mask.shape != k.shape:
            raise ConfigurationError(f"mask shape {mask.shape} does not match coupling shape {k.shape}")
        if not np.all(np.isfinite(k)):
            raise ConfigurationError("coupling matrix has non-finite entries")
        if np.any(k.diagonal() != 0):
            raise ConfigurationError("coupling matrix diagonal must be exactly zero")
        if np.any(k[~mask] != 0):
            raise ConfigurationError("coupling matrix has entries outside the topology mask")
        if self.symmetric and not np.array_equal(k, k.T):
            raise ConfigurationError("symmetric coupling matrix is not symmetric")
        k.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "mask", mask)

    def __array__(self, dtype=None, copy=None):
        return self.k if dtype is None else self.k.astype(dtype)

    @property
    def n(self) -> int:
        return self.k.shape[0]

    @classmethod
    def for_topology(cls, k, topology: NetworkTopology, symmetric: bool = True) -> "CouplingMatrix":
        return cls(k, topology.coupling_mask, symmetric)

    @classmethod
    def zeros(cls, topology: NetworkTopology, symmetric: bool = True) -> "CouplingMatrix":
        n = topology.n_oscillators
        return cls(np.zeros((n, n)), topology.coupling_mask, symmetric)

    @classmethod
    def random_uniform(cls, topology: NetworkTopology, low: float, high: float,
                       rng: np.random.Generator, symmetric: bool = True) -> "CouplingMatrix":
        """Uniform draws on masked entries; one draw per synapse in symmetric mode."""
        if not -1.0 <= low <= high <= 1.0:
            raise ConfigurationError(f"initial weight range [{low}, {high}] must lie inside [-1, 1]")
        mask = topology.coupling_mask
        n = mask.shape[0]
        k = np.zeros((n, n))
        if symmetric:
            iu = np.nonzero(np.triu(mask, 1))
            k[iu] = rng.uniform(low, high, size=iu[0].size)
            k = k + k.T
        else:
            idx = np.nonzero(mask)
            k[idx] = rng.uniform(low, high, size=idx[0].size)
        return cls(k, mask, symmetric)


def _check_dims(phases: np.ndarray, k: np.ndarray, freqs: np.ndarray | None) -> None:
    n = phases.shape[-1]
    if k.shape != (n, n):
        raise ConfigurationError(f"coupling matrix shape {k.shape} does not match {n} phases")
    if freqs is not None and freqs.shape != (n,):
        raise ConfigurationError(f"natural frequencies shape {freqs.shape} does not match {n} phases")


def kuramoto_rhs(phases, k, freqs=None) -> np.ndarray:
    """Phase velocities ``dphi_i/dt = dw_i - sum_j k_ij sin(phi_i - phi_j)`` in rad/s."""
    phases = np.asarray(phases, dtype=float)
    k = np.asarray(k, dtype=float)
    freqs = None if freqs is None else np.asarray(freqs, dtype=float)
    _check_dims(phases, k, freqs)
    diff = phases[..., :, None] - phases[..., None, :]
    vel = -np.sum(k * np.sin(diff), axis=-1)
    if freqs is not None:
        vel = vel + freqs
    return vel


def _rk4(f, y, dt):
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_step(phases, k, freqs=None, dt: float = 1e-3, method: str = "euler") -> np.ndarray:
    """Advance the phases by one explicit step (``euler`` or ``rk4``)."""
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    phases = np.asarray(phases, dtype=float)
    k = np.asarray(k, dtype=float)
    freqs = None if freqs is None else np.asarray(freqs, dtype=float)
    _check_dims(phases, k, freqs)
    if method == "euler":
        return phases + dt * kuramoto_rhs(phases, k, freqs)
    if method == "rk4":
        return _rk4(lambda y: kuramoto_rhs(y, k, freqs), phases, dt)
    raise ConfigurationError(f"unknown integration method {method!r}")


def integrate_trace(initial, k, freqs=None, duration: float = 1.0, dt: float = 1e-3,
                    sample_every: int = 1, method: str = "euler") -> tuple[np.ndarray, np.ndarray]:
    """Integrate and sample every ``sample_every`` steps.

    Returns ``(times, phases)`` with ``phases`` of shape
    ``(floor(duration / dt / sample_every) + 1, n)``; row 0 is the initial state.
    """
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    if duration < dt:
        raise ConfigurationError(f"duration {duration} is shorter than dt {dt}")
    if int(sample_every) != sample_every or sample_every < 1:
        raise ConfigurationError(f"sample_every must be a positive integer, got {sample_every}")
    sample_every = int(sample_every)
    n_steps = int(np.floor(duration / dt + 1e-9))
    n_samples = n_steps // sample_every + 1
    phi = np.array(initial, dtype=float)
    k = np.asarray(k, dtype=float)
    out = np.empty((n_samples, phi.size))
    out[0] = phi
    for s in range(1, n_samples):
        for _ in range(sample_every):
            phi = integrate_step(phi, k, freqs, dt, method)
        out[s] = phi
    times = np.arange(n_samples) * sample_every * dt
    return times, out
