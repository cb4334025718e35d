"""Local Hebbian plasticity with weight decay, output nudging and input clamping."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigurationError
from .phase import CouplingMatrix, kuramoto_rhs, wrap_phase


@dataclass(frozen=True)
class LearningParams:
    """Learning rate ``eta`` (1/s), decay ``lam`` and nudge gain ``k_nudge`` (1/s).

    ``recall_eta`` is the learning rate while outputs run free; ``None``
    means the same as ``eta``.  Rates are per unit weight, so with a
    coupling gain ``g`` a weight change of 1 moves the coupling by ``g`` rad/s.
    """

    eta: float = 0.05
    lam: float = 0.8
    k_nudge: float = 200.0
    recall_eta: float | None = 0.01

    def __post_init__(self):
        if not self.eta > 0:
            raise ConfigurationError(f"eta must be positive, got {self.eta}")
        if self.recall_eta is not None and not self.recall_eta > 0:
            raise ConfigurationError(f"recall_eta must be positive, got {self.recall_eta}")
        if not self.lam >= 0:
            raise ConfigurationError(f"lambda must be non-negative, got {self.lam}")
        if not self.k_nudge >= 0:
            raise ConfigurationError(f"k_nudge must be non-negative, got {self.k_nudge}")

    @property
    def effective_recall_eta(self) -> float:
        return self.eta if self.recall_eta is None else self.recall_eta


@dataclass(frozen=True)
class DriveSpec:
    """Clamped and nudged oscillators mapped to their target phases (rad)."""

    clamped: Mapping[int, float] = field(default_factory=dict)
    nudged: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "clamped", {int(i): float(v) for i, v in dict(self.clamped).items()})
        object.__setattr__(self, "nudged", {int(i): float(v) for i, v in dict(self.nudged).items()})
        overlap = set(self.clamped) & set(self.nudged)
        if overlap:
            raise ConfigurationError(f"oscillators {sorted(overlap)} are both clamped and nudged")

    def check(self, n: int) -> None:
        for i in (*self.clamped, *self.nudged):
            if not 0 <= i < n:
                raise ConfigurationError(f"drive index {i} out of range for {n} oscillators")


def hebbian_rate(phases, k, params: LearningParams, mask=None) -> np.ndarray:
    """``eta * (cos(phi_i - phi_j) - lam * k_ij)`` on allowed off-diagonal entries."""
    phi = np.asarray(phases, dtype=float)
    if mask is None:
        mask = getattr(k, "mask", None)
    k = np.asarray(k, dtype=float)
    n = phi.size
    if k.shape != (n, n):
        raise ConfigurationError(f"coupling shape {k.shape} does not match {n} phases")
    if mask is None:
        mask = ~np.eye(n, dtype=bool)
    rate = params.eta * (np.cos(phi[:, None] - phi[None, :]) - params.lam * k)
    return np.where(mask, rate, 0.0)


def apply_plasticity_step(phases, k: CouplingMatrix, params: LearningParams, dt: float) -> CouplingMatrix:
    """One Euler step of the weight dynamics followed by clipping to [-1, 1]."""
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    knew = np.clip(k.k + dt * hebbian_rate(phases, k.k, params, k.mask), -1.0, 1.0)
    if k.symmetric:
        upper = np.triu(knew, 1)
        knew = upper + upper.T
    np.fill_diagonal(knew, 0.0)
    return CouplingMatrix(np.where(k.mask, knew, 0.0), k.mask, k.symmetric)


def nudge_rate(phases, drive: DriveSpec, params: LearningParams) -> np.ndarray:
    """``-k_nudge * wrap(phi - phi*)`` on nudged oscillators, zero elsewhere."""
    phi = np.asarray(phases, dtype=float)
    drive.check(phi.size)
    out = np.zeros_like(phi)
    if drive.nudged:
        idx = np.fromiter(drive.nudged.keys(), dtype=int)
        target = np.fromiter(drive.nudged.values(), dtype=float)
        out[idx] = -params.k_nudge * wrap_phase(phi[idx] - target)
    return out


def apply_clamp(phases, drive: DriveSpec) -> np.ndarray:
    """Copy of ``phases`` with clamped oscillators set exactly to their targets."""
    phi = np.array(phases, dtype=float)
    drive.check(phi.size)
    for i, v in drive.clamped.items():
        phi[i] = v
    return phi


def coupled_euler_step(phases, k: CouplingMatrix, freqs, drive: DriveSpec, params: LearningParams,
                       dt: float, plastic: bool = True, gain: float = 1.0) -> tuple[np.ndarray, CouplingMatrix]:
    """Reference (unoptimised) joint step of phases and weights.

    Clamp, then evaluate phase velocities and weight rates at the same
    pre-step state, then update both.  Clamped oscillators get zero
    velocity.  ``gain`` converts dimensionless weights into rad/s.
    """
    phi = apply_clamp(phases, drive)
    vel = kuramoto_rhs(phi, gain * k.k, freqs) + nudge_rate(phi, drive, params)
    for i in drive.clamped:
        vel[i] = 0.0
    knew = apply_plasticity_step(phi, k, params, dt) if plastic else k
    return phi + dt * vel, knew
