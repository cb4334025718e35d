"""Exact enumeration of the binary bipartite energy model behind a hidden layer.

States are +/-1 vectors (the 0/pi phase idealisation).  With energy
``E(v, h) = -v^T W h`` and Gibbs weights ``exp(-beta E)``, everything is
summed exactly over ``2**(n_v + n_h)`` configurations in log space.
W parameters are flattened row-major by visible index.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .encoding import all_binary_states, as_pattern
from .errors import ConfigurationError
from .phase import NetworkTopology

MAX_UNITS = 20


@dataclass(frozen=True, eq=False)
class BipartiteEnergyModel:
    """Visible-hidden couplings ``w`` (n_v x n_h); hidden-hidden ``a`` is fixed at zero."""

    w: np.ndarray
    beta: float = 1.0
    a: np.ndarray | None = None

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        if w.ndim != 2 or 0 in w.shape:
            raise ConfigurationError(f"w must be a non-empty matrix, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ConfigurationError("w has non-finite entries")
        a = np.zeros((w.shape[1], w.shape[1])) if self.a is None else np.array(self.a, dtype=float)
        if a.shape != (w.shape[1], w.shape[1]) or np.any(a != 0):
            raise ConfigurationError("hidden-hidden couplings must be an all-zero n_h x n_h matrix")
        if not self.beta > 0:
            raise ConfigurationError(f"beta must be positive, got {self.beta}")
        if sum(w.shape) > MAX_UNITS:
            raise ConfigurationError(f"{sum(w.shape)} units exceed the enumeration limit of {MAX_UNITS}")
        w.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def n_visible(self) -> int:
        return self.w.shape[0]

    @property
    def n_hidden(self) -> int:
        return self.w.shape[1]

    def with_w(self, w) -> "BipartiteEnergyModel":
        return BipartiteEnergyModel(np.reshape(w, self.w.shape), self.beta)

    @classmethod
    def from_coupling(cls, k, topology: NetworkTopology, beta: float = 1.0) -> "BipartiteEnergyModel":
        """Visible-to-hidden block of a layered coupling matrix (visible = inputs then outputs)."""
        k = np.asarray(k, dtype=float)
        if not topology.hidden:
            raise ConfigurationError("topology has no hidden oscillators")
        vis, hid = list(topology.visible), list(topology.hidden)
        ks = 0.5 * (k + k.T)
        inner = ks[np.ix_(vis, vis)]
        hh = ks[np.ix_(hid, hid)]
        if np.any(inner != 0) or np.any(hh != 0):
            raise ConfigurationError("couplings inside the visible or hidden set are not representable")
        return cls(ks[np.ix_(vis, hid)], beta)


@dataclass(frozen=True, eq=False)
class VisibleDistribution:
    """Log-probabilities of every visible state, ordered as ``all_binary_states``."""

    states: np.ndarray
    log_probs: np.ndarray
    log_z: float

    def log_prob(self, v) -> float:
        return float(self.log_probs[_state_index(v)])


def _state_index(v) -> int:
    bits = (as_pattern(v) < 0).astype(int)
    return int(bits @ (1 << np.arange(bits.size - 1, -1, -1)))


def model_energy(v, h, model: BipartiteEnergyModel) -> float:
    v = as_pattern(v)
    h = as_pattern(h)
    if v.size != model.n_visible or h.size != model.n_hidden:
        raise ConfigurationError("state sizes do not match the model")
    return float(-v @ model.w @ h)


def _joint_logits(model: BipartiteEnergyModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    vs = all_binary_states(model.n_visible).astype(float)
    hs = all_binary_states(model.n_hidden).astype(float)
    return vs, hs, model.beta * (vs @ model.w @ hs.T)


def visible_marginal(model: BipartiteEnergyModel) -> VisibleDistribution:
    vs, _, logits = _joint_logits(model)
    per_v = logsumexp(logits, axis=1)
    log_z = float(logsumexp(per_v))
    return VisibleDistribution(vs.astype(int), per_v - log_z, log_z)


def score_vectors(model: BipartiteEnergyModel) -> tuple[np.ndarray, np.ndarray]:
    """Scores ``d log p(v) / dW`` for every visible state, and ``p(v)``.

    ``beta * (E[v h^T | v] - E[v h^T])`` with the first expectation over
    the hidden posterior and the second over the joint distribution.
    """
    vs, hs, logits = _joint_logits(model)
    per_v = logsumexp(logits, axis=1)
    post = np.exp(logits - per_v[:, None])
    cond_h = post @ hs
    cond = vs[:, :, None] * cond_h[:, None, :]
    p_v = np.exp(per_v - logsumexp(per_v))
    joint = np.tensordot(p_v, cond, axes=1)
    scores = model.beta * (cond - joint[None]).reshape(vs.shape[0], -1)
    return scores, p_v


def fisher_information(model: BipartiteEnergyModel) -> np.ndarray:
    """Exact ``E_v[s s^T]`` over the visible marginal; symmetric PSD."""
    scores, p_v = score_vectors(model)
    f = (scores * p_v[:, None]).T @ scores
    return 0.5 * (f + f.T)


def null_directions(fisher, threshold: float = 1e-8) -> list[np.ndarray]:
    """Unit eigenvectors whose eigenvalue is at most ``threshold * lambda_max``, smallest first."""
    f = np.asarray(fisher, dtype=float)
    if f.ndim != 2 or f.shape[0] != f.shape[1]:
        raise ConfigurationError("Fisher matrix must be square")
    if not np.allclose(f, f.T, atol=1e-12, rtol=0):
        raise ConfigurationError("Fisher matrix must be symmetric")
    vals, vecs = np.linalg.eigh(0.5 * (f + f.T))
    cut = threshold * max(float(vals[-1]), 0.0)
    return [vecs[:, i] for i in range(vals.size) if vals[i] <= cut]


def log_prob_change(model: BipartiteEnergyModel, direction, eps: float = 1e-4) -> float:
    """Largest change of any visible log-probability when W moves by ``eps * direction``."""
    u = np.asarray(direction, dtype=float)
    if u.size != model.w.size:
        raise ConfigurationError("direction length does not match the number of W parameters")
    before = visible_marginal(model).log_probs
    after = visible_marginal(model.with_w(model.w.ravel() + eps * u)).log_probs
    return float(np.max(np.abs(after - before)))


def is_visible_low_energy(v_star, model: BipartiteEnergyModel, tol: float = 1e-12) -> bool:
    """True when ``v_star`` attains the largest visible probability (ties within ``tol`` in log space)."""
    v = as_pattern(v_star)
    if v.size != model.n_visible:
        raise ConfigurationError("pattern length does not match the visible layer")
    dist = visible_marginal(model)
    return bool(dist.log_probs[_state_index(v)] >= dist.log_probs.max() - tol)
