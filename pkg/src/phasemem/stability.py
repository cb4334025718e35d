"""Fixed points of the phase dynamics and their sensitivity to frequency dispersion.

The homogeneous energy is invariant under a global rotation, so its
Hessian always has a zero mode.  Two gauge fixings are supported:

* ``rotation`` (nothing pinned): restrict to the subspace orthogonal to
  the uniform vector.  Natural frequencies with a non-zero mean only
  rotate the whole network, so the fixed point is sought in the
  co-rotating frame.
* ``pinned``: some oscillators are held (e.g. clamped inputs); the
  Hessian is the principal submatrix over the free oscillators.

Displacements are reported with the gauge removed: relative to the
reference oscillator in rotation mode, and on the free oscillators only
in pinned mode.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .errors import ConfigurationError, DivergenceError, PreconditionError
from .phase import kuramoto_rhs


@dataclass(frozen=True, eq=False)
class FixedPointReport:
    phi_star: np.ndarray
    residual_norm: float
    hessian: np.ndarray
    lambda_min: float
    is_minimum: bool
    full_hessian: np.ndarray
    pinned: tuple[int, ...] = ()
    reference_index: int = 0
    iterations: int = 0

    @property
    def mode(self) -> str:
        return "pinned" if self.pinned else "rotation"

    @property
    def free(self) -> np.ndarray:
        n = self.phi_star.size
        return np.array([i for i in range(n) if i not in self.pinned], dtype=int)

    def gauge_fixed(self, phases) -> np.ndarray:
        """Coordinates in which the symmetry is removed (see module notes)."""
        phi = np.asarray(phases, dtype=float)
        if self.pinned:
            out = np.zeros_like(phi)
            out[self.free] = phi[self.free]
            return out
        return phi - phi[self.reference_index]

    def displacement(self, phases) -> float:
        """Gauge-fixed distance from ``phi_star``: free coordinates, or mean-removed."""
        d = np.asarray(phases, dtype=float) - self.phi_star
        if self.pinned:
            return float(np.linalg.norm(d[self.free]))
        return float(np.linalg.norm(d - d.mean()))

    def to_dict(self) -> dict:
        return {
            "phi_star": self.phi_star.tolist(),
            "residual_norm": self.residual_norm,
            "hessian": self.hessian.tolist(),
            "lambda_min": self.lambda_min,
            "is_minimum": self.is_minimum,
            "gauge": self.mode,
            "pinned": list(self.pinned),
            "reference_index": self.reference_index,
            "iterations": self.iterations,
        }


def energy_hessian(phases, k) -> np.ndarray:
    """Analytic Hessian of ``-sum_{i<j} k_ij cos(phi_i - phi_j)`` (symmetric part of ``k``)."""
    phi = np.asarray(phases, dtype=float)
    k = np.asarray(k, dtype=float)
    ks = 0.5 * (k + k.T)
    c = ks * np.cos(phi[:, None] - phi[None, :])
    np.fill_diagonal(c, 0.0)
    h = -c
    h[np.diag_indices_from(h)] = c.sum(axis=1)
    return h


def _basis(n: int) -> np.ndarray:
    # orthonormal basis of the complement of the uniform vector
    return null_space(np.ones((1, n)))


def _reduce(h: np.ndarray, pinned: tuple[int, ...]) -> np.ndarray:
    n = h.shape[0]
    if pinned:
        free = [i for i in range(n) if i not in pinned]
        return h[np.ix_(free, free)]
    q = _basis(n)
    r = q.T @ h @ q
    return 0.5 * (r + r.T)


def _velocity(phi, k, freqs, pinned):
    v = kuramoto_rhs(phi, k, freqs)
    if pinned:
        v[list(pinned)] = 0.0
    else:
        v = v - v.mean()
    return v


def find_fixed_point(initial, k, freqs=None, tol: float = 1e-8, pinned=(), reference_index: int = 0,
                     dt: float = 1e-2, max_iter: int = 1_000_000, polish: bool = True) -> FixedPointReport:
    """Relax the dynamics until the gauge-fixed velocity norm drops below ``tol`` rad/s.

    Relaxation uses Euler steps of ``dt``; once the residual is small and
    the reduced Hessian is positive definite, Newton steps finish the job.
    """
    if not tol > 0:
        raise ConfigurationError(f"tol must be positive, got {tol}")
    phi = np.array(initial, dtype=float)
    n = phi.size
    k = np.asarray(k, dtype=float)
    if k.shape != (n, n):
        raise ConfigurationError(f"coupling shape {k.shape} does not match {n} phases")
    freqs = np.zeros(n) if freqs is None else np.asarray(freqs, dtype=float)
    pinned = tuple(sorted({int(i) for i in pinned}))
    if any(not 0 <= i < n for i in pinned) or len(pinned) >= n:
        raise ConfigurationError("pinned indices must be valid and leave at least one free oscillator")
    if not 0 <= reference_index < n:
        raise ConfigurationError("reference index out of range")
    free = [i for i in range(n) if i not in pinned]
    q = None if pinned else _basis(n)

    it = 0
    v = _velocity(phi, k, freqs, pinned)
    res = float(np.linalg.norm(v))
    while res >= tol:
        if polish and res < 1e-3:
            h = _reduce(energy_hessian(phi, k), pinned)
            w = np.linalg.eigvalsh(h)
            if w[0] > 1e-9:
                step = np.zeros(n)
                if pinned:
                    step[free] = np.linalg.solve(h, v[free])
                else:
                    step = q @ np.linalg.solve(h, q.T @ v)
                it += 1
                v_new = _velocity(phi + step, k, freqs, pinned)
                res_new = float(np.linalg.norm(v_new))
                if res_new < res:
                    phi += step
                    v, res = v_new, res_new
                    continue
                # Newton stalled at roundoff; fall back to relaxation
                polish = False
        phi += dt * v
        it += 1
        if it >= max_iter or not np.isfinite(res):
            raise DivergenceError(f"no fixed point within {max_iter} iterations (residual {res:.3g})", res)
        v = _velocity(phi, k, freqs, pinned)
        res = float(np.linalg.norm(v))

    full = energy_hessian(phi, k)
    red = _reduce(full, pinned)
    lam = float(np.linalg.eigvalsh(red)[0]) if red.size else float("nan")
    scale = max(1.0, float(np.max(np.abs(red)))) if red.size else 1.0
    return FixedPointReport(phi, res, red, lam, bool(lam > 1e-9 * scale), full, pinned, reference_index, it)


def perturbation_bound(report: FixedPointReport, delta_omega) -> float:
    """First-order bound ``||dw||_2 / lambda_min`` on the fixed-point displacement."""
    if not report.is_minimum or not report.lambda_min > 0:
        raise PreconditionError("perturbation bound needs a strict minimum (lambda_min > 0)")
    dw = np.asarray(delta_omega, dtype=float)
    if dw.shape != report.phi_star.shape:
        raise ConfigurationError("delta_omega shape does not match the fixed point")
    return float(np.linalg.norm(dw) / report.lambda_min)


def predicted_shift(report: FixedPointReport, delta_omega) -> np.ndarray:
    """Linear response ``H^-1 dw`` on the reduced subspace, embedded in full coordinates.

    Rotation mode returns the shift relative to the reference oscillator;
    pinned mode returns zeros on the pinned oscillators.
    """
    dw = np.asarray(delta_omega, dtype=float)
    n = report.phi_star.size
    if dw.shape != (n,):
        raise ConfigurationError("delta_omega shape does not match the fixed point")
    h = report.hessian
    if h.size == 0 or np.linalg.eigvalsh(h)[0] <= 1e-12 * max(1.0, float(np.max(np.abs(h)))):
        raise PreconditionError("reduced Hessian is singular")
    if report.pinned:
        out = np.zeros(n)
        free = report.free
        out[free] = np.linalg.solve(h, dw[free])
        return out
    q = _basis(n)
    d = q @ np.linalg.solve(h, q.T @ dw)
    return d - d[report.reference_index]
