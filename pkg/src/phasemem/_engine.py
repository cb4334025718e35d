"""Compiled inner loop for coupled phase/weight simulations.

Mirrors ``plasticity.coupled_euler_step`` exactly (same order of
operations); the Python version is the reference it is tested against.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

_TWO_PI = 2.0 * math.pi


@njit(cache=True, nogil=True)
def _wrap(x):
    return (x + math.pi) % _TWO_PI - math.pi


@njit(cache=True, nogil=True)
def _energy(phi, k):
    n = phi.size
    e = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            w = 0.5 * (k[i, j] + k[j, i])
            if w != 0.0:
                e -= w * math.cos(phi[i] - phi[j])
    return e


@njit(cache=True, nogil=True)
def simulate(phi0, k0, mask, dw, gain, dt, seg_steps, clamp_on, clamp_val, nudge_on, nudge_val, eta, lam, k_nudge, plastic, symmetric, sample_every):
    n = phi0.size
    total = 0
    for s in range(seg_steps.size):
        total += seg_steps[s]
    n_samples = total // sample_every + 1
    phases = np.empty((n_samples, n))
    weights = np.empty((n_samples, n, n))
    energy = np.empty(n_samples)

    phi = phi0.copy()
    k = k0.copy()
    vel = np.empty(n)
    rate = np.zeros((n, n))

    phases[0] = phi
    weights[0] = k
    energy[0] = _energy(phi, k)
    step = 0
    row = 1
    for seg in range(seg_steps.size):
        for m in range(seg_steps[seg]):
            for i in range(n):
                if clamp_on[seg, i]:
                    phi[i] = clamp_val[seg, i]
            for i in range(n):
                if clamp_on[seg, i]:
                    vel[i] = 0.0
                    continue
                acc = 0.0
                for j in range(n):
                    if mask[i, j]:
                        acc += k[i, j] * math.sin(phi[i] - phi[j])
                v = dw[i] - gain * acc
                if nudge_on[seg, i]:
                    v -= k_nudge * _wrap(phi[i] - nudge_val[seg, i])
                vel[i] = v
            if plastic:
                for i in range(n):
                    for j in range(n):
                        if mask[i, j] and (not symmetric or i < j):
                            rate[i, j] = eta * (math.cos(phi[i] - phi[j]) - lam * k[i, j])
                for i in range(n):
                    for j in range(n):
                        if mask[i, j] and (not symmetric or i < j):
                            w = k[i, j] + dt * rate[i, j]
                            if w > 1.0:
                                w = 1.0
                            elif w < -1.0:
                                w = -1.0
                            k[i, j] = w
                            if symmetric:
                                k[j, i] = w
            for i in range(n):
                phi[i] += dt * vel[i]
            step += 1
            if step % sample_every == 0:
                phases[row] = phi
                weights[row] = k
                energy[row] = _energy(phi, k)
                row += 1
        if not np.all(np.isfinite(phi)):
            return phases[:row], weights[:row], energy[:row]
    return phases, weights, energy
