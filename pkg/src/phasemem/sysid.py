"""Phase extraction from voltage traces and Kuramoto parameter fitting.

Phases come from the analytic signal (negative frequencies removed in the
Fourier domain).  Fitting matches phase differences relative to channel 0,
which removes both the carrier and the global phase gauge, against an
Euler-integrated Kuramoto trajectory started from the observed phases.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import hilbert

from .errors import ConfigurationError, DegenerateSignalError, FitDivergenceError
from .phase import CouplingMatrix

MIN_SAMPLES_PER_PERIOD = 16
EDGE_FRACTION = 0.05


@dataclass(frozen=True, eq=False)
class VoltageTrace:
    sample_rate: float
    channels: np.ndarray

    def __post_init__(self):
        ch = np.array(self.channels, dtype=float)
        if ch.ndim == 1:
            ch = ch[None, :]
        if ch.ndim != 2 or ch.shape[1] < MIN_SAMPLES_PER_PERIOD:
            raise ConfigurationError(f"channels must be (n_channels, n_samples) with enough samples, got {ch.shape}")
        if not np.all(np.isfinite(ch)):
            raise ConfigurationError("voltage trace has non-finite samples")
        if not self.sample_rate > 0:
            raise ConfigurationError(f"sample_rate must be positive, got {self.sample_rate}")
        ch.setflags(write=False)
        object.__setattr__(self, "channels", ch)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    @property
    def n_channels(self) -> int:
        return self.channels.shape[0]

    @property
    def n_samples(self) -> int:
        return self.channels.shape[1]

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate


@dataclass(frozen=True, eq=False)
class PhaseSeries:
    """Unwrapped phases per channel; ``reliable`` is false in the edge bands."""

    phases: np.ndarray
    reliable: np.ndarray
    dt: float

    def interior(self) -> np.ndarray:
        return self.phases[:, self.reliable]


@dataclass(frozen=True, eq=False)
class FitResult:
    k_hat: CouplingMatrix
    delta_omega_hat: np.ndarray
    final_loss: float
    iterations: int
    loss_history: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "k_hat": self.k_hat.k.tolist(),
            "mask": self.k_hat.mask.tolist(),
            "symmetric": self.k_hat.symmetric,
            "delta_omega_hat": self.delta_omega_hat.tolist(),
            "final_loss": self.final_loss,
            "iterations": self.iterations,
        }


def read_voltage_csv(path) -> VoltageTrace:
    """Read ``t,ch0,ch1,...`` rows; the time column must be uniformly spaced."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from exc
    if not rows or not rows[0] or rows[0][0].strip() != "t" or len(rows[0]) < 2:
        raise ConfigurationError(f"{path}: header must be 't,ch0,ch1,...'")
    expected = ["t"] + [f"ch{i}" for i in range(len(rows[0]) - 1)]
    if [c.strip() for c in rows[0]] != expected:
        raise ConfigurationError(f"{path}: header must be {','.join(expected)}")
    try:
        data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ConfigurationError(f"{path}: non-numeric value ({exc})") from exc
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] != len(expected):
        raise ConfigurationError(f"{path}: ragged or too short")
    steps = np.diff(data[:, 0])
    if np.any(steps <= 0) or np.ptp(steps) > 1e-6 * steps.mean():
        raise ConfigurationError(f"{path}: time column is not uniformly increasing")
    return VoltageTrace(1.0 / steps.mean(), data[:, 1:].T)


def extract_phase(trace: VoltageTrace) -> PhaseSeries:
    """Instantaneous unwrapped phase of each channel from its analytic signal."""
    ch = trace.channels - trace.channels.mean(axis=1, keepdims=True)
    scale = np.max(np.abs(trace.channels), axis=1)
    for i, row in enumerate(ch):
        if np.max(np.abs(row)) <= 1e-12 * max(1.0, scale[i]):
            raise DegenerateSignalError(f"channel {i} is constant")
    spectrum = np.abs(np.fft.rfft(ch, axis=1))
    spectrum[:, 0] = 0.0
    peak = np.argmax(spectrum, axis=1)
    freqs = np.fft.rfftfreq(trace.n_samples, trace.dt)
    for i, p in enumerate(peak):
        if p > 0 and trace.sample_rate / freqs[p] < MIN_SAMPLES_PER_PERIOD:
            raise ConfigurationError(
                f"channel {i}: {trace.sample_rate / freqs[p]:.1f} samples per period, "
                f"need at least {MIN_SAMPLES_PER_PERIOD}")
    phases = np.unwrap(np.angle(hilbert(ch, axis=1)), axis=1)
    edge = int(np.ceil(EDGE_FRACTION * trace.n_samples))
    reliable = np.ones(trace.n_samples, dtype=bool)
    reliable[:edge] = False
    reliable[trace.n_samples - edge:] = False
    return PhaseSeries(phases, reliable, trace.dt)


class _Model:
    """Parameter vector <-> (K, dw) and batched Euler simulation."""

    def __init__(self, observed, dt, mask, symmetric, substeps):
        self.obs = observed
        self.n, self.t = observed.shape
        self.dt = dt
        self.substeps = substeps
        self.mask = mask
        self.symmetric = symmetric
        rows, cols = np.nonzero(np.triu(mask, 1) if symmetric else mask)
        self.rows, self.cols = rows, cols
        self.n_k = rows.size
        self.target = (observed[1:] - observed[0]).ravel()
        self.norm = 1.0 / np.sqrt(self.target.size)

    def unpack(self, params):
        params = np.atleast_2d(params)
        b = params.shape[0]
        k = np.zeros((b, self.n, self.n))
        k[:, self.rows, self.cols] = params[:, : self.n_k]
        if self.symmetric:
            k[:, self.cols, self.rows] = params[:, : self.n_k]
        return k, self._freqs(params[:, self.n_k:])

    def _freqs(self, rel):
        # rel holds dw_i - dw_0 for i >= 1; return the zero-mean representative
        full = np.concatenate([np.zeros((rel.shape[0], 1)), rel], axis=1)
        return full - full.mean(axis=1, keepdims=True)

    def pack(self, k, dw):
        return np.concatenate([np.asarray(k)[self.rows, self.cols], dw[1:] - dw[0]])

    def simulate(self, params):
        k, dw = self.unpack(params)
        h = self.dt / self.substeps
        phi = np.repeat(self.obs[:, 0][None, :], k.shape[0], axis=0)
        out = np.empty((k.shape[0], self.n, self.t))
        out[:, :, 0] = phi
        for s in range(1, self.t):
            for _ in range(self.substeps):
                diff = phi[:, :, None] - phi[:, None, :]
                phi = phi + h * (dw - np.einsum("bij,bij->bi", k, np.sin(diff)))
            out[:, :, s] = phi
        return out

    def residuals(self, params):
        sim = self.simulate(params)
        pred = (sim[:, 1:] - sim[:, :1]).reshape(sim.shape[0], -1)
        return (pred - self.target) * self.norm


def fit_kuramoto(observed_phases, dt: float, mask=None, symmetric: bool = True, substeps: int = 1,
                 max_iter: int = 5000, rel_tol: float = 1e-8, fd_step: float = 1e-4) -> FitResult:
    """Least-squares fit of masked couplings and natural frequencies to observed phases.

    The loss is the mean squared error of phase differences relative to
    channel 0.  Jacobians are forward differences through the Euler solve
    with relative step ``fd_step``; iteration stops when the relative loss
    improvement falls below ``rel_tol`` or after ``max_iter`` evaluations.
    """
    obs = np.asarray(observed_phases, dtype=float)
    if obs.ndim != 2 or obs.shape[0] < 2 or obs.shape[1] < 3:
        raise ConfigurationError(f"need at least 2 channels of equal length, got shape {obs.shape}")
    if not np.all(np.isfinite(obs)):
        raise ConfigurationError("observed phases contain non-finite values")
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    if int(substeps) != substeps or substeps < 1:
        raise ConfigurationError("substeps must be a positive integer")
    n = obs.shape[0]
    mask = ~np.eye(n, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if mask.shape != (n, n) or mask.diagonal().any():
        raise ConfigurationError("mask must be n x n with an empty diagonal")
    if symmetric and not np.array_equal(mask, mask.T):
        raise ConfigurationError("symmetric fit needs a symmetric mask")
    model = _Model(obs, float(dt), mask, symmetric, int(substeps))

    vel = np.diff(obs, axis=1).mean(axis=1) / dt
    dw0 = vel - vel.mean()
    x0 = model.pack(np.zeros((n, n)), dw0)
    history: list[float] = []
    last = {"x": x0}

    def fun(x):
        last["x"] = np.array(x)
        r = model.residuals(x)[0]
        loss = float(r @ r)
        if not np.isfinite(loss):
            raise FitDivergenceError("fit loss became non-finite", last_iterate=np.array(x))
        history.append(loss)
        return r

    def jac(x):
        h = fd_step * np.maximum(np.abs(x), 1.0)
        batch = np.vstack([x, x + np.diag(h)])
        r = model.residuals(batch)
        if not np.all(np.isfinite(r)):
            raise FitDivergenceError("Jacobian evaluation became non-finite", last_iterate=np.array(x))
        return ((r[1:] - r[0]) / h[:, None]).T

    try:
        with np.errstate(over="ignore", invalid="ignore"):
            sol = least_squares(fun, x0, jac=jac, method="trf", ftol=rel_tol, xtol=1e-15, gtol=1e-15,
                                max_nfev=int(max_iter), x_scale="jac")
    except FitDivergenceError:
        raise
    except (ValueError, FloatingPointError) as exc:
        raise FitDivergenceError(f"fit failed: {exc}", last_iterate=last["x"]) from exc
    k, dw = model.unpack(sol.x)
    loss = float(np.mean(((model.residuals(sol.x)[0]) / model.norm) ** 2))
    if not np.isfinite(loss):
        raise FitDivergenceError("final loss is non-finite", last_iterate=sol.x)
    return FitResult(CouplingMatrix(k[0], mask, symmetric), dw[0], loss, int(sol.nfev), tuple(history))


def simulate_fit(result: FitResult, initial, n_samples: int, dt: float, substeps: int = 1) -> np.ndarray:
    """Forward Euler trajectory ``(n, n_samples)`` of a fitted model from ``initial``."""
    init = np.asarray(initial, dtype=float)
    dummy = np.zeros((init.size, int(n_samples)))
    dummy[:, 0] = init
    model = _Model(dummy, float(dt), result.k_hat.mask, result.k_hat.symmetric, int(substeps))
    x = model.pack(result.k_hat.k, result.delta_omega_hat)
    return model.simulate(x)[0]


def fit_voltage_trace(trace: VoltageTrace, mask=None, symmetric: bool = True, substeps: int = 1,
                      max_iter: int = 5000, rel_tol: float = 1e-8) -> tuple[FitResult, PhaseSeries]:
    """Extract phases, drop the unreliable edges and fit the interior."""
    series = extract_phase(trace)
    fit = fit_kuramoto(series.interior(), trace.dt, mask, symmetric, substeps, max_iter, rel_tol)
    return fit, series
