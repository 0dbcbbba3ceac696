"""Measurement-chain emulation: finite shots, readout-error corruption and
mitigation, Z-crosstalk correction, and first-order settling predistortion."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.optimize import minimize_scalar


class SingularConfusion(Exception):
    """Confusion matrix is not invertible (F0 + F1 <= 1)."""


@dataclass(frozen=True)
class ReadoutFidelities:
    """Per-site assignment fidelities (F0, F1).  The per-site confusion matrix
    [[F0, 1-F1], [1-F0, F1]] maps true to measured occupation."""

    f0: np.ndarray
    f1: np.ndarray

    def __post_init__(self):
        f0 = np.atleast_1d(np.asarray(self.f0, dtype=float))
        f1 = np.atleast_1d(np.asarray(self.f1, dtype=float))
        if f0.shape != f1.shape:
            raise ValueError("F0 and F1 vectors must have equal length")
        if np.any((f0 < 0) | (f0 > 1) | (f1 < 0) | (f1 > 1)):
            raise ValueError("fidelities must lie in [0, 1]")
        if np.any(f0 + f1 <= 1.0):
            raise SingularConfusion("need F0 + F1 > 1 for an invertible confusion matrix")
        object.__setattr__(self, "f0", f0)
        object.__setattr__(self, "f1", f1)

    def __len__(self):
        return len(self.f0)

    def confusion(self, site: int) -> np.ndarray:
        return np.array(
            [[self.f0[site], 1.0 - self.f1[site]], [1.0 - self.f0[site], self.f1[site]]]
        )

    @classmethod
    def from_table(cls, name: str) -> "ReadoutFidelities":
        """Load a shipped device table ('chain15' or 'ladder30')."""
        payload = json.loads(
            resources.files("qhladder.data").joinpath(f"fidelities_{name}.json").read_text()
        )
        return cls(np.array(payload["f0"]), np.array(payload["f1"]))


@dataclass(frozen=True)
class CrosstalkMatrix:
    """Linear map from applied to sensed control amplitudes; unit diagonal and
    off-diagonal magnitudes below 4.5%."""

    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("crosstalk matrix must be square")
        if not np.allclose(np.diag(m), 1.0, atol=1e-12):
            raise ValueError("crosstalk matrix diagonal must be 1")
        off = m - np.diag(np.diag(m))
        if np.max(np.abs(off)) >= 0.045:
            raise ValueError("off-diagonal crosstalk must stay below 4.5%")
        object.__setattr__(self, "m", m)


@dataclass(frozen=True)
class SettlingModel:
    """First-order step-settling response p(t) = alpha * (1 + exp(-t/t_d)) + beta."""

    alpha: float
    beta: float
    t_d: float  # us

    def __post_init__(self):
        if not self.t_d > 0:
            raise ValueError("t_d must be positive")

    def step_response(self, times: np.ndarray) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        return self.alpha * (1.0 + np.exp(-times / self.t_d)) + self.beta

    @property
    def initial_gain(self) -> float:
        return 2.0 * self.alpha + self.beta

    @property
    def settled_gain(self) -> float:
        return self.alpha + self.beta


def sample_shots(probabilities: np.ndarray, n_shots: int, seed: int) -> np.ndarray:
    """Multinomial counts over (site outcomes..., vacuum); deterministic per seed.

    The remainder 1 - sum(p) is the vacuum outcome, reported as the last count.
    """
    p = np.asarray(probabilities, dtype=float)
    if np.any(p < 0):
        raise ValueError("probabilities must be non-negative")
    total = p.sum()
    if total > 1.0 + 1e-9:
        raise ValueError("probabilities must sum to at most 1")
    full = np.append(p, max(0.0, 1.0 - total))
    full /= full.sum()
    rng = np.random.default_rng(seed)
    return rng.multinomial(n_shots, full)


def corrupt_readout(true_probs: np.ndarray, fid: ReadoutFidelities) -> np.ndarray:
    """Apply the per-site confusion matrix to columns of (p0, p1) pairs.

    true_probs has shape (n_sites, 2); so does the result.
    """
    probs = np.asarray(true_probs, dtype=float)
    if probs.ndim != 2 or probs.shape[1] != 2 or probs.shape[0] != len(fid):
        raise ValueError("expected shape (n_sites, 2) matching the fidelity table")
    out = np.empty_like(probs)
    for i in range(len(fid)):
        out[i] = fid.confusion(i) @ probs[i]
    return out


def mitigate_readout(measured: np.ndarray, fid: ReadoutFidelities) -> tuple[np.ndarray, float]:
    """Invert the per-site confusion matrices; values outside [0, 1] are clamped
    and the largest clamp magnitude is reported alongside the result."""
    probs = np.asarray(measured, dtype=float)
    if probs.ndim != 2 or probs.shape[1] != 2 or probs.shape[0] != len(fid):
        raise ValueError("expected shape (n_sites, 2) matching the fidelity table")
    corrected = np.empty_like(probs)
    for i in range(len(fid)):
        corrected[i] = np.linalg.solve(fid.confusion(i), probs[i])
    clamped = np.clip(corrected, 0.0, 1.0)
    clamp_magnitude = float(np.max(np.abs(corrected - clamped)))
    return clamped, clamp_magnitude


def apply_crosstalk_correction(z_target: np.ndarray, m: CrosstalkMatrix) -> np.ndarray:
    """Solve M_Z @ z_applied = z_target so the sensed amplitudes hit the target."""
    target = np.asarray(z_target, dtype=float)
    if target.shape != (m.m.shape[0],):
        raise ValueError("target length must match the crosstalk matrix dimension")
    return np.linalg.solve(m.m, target)


def settle_waveform(waveform: np.ndarray, model: SettlingModel, dt: float) -> np.ndarray:
    """Forward model: response of the settling filter to a piecewise-constant
    drive, normalized to unit instantaneous gain."""
    w = np.asarray(waveform, dtype=float)
    step = model.step_response(np.arange(len(w)) * dt) / model.initial_gain
    increments = np.diff(w, prepend=0.0)
    out = np.zeros(len(w))
    for n, inc in enumerate(increments):
        if inc != 0.0:
            out[n:] += inc * step[: len(w) - n]
    return out


def settling_predistort(
    target_step: float, model: SettlingModel, times: np.ndarray
) -> np.ndarray:
    """Drive waveform whose settled response reproduces a flat step of height
    target_step, via triangular deconvolution of the discrete step response."""
    times = np.asarray(times, dtype=float)
    if len(times) < 2:
        raise ValueError("need at least two samples")
    dt = float(times[1] - times[0])
    if dt > 2.0 * model.t_d:
        raise ValueError("unstable inversion: dt exceeds 2 * t_d")
    n = len(times)
    step = model.step_response(np.arange(n) * dt) / model.initial_gain
    target = np.full(n, float(target_step))
    # Solve sum_m (w[m]-w[m-1]) * step[n-m] = target[n] forward in time.
    waveform = np.empty(n)
    increments = np.empty(n)
    response = np.zeros(n)
    prev = 0.0
    for i in range(n):
        inc = (target[i] - response[i]) / step[0]
        increments[i] = inc
        waveform[i] = prev + inc
        prev = waveform[i]
        if inc != 0.0 and i + 1 < n:
            response[i + 1 :] += inc * step[1 : n - i]
    return waveform


def fit_settling(times: np.ndarray, data: np.ndarray, t_d_bounds=(1e-3, 1e5)) -> SettlingModel:
    """Recover (alpha, beta, t_d) from a settling trace.

    For a trial decay constant the amplitudes are linear in the basis
    {exp(-t/t_d), 1}; the decay constant itself is found by a bounded scalar
    search over the residual norm.
    """
    times = np.asarray(times, dtype=float)
    data = np.asarray(data, dtype=float)

    def residual(log_td: float) -> float:
        td = math.exp(log_td)
        basis = np.column_stack([np.exp(-times / td), np.ones_like(times)])
        coef, *_ = np.linalg.lstsq(basis, data, rcond=None)
        return float(np.linalg.norm(basis @ coef - data))

    res = minimize_scalar(
        residual,
        bounds=(math.log(t_d_bounds[0]), math.log(t_d_bounds[1])),
        method="bounded",
        options={"xatol": 1e-10},
    )
    t_d = math.exp(res.x)
    basis = np.column_stack([np.exp(-times / t_d), np.ones_like(times)])
    coef, *_ = np.linalg.lstsq(basis, data, rcond=None)
    alpha = float(coef[0])
    beta = float(coef[1] - coef[0])
    return SettlingModel(alpha=alpha, beta=beta, t_d=t_d)
