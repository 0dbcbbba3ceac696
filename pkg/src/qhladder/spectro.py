"""Dynamic band-structure spectroscopy from response functions.

A local superposition perturbation on one site gives the response
chi(t) = (2 <psi0|psi(t)> - 1) e^{-gamma t}; eigenenergies appear as peaks of
the squared Fourier magnitude on a frequency axis in MHz.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .evolve import eigensolve
from .model import Hamiltonian

TWO_PI = 2.0 * np.pi


@dataclass
class ResponseSeries:
    times: np.ndarray  # uniform grid, us
    values: np.ndarray  # complex chi(t)
    target_site: object = None
    gamma: float = 0.0

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def window(self) -> float:
        return float(len(self.times) * self.dt)


@dataclass
class SpectrumMap:
    phi_grid: np.ndarray
    freq_grid: np.ndarray  # MHz
    intensity: np.ndarray  # shape (n_phi, n_freq)
    normalized: bool = False


def _check_uniform(times: np.ndarray) -> float:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 2:
        raise ValueError("need a time grid with at least two samples")
    steps = np.diff(times)
    dt = steps[0]
    if dt <= 0 or not np.allclose(steps, dt, rtol=1e-9, atol=1e-12):
        raise ValueError("time grid must be uniform and increasing")
    return float(dt)


def response_function(
    h: Hamiltonian, target_site, times: np.ndarray, gamma: float = 0.0
) -> ResponseSeries:
    """chi(t) = (2 sum_n |c_n|^2 e^{-i 2 pi E_n t} - 1) e^{-gamma t} with
    c_n the overlap of eigenvector n with the target basis state."""
    _check_uniform(times)
    times = np.asarray(times, dtype=float)
    idx = h.index_of(target_site)
    energies, vectors = eigensolve(h)
    weights = np.abs(vectors[idx, :]) ** 2
    overlap = np.exp(-1j * TWO_PI * np.outer(times, energies)) @ weights
    values = (2.0 * overlap - 1.0) * np.exp(-gamma * times)
    return ResponseSeries(times=times, values=values, target_site=target_site, gamma=gamma)


def detrend(chi: ResponseSeries) -> ResponseSeries:
    """Subtract the complex time-average to suppress the zero-frequency component."""
    if len(chi.values) == 0:
        raise ValueError("empty series")
    return ResponseSeries(
        times=chi.times,
        values=chi.values - np.mean(chi.values),
        target_site=chi.target_site,
        gamma=chi.gamma,
    )


def ft_power(chi: ResponseSeries, freq_grid: np.ndarray) -> np.ndarray:
    """|A(f)|^2 with A(f) = (dt/T) sum_k chi(t_k) e^{+i 2 pi f t_k}.

    The + sign makes a component e^{-i 2 pi E t} peak at f = E, so the axis
    reads eigenenergy in MHz directly.
    """
    dt = _check_uniform(chi.times)
    freq_grid = np.asarray(freq_grid, dtype=float)
    nyquist = 0.5 / dt
    if np.any(np.abs(freq_grid) > nyquist * (1 + 1e-12)):
        raise ValueError(f"frequency grid exceeds the Nyquist band +-{nyquist} MHz")
    kernel = np.exp(1j * TWO_PI * np.outer(freq_grid, chi.times))
    amplitudes = (kernel @ chi.values) / len(chi.times)
    return np.abs(amplitudes) ** 2


def fft_freq_grid(n_times: int, dt: float, pad_factor: int = 1) -> np.ndarray:
    """Canonical (optionally zero-padded) FFT frequency grid in MHz, ascending."""
    return np.sort(np.fft.fftfreq(n_times * pad_factor, d=dt))


def band_scan(
    spec_family: Callable[[float], Hamiltonian],
    phi_grid: Sequence[float],
    target_sites: Sequence,
    times: np.ndarray,
    gamma: float = 0.0,
    freq_grid: np.ndarray | None = None,
    pad_factor: int = 8,
    normalize: bool = False,
) -> SpectrumMap:
    """For each phi: sum the detrended-response FT powers over target sites.

    Columns are independent, so execution order over phi never affects the
    output.  With normalize=True each phi column is scaled to max 1.
    """
    phi_grid = np.asarray(phi_grid, dtype=float)
    if phi_grid.size == 0 or len(target_sites) == 0:
        raise ValueError("phi grid and target list must be non-empty")
    times = np.asarray(times, dtype=float)
    dt = _check_uniform(times)
    if freq_grid is None:
        freq_grid = fft_freq_grid(len(times), dt, pad_factor)
    freq_grid = np.asarray(freq_grid, dtype=float)
    nyquist = 0.5 / dt
    if np.any(np.abs(freq_grid) > nyquist * (1 + 1e-12)):
        raise ValueError(f"frequency grid exceeds the Nyquist band +-{nyquist} MHz")
    # One shared Fourier kernel; per phi all targets go through a single matmul.
    kernel = np.exp(1j * TWO_PI * np.outer(freq_grid, times))
    envelope = np.exp(-gamma * times)
    intensity = np.zeros((len(phi_grid), len(freq_grid)))
    for i, phi in enumerate(phi_grid):
        h = spec_family(phi)
        energies, vectors = eigensolve(h)
        rows = [h.index_of(site) for site in target_sites]
        weights = np.abs(vectors[rows, :]) ** 2  # (n_targets, n_states)
        phases = np.exp(-1j * TWO_PI * np.outer(times, energies))
        chi = (2.0 * phases @ weights.T - 1.0) * envelope[:, None]
        chi -= chi.mean(axis=0)
        amplitudes = (kernel @ chi) / len(times)
        intensity[i] = np.sum(np.abs(amplitudes) ** 2, axis=1)
        if normalize:
            peak = intensity[i].max()
            if peak > 0:
                intensity[i] /= peak
    return SpectrumMap(
        phi_grid=phi_grid, freq_grid=np.asarray(freq_grid, dtype=float),
        intensity=intensity, normalized=normalize,
    )


def extract_peaks(
    power: np.ndarray, freq_grid: np.ndarray, rel_threshold: float = 0.1
) -> list[float]:
    """Local maxima above rel_threshold * max(power), each refined by 3-point
    quadratic interpolation; sorted ascending.  May be empty."""
    if not 0.0 < rel_threshold < 1.0:
        raise ValueError("rel_threshold must lie in (0, 1)")
    power = np.asarray(power, dtype=float)
    freq_grid = np.asarray(freq_grid, dtype=float)
    if power.shape != freq_grid.shape:
        raise ValueError("power and frequency grids must match")
    if len(power) < 3 or power.max() <= 0:
        return []
    floor = rel_threshold * power.max()
    peaks = []
    for i in range(1, len(power) - 1):
        if power[i] >= floor and power[i] > power[i - 1] and power[i] >= power[i + 1]:
            denom = power[i - 1] - 2.0 * power[i] + power[i + 1]
            shift = 0.0 if denom == 0 else 0.5 * (power[i - 1] - power[i + 1]) / denom
            df = freq_grid[i + 1] - freq_grid[i]
            peaks.append(float(freq_grid[i] + shift * df))
    return sorted(peaks)


def lorentzian_fwhm(power: np.ndarray, freq_grid: np.ndarray) -> float:
    """FWHM (MHz) of the dominant peak from a least-squares Lorentzian fit."""
    from scipy.optimize import curve_fit

    power = np.asarray(power, dtype=float)
    freq_grid = np.asarray(freq_grid, dtype=float)
    i0 = int(np.argmax(power))

    def lorentz(f, amp, f0, hwhm):
        return amp / (1.0 + ((f - f0) / hwhm) ** 2)

    df = freq_grid[1] - freq_grid[0]
    p0 = (power[i0], freq_grid[i0], max(df, 0.05))
    popt, _ = curve_fit(lorentz, freq_grid, power, p0=p0, maxfev=20000)
    return float(2.0 * abs(popt[2]))
