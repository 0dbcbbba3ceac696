"""Exact single-excitation dynamics via eigendecomposition.

The propagator is U(t) = exp(-i * 2*pi * H * t) with H in MHz and t in microseconds,
so Fourier axes of downstream spectroscopy read directly in MHz.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ChainSpec, Hamiltonian, LadderSpec, build_aah_chain, build_ladder

TWO_PI = 2.0 * np.pi


@dataclass
class Trajectory:
    """Time grid (us) with per-site occupation probabilities, amplitudes optional."""

    times: np.ndarray
    probabilities: np.ndarray  # shape (n_times, dim)
    amplitudes: np.ndarray | None = None
    site_labels: tuple = ()


def eigensolve(h: Hamiltonian) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues (MHz) and the unitary matrix of eigenvectors."""
    return np.linalg.eigh(h.entries)


def evolve_state(
    h: Hamiltonian,
    psi0: np.ndarray,
    times: np.ndarray,
    gamma: float = 0.0,
    keep_amplitudes: bool = True,
) -> Trajectory:
    """psi(t) = sum_n c_n e^{-i 2 pi E_n t} v_n, scaled by the uniform envelope
    e^{-gamma t} when gamma > 0."""
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (h.dim,):
        raise ValueError(f"state has length {psi0.shape}, Hamiltonian dim {h.dim}")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("times must be a non-negative ascending vector")
    energies, vectors = eigensolve(h)
    coeffs = vectors.conj().T @ psi0
    phases = np.exp(-1j * TWO_PI * np.outer(times, energies))  # (nt, dim)
    amplitudes = (phases * coeffs) @ vectors.T
    if gamma > 0.0:
        amplitudes = amplitudes * np.exp(-gamma * times)[:, None]
    probabilities = np.abs(amplitudes) ** 2
    return Trajectory(
        times=times,
        probabilities=probabilities,
        amplitudes=amplitudes if keep_amplitudes else None,
        site_labels=h.site_labels,
    )


def quantum_walk(
    spec: ChainSpec | LadderSpec,
    initial_site,
    t_max: float = 1.0,
    dt: float = 0.002,
    gamma: float = 0.0,
) -> Trajectory:
    """Basis-state start on a uniform time grid."""
    if isinstance(spec, ChainSpec):
        h = build_aah_chain(spec)
    elif isinstance(spec, LadderSpec):
        h = build_ladder(spec)
    else:
        raise TypeError(f"unsupported spec type {type(spec).__name__}")
    idx = h.index_of(initial_site)
    psi0 = np.zeros(h.dim, dtype=complex)
    psi0[idx] = 1.0
    n_steps = int(round(t_max / dt))
    times = np.arange(n_steps + 1) * dt
    return evolve_state(h, psi0, times, gamma=gamma)


def distribution_fidelity(p: np.ndarray, q: np.ndarray) -> float:
    """Bhattacharyya overlap sum_j sqrt(p_j q_j)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("distributions must have equal length")
    if np.any(p < 0) or np.any(q < 0):
        raise ValueError("distributions must be non-negative")
    if p.sum() > 1 + 1e-9 or q.sum() > 1 + 1e-9:
        raise ValueError("distributions must sum to at most 1")
    return float(np.sum(np.sqrt(p * q)))


def center_of_mass(
    traj: Trajectory, origin_site: int, sites_per_cell: int = 3
) -> np.ndarray:
    """delta_x(t) = sum_j P_j(t) (j - j0) / sites_per_cell over the chain index."""
    if sites_per_cell < 1:
        raise ValueError("sites_per_cell must be >= 1")
    n = traj.probabilities.shape[1]
    if not 1 <= origin_site <= n:
        raise ValueError(f"origin_site {origin_site} outside chain of {n} sites")
    offsets = (np.arange(1, n + 1) - origin_site) / sites_per_cell
    return traj.probabilities @ offsets
