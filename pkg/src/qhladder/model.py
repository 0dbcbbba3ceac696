"""Single-excitation Hamiltonians for modulated chains, two-leg ladders and 2D lattices.

All couplings and on-site potentials are linear frequencies in MHz.  The on-site
modulation is ``delta * cos(2*pi*b*j + phi)`` with the site index j starting at 1,
so site patterns repeat with period 3 when b = 1/3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

TWO_PI = 2.0 * math.pi

#: Override keys accepted in LadderSpec.per_site_overrides.  Couplings are the
#: bonds leaving the site toward larger rung index; potential replaces the
#: cosine value for that site.
_OVERRIDE_KEYS = frozenset(
    {"potential_mhz", "j_par_mhz", "j_par2_mhz", "j_perp_mhz", "j_cross_mhz"}
)


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


def reduce_phase(phi: float) -> float:
    """Map an angle to [0, 2*pi)."""
    phi = _check_finite("phi", phi)
    return phi % TWO_PI


@dataclass(frozen=True)
class ChainSpec:
    """Open chain with cosine-modulated on-site potential and optional
    next-nearest-neighbor hopping."""

    n_sites: int
    j_par: float = 8.0
    j_par2: float = 0.0
    delta: float = 0.0
    b: float = Fraction(1, 3)
    phi: float = 0.0

    def __post_init__(self):
        if int(self.n_sites) < 1:
            raise ValueError("n_sites must be >= 1")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        for name in ("j_par", "j_par2", "delta"):
            object.__setattr__(self, name, _check_finite(name, getattr(self, name)))
        object.__setattr__(self, "b", _check_finite("b", self.b))
        object.__setattr__(self, "phi", reduce_phase(self.phi))

    def with_phi(self, phi: float) -> "ChainSpec":
        return ChainSpec(self.n_sites, self.j_par, self.j_par2, self.delta, self.b, phi)

    def potential(self, j: int) -> float:
        """On-site potential at 1-based site j, MHz."""
        return self.delta * math.cos(TWO_PI * self.b * j + self.phi)


@dataclass(frozen=True)
class LadderSpec:
    """Two-leg ladder: legs 'up' and 'down', rungs 1..n_rungs.

    delta_up / delta_down are signed so the two legs can carry identical or
    opposite cosine modulations.  per_site_overrides maps (leg, rung) to a dict
    of measured device values (see _OVERRIDE_KEYS).
    """

    n_rungs: int
    j_par: float = 8.0
    j_par2: float = 0.8
    j_perp: float = 7.0
    j_cross: float = 1.6
    delta_up: float = 0.0
    delta_down: float = 0.0
    b: float = Fraction(1, 3)
    phi: float = 0.0
    per_site_overrides: Mapping[tuple, Mapping[str, float]] | None = field(default=None)

    def __post_init__(self):
        if int(self.n_rungs) < 1:
            raise ValueError("n_rungs must be >= 1")
        object.__setattr__(self, "n_rungs", int(self.n_rungs))
        for name in ("j_par", "j_par2", "j_perp", "j_cross", "delta_up", "delta_down"):
            object.__setattr__(self, name, _check_finite(name, getattr(self, name)))
        object.__setattr__(self, "b", _check_finite("b", self.b))
        object.__setattr__(self, "phi", reduce_phase(self.phi))
        if self.per_site_overrides:
            for site, entry in self.per_site_overrides.items():
                leg, rung = site
                if leg not in ("up", "down") or not 1 <= int(rung) <= self.n_rungs:
                    raise ValueError(f"override references site outside lattice: {site}")
                bad = set(entry) - _OVERRIDE_KEYS
                if bad:
                    raise ValueError(f"unknown override keys for {site}: {sorted(bad)}")
                for key, value in entry.items():
                    _check_finite(f"override {site}:{key}", value)

    def with_phi(self, phi: float) -> "LadderSpec":
        return LadderSpec(
            self.n_rungs, self.j_par, self.j_par2, self.j_perp, self.j_cross,
            self.delta_up, self.delta_down, self.b, phi, self.per_site_overrides,
        )

    def delta_for(self, leg: str) -> float:
        return self.delta_up if leg == "up" else self.delta_down


@dataclass(frozen=True)
class HofstadterSpec:
    """2D square lattice with flux b per plaquette via Peierls phases on y-links."""

    nx: int
    ny: int
    t_x: float = 8.0
    t_y: float = 6.0
    b: float = Fraction(1, 3)
    boundary_y: str = "open"

    def __post_init__(self):
        if int(self.nx) < 1 or int(self.ny) < 1:
            raise ValueError("nx and ny must be >= 1")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        for name in ("t_x", "t_y"):
            object.__setattr__(self, name, _check_finite(name, getattr(self, name)))
        object.__setattr__(self, "b", _check_finite("b", self.b))
        if self.boundary_y not in ("open", "periodic"):
            raise ValueError("boundary_y must be 'open' or 'periodic'")


class Hamiltonian:
    """Dense Hermitian matrix over the single-excitation basis, entries in MHz.

    Immutable after construction; ``entries`` is returned read-only so instances
    are safe to share across threads.
    """

    def __init__(self, entries: np.ndarray, site_labels: list):
        entries = np.asarray(entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("entries must be a square matrix")
        if len(site_labels) != entries.shape[0]:
            raise ValueError("label count must equal matrix dimension")
        if not np.array_equal(entries, entries.conj().T):
            raise ValueError("entries must be exactly Hermitian")
        entries.setflags(write=False)
        self._entries = entries
        self._labels = tuple(site_labels)

    @property
    def dim(self) -> int:
        return self._entries.shape[0]

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def site_labels(self) -> tuple:
        return self._labels

    def index_of(self, label) -> int:
        try:
            return self._labels.index(label)
        except ValueError:
            raise KeyError(f"site {label!r} not in lattice") from None

    def __repr__(self):
        return f"Hamiltonian(dim={self.dim})"


def _hermitian_fill(dim: int) -> np.ndarray:
    return np.zeros((dim, dim), dtype=complex)


def _add_bond(h: np.ndarray, a: int, b: int, amplitude: complex) -> None:
    # Mirrored entry keeps H exactly equal to its conjugate transpose.
    h[a, b] += amplitude
    h[b, a] += np.conj(amplitude)


def build_aah_chain(spec: ChainSpec) -> Hamiltonian:
    """Open AAH chain: NN hopping j_par, NNN hopping j_par2, cosine potential."""
    n = spec.n_sites
    h = _hermitian_fill(n)
    for j in range(n - 1):
        _add_bond(h, j, j + 1, spec.j_par)
    for j in range(n - 2):
        _add_bond(h, j, j + 2, spec.j_par2)
    for j in range(n):
        h[j, j] = spec.potential(j + 1)
    return Hamiltonian(h, [j + 1 for j in range(n)])


def build_ladder(spec: LadderSpec) -> Hamiltonian:
    """Two-leg ladder with intra-leg NN/TNN, rung and cross-leg NNN hoppings.

    Basis ordering: leg 'up' rungs 1..n, then leg 'down' rungs 1..n.
    """
    n = spec.n_rungs
    h = _hermitian_fill(2 * n)
    labels = [("up", j + 1) for j in range(n)] + [("down", j + 1) for j in range(n)]
    index = {lab: i for i, lab in enumerate(labels)}
    overrides = dict(spec.per_site_overrides or {})

    def bond_value(site, key, default):
        entry = overrides.get(site)
        if entry and key in entry:
            return float(entry[key])
        return default

    for leg in ("up", "down"):
        for j in range(1, n + 1):
            site = (leg, j)
            i = index[site]
            if j + 1 <= n:
                _add_bond(h, i, index[(leg, j + 1)],
                          bond_value(site, "j_par_mhz", spec.j_par))
            if j + 2 <= n:
                _add_bond(h, i, index[(leg, j + 2)],
                          bond_value(site, "j_par2_mhz", spec.j_par2))
            pot = spec.delta_for(leg) * math.cos(TWO_PI * spec.b * j + spec.phi)
            entry = overrides.get(site)
            if entry and "potential_mhz" in entry:
                pot = float(entry["potential_mhz"])
            h[i, i] = pot
    for j in range(1, n + 1):
        _add_bond(h, index[("up", j)], index[("down", j)],
                  bond_value(("up", j), "j_perp_mhz", spec.j_perp))
        if j + 1 <= n:
            jx_up = bond_value(("up", j), "j_cross_mhz", spec.j_cross)
            jx_dn = bond_value(("down", j), "j_cross_mhz", spec.j_cross)
            _add_bond(h, index[("up", j)], index[("down", j + 1)], jx_up)
            _add_bond(h, index[("down", j)], index[("up", j + 1)], jx_dn)
    return Hamiltonian(h, labels)


def build_hofstadter(spec: HofstadterSpec) -> Hamiltonian:
    """Square lattice: real x-hopping t_x, y-hopping t_y with phase e^{+i*2*pi*b*j}
    where j is the 1-based x coordinate.  periodic_y wraps column ny to 1."""
    nx, ny = spec.nx, spec.ny
    labels = [(x + 1, y + 1) for x in range(nx) for y in range(ny)]
    index = {lab: i for i, lab in enumerate(labels)}
    h = _hermitian_fill(nx * ny)
    for x in range(1, nx + 1):
        for y in range(1, ny + 1):
            if x + 1 <= nx:
                _add_bond(h, index[(x, y)], index[(x + 1, y)], spec.t_x)
            phase = np.exp(1j * TWO_PI * spec.b * x)
            if y + 1 <= ny:
                _add_bond(h, index[(x, y)], index[(x, y + 1)], spec.t_y * phase)
            elif spec.boundary_y == "periodic" and ny > 1:
                _add_bond(h, index[(x, y)], index[(x, 1)], spec.t_y * phase)
        if spec.boundary_y == "periodic" and ny == 1:
            # The wrapped y-link is a self-loop; its two orientations add up
            # to a real on-site shift.
            i = index[(x, 1)]
            h[i, i] += 2.0 * spec.t_y * math.cos(TWO_PI * spec.b * x)
    return Hamiltonian(h, labels)


def check_dimensional_reduction(h2d: HofstadterSpec) -> float:
    """Max absolute mismatch (MHz) between the periodic-y 2D spectrum and the
    union of spectra of the per-k_y chains with J = t_x, Delta = 2*t_y, phi = k_y."""
    if h2d.boundary_y != "periodic":
        raise ValueError("dimensional reduction requires boundary_y='periodic'")
    spectrum_2d = np.linalg.eigvalsh(build_hofstadter(h2d).entries)
    chain_eigs = []
    for m in range(h2d.ny):
        k_y = TWO_PI * m / h2d.ny
        chain = ChainSpec(
            n_sites=h2d.nx, j_par=h2d.t_x, j_par2=0.0,
            delta=2.0 * h2d.t_y, b=h2d.b, phi=k_y,
        )
        chain_eigs.append(np.linalg.eigvalsh(build_aah_chain(chain).entries))
    spectrum_1d = np.sort(np.concatenate(chain_eigs))
    return float(np.max(np.abs(np.sort(spectrum_2d) - spectrum_1d)))
