"""Config-driven experiment runner.

Reads a YAML experiment description, dispatches to the simulation modules and
writes the results as plain-text grids (optionally plots).  All frequency-like
keys carry an explicit unit suffix (``*_mhz``, ``*_us``, ``*_rad``) so that no
2*pi convention ambiguity can creep in through a config file.

Exit codes: 0 success, 2 config error, 3 numeric error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .evolve import center_of_mass, quantum_walk
from .model import (
    ChainSpec,
    HofstadterSpec,
    LadderSpec,
    build_aah_chain,
    build_ladder,
    check_dimensional_reduction,
)
from .pump import (
    LocalizationTooWeak,
    PumpSchedule,
    prepare_pump_initial,
    pump_evolve,
    pumped_charge,
)
from .readout import (
    ReadoutFidelities,
    SingularConfusion,
    corrupt_readout,
    mitigate_readout,
    sample_shots,
)
from .spectro import band_scan, fft_freq_grid
from .topo import (
    BlochModel,
    GapClosure,
    NonQuantizedParity,
    SymmetryBroken,
    chern_number,
    parity_invariant,
)

TWO_PI = 2.0 * math.pi

KINDS = ("band_scan", "walk", "pump", "bilayer_scan", "invariants", "reduction_check")

#: Module exceptions that indicate a numeric (not configuration) failure.
NUMERIC_ERRORS = (
    LocalizationTooWeak,
    GapClosure,
    SymmetryBroken,
    NonQuantizedParity,
    SingularConfusion,
    np.linalg.LinAlgError,
    FloatingPointError,
)


class ConfigError(Exception):
    """Invalid experiment configuration; message names the offending key."""


# ---------------------------------------------------------------------------
# validation helpers


def _require_mapping(node, path):
    if not isinstance(node, dict):
        raise ConfigError(f"'{path}' must be a mapping")
    return node


def _check_keys(node: dict, path: str, required: set, optional: set):
    unknown = set(node) - required - optional
    if unknown:
        raise ConfigError(f"unknown key '{path}.{sorted(unknown)[0]}'")
    missing = required - set(node)
    if missing:
        raise ConfigError(f"missing key '{path}.{sorted(missing)[0]}'")


def _number(node: dict, path: str, key: str, default=None):
    if key not in node:
        return default
    value = node[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{path}.{key}' must be a number")
    return float(value)


def _integer(node: dict, path: str, key: str, default=None, minimum=None):
    if key not in node:
        return default
    value = node[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"'{path}.{key}' must be an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"'{path}.{key}' must be >= {minimum}")
    return value


def _flux(node: dict, path: str, key: str = "b", default=Fraction(1, 3)):
    """Flux may be a number or an exact fraction string such as '1/3'."""
    if key not in node:
        return default
    value = node[key]
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"'{path}.{key}' is not a valid fraction: {value!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{path}.{key}' must be a number or fraction string")
    return float(value)


def _chain_spec(node: dict, path: str, phi: float = 0.0) -> ChainSpec:
    _require_mapping(node, path)
    _check_keys(node, path, {"n_sites"},
                {"j_par_mhz", "j_par2_mhz", "delta_mhz", "b", "phi_rad"})
    try:
        return ChainSpec(
            n_sites=_integer(node, path, "n_sites", minimum=1),
            j_par=_number(node, path, "j_par_mhz", 8.0),
            j_par2=_number(node, path, "j_par2_mhz", 0.0),
            delta=_number(node, path, "delta_mhz", 0.0),
            b=_flux(node, path),
            phi=_number(node, path, "phi_rad", phi),
        )
    except ValueError as exc:
        raise ConfigError(f"'{path}': {exc}") from None


def _ladder_spec(node: dict, path: str, phi: float = 0.0) -> LadderSpec:
    _require_mapping(node, path)
    _check_keys(node, path, {"n_rungs"},
                {"j_par_mhz", "j_par2_mhz", "j_perp_mhz", "j_cross_mhz",
                 "delta_up_mhz", "delta_down_mhz", "b", "phi_rad"})
    try:
        return LadderSpec(
            n_rungs=_integer(node, path, "n_rungs", minimum=1),
            j_par=_number(node, path, "j_par_mhz", 8.0),
            j_par2=_number(node, path, "j_par2_mhz", 0.8),
            j_perp=_number(node, path, "j_perp_mhz", 7.0),
            j_cross=_number(node, path, "j_cross_mhz", 1.6),
            delta_up=_number(node, path, "delta_up_mhz", 0.0),
            delta_down=_number(node, path, "delta_down_mhz", 0.0),
            b=_flux(node, path),
            phi=_number(node, path, "phi_rad", phi),
        )
    except ValueError as exc:
        raise ConfigError(f"'{path}': {exc}") from None


def _parse_site(raw, path: str, ladder: bool):
    """Chain sites are integers; ladder sites are 'up:3' / 'down:12' strings."""
    if ladder:
        if not isinstance(raw, str) or ":" not in raw:
            raise ConfigError(f"'{path}' must be 'up:<rung>' or 'down:<rung>', got {raw!r}")
        leg, _, rung = raw.partition(":")
        if leg not in ("up", "down") or not rung.isdigit():
            raise ConfigError(f"'{path}' must be 'up:<rung>' or 'down:<rung>', got {raw!r}")
        return (leg, int(rung))
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ConfigError(f"'{path}' must be an integer site index, got {raw!r}")
    return raw


def _time_grid(node: dict, path: str) -> np.ndarray:
    _require_mapping(node, path)
    _check_keys(node, path, {"t_max_us", "dt_us"}, set())
    t_max = _number(node, path, "t_max_us")
    dt = _number(node, path, "dt_us")
    if dt is None or dt <= 0 or t_max is None or t_max <= 0:
        raise ConfigError(f"'{path}.t_max_us' and '{path}.dt_us' must be positive")
    n = int(round(t_max / dt))
    if n < 2:
        raise ConfigError(f"'{path}' defines fewer than two samples")
    return np.arange(n) * dt


# ---------------------------------------------------------------------------
# experiment config


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description plus the raw mapping it came from."""

    kind: str
    label: str
    raw: dict
    seed: int = 0

    @classmethod
    def from_mapping(cls, raw: dict) -> "ExperimentConfig":
        _require_mapping(raw, "<root>")
        kind = raw.get("kind")
        if kind not in KINDS:
            raise ConfigError(f"'kind' must be one of {KINDS}, got {kind!r}")
        label = raw.get("label", kind)
        if not isinstance(label, str) or not label:
            raise ConfigError("'label' must be a non-empty string")
        seed = raw.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ConfigError("'seed' must be an integer")
        _VALIDATORS[kind](raw)
        return cls(kind=kind, label=label, raw=raw, seed=seed)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        try:
            raw = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
        return cls.from_mapping(raw)

    @property
    def config_hash(self) -> str:
        digest = hashlib.sha256(
            json.dumps(self.raw, sort_keys=True, default=str).encode()
        )
        return digest.hexdigest()


def _validate_scan_common(raw: dict, ladder: bool):
    _check_keys(raw, "<root>",
                {"kind", "model", "scan", "targets", "time"},
                {"label", "seed", "gamma_per_us", "pad_factor", "normalize"})
    if ladder:
        _ladder_spec(raw["model"], "model")
    else:
        _chain_spec(raw["model"], "model")
    scan = _require_mapping(raw["scan"], "scan")
    _check_keys(scan, "scan", {"n_phi"},
                {"phi_min_rad", "phi_max_rad", "freq_min_mhz", "freq_max_mhz"})
    if _integer(scan, "scan", "n_phi", minimum=2) is None:
        raise ConfigError("'scan.n_phi' is required")
    targets = raw["targets"]
    if not isinstance(targets, list) or not targets:
        raise ConfigError("'targets' must be a non-empty list")
    for i, t in enumerate(targets):
        _parse_site(t, f"targets[{i}]", ladder)
    _time_grid(raw["time"], "time")
    gamma = _number(raw, "<root>", "gamma_per_us", 0.0)
    if gamma < 0:
        raise ConfigError("'gamma_per_us' must be non-negative")
    _integer(raw, "<root>", "pad_factor", 8, minimum=1)
    if "normalize" in raw and not isinstance(raw["normalize"], bool):
        raise ConfigError("'normalize' must be a boolean")


def _validate_band_scan(raw: dict):
    _validate_scan_common(raw, ladder=False)


def _validate_bilayer_scan(raw: dict):
    _validate_scan_common(raw, ladder=True)


def _validate_walk(raw: dict):
    _check_keys(raw, "<root>",
                {"kind", "model", "initial_sites", "time"},
                {"label", "seed", "gamma_per_us", "readout"})
    model = _require_mapping(raw["model"], "model")
    ladder = "n_rungs" in model
    spec = _ladder_spec(model, "model") if ladder else _chain_spec(model, "model")
    sites = raw["initial_sites"]
    if not isinstance(sites, list) or not sites:
        raise ConfigError("'initial_sites' must be a non-empty list")
    n = spec.n_rungs if ladder else spec.n_sites
    for i, s in enumerate(sites):
        site = _parse_site(s, f"initial_sites[{i}]", ladder)
        rung = site[1] if ladder else site
        if not 1 <= rung <= n:
            raise ConfigError(f"'initial_sites[{i}]' is outside the lattice")
    _time_grid(raw["time"], "time")
    if _number(raw, "<root>", "gamma_per_us", 0.0) < 0:
        raise ConfigError("'gamma_per_us' must be non-negative")
    if "readout" in raw:
        ro = _require_mapping(raw["readout"], "readout")
        _check_keys(ro, "readout", {"shots", "fidelity_table"}, set())
        if _integer(ro, "readout", "shots", minimum=1) is None:
            raise ConfigError("'readout.shots' is required")
        table = ro["fidelity_table"]
        if table not in ("chain15", "ladder30"):
            raise ConfigError("'readout.fidelity_table' must be 'chain15' or 'ladder30'")
        expected = 30 if ladder else 15
        dim = 2 * n if ladder else n
        if dim != expected:
            raise ConfigError(
                f"'readout.fidelity_table' {table!r} covers {expected} sites, model has {dim}"
            )


def _validate_pump(raw: dict):
    _check_keys(raw, "<root>",
                {"kind", "model", "schedule"},
                {"label", "seed", "dt_us", "initial"})
    spec = _chain_spec(raw["model"], "model")
    sched = _require_mapping(raw["schedule"], "schedule")
    _check_keys(sched, "schedule", {"direction", "duration_us"},
                {"phi0_rad", "speed_rad_per_us"})
    if sched["direction"] not in ("forward", "backward", "none"):
        raise ConfigError("'schedule.direction' must be forward, backward or none")
    duration = _number(sched, "schedule", "duration_us")
    if duration is None or duration <= 0:
        raise ConfigError("'schedule.duration_us' must be positive")
    speed = _number(sched, "schedule", "speed_rad_per_us", 4.9 * math.pi)
    if speed < 0:
        raise ConfigError("'schedule.speed_rad_per_us' must be non-negative")
    dt = _number(raw, "<root>", "dt_us", 1e-4)
    if dt <= 0 or dt > duration / 100:
        raise ConfigError("'dt_us' must be positive and at most duration_us/100")
    if "initial" in raw:
        init = _require_mapping(raw["initial"], "initial")
        _check_keys(init, "initial", set(), {"mode", "central_site", "strict"})
        if init.get("mode", "basis") not in ("basis", "ground"):
            raise ConfigError("'initial.mode' must be 'basis' or 'ground'")
        site = _integer(init, "initial", "central_site", minimum=1)
        if site is not None and site > spec.n_sites:
            raise ConfigError("'initial.central_site' is outside the chain")
        if "strict" in init and not isinstance(init["strict"], bool):
            raise ConfigError("'initial.strict' must be a boolean")


def _validate_invariants(raw: dict):
    _check_keys(raw, "<root>",
                {"kind", "model", "fillings"},
                {"label", "seed", "grid", "parity"})
    model = _require_mapping(raw["model"], "model")
    _check_keys(model, "model", {"type"},
                {"j_par_mhz", "j_par2_mhz", "j_perp_mhz", "j_cross_mhz",
                 "delta_up_mhz", "delta_down_mhz"})
    if model["type"] not in ("chain3", "ladder6"):
        raise ConfigError("'model.type' must be 'chain3' or 'ladder6'")
    n_bands = 3 if model["type"] == "chain3" else 6
    fillings = raw["fillings"]
    if not isinstance(fillings, list) or not fillings:
        raise ConfigError("'fillings' must be a non-empty list")
    for i, f in enumerate(fillings):
        if isinstance(f, bool) or not isinstance(f, int) or not 1 <= f <= n_bands - 1:
            raise ConfigError(f"'fillings[{i}]' must be an integer in [1, {n_bands - 1}]")
    if "grid" in raw:
        grid = raw["grid"]
        if (not isinstance(grid, list) or len(grid) != 2
                or any(isinstance(g, bool) or not isinstance(g, int) or g < 4 for g in grid)):
            raise ConfigError("'grid' must be two integers >= 4")
    if "parity" in raw:
        par = _require_mapping(raw["parity"], "parity")
        _check_keys(par, "parity", {"phi_rad", "gap_indices"}, set())
        _number(par, "parity", "phi_rad")
        gi = par["gap_indices"]
        if not isinstance(gi, list) or not gi:
            raise ConfigError("'parity.gap_indices' must be a non-empty list")
        for i, g in enumerate(gi):
            if isinstance(g, bool) or not isinstance(g, int) or not 1 <= g <= n_bands - 1:
                raise ConfigError(f"'parity.gap_indices[{i}]' must be in [1, {n_bands - 1}]")


def _validate_reduction_check(raw: dict):
    _check_keys(raw, "<root>", {"kind", "model"}, {"label", "seed"})
    model = _require_mapping(raw["model"], "model")
    _check_keys(model, "model", {"nx", "ny"}, {"t_x_mhz", "t_y_mhz", "b"})
    _integer(model, "model", "nx", minimum=1)
    _integer(model, "model", "ny", minimum=1)
    _number(model, "model", "t_x_mhz", 8.0)
    _number(model, "model", "t_y_mhz", 6.0)
    _flux(model, "model")


_VALIDATORS = {
    "band_scan": _validate_band_scan,
    "bilayer_scan": _validate_bilayer_scan,
    "walk": _validate_walk,
    "pump": _validate_pump,
    "invariants": _validate_invariants,
    "reduction_check": _validate_reduction_check,
}


# ---------------------------------------------------------------------------
# result bundle and emitters


@dataclass
class Table:
    name: str
    columns: tuple
    rows: np.ndarray  # shape (n_rows, n_cols)
    notes: tuple = ()
    plot_kind: str = "none"  # heatmap | lines | none


@dataclass
class ResultBundle:
    config: ExperimentConfig
    tables: list = field(default_factory=list)
    created_at: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat()
    )

    @property
    def config_hash(self) -> str:
        return self.config.config_hash

    def table(self, name: str) -> Table:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(f"no table named {name!r}")


def emit_grid(bundle: ResultBundle, table: Table, path: Path) -> None:
    """Write one table as '#'-commented headers plus space-separated rows.

    Numbers are printed with 9 significant digits; for a fixed config the file
    is byte-identical across reruns (no timestamps in the output).
    """
    lines = [
        f"# qhladder {__version__}",
        f"# experiment: {bundle.config.label} ({bundle.config.kind})",
        f"# config_hash: {bundle.config_hash}",
        f"# table: {table.name}",
        f"# columns: {' '.join(table.columns)}",
    ]
    lines += [f"# note: {note}" for note in table.notes]
    rows = np.atleast_2d(np.asarray(table.rows, dtype=float))
    if rows.size:
        for row in rows:
            lines.append(" ".join(f"{v:.9g}" for v in row))
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write grid to {path}: {exc}") from None


def emit_plot(bundle: ResultBundle, table: Table, path: Path) -> None:
    """Render a table as a static vector-graphics file (best-effort styling)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if table.plot_kind not in ("heatmap", "lines"):
        raise ValueError(f"table {table.name!r} is not plottable")
    fig, ax = plt.subplots(figsize=(6, 4))
    rows = np.asarray(table.rows, dtype=float)
    if table.plot_kind == "heatmap":
        xs = np.unique(rows[:, 0])
        ys = np.unique(rows[:, 1])
        grid = rows[:, 2].reshape(len(xs), len(ys)).T
        mesh = ax.pcolormesh(xs, ys, grid, shading="nearest", cmap="magma")
        fig.colorbar(mesh, ax=ax, label=table.columns[2])
    else:
        for col in range(1, rows.shape[1]):
            ax.plot(rows[:, 0], rows[:, col], label=table.columns[col])
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel(table.columns[0])
    ax.set_ylabel(table.columns[1])
    ax.set_title(f"{bundle.config.label}: {table.name}")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


# ---------------------------------------------------------------------------
# runners


def _site_index(labels, site) -> int:
    return list(labels).index(site) + 1


def _run_scan(cfg: ExperimentConfig, ladder: bool) -> ResultBundle:
    raw = cfg.raw
    scan = raw["scan"]
    phi_min = float(scan.get("phi_min_rad", 0.0))
    phi_max = float(scan.get("phi_max_rad", TWO_PI))
    phis = np.linspace(phi_min, phi_max, scan["n_phi"], endpoint=False)
    times = _time_grid(raw["time"], "time")
    gamma = float(raw.get("gamma_per_us", 0.0))
    pad = int(raw.get("pad_factor", 8))
    targets = [_parse_site(t, "targets", ladder) for t in raw["targets"]]
    if ladder:
        base = _ladder_spec(raw["model"], "model")
        family = lambda phi: build_ladder(base.with_phi(phi))
    else:
        base = _chain_spec(raw["model"], "model")
        family = lambda phi: build_aah_chain(base.with_phi(phi))
    freqs = fft_freq_grid(len(times), float(times[1] - times[0]), pad)
    f_lo = scan.get("freq_min_mhz")
    f_hi = scan.get("freq_max_mhz")
    if f_lo is not None:
        freqs = freqs[freqs >= float(f_lo)]
    if f_hi is not None:
        freqs = freqs[freqs <= float(f_hi)]
    smap = band_scan(family, phis, targets, times, gamma=gamma,
                     freq_grid=freqs, normalize=bool(raw.get("normalize", True)))
    rows = np.column_stack([
        np.repeat(smap.phi_grid, len(smap.freq_grid)),
        np.tile(smap.freq_grid, len(smap.phi_grid)),
        smap.intensity.ravel(),
    ])
    table = Table(
        name="spectrum",
        columns=("phi_rad", "freq_mhz", "intensity"),
        rows=rows,
        notes=(
            f"targets: {raw['targets']}",
            f"gamma_per_us: {gamma}",
            "intensity is the summed squared FT magnitude over targets"
            + (", normalized per phi column" if raw.get("normalize", True) else ""),
        ),
        plot_kind="heatmap",
    )
    return ResultBundle(config=cfg, tables=[table])


def _run_walk(cfg: ExperimentConfig) -> ResultBundle:
    raw = cfg.raw
    model = raw["model"]
    ladder = "n_rungs" in model
    spec = _ladder_spec(model, "model") if ladder else _chain_spec(model, "model")
    times = _time_grid(raw["time"], "time")
    gamma = float(raw.get("gamma_per_us", 0.0))
    dt = float(times[1] - times[0])
    t_max = float(times[-1])
    readout = raw.get("readout")
    fid = ReadoutFidelities.from_table(readout["fidelity_table"]) if readout else None
    tables = []
    for raw_site in raw["initial_sites"]:
        site = _parse_site(raw_site, "initial_sites", ladder)
        traj = quantum_walk(spec, site, t_max=t_max, dt=dt, gamma=gamma)
        nt, dim = traj.probabilities.shape
        idx = np.arange(1, dim + 1)
        cols = ["time_us", "site_index", "probability"]
        data = [
            np.repeat(traj.times, dim),
            np.tile(idx, nt),
            traj.probabilities.ravel(),
        ]
        notes = [f"initial site: {raw_site}"]
        if ladder:
            notes.append("site_index 1..n is the up leg, n+1..2n the down leg")
        if readout:
            measured = np.empty_like(traj.probabilities)
            for k in range(nt):
                counts = sample_shots(traj.probabilities[k], readout["shots"],
                                      seed=cfg.seed * 100003 + k)
                empirical = counts[:-1] / readout["shots"]
                pair = np.column_stack([1.0 - empirical, empirical])
                recovered, _ = mitigate_readout(corrupt_readout(pair, fid), fid)
                measured[k] = recovered[:, 1]
            cols.append("probability_measured")
            data.append(measured.ravel())
            notes.append(
                f"measured column: {readout['shots']} shots, readout errors applied "
                "per site then mitigated by confusion-matrix inversion"
            )
        name = f"walk_{raw_site}".replace(":", "_")
        tables.append(Table(name=name, columns=tuple(cols),
                            rows=np.column_stack(data), notes=tuple(notes),
                            plot_kind="heatmap"))
    return ResultBundle(config=cfg, tables=tables)


def _run_pump(cfg: ExperimentConfig) -> ResultBundle:
    raw = cfg.raw
    chain = _chain_spec(raw["model"], "model")
    sched_raw = raw["schedule"]
    init = raw.get("initial", {})
    schedule = PumpSchedule.from_direction(
        sched_raw["direction"],
        phi0=float(sched_raw.get("phi0_rad", 5.0 * math.pi / 3.0)),
        speed=float(sched_raw.get("speed_rad_per_us", 4.9 * math.pi)),
        duration=float(sched_raw["duration_us"]),
    )
    chain = chain.with_phi(schedule.phi0)
    central = init.get("central_site")
    psi0 = prepare_pump_initial(chain, mode=init.get("mode", "basis"),
                                central_site=central, strict=init.get("strict", False))
    traj = pump_evolve(chain, schedule, psi0, dt=float(raw.get("dt_us", 1e-4)))
    origin = central if central is not None else (chain.n_sites + 1) // 2
    charge = pumped_charge(traj, schedule, origin_site=origin)
    phi_t = np.array([schedule.phi_at(t) for t in traj.times])
    dx_table = Table(
        name="delta_x",
        columns=("time_us", "phi_rad", "delta_x_cells"),
        rows=np.column_stack([traj.times, phi_t, charge["delta_x"]]),
        notes=(
            f"direction: {schedule.direction}, rate {schedule.rate:.6g} rad/us",
            f"endpoint delta_x: {charge['endpoint']:.9g}",
            f"delta_x at completed cycles: {[f'{v:.6g}' for v in charge['per_cycle']]}",
        ),
        plot_kind="lines",
    )
    nt, dim = traj.probabilities.shape
    traj_table = Table(
        name="trajectory",
        columns=("time_us", "site_index", "probability"),
        rows=np.column_stack([
            np.repeat(traj.times, dim),
            np.tile(np.arange(1, dim + 1), nt),
            traj.probabilities.ravel(),
        ]),
        notes=(f"initial mode: {init.get('mode', 'basis')}, central site {origin}",),
        plot_kind="heatmap",
    )
    return ResultBundle(config=cfg, tables=[dx_table, traj_table])


def _run_invariants(cfg: ExperimentConfig) -> ResultBundle:
    raw = cfg.raw
    m = raw["model"]
    model = BlochModel(
        kind=m["type"],
        j_par=float(m.get("j_par_mhz", 8.0)),
        j_par2=float(m.get("j_par2_mhz", 0.8)),
        j_perp=float(m.get("j_perp_mhz", 7.0)),
        j_cross=float(m.get("j_cross_mhz", 1.6)),
        delta_up=float(m.get("delta_up_mhz", 12.0)),
        delta_down=float(m.get("delta_down_mhz", 12.0)),
    )
    grid = tuple(raw.get("grid", [60, 60]))
    rows = [
        (float(f), float(chern_number(model, range(0, f), grid)))
        for f in raw["fillings"]
    ]
    tables = [Table(
        name="chern",
        columns=("filled_bands", "gap_chern_sum"),
        rows=np.array(rows),
        notes=(f"grid: {grid[0]}x{grid[1]} plaquettes on the (k, phi) torus",),
    )]
    if "parity" in raw:
        par = raw["parity"]
        prows = [
            (float(par["phi_rad"]), float(g),
             float(parity_invariant(model, float(par["phi_rad"]), g)))
            for g in par["gap_indices"]
        ]
        tables.append(Table(
            name="parity",
            columns=("phi_rad", "gap_index", "invariant_n"),
            rows=np.array(prows),
            notes=("N = |N1 - N2| counted over negative inversion parities at k=0, pi",),
        ))
    return ResultBundle(config=cfg, tables=tables)


def _run_reduction_check(cfg: ExperimentConfig) -> ResultBundle:
    m = cfg.raw["model"]
    spec = HofstadterSpec(
        nx=m["nx"], ny=m["ny"],
        t_x=float(m.get("t_x_mhz", 8.0)), t_y=float(m.get("t_y_mhz", 6.0)),
        b=_flux(m, "model"), boundary_y="periodic",
    )
    mismatch = check_dimensional_reduction(spec)
    verdict = "<" if mismatch < 1e-9 else ">="
    print(f"max mismatch = {mismatch:.3e} MHz ({verdict} 1e-09 MHz)")
    table = Table(
        name="reduction",
        columns=("max_mismatch_mhz",),
        rows=np.array([[mismatch]]),
        notes=(f"2D lattice {spec.nx}x{spec.ny} vs per-k_y chains, periodic y",),
    )
    return ResultBundle(config=cfg, tables=[table])


def run(config: ExperimentConfig) -> ResultBundle:
    """Dispatch a validated config to the right simulation pipeline."""
    if config.kind == "band_scan":
        return _run_scan(config, ladder=False)
    if config.kind == "bilayer_scan":
        return _run_scan(config, ladder=True)
    if config.kind == "walk":
        return _run_walk(config)
    if config.kind == "pump":
        return _run_pump(config)
    if config.kind == "invariants":
        return _run_invariants(config)
    if config.kind == "reduction_check":
        return _run_reduction_check(config)
    raise ConfigError(f"unknown kind {config.kind!r}")


def write_bundle(bundle: ResultBundle, out_dir: Path, plots: bool = False) -> list:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for table in bundle.tables:
        path = out_dir / f"{bundle.config.label}_{table.name}.dat"
        emit_grid(bundle, table, path)
        written.append(path)
        if plots and table.plot_kind != "none":
            plot_path = path.with_suffix(".svg")
            emit_plot(bundle, table, plot_path)
            written.append(plot_path)
    return written


# ---------------------------------------------------------------------------
# presets


def _preset_dir():
    return resources.files("qhladder.data").joinpath("presets")


def preset_names() -> list:
    return sorted(p.name[: -len(".yaml")] for p in _preset_dir().iterdir()
                  if p.name.endswith(".yaml"))


def load_preset(name: str) -> ExperimentConfig:
    candidate = _preset_dir().joinpath(f"{name}.yaml")
    try:
        text = candidate.read_text()
    except (FileNotFoundError, OSError):
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}"
        ) from None
    return ExperimentConfig.from_mapping(yaml.safe_load(text))


# ---------------------------------------------------------------------------
# entry point


def _limit_threads(n: int) -> None:
    """Best-effort cap on BLAS threading; silently ignored if unavailable."""
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(limits=n)
    except ImportError:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)


def _load_config(ref: str) -> ExperimentConfig:
    """A config reference is a YAML path or, as a convenience, a preset name."""
    if Path(ref).exists():
        return ExperimentConfig.from_file(ref)
    if "/" not in ref and not ref.endswith(".yaml"):
        return load_preset(ref)
    raise ConfigError(f"config file not found: {ref}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qhladder",
        description="Simulate quantum-Hall physics on qubit chains and ladders.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config or preset")
    p_run.add_argument("config", help="YAML config path or preset name")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override config seed")
    p_run.add_argument("--threads", type=int, default=None, help="cap BLAS threads")
    p_run.add_argument("--plots", action="store_true", help="also write SVG plots")

    p_val = sub.add_parser("validate", help="validate a config without running it")
    p_val.add_argument("config", help="YAML config path or preset name")

    p_pre = sub.add_parser("presets", help="list or show shipped presets")
    pre_sub = p_pre.add_subparsers(dest="preset_command", required=True)
    pre_sub.add_parser("list", help="list preset names")
    p_show = pre_sub.add_parser("show", help="print a preset config")
    p_show.add_argument("name")

    args = parser.parse_args(argv)
    try:
        if args.command == "presets":
            if args.preset_command == "list":
                for name in preset_names():
                    print(name)
            else:
                print(_preset_dir().joinpath(f"{args.name}.yaml").read_text(), end="")
            return 0
        config = _load_config(args.config)
        if args.command == "validate":
            print(f"ok: {config.kind} '{config.label}' (hash {config.config_hash[:12]})")
            return 0
        if args.threads is not None:
            _limit_threads(args.threads)
        if args.seed is not None:
            raw = dict(config.raw)
            raw["seed"] = args.seed
            config = ExperimentConfig.from_mapping(raw)
        out_dir = Path(args.out or os.environ.get("QHLADDER_OUT", "qhladder_out"))
        bundle = run(config)
        for path in write_bundle(bundle, out_dir, plots=args.plots):
            print(f"wrote {path}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NUMERIC_ERRORS as exc:
        print(f"numeric error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
