import math

import numpy as np
import pytest

from qhladder.evolve import center_of_mass
from qhladder.model import ChainSpec
from qhladder.pump import (
    REFERENCE_PHI0,
    REFERENCE_RATE,
    LocalizationTooWeak,
    PumpSchedule,
    prepare_pump_initial,
    pump_evolve,
    pumped_charge,
)

DEEP_CHAIN = ChainSpec(15, 8.0, 0.8, 36.0, 1 / 3, REFERENCE_PHI0)


def test_schedule_directions():
    fwd = PumpSchedule.from_direction("forward")
    bwd = PumpSchedule.from_direction("backward")
    off = PumpSchedule.from_direction("none")
    assert fwd.rate < 0 < bwd.rate and off.rate == 0
    assert fwd.direction == "forward" and off.direction == "none"
    assert off.cycle_time is None
    assert fwd.cycle_time == pytest.approx(2.0 * math.pi / REFERENCE_RATE)
    with pytest.raises(ValueError):
        PumpSchedule.from_direction("sideways")
    with pytest.raises(ValueError):
        PumpSchedule(0.0, 1.0, -0.5)


def test_phase_ramp_is_linear():
    s = PumpSchedule(1.0, -4.0, 2.0)
    assert s.phi_at(0.0) == 1.0
    assert s.phi_at(0.5) == pytest.approx(-1.0)


def test_norm_conserved_over_many_steps():
    psi0 = prepare_pump_initial(DEEP_CHAIN, "basis", 8)
    schedule = PumpSchedule.from_direction("forward", duration=0.5)
    traj = pump_evolve(DEEP_CHAIN, schedule, psi0, dt=1e-4)  # 5000 steps
    norms = np.linalg.norm(traj.amplitudes, axis=1)
    assert np.max(np.abs(norms - 1.0)) < 1e-8


def test_midpoint_stepping_converges():
    psi0 = prepare_pump_initial(DEEP_CHAIN, "basis", 8)
    schedule = PumpSchedule.from_direction("forward", duration=0.5)
    ends = []
    for dt in (2e-4, 1e-4):
        traj = pump_evolve(DEEP_CHAIN, schedule, psi0, dt=dt)
        ends.append(pumped_charge(traj, schedule, 8)["endpoint"])
    assert abs(ends[0] - ends[1]) < 1e-4


def test_no_pump_means_no_transport():
    psi0 = prepare_pump_initial(DEEP_CHAIN, "basis", 8)
    schedule = PumpSchedule.from_direction("none", duration=0.5)
    traj = pump_evolve(DEEP_CHAIN, schedule, psi0, dt=1e-4)
    dx = center_of_mass(traj, 8)
    assert np.max(np.abs(dx)) < 0.1


def test_transport_direction_signs():
    psi0 = prepare_pump_initial(DEEP_CHAIN, "basis", 8)
    for direction, sign in (("forward", 1.0), ("backward", -1.0)):
        schedule = PumpSchedule.from_direction(direction, duration=0.5)
        traj = pump_evolve(DEEP_CHAIN, schedule, psi0, dt=1e-4)
        endpoint = pumped_charge(traj, schedule, 8)["endpoint"]
        assert abs(endpoint - sign) < 0.25


def test_reversal_antisymmetry():
    # the chain is mirror symmetric about site 8 at this starting phase, so
    # opposite ramps transport exactly opposite charge
    psi0 = prepare_pump_initial(DEEP_CHAIN, "basis", 8)
    rate = 0.49 * math.pi
    duration = 2.0 * math.pi / rate
    out = []
    for signed in (-rate, rate):
        schedule = PumpSchedule(REFERENCE_PHI0, signed, duration)
        traj = pump_evolve(DEEP_CHAIN, schedule, psi0, dt=5e-4)
        out.append(pumped_charge(traj, schedule, 8)["endpoint"])
    assert abs(out[0] + out[1]) < 2e-2


def test_forward_then_backward_returns_home():
    psi0 = prepare_pump_initial(DEEP_CHAIN, "basis", 8)
    rate = 0.5 * REFERENCE_RATE
    duration = 2.0 * math.pi / rate
    fwd = PumpSchedule(REFERENCE_PHI0, -rate, duration)
    traj1 = pump_evolve(DEEP_CHAIN, fwd, psi0, dt=1e-4)
    bwd = PumpSchedule(fwd.phi_at(duration), rate, duration)
    traj2 = pump_evolve(DEEP_CHAIN, bwd, traj1.amplitudes[-1], dt=1e-4)
    assert abs(center_of_mass(traj2, 8)[-1]) < 0.1


@pytest.mark.xfail(
    strict=True,
    reason="intra-band energy spread of the finite open chain dephases the "
    "excitation over slow cycles, so quantization does not improve "
    "monotonically as the ramp slows",
)
def test_adiabatic_quantization_improves_with_slower_ramps():
    psi0 = prepare_pump_initial(DEEP_CHAIN, "basis", 8)
    deviations = []
    for rate in (4.9 * math.pi, 0.49 * math.pi, 0.049 * math.pi):
        duration = 2.0 * math.pi / rate
        schedule = PumpSchedule(REFERENCE_PHI0, -rate, duration)
        traj = pump_evolve(DEEP_CHAIN, schedule, psi0, dt=min(5e-4, duration / 200))
        per_cycle = pumped_charge(traj, schedule, 8)["per_cycle"]
        deviations.append(abs(per_cycle[0] - 1.0))
    assert deviations[0] > deviations[1] > deviations[2]


def test_cycle_accounting():
    psi0 = prepare_pump_initial(DEEP_CHAIN, "basis", 8)
    rate = REFERENCE_RATE
    one_cycle = 2.0 * math.pi / rate
    schedule = PumpSchedule(REFERENCE_PHI0, -rate, one_cycle)
    traj = pump_evolve(DEEP_CHAIN, schedule, psi0, dt=1e-4)
    charge = pumped_charge(traj, schedule, 8)
    assert len(charge["per_cycle"]) == 1
    assert not charge["incomplete_cycle"]
    short = PumpSchedule(REFERENCE_PHI0, -rate, 0.5 * one_cycle)
    traj = pump_evolve(DEEP_CHAIN, short, psi0, dt=1e-4)
    assert pumped_charge(traj, short, 8)["incomplete_cycle"]


def test_initial_state_modes():
    basis = prepare_pump_initial(DEEP_CHAIN, "basis", 8)
    assert basis[7] == 1.0 and np.count_nonzero(basis) == 1
    ground = prepare_pump_initial(DEEP_CHAIN, "ground")
    assert np.linalg.norm(ground) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        prepare_pump_initial(DEEP_CHAIN, "excited")
    with pytest.raises(ValueError):
        prepare_pump_initial(DEEP_CHAIN, "basis", 40)


def test_strict_mode_flags_weak_pinning():
    # strong modulation pins the central excitation to the lowest band
    prepare_pump_initial(DEEP_CHAIN, "basis", 8, strict=True)
    shallow = ChainSpec(15, 8.0, 0.8, 4.0, 1 / 3, REFERENCE_PHI0)
    with pytest.raises(LocalizationTooWeak):
        prepare_pump_initial(shallow, "basis", 8, strict=True)


def test_step_size_guard():
    psi0 = prepare_pump_initial(DEEP_CHAIN, "basis", 8)
    schedule = PumpSchedule.from_direction("forward", duration=0.5)
    with pytest.raises(ValueError):
        pump_evolve(DEEP_CHAIN, schedule, psi0, dt=0.01)
