import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhladder.model import ChainSpec, build_aah_chain
from qhladder.topo import (
    BlochModel,
    ChernReport,
    GapClosure,
    SymmetryBroken,
    bloch_hamiltonian,
    chern_number,
    edge_state_report,
    hall_conductivity,
    inversion_operator,
    parity_invariant,
)

TWO_PI = 2.0 * math.pi


def test_bloch_periodicity_in_k():
    model = BlochModel("ladder6", delta_up=12.0, delta_down=-12.0)
    a = bloch_hamiltonian(model, 0.7, 1.1)
    b = bloch_hamiltonian(model, 0.7 + TWO_PI, 1.1)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_bloch_matches_open_chain_couplings():
    # k=0 row sums of the Bloch matrix reproduce the bulk coupling pattern
    model = BlochModel("chain3", j_par=8.0, j_par2=0.8, delta_up=12.0)
    h = bloch_hamiltonian(model, 0.0, 0.0)
    assert h[0, 1] == pytest.approx(8.8)
    assert h[0, 2] == pytest.approx(8.8)
    assert h[0, 0] == pytest.approx(12.0 * math.cos(TWO_PI / 3.0))


def test_chain_gap_chern_numbers():
    model = BlochModel("chain3", j_par2=0.0, delta_up=12.0)
    assert chern_number(model, range(0, 1)) == 1
    assert chern_number(model, range(0, 2)) == -1


def test_per_band_chern_sum_is_zero():
    for model in (
        BlochModel("chain3", delta_up=12.0),
        BlochModel("ladder6", delta_up=12.0, delta_down=-12.0),
    ):
        report = ChernReport.from_model(model)
        assert sum(report.per_band) == 0


def test_chern_grid_stability():
    model = BlochModel("chain3", j_par2=0.0, delta_up=12.0)
    values = {chern_number(model, [0], grid=(g, g)) for g in (30, 60, 120)}
    assert values == {1}


def test_chern_gauge_invariance(monkeypatch):
    # re-randomizing every eigenvector phase must not move the invariant
    model = BlochModel("chain3", delta_up=12.0)
    reference = chern_number(model, [0])
    true_eigh = np.linalg.eigh
    rng = np.random.default_rng(7)

    def phase_scrambled_eigh(m):
        w, v = true_eigh(m)
        return w, v * np.exp(1j * rng.uniform(0, TWO_PI, size=v.shape[1]))

    monkeypatch.setattr(np.linalg, "eigh", phase_scrambled_eigh)
    assert chern_number(model, [0]) == reference


def test_flux_conjugation_flips_chern():
    model = BlochModel("chain3", j_par2=0.0, delta_up=12.0)
    flipped = BlochModel("chain3", j_par2=0.0, delta_up=12.0, conjugate=True)
    assert chern_number(flipped, [0]) == -chern_number(model, [0])


def test_higher_chern_gaps_of_opposite_modulation():
    model = BlochModel("ladder6", delta_up=12.0, delta_down=-12.0)
    sums = [chern_number(model, range(0, f)) for f in range(1, 6)]
    assert sums == [-2, 2, 0, -2, 2]
    assert max(abs(s) for s in sums) >= 2


def test_equal_modulation_gap_closure_detected():
    # the 2nd and 4th gaps of the equal-modulation ladder pinch off
    model = BlochModel("ladder6", delta_up=12.0, delta_down=12.0)
    with pytest.raises(GapClosure):
        chern_number(model, range(0, 2))


def test_equal_modulation_zero_hall_half_filling():
    model = BlochModel("ladder6", delta_up=12.0, delta_down=12.0)
    assert chern_number(model, range(0, 3)) == 0


def test_parity_invariant_protected_phase():
    model = BlochModel("ladder6", delta_up=12.0, delta_down=12.0)
    assert parity_invariant(model, TWO_PI / 3.0, 1) == 1
    assert parity_invariant(model, TWO_PI / 3.0, 3) == 1
    assert parity_invariant(model, 5.0 * math.pi / 3.0, 3) == 1
    assert parity_invariant(model, 5.0 * math.pi / 3.0, 5) == 1


def test_parity_invariant_guards():
    same = BlochModel("ladder6", delta_up=12.0, delta_down=12.0)
    mixed = BlochModel("ladder6", delta_up=12.0, delta_down=-12.0)
    with pytest.raises(SymmetryBroken):
        parity_invariant(mixed, TWO_PI / 3.0, 1)
    with pytest.raises(SymmetryBroken):
        parity_invariant(same, 0.8, 1)
    with pytest.raises(SymmetryBroken):
        parity_invariant(BlochModel("chain3"), TWO_PI / 3.0, 1)


def test_inversion_operator_is_involution():
    p = inversion_operator(6)
    np.testing.assert_array_equal(p @ p, np.eye(6))


def test_hall_conductivity_reads_filled_bands():
    report = ChernReport(per_band=[1, -2, 1], gap_sums=[1, -1], grid=(60, 60))
    assert hall_conductivity(report, 1) == 1
    assert hall_conductivity(report, 2) == -1
    assert hall_conductivity(report, 3) == 0
    with pytest.raises(ValueError):
        hall_conductivity(report, 4)


def test_band_range_must_be_contiguous():
    model = BlochModel("chain3", delta_up=12.0)
    with pytest.raises(ValueError):
        chern_number(model, [0, 2])


def test_edge_state_report_localization():
    # mid-gap states of the open modulated chain live on the ends
    h = build_aah_chain(ChainSpec(15, 8.0, 0.0, 12.0, 1 / 3, 1.8))
    found = edge_state_report(h, 1.8, gap_window=(-14.0, -5.4))
    assert found
    for energy, ends in found:
        first, last = ends["chain"]
        assert max(first, last) > 0.6


@settings(max_examples=30, deadline=None)
@given(
    k=st.floats(-10, 10, allow_nan=False),
    phi=st.floats(-10, 10, allow_nan=False),
    du=st.floats(-20, 20, allow_nan=False),
    dd=st.floats(-20, 20, allow_nan=False),
)
def test_bloch_always_hermitian(k, phi, du, dd):
    model = BlochModel("ladder6", delta_up=du, delta_down=dd)
    h = bloch_hamiltonian(model, k, phi)
    np.testing.assert_allclose(h, h.conj().T, atol=1e-12)
