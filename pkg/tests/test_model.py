import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhladder.model import (
    ChainSpec,
    HofstadterSpec,
    LadderSpec,
    build_aah_chain,
    build_hofstadter,
    build_ladder,
    check_dimensional_reduction,
)

TWO_PI = 2.0 * math.pi


def test_chain_potential_period_three():
    spec = ChainSpec(9, delta=12.0, b=1 / 3, phi=0.7)
    for j in range(1, 7):
        assert spec.potential(j) == pytest.approx(spec.potential(j + 3), abs=1e-12)


def test_phi_reduced_to_principal_interval():
    spec = ChainSpec(5, phi=-0.3)
    assert 0.0 <= spec.phi < TWO_PI
    assert spec.phi == pytest.approx(TWO_PI - 0.3)
    # same physics after a full winding
    a = build_aah_chain(ChainSpec(5, delta=7.0, phi=1.1)).entries
    b = build_aah_chain(ChainSpec(5, delta=7.0, phi=1.1 + TWO_PI)).entries
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_chain_matrix_structure():
    spec = ChainSpec(6, j_par=8.0, j_par2=0.8, delta=12.0, phi=0.4)
    h = build_aah_chain(spec)
    m = h.entries
    assert np.array_equal(m, m.conj().T)
    assert m[0, 1] == 8.0 and m[0, 2] == 0.8 and m[0, 3] == 0.0
    for j in range(6):
        assert m[j, j] == pytest.approx(spec.potential(j + 1))


def test_entries_are_read_only():
    h = build_aah_chain(ChainSpec(4))
    with pytest.raises(ValueError):
        h.entries[0, 0] = 5.0


def test_chain_spectral_range_stays_bounded():
    # plain modulated chain: |E| <= 2 J + Delta
    eigs = np.linalg.eigvalsh(build_aah_chain(ChainSpec(15, 8.0, 0.0, 12.0, 1 / 3, 1.0)).entries)
    assert eigs.min() > -20.0 and eigs.max() < 20.0


def test_ladder_label_order_and_rung_coupling():
    spec = LadderSpec(4, j_par=8.0, j_par2=0.0, j_perp=7.0, j_cross=1.6)
    h = build_ladder(spec)
    assert h.site_labels[:4] == (("up", 1), ("up", 2), ("up", 3), ("up", 4))
    assert h.site_labels[4:] == (("down", 1), ("down", 2), ("down", 3), ("down", 4))
    m = h.entries
    assert m[h.index_of(("up", 2)), h.index_of(("down", 2))] == 7.0
    assert m[h.index_of(("up", 1)), h.index_of(("down", 2))] == 1.6
    assert m[h.index_of(("down", 1)), h.index_of(("up", 2))] == 1.6


def test_ladder_opposite_modulation_signs():
    spec = LadderSpec(3, delta_up=12.0, delta_down=-12.0, phi=0.9)
    m = build_ladder(spec).entries
    for j in range(3):
        assert m[j, j] == pytest.approx(-m[3 + j, 3 + j])


def test_ladder_per_site_overrides():
    spec = LadderSpec(
        3,
        per_site_overrides={
            ("up", 2): {"potential_mhz": 3.5, "j_par_mhz": 7.7},
            ("down", 1): {"j_perp_mhz": 6.5},
        },
    )
    h = build_ladder(spec)
    m = h.entries
    assert m[h.index_of(("up", 2)), h.index_of(("up", 2))] == 3.5
    assert m[h.index_of(("up", 2)), h.index_of(("up", 3))] == 7.7
    # overrides key off the 'up' site for rung bonds
    assert m[h.index_of(("up", 1)), h.index_of(("down", 1))] == 7.0


def test_ladder_override_validation():
    with pytest.raises(ValueError):
        LadderSpec(3, per_site_overrides={("up", 9): {"potential_mhz": 1.0}})
    with pytest.raises(ValueError):
        LadderSpec(3, per_site_overrides={("up", 1): {"bogus": 1.0}})


def test_hofstadter_peierls_phase():
    spec = HofstadterSpec(3, 3, t_x=8.0, t_y=6.0, b=1 / 3, boundary_y="open")
    h = build_hofstadter(spec)
    m = h.entries
    i = h.index_of((2, 1))
    j = h.index_of((2, 2))
    assert m[i, j] == pytest.approx(6.0 * np.exp(1j * TWO_PI * (1 / 3) * 2))
    # x-links stay real
    assert m[h.index_of((1, 1)), h.index_of((2, 1))] == 8.0


def test_hofstadter_periodic_wrap():
    spec = HofstadterSpec(2, 4, boundary_y="periodic")
    h = build_hofstadter(spec)
    m = h.entries
    assert m[h.index_of((1, 4)), h.index_of((1, 1))] != 0.0
    open_m = build_hofstadter(HofstadterSpec(2, 4, boundary_y="open")).entries
    assert open_m[h.index_of((1, 4)), h.index_of((1, 1))] == 0.0


def test_hofstadter_single_column_self_loop():
    # ny=1 periodic: the wrapped y-link collapses to an on-site cosine shift
    spec = HofstadterSpec(4, 1, t_x=8.0, t_y=6.0, b=1 / 3, boundary_y="periodic")
    m = build_hofstadter(spec).entries
    for x in range(1, 5):
        expected = 2.0 * 6.0 * math.cos(TWO_PI * x / 3.0)
        assert m[x - 1, x - 1] == pytest.approx(expected, abs=1e-12)


def test_dimensional_reduction_is_exact():
    spec = HofstadterSpec(15, 12, t_x=8.0, t_y=6.0, b=1 / 3, boundary_y="periodic")
    assert check_dimensional_reduction(spec) < 1e-9


def test_dimensional_reduction_requires_periodic_y():
    with pytest.raises(ValueError):
        check_dimensional_reduction(HofstadterSpec(4, 4, boundary_y="open"))


def test_invalid_specs_rejected():
    with pytest.raises(ValueError):
        ChainSpec(0)
    with pytest.raises(ValueError):
        ChainSpec(3, j_par=float("nan"))
    with pytest.raises(ValueError):
        HofstadterSpec(3, 3, boundary_y="twisted")


@settings(max_examples=25, deadline=None)
@given(
    n=st.integers(2, 10),
    j=st.floats(-10, 10, allow_nan=False),
    j2=st.floats(-3, 3, allow_nan=False),
    delta=st.floats(-30, 30, allow_nan=False),
    phi=st.floats(-10, 10, allow_nan=False),
)
def test_chain_always_hermitian_with_real_spectrum(n, j, j2, delta, phi):
    h = build_aah_chain(ChainSpec(n, j, j2, delta, 1 / 3, phi))
    assert np.array_equal(h.entries, h.entries.conj().T)
    eigs = np.linalg.eigvals(h.entries)
    assert np.max(np.abs(eigs.imag)) < 1e-9


@settings(max_examples=15, deadline=None)
@given(nx=st.integers(2, 5), ny=st.integers(2, 6))
def test_reduction_mismatch_small_on_any_grid(nx, ny):
    spec = HofstadterSpec(nx, ny, b=1 / 3, boundary_y="periodic")
    assert check_dimensional_reduction(spec) < 1e-9
