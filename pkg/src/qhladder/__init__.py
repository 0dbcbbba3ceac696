"""Desk-scale simulator for quantum-Hall physics on qubit chains and ladders.

Single-excitation tight-binding models with a cosine-modulated potential,
response-function band spectroscopy along the synthetic phase dimension,
topological invariants, adiabatic charge pumping, and a measurement-chain
emulator.  Energies are in MHz, times in microseconds.
"""

from .model import (
    ChainSpec,
    HofstadterSpec,
    Hamiltonian,
    LadderSpec,
    build_aah_chain,
    build_hofstadter,
    build_ladder,
    check_dimensional_reduction,
)
from .evolve import Trajectory, center_of_mass, distribution_fidelity, evolve_state, quantum_walk
from .spectro import (
    ResponseSeries,
    SpectrumMap,
    band_scan,
    detrend,
    extract_peaks,
    ft_power,
    lorentzian_fwhm,
    response_function,
)
from .topo import (
    BlochModel,
    ChernReport,
    GapClosure,
    chern_number,
    edge_state_report,
    hall_conductivity,
    parity_invariant,
)
from .pump import (
    LocalizationTooWeak,
    PumpSchedule,
    prepare_pump_initial,
    pump_evolve,
    pumped_charge,
)
from .readout import (
    CrosstalkMatrix,
    ReadoutFidelities,
    SettlingModel,
    apply_crosstalk_correction,
    corrupt_readout,
    fit_settling,
    mitigate_readout,
    sample_shots,
    settle_waveform,
    settling_predistort,
)

__version__ = "0.1.0"
