"""Simulation and analysis of NOON-state projection on multi-pair down-conversion light."""

from .circuits import Circuit, check_unitary, compile_circuit, preset
from .experiment import (
    R0,
    EAEstimate,
    ScanResult,
    combine_accidental_four,
    combine_accidental_six,
    delay_scan,
    delay_scans,
    ea_from_baseline_ratio,
    ea_from_v4,
    subtract_background,
    v4_from_ea,
)
from .fit import FitResult, fit_gaussian_dip, visibility_model_free
from .fock import (
    DressedMode,
    ExternalMode,
    LinearMap,
    Pol,
    StateVector,
    apply_linear_map,
    coincidence_probability,
    inner_product,
    noon_overlap,
)
from .source import Scenario, SourceState, pdc_state, scenario_build
from .temporal import (
    GaussianPacket,
    InternalBasis,
    build_internal_basis,
    exchange_ratio,
    packet_overlap,
    shift_packet,
)

__version__ = "0.1.0"
