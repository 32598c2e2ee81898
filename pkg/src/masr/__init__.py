"""Robust transmit/passive beamforming and antenna placement for a
RIS-assisted symbiotic-radio link with movable antennas.

The pipeline, end to end: synthesize field-response channels over a
movement region (geometry), attach bounded estimation-error balls
(uncertainty), certify worst-case rates in closed form (rates, uncertainty),
solve the robust transmit / passive surrogate subproblems as conic programs
(beamforming, conic), search antenna positions with an annealed particle
swarm (swarm), and alternate the three stages to convergence (driver).
"""

from .config import CSR, PSR, SCHEMES, RunConfig, config_from_dict, load_config
from .driver import (
    CSV_HEADER,
    RunResult,
    StageInfeasibleError,
    alternating_optimize,
    realize_geometry,
    result_from_trace,
    run_single,
    run_sweep,
    trace_payload,
    verify_robustness,
)
from .geometry import (
    ChannelSet,
    MovementRegion,
    SystemGeometry,
    build_channels,
    draw_geometry,
    field_response_vector,
    grid_placement,
)
from .rates import (
    Design,
    ScenarioConfig,
    multi_pu_objective,
    nominal_rate,
    robust_rate_lower_bound,
    secondary_snr,
    worst_case_secondary_snr,
)
from .beamforming import (
    SubproblemInfeasible,
    closed_form_objective,
    sca_passive_csr,
    sca_passive_psr,
    sca_transmit_csr,
    sca_transmit_psr,
)
from .swarm import SwarmConfig, sa_pso
from .uncertainty import (
    Perturbation,
    UncertaintyModel,
    sample_perturbation,
    worst_case_cascaded_amplitude,
    worst_case_combined_amplitude,
    worst_case_direct_amplitude,
)

__all__ = [
    "CSR",
    "CSV_HEADER",
    "ChannelSet",
    "Design",
    "MovementRegion",
    "PSR",
    "Perturbation",
    "RunConfig",
    "RunResult",
    "SCHEMES",
    "ScenarioConfig",
    "StageInfeasibleError",
    "SubproblemInfeasible",
    "SwarmConfig",
    "SystemGeometry",
    "UncertaintyModel",
    "alternating_optimize",
    "build_channels",
    "closed_form_objective",
    "config_from_dict",
    "draw_geometry",
    "field_response_vector",
    "grid_placement",
    "load_config",
    "multi_pu_objective",
    "nominal_rate",
    "realize_geometry",
    "result_from_trace",
    "robust_rate_lower_bound",
    "run_single",
    "run_sweep",
    "sa_pso",
    "sample_perturbation",
    "sca_passive_csr",
    "sca_passive_psr",
    "sca_transmit_csr",
    "sca_transmit_psr",
    "secondary_snr",
    "trace_payload",
    "verify_robustness",
    "worst_case_cascaded_amplitude",
    "worst_case_combined_amplitude",
    "worst_case_direct_amplitude",
]
