"""Exact linear-optics simulation of GHZ construction from imperfect EPR sources."""

__version__ = "0.1.0"

from .circuit import (
    ConditionalResult,
    GhzCircuitLayout,
    OutputReport,
    analyze_output,
    canonical_layout,
    ghz_pure,
    mirrored_layout,
    outcome_tree,
    run_ghz_circuit,
)
from .elements import (
    ClickOutcome,
    DetectorModel,
    Loss,
    Pbs,
    PolarizerH,
    Rotator,
    apply_element,
    detect,
)
from .fock import (
    H,
    V,
    DensityMatrix,
    Ensemble,
    Polarization,
    PureState,
    apply_linear_map,
    condition_on_vacuum,
    create_photon,
    fidelity_with_pure,
    partial_trace,
    to_density_matrix,
    total_photons,
    trace_distance,
    vacuum,
)
from .fusion import IdGhzSpec, fit_id_ghz, fuse_type_ii, id_ghz, qubit_count_after_fusion
from .sources import (
    BellForm,
    CavityPair,
    HeraldedEpr,
    PerfectEpr,
    SpdcEpr,
    convert_bell,
    make_source,
    two_pair_state,
)
from .threshold import (
    loss_rate_cavity,
    loss_rate_sps,
    meets_loss_threshold,
    meets_sps_threshold,
    success_prob_formula,
    sweep,
)
