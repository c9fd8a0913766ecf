"""Loudspeaker placement for least-squares 2D sound field synthesis.

Greedy secondary-source selection against a statistical prior of
desired fields, with free-field and rectangular-room (image source)
propagation, circular-region weighted mode matching, and equal-spacing
baselines for comparison.
"""

from .config import (
    CandidateSpec,
    EvalSpec,
    ExperimentConfig,
    PriorSpec,
    RoomSpec,
    load_config,
    square_loop,
)
from .experiment import (
    FrequencyProblem,
    baseline_indices,
    build_problems,
    evaluate_placements,
    field_grids,
    paper_config,
    place_greedy,
    run_evaluate,
    run_place,
    run_reproduce,
)
from .placement import (
    BroadbandBin,
    BroadbandSpec,
    DirectionRangePrior,
    FieldPrior,
    NumericalBreakdown,
    PlacementResult,
    SelectionState,
    broadband_cost,
    candidate_deltas,
    exhaustive_place,
    extend_inverse,
    greedy_place,
    greedy_place_broadband,
    placement_cost,
    predicted_work,
    prior_from_direction_range,
    rebuild_inverse,
    regular_placement_a,
    regular_placement_b,
    state_cost,
)
from .room import (
    ImageSource,
    RoomModel,
    image_sources,
    room_transfer,
    room_transfer_coeffs,
    room_transfer_many,
)
from .synthesis import (
    SDR_CAP_DB,
    ConditioningError,
    WeightMatrix,
    build_pressure_matching,
    identity_weight,
    region_grid,
    sdr,
    solve_mode_matching,
    solve_wmm,
    source_coeff_matrix,
    synthesis_lambda,
    synthesize_field,
    weight_matrix_circle,
    weight_matrix_quadrature,
    wmm_residual,
)
from .wavefield import (
    CircularRegion,
    ExpansionCoeffs,
    ExpansionConfig,
    Frequency,
    PlaneWave,
    Point2,
    evaluate_expansion,
    evaluate_expansion_many,
    expansion_for,
    green2d,
    green2d_many,
    planewave_coeffs,
    pointsource_coeffs,
    truncation_order,
)

__version__ = "0.1.0"

__all__ = [
    "BroadbandBin",
    "BroadbandSpec",
    "CandidateSpec",
    "CircularRegion",
    "ConditioningError",
    "DirectionRangePrior",
    "EvalSpec",
    "ExpansionCoeffs",
    "ExpansionConfig",
    "ExperimentConfig",
    "FieldPrior",
    "Frequency",
    "FrequencyProblem",
    "ImageSource",
    "NumericalBreakdown",
    "PlacementResult",
    "PlaneWave",
    "Point2",
    "PriorSpec",
    "RoomModel",
    "RoomSpec",
    "SDR_CAP_DB",
    "SelectionState",
    "WeightMatrix",
    "baseline_indices",
    "broadband_cost",
    "build_pressure_matching",
    "build_problems",
    "candidate_deltas",
    "evaluate_expansion",
    "evaluate_expansion_many",
    "evaluate_placements",
    "exhaustive_place",
    "expansion_for",
    "extend_inverse",
    "field_grids",
    "greedy_place",
    "greedy_place_broadband",
    "green2d",
    "green2d_many",
    "identity_weight",
    "image_sources",
    "load_config",
    "paper_config",
    "place_greedy",
    "placement_cost",
    "planewave_coeffs",
    "pointsource_coeffs",
    "predicted_work",
    "prior_from_direction_range",
    "rebuild_inverse",
    "region_grid",
    "regular_placement_a",
    "regular_placement_b",
    "room_transfer",
    "room_transfer_coeffs",
    "room_transfer_many",
    "run_evaluate",
    "run_place",
    "run_reproduce",
    "sdr",
    "solve_mode_matching",
    "solve_wmm",
    "source_coeff_matrix",
    "square_loop",
    "state_cost",
    "synthesis_lambda",
    "synthesize_field",
    "truncation_order",
    "weight_matrix_circle",
    "weight_matrix_quadrature",
    "wmm_residual",
]
