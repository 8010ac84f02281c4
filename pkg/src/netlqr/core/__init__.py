# src/netlqr/core/__init__.py
from __future__ import annotations

from netlqr.core.consensus import (
    ConsensusGain,
    ConsensusLaw,
    ConsensusRun,
    ConsensusSetup,
    consensus_control,
    consensus_instance,
    convergence_horizon,
    disagreement,
    framework_gains,
    simulate_consensus,
    solve_pi,
)
from netlqr.core.controller import (
    ClosedLoopLaw,
    ControlLaw,
    GainSchedule,
    MixedLaw,
    OpenLoopLaw,
    SystemModel,
    TransitionMatrices,
    build_law,
    compute_transitions,
    control_closed_loop,
    control_local_feedback,
    control_mixed,
    control_open_loop,
    mean_field_gains,
    prepare_information,
    synthesize_finite,
    synthesize_infinite,
)
from netlqr.core.coupling import (
    AssumptionReport,
    CouplingSpec,
    EffectiveWeights,
    GraphSpec,
    NamedFunction,
    PolynomialCoupling,
    SpectralData,
    SpectralFunctionCoupling,
    build_coupling,
    effective_weights,
    kronecker_expand,
    network_field,
    spectral_decompose,
    validate_assumptions,
    weight_matrices,
)
from netlqr.core.decomposition import (
    DecomposedField,
    PropertyReport,
    check_properties,
    cost_breakdown,
    decompose,
    decomposed_cost,
    instantaneous_cost,
    project_eigen,
    recompose,
    weighted_inner,
)
from netlqr.core.experiment import RunReport, build_instance, run
from netlqr.core.riccati import (
    ARESolution,
    LQRData,
    RiccatiODESolution,
    gain_from_solution,
    is_detectable,
    is_stabilizable,
    kleinman_newton,
    pbh_margin,
    solve_are,
    solve_riccati_ode,
    spectral_abscissa,
)
from netlqr.core.simulator import (
    CentralizedLaw,
    CostReport,
    EnsembleResult,
    NoisePath,
    StochasticValue,
    Trajectory,
    centralized_oracle,
    decompose_noise,
    evaluate_cost,
    generate_noise,
    noise_covariance,
    optimal_cost,
    simulate_components,
    simulate_deterministic,
    simulate_path,
    simulate_stochastic,
    stochastic_value,
)

__all__ = [
    # Graphs and coupling
    "AssumptionReport",
    "CouplingSpec",
    "EffectiveWeights",
    "GraphSpec",
    "NamedFunction",
    "PolynomialCoupling",
    "SpectralData",
    "SpectralFunctionCoupling",
    "build_coupling",
    "effective_weights",
    "kronecker_expand",
    "network_field",
    "spectral_decompose",
    "validate_assumptions",
    "weight_matrices",
    # Riccati
    "ARESolution",
    "LQRData",
    "RiccatiODESolution",
    "gain_from_solution",
    "is_detectable",
    "is_stabilizable",
    "kleinman_newton",
    "pbh_margin",
    "solve_are",
    "solve_riccati_ode",
    "spectral_abscissa",
    # Decomposition
    "DecomposedField",
    "PropertyReport",
    "check_properties",
    "cost_breakdown",
    "decompose",
    "decomposed_cost",
    "instantaneous_cost",
    "project_eigen",
    "recompose",
    "weighted_inner",
    # Controller
    "ClosedLoopLaw",
    "ControlLaw",
    "GainSchedule",
    "MixedLaw",
    "OpenLoopLaw",
    "SystemModel",
    "TransitionMatrices",
    "build_law",
    "compute_transitions",
    "control_closed_loop",
    "control_local_feedback",
    "control_mixed",
    "control_open_loop",
    "mean_field_gains",
    "prepare_information",
    "synthesize_finite",
    "synthesize_infinite",
    # Simulator
    "CentralizedLaw",
    "CostReport",
    "EnsembleResult",
    "NoisePath",
    "StochasticValue",
    "Trajectory",
    "centralized_oracle",
    "decompose_noise",
    "evaluate_cost",
    "generate_noise",
    "noise_covariance",
    "optimal_cost",
    "simulate_components",
    "simulate_deterministic",
    "simulate_path",
    "simulate_stochastic",
    "stochastic_value",
    # Consensus
    "ConsensusGain",
    "ConsensusLaw",
    "ConsensusRun",
    "ConsensusSetup",
    "consensus_control",
    "consensus_instance",
    "convergence_horizon",
    "disagreement",
    "framework_gains",
    "simulate_consensus",
    "solve_pi",
    # Experiments
    "RunReport",
    "build_instance",
    "run",
]
