"""Qubit coupled to a GUE random-matrix environment.

Ensemble-averaged reduced channels, Choi/superoperator algebra and the RHP, BLP
and MDR non-Markovianity measures, backed by the C++ core.
"""

from ._core import (
    ENDING_PURITY,
    HEISENBERG_TIME,
    BlochPair,
    ChannelPoint,
    ChannelTrajectory,
    IntermediateMapParams,
    InvalidArgument,
    ModelParams,
    NMReport,
    NumericalError,
    accumulate_ensemble,
    build_hamiltonian,
    choi_eigenvalues,
    choi_from_point,
    convergence_study,
    ending_time,
    g_value,
    intermediate_map,
    invert_superop,
    measures,
    read_trajectory,
    reshuffle,
    run_point,
    sample_gue,
    superop_from_point,
    trace_distance,
    trajectory,
    unit_spacing_factor,
    write_trajectory,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
