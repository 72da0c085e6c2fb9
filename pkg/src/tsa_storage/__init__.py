"""Capacity expansion of energy systems on aggregated time series.

Typical periods are linked through two-layer storage states so that
seasonal storage survives time series aggregation.
"""

__version__ = "0.1.0"

from .aggregation import (CandidateMatrix, TypicalPeriodSet, aggregate, assign_to_medoids,
                          build_candidates, cluster_kmedoids, representation_error)
from .analysis import (ComparisonReport, CostBreakdown, cost_breakdown, cost_share_error,
                       export_soc_heatmap, read_soc_heatmap, run_formulation, run_sweep)
from .energy_system import (Connection, Conversion, DeviceSpec, EconomicParams, EnergyShareCap,
                            SystemSpec, annualized_device_costs, crf, load_case, load_system,
                            validate_system)
from .formulations import (FormulationKind, ModelArtifacts, SocTrajectory, build_full_model,
                           build_independent_model, build_linked_model, build_model,
                           decode_storage_trajectory)
from .milp import MilpModel, Solution, Status, read_mps, solve, solve_lp, solve_milp, write_mps
from .states import LinearStateSystem, inter_transition
from .timeseries import (PeriodMatrix, Profile, ProfileSet, ingest_profiles,
                         normalize_attributes, reshape_to_periods, synth_profile)
