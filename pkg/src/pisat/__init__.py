"""Saturated first-order networks under decentralized PI control:
equilibrium solving, optimality and stability certificates, simulation,
and a district heating benchmark.
"""

from .equilibrium import (ContractionMap, EquilibriumResult,
                          build_contraction, iterate_fixed_point,
                          measure_contraction, probe_uniqueness,
                          solve_equilibrium, stationary_residual)
from .errors import (CertificateFailure, ConditionViolated, ConfigError,
                     DimensionMismatch, DimensionTooLarge, EpsilonTooLarge,
                     GapTooLarge, InvalidSectorPair, MaxIterationsExceeded,
                     NonFiniteState, NotMMatrix, NotSymmetric, ParseError,
                     PisatError, SolverFailure, UnsupportedVariant)
from .heating import (HeatingScenario, TemperatureSeries, benchmark_scenario,
                      default_cost_weights, load_scenario,
                      load_temperature_csv, save_scenario,
                      scenario_from_json, scenario_to_json,
                      synthetic_cold_snap, to_standard_form)
from .matrixlab import (column_dominance_scaling, diagonal_lyapunov_scaling,
                        is_m_matrix, is_spd, is_strictly_column_dominant,
                        is_z_pattern)
from .model import (VARIANT_COORDINATING, VARIANT_DECENTRALIZED,
                    VARIANT_STATIC, ControllerSpec, DisturbanceSignal,
                    PlantModel, TuningReport, check_tuning,
                    closed_loop_derivative, control_input,
                    default_static_gain, error_coordinate_pair,
                    error_coords_derivative, transform_to_error_coords)
from .optimality import (AllocationSolution, OptimalityCertificate,
                         admissible_gamma, brute_force_oracle,
                         certify_equilibrium_optimality,
                         check_gamma_condition, solve_weighted_l1_lp)
from .sector import (PwlFunction, SectorPair, custom_pwl, eval_f, eval_h,
                     identity_zero, pwl_from_breakpoints, saturation_deadzone,
                     scale_pair, sector_audit, shift_pair)
from .simulate import (CostReport, LyapunovParameters, LyapunovTrace,
                       Trajectory, evaluate_costs, integrate,
                       lyapunov_parameters, lyapunov_trace,
                       read_trajectory_csv, stability_dt_bound,
                       write_trajectory_csv)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
