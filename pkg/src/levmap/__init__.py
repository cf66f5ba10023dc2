"""Numerical workbench for a unimodal leverage map with heteroscedastic noise."""

__version__ = "0.1.0"

from .errors import (ConvergenceError, DegenerateError, DomainError,
                     EmptyAfterFilterError, InadmissibleError, LevmapError,
                     NumericalError, ParseError, SchemaError, SingularError,
                     TooShortError)
from .mapcore import (MapParams, Regime, RegimeLabel, classify, eval_T,
                      eval_T_prime, find_attracting_cycle, is_admissible,
                      iterate_T, make_params, orbit, schwarzian)
from .noise import NoiseKernel, bump_chi
from .simulate import (SlowFastConfig, Trajectory, TrajectoryKind,
                       aggregated_variance, ar1_mle, simulate_reduced,
                       simulate_slowfast, slowfast_config_for)
from .measure import (Density, empirical_density, invariance_residual,
                      stationary_density, support_interval, ulam_matrix,
                      weak_star_convergence)
from .lyapunov import (LyapunovReport, bifurcation_scan, lyap_average,
                       lyap_average_from_density, lyap_deterministic,
                       lyap_random, lyap_slice, sweep_grid, table_row)
from .chaos import (ChaosVerdict, calibrate_k_cutoff, cdta_classify, k_cutoff,
                    permutation_entropy, schreiber_denoise,
                    stochasticity_test, surrogates_aaft, surrogates_cpp,
                    zero_one_test, downsample_if_oversampled)
from .ingest import BankSeries, calibrate_gamma, ingest_csv, leverage_to_phi
from .datasets import (TrainingRecord, estimate_n_for_series, gen_training_set,
                       read_training_set, sample_admissible)
