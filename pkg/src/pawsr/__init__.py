"""Weighted sum rate precoder optimization for downlink multiuser MIMO
under per-antenna power constraints, via MSE downlink-uplink duality and a
geometric-program power subproblem."""

from .duality import (FixedPointError, FixedPointResult, UplinkTransceiver,
                      antenna_powers, equal_split_psi, to_downlink, to_uplink,
                      uplink_mmse_receiver, uplink_noise_fixed_point,
                      uplink_weighted_sum_mse, weighted_noise_power)
from .gp import (GpOptions, GpProblem, GpSolution, Monomial, aux_subproblem,
                 dump_problem, power_subproblem, solution_vector, solve_gp)
from .harness import (ExperimentConfig, demo_config, generate_channel,
                      run_experiment, sigma2_from_snr)
from .model import (AuxVars, ChannelSet, CouplingMatrices, Decomposition,
                    DownlinkTransceiver, NoiseModel, RateWeights, SystemDims,
                    coupling_matrices, decompose, derive_weights, mmse_receiver,
                    mmse_values, mse_from_powers, recompose, surrogate_objective,
                    symbol_mse, symbol_rates, weighted_sum_mse, weighted_sum_rate)
from .optimizer import (IterationRecord, IterationTrace, OptimizationError,
                        SolveOptions, SolveResult, SolutionReport,
                        evaluate_solution, init_precoder,
                        maximize_weighted_sum_rate)

__version__ = "0.1.0"
