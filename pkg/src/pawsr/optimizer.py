"""Alternating optimization of the weighted sum rate under per-antenna
power caps.

One outer iteration: (1) build the virtual uplink from the current pair and
solve the uplink-noise fixed point, (2) uplink MMSE decoder, (3) transfer
back to the downlink (this saturates the antenna caps), (4) refresh the
receiver, factor the transceiver and solve the joint auxiliary/power GP,
(5) refresh the receiver again. Every step is non-increasing in the
surrogate objective, which is what the stopping rule monitors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import duality, gp, model
from .duality import FixedPointError, antenna_powers
from .gp import GpOptions, GpProblem, GpSolution, solution_vector, solve_gp
from .model import ChannelSet, NoiseModel, RateWeights


@dataclass
class SolveOptions:
    max_outer_iters: int = 100
    outer_tol: float = 1e-6          # relative surrogate-objective decrease
    fixed_point_tol: float = 1e-8
    fixed_point_max_iters: int = 200000
    fixed_point_trim_tol: float = 5e-10
    gp: GpOptions = field(default_factory=GpOptions)
    deterministic: bool = True       # documented no-op: nothing here is stochastic

    def __post_init__(self):
        if self.max_outer_iters < 1 or self.outer_tol <= 0:
            raise ValueError("iteration budget and tolerance must be positive")
        if self.fixed_point_tol <= 0 or self.fixed_point_max_iters < 1:
            raise ValueError("fixed point options must be positive")


@dataclass
class IterationRecord:
    iteration: int
    objective: float
    rate: float
    powers: np.ndarray
    total_power: float
    fixed_point_sweeps: int
    gp_status: str
    powers_post_transfer: np.ndarray | None = None


@dataclass
class IterationTrace:
    records: list = field(default_factory=list)

    def append(self, rec: IterationRecord):
        self.records.append(rec)

    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])

    def rates(self) -> np.ndarray:
        return np.array([r.rate for r in self.records])

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


@dataclass
class SolveResult:
    B: np.ndarray
    W_blocks: list
    tau: np.ndarray
    nu: np.ndarray
    trace: IterationTrace
    converged: bool
    iterations: int


class OptimizationError(RuntimeError):
    """A subproblem failed; carries the trace up to the failure."""

    def __init__(self, message, trace: IterationTrace, iteration: int):
        super().__init__(message)
        self.trace = trace
        self.iteration = iteration


def init_precoder(channels: ChannelSet, p_check) -> np.ndarray:
    """First S_total columns of H with each row rescaled so the per-antenna
    powers hit the caps exactly."""
    p_check = np.asarray(p_check, dtype=float)
    dims = channels.dims
    if p_check.shape != (dims.N,):
        raise ValueError("p_check must have one entry per BS antenna")
    if np.any(p_check <= 0):
        raise ValueError("per-antenna caps must be positive")
    B = np.array(channels.H[:, : dims.S_total], copy=True)
    row_pow = np.real(np.sum(B.conj() * B, axis=1))
    if np.any(row_pow < 1e-100):
        raise ValueError("degenerate channel: zero row in the initial precoder")
    return B * np.sqrt(p_check / row_pow)[:, None]


@dataclass
class SolutionReport:
    weighted_sum_rate: float
    per_antenna_powers: np.ndarray
    total_power: float
    max_violation: float


def evaluate_solution(B, channels: ChannelSet, noise: NoiseModel, omega,
                      p_check) -> SolutionReport:
    p_check = np.asarray(p_check, dtype=float)
    powers = antenna_powers(B)
    if np.max(np.abs(B)) == 0.0:
        rate = 0.0
    else:
        rate = model.weighted_sum_rate(model.mmse_values(B, channels, noise), omega)
    return SolutionReport(rate, powers, float(np.sum(powers)),
                          float(np.max(powers - p_check)))


def _solve_gp_checked(problem: GpProblem, opts: SolveOptions, trace, iteration,
                      what: str, start: dict | None = None) -> GpSolution:
    sol = solve_gp(problem, opts.gp, start=start)
    if sol.status != gp.STATUS_CONVERGED:
        raise OptimizationError(f"{what} GP returned status {sol.status!r} "
                                f"at outer iteration {iteration}", trace, iteration)
    return sol


def maximize_weighted_sum_rate(channels: ChannelSet, noise: NoiseModel, p_check,
                               omega, opts: SolveOptions | None = None) -> SolveResult:
    """Run the alternating optimization to convergence of the surrogate
    objective. Raises OptimizationError (partial trace attached) if a
    subproblem fails."""
    opts = opts or SolveOptions()
    dims = channels.dims
    p_check = np.asarray(p_check, dtype=float)
    weights = RateWeights(np.asarray(omega, dtype=float))
    if weights.omega.size != dims.S_total:
        raise ValueError("omega must have one entry per symbol")
    S = dims.S_total
    trace = IterationTrace()

    B = init_precoder(channels, p_check)
    W = model.mmse_receiver(B, channels, noise)
    xi = model.mmse_values(B, channels, noise)
    aux_sol = _solve_gp_checked(gp.aux_subproblem(xi, weights), opts, trace, 0, "auxiliary")
    tau = solution_vector(aux_sol, "tau", S)
    nu = solution_vector(aux_sol, "nu", S)

    objective = model.surrogate_objective(tau, nu, xi, weights)
    trace.append(IterationRecord(
        0, objective, model.weighted_sum_rate(xi, weights.omega),
        antenna_powers(B), float(np.sum(antenna_powers(B))), 0, aux_sol.status))

    converged = False
    it = 0
    for it in range(1, opts.max_outer_iters + 1):
        eta = weights.eta(tau)
        tau_tilde = duality.weighted_noise_power(W, eta, noise)
        try:
            fp = duality.uplink_noise_fixed_point(
                W, eta, channels, p_check, tau_tilde,
                tol=opts.fixed_point_tol, max_sweeps=opts.fixed_point_max_iters,
                trim_tol=opts.fixed_point_trim_tol)
        except FixedPointError as exc:
            raise OptimizationError(f"uplink noise fixed point failed at outer "
                                    f"iteration {it}: {exc}", trace, it) from exc
        T = duality.uplink_mmse_receiver(W, eta, channels, fp.psi)
        B, W = duality.to_downlink(T, W, fp.psi, tau_tilde)
        # exact cap enforcement: shrink the transfer scaling onto the binding
        # cap; the MSE cost of this trim is bounded by the fixed point's
        # trim_tol, inside the monotonicity slack
        scale = float(np.sqrt(min(1.0, np.min(p_check / antenna_powers(B)))))
        if scale < 1.0:
            B = B * scale
            W = [w / scale for w in W]
        powers_transfer = antenna_powers(B)

        W = model.mmse_receiver(B, channels, noise)
        dec = model.decompose(B, W, dims)
        coupling = model.coupling_matrices(dec, channels)
        problem = gp.power_subproblem(coupling, dec, noise, p_check, weights)
        # warm start (tau, nu) from the running iterate; the builder's start
        # already carries strictly feasible powers
        start = dict(problem.start)
        for l in range(S):
            start[f"tau_{l}"] = float(tau[l])
            start[f"nu_{l}"] = float(nu[l])
        gp_sol = _solve_gp_checked(problem, opts, trace, it, "power", start=start)
        tau = solution_vector(gp_sol, "tau", S)
        nu = solution_vector(gp_sol, "nu", S)
        p = solution_vector(gp_sol, "p", S)
        B = dec.G * np.sqrt(p)
        W = model.mmse_receiver(B, channels, noise)

        xi = model.mmse_values(B, channels, noise)
        new_objective = model.surrogate_objective(tau, nu, xi, weights)
        powers = antenna_powers(B)
        trace.append(IterationRecord(
            it, new_objective, model.weighted_sum_rate(xi, weights.omega),
            powers, float(np.sum(powers)), fp.sweeps, gp_sol.status,
            powers_post_transfer=powers_transfer))

        if objective - new_objective <= opts.outer_tol * max(1.0, abs(objective)):
            objective = new_objective
            converged = True
            break
        objective = new_objective

    return SolveResult(B, W, tau, nu, trace, converged, it)
