"""Posynomial geometric programming: problem representation, a log-domain
barrier solver, and builders for the two subproblems the outer loop needs
(the auxiliary-variable problem and the joint auxiliary/power problem).

Solver approach: substitute y = log x so the objective and inequality
posynomials become log-sum-exp of affine forms (convex) and monomial
equalities become affine equalities. Equalities are eliminated through an
orthonormal nullspace basis, then a path-following barrier with damped
Newton steps drives the gap surrogate m/t and the stationarity residual
below tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from . import kernels
from ._gpcore_py import _lse_full
from .model import CouplingMatrices, Decomposition, NoiseModel, RateWeights, noise_quadratics

STATUS_CONVERGED = "converged"
STATUS_MAX_ITER = "max_iter"
STATUS_INFEASIBLE = "infeasible"


@dataclass
class Monomial:
    """c * prod_v x_v^{a_v} with c > 0; exponents are sparse over variable names."""

    coeff: float
    exponents: dict

    def __post_init__(self):
        self.coeff = float(self.coeff)
        if not self.coeff > 0:
            raise ValueError("monomial coefficients must be strictly positive")

    def value(self, x: dict) -> float:
        v = self.coeff
        for name, e in self.exponents.items():
            v *= x[name] ** e
        return v


def posynomial_value(terms, x: dict) -> float:
    return sum(m.value(x) for m in terms)


@dataclass
class GpProblem:
    """min sum(objective) s.t. each inequality posynomial <= its bound and
    each equality monomial == its bound. All variables are positive scalars.
    `start` optionally carries a feasible point supplied by the builder."""

    variables: list
    objective: list
    inequalities: list = field(default_factory=list)  # (terms, bound)
    equalities: list = field(default_factory=list)    # (Monomial, bound)
    start: dict | None = None

    def __post_init__(self):
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("duplicate variable names")
        if not self.variables or not self.objective:
            raise ValueError("need at least one variable and one objective term")
        known = set(self.variables)
        for m in self._all_monomials():
            if not set(m.exponents) <= known:
                raise ValueError(f"unknown variable in monomial: {m.exponents}")
        for _, bound in self.inequalities:
            if not bound > 0:
                raise ValueError("inequality bounds must be positive")
        for _, bound in self.equalities:
            if not bound > 0:
                raise ValueError("equality bounds must be positive")

    def _all_monomials(self):
        for m in self.objective:
            yield m
        for terms, _ in self.inequalities:
            yield from terms
        for m, _ in self.equalities:
            yield m

    def objective_value(self, x: dict) -> float:
        return posynomial_value(self.objective, x)

    def max_violation(self, x: dict) -> float:
        """Largest log-scale constraint violation at x (<= 0 means feasible)."""
        worst = -np.inf
        for terms, bound in self.inequalities:
            worst = max(worst, np.log(posynomial_value(terms, x)) - np.log(bound))
        for mono, bound in self.equalities:
            worst = max(worst, abs(np.log(mono.value(x)) - np.log(bound)))
        return worst if np.isfinite(worst) else 0.0


@dataclass
class GpSolution:
    x: dict
    objective_value: float
    kkt_residual: float
    status: str
    barrier_stages: int = 0
    newton_iters: int = 0


@dataclass
class GpOptions:
    gap_tol: float = 1e-10
    kkt_tol: float = 1e-8
    t_init: float = 1.0
    t_factor: float = 10.0
    armijo_slope: float = 0.25
    backtrack: float = 0.5
    max_barrier_stages: int = 200
    max_newton_per_stage: int = 100
    newton_tol: float = 1e-16
    var_floor: float = 1e-12


def dump_problem(problem: GpProblem) -> str:
    """Plain-text dump, one term per line: coefficient then name:exponent pairs."""

    def term(m):
        parts = [repr(m.coeff)]
        parts += [f"{v}:{m.exponents[v]!r}" for v in sorted(m.exponents)]
        return " ".join(parts)

    lines = ["variables: " + " ".join(problem.variables), "objective:"]
    lines += [term(m) for m in problem.objective]
    for terms, bound in problem.inequalities:
        lines.append(f"ineq <= {bound!r}:")
        lines += [term(m) for m in terms]
    for mono, bound in problem.equalities:
        lines.append(f"eq = {bound!r}:")
        lines.append(term(mono))
    return "\n".join(lines) + "\n"


class _Compiled:
    """Dense log-domain form of a GpProblem, reduced onto the equality
    manifold. The variable floor x_v >= var_floor enters as one affine
    constraint block per variable, so a floored optimum is still a certified
    optimum of the problem actually solved."""

    def __init__(self, problem: GpProblem, var_floor: float):
        self.problem = problem
        self.names = list(problem.variables)
        n = len(self.names)
        idx = {name: j for j, name in enumerate(self.names)}

        def row(mono):
            r = np.zeros(n)
            for v, e in mono.exponents.items():
                r[idx[v]] = e
            return r

        A0 = np.array([row(m) for m in problem.objective])
        logc0 = np.log([m.coeff for m in problem.objective])

        blocks, logcs, bounds = [], [], []
        for terms, bound in problem.inequalities:
            blocks.append(np.array([row(m) for m in terms]))
            logcs.append(np.log([m.coeff for m in terms]))
            bounds.append(np.log(bound))
        self.log_floor = np.log(var_floor)
        for j in range(n):  # var_floor / x_j <= 1
            r = np.zeros((1, n))
            r[0, j] = -1.0
            blocks.append(r)
            logcs.append(np.array([self.log_floor]))
            bounds.append(0.0)
        self.logb = np.array(bounds)
        self.m = len(bounds)
        starts = np.zeros(self.m + 1, dtype=np.int64)
        for i, b in enumerate(blocks):
            starts[i + 1] = starts[i] + b.shape[0]
        Ac = np.vstack(blocks)
        logc_c = np.concatenate(logcs)
        self.starts = starts

        self.eq_infeasible = False
        if problem.equalities:
            Aeq = np.array([row(m) for m, _ in problem.equalities])
            beq = np.array([np.log(b) - np.log(m.coeff) for m, b in problem.equalities])
            y_p, *_ = np.linalg.lstsq(Aeq, beq, rcond=None)
            if np.linalg.norm(Aeq @ y_p - beq) > 1e-9 * max(1.0, np.linalg.norm(beq)):
                self.eq_infeasible = True
            Z = scipy.linalg.null_space(Aeq)
        else:
            y_p = np.zeros(n)
            Z = np.eye(n)
        self.y_p = y_p
        self.Z = Z
        self.n = n
        self.nz = Z.shape[1]

        self.A0 = np.ascontiguousarray(A0 @ Z)
        self.b0 = np.ascontiguousarray(A0 @ y_p + logc0)
        self.Ac = np.ascontiguousarray(Ac @ Z)
        self.bc = np.ascontiguousarray(Ac @ y_p + logc_c)
        self.max_terms = max(A0.shape[0], *[b.shape[0] for b in blocks])

        # scratch for the kernels
        self.work = np.zeros(self.max_terms)
        self.gbuf = np.zeros(self.nz)
        self.hbuf = np.zeros((self.nz, self.nz))

    def to_y(self, z):
        return self.y_p + self.Z @ z

    def project(self, x: dict) -> np.ndarray:
        y = np.log([x[name] for name in self.names])
        return self.Z.T @ (y - self.y_p)

    def constraint_values(self, z) -> np.ndarray:
        """g_i(z) = lse_i(z) - log b_i (feasible iff all < 0)."""
        out = np.empty(self.m)
        for i in range(self.m):
            sl = slice(self.starts[i], self.starts[i + 1])
            u = self.Ac[sl] @ z + self.bc[sl]
            mx = u.max()
            out[i] = mx + np.log(np.sum(np.exp(u - mx))) - self.logb[i]
        return out


def _newton_direction(hess, grad):
    try:
        c = scipy.linalg.cho_factor(hess, check_finite=False)
        return scipy.linalg.cho_solve(c, -grad, check_finite=False)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError):
        pass
    n = hess.shape[0]
    scale = max(1.0, float(np.max(np.abs(np.diag(hess)))))
    ridge = 1e-12
    for _ in range(25):
        try:
            c = scipy.linalg.cho_factor(hess + ridge * scale * np.eye(n),
                                        check_finite=False)
            return scipy.linalg.cho_solve(c, -grad, check_finite=False)
        except (scipy.linalg.LinAlgError, np.linalg.LinAlgError):
            ridge *= 100.0
    raise RuntimeError("Hessian factorization failed")


def _center(comp: _Compiled, z, t, opts: GpOptions, tight: bool = True):
    """Damped Newton on the barrier function at fixed t. Non-tight calls
    center only approximately (enough to follow the path); the final stage
    centers to step resolution. Returns (z, iterations)."""
    impl = kernels.get_backend()
    grad = np.zeros(comp.nz)
    hess = np.zeros((comp.nz, comp.nz))
    decrement_tol = opts.newton_tol if tight else 1e-4
    for it in range(opts.max_newton_per_stage):
        phi, feas = impl.barrier_full(t, comp.A0, comp.b0, comp.Ac, comp.bc,
                                      comp.starts, comp.logb, z, grad, hess,
                                      comp.work, comp.gbuf, comp.hbuf)
        if not feas:
            # a slack below float resolution can flip sign between the
            # streaming and two-pass evaluations; leave it to the certificate
            return z, it
        delta = _newton_direction(hess, grad)
        gdelta = float(grad @ delta)
        decrement = -gdelta
        # also stop once the step no longer moves z meaningfully (large t
        # inflates phi and its gradient past float64 resolution)
        if (decrement * 0.5 <= decrement_tol
                or (tight and np.linalg.norm(delta) <= 1e-11 * max(1.0, np.linalg.norm(z)))):
            return z, it
        step = 1.0
        while step > 1e-14:
            znew = z + step * delta
            phinew, ok = impl.barrier_value(t, comp.A0, comp.b0, comp.Ac,
                                            comp.bc, comp.starts, comp.logb,
                                            znew)
            if ok and phinew <= phi + opts.armijo_slope * step * gdelta:
                break
            step *= opts.backtrack
        if step <= 1e-14:
            return z, it + 1  # stalled; caller decides via tolerances
        z = znew
    return z, opts.max_newton_per_stage


def _initial_t(comp: _Compiled, z, opts: GpOptions) -> float:
    """Pick the first barrier weight from the start's own gap estimate
    (m / gap, one decade conservative), so a warm start skips the early
    stages instead of being dragged to the t=1 center and back."""
    _, g0, _ = _lse_full(comp.A0, comp.b0, z)
    jac = np.empty((comp.m, comp.nz))
    slack = np.empty(comp.m)
    for i in range(comp.m):
        sl = slice(comp.starts[i], comp.starts[i + 1])
        vi, gi_vec, _ = _lse_full(comp.Ac[sl], comp.bc[sl], z)
        jac[i] = gi_vec
        slack[i] = comp.logb[i] - vi
    aug = np.vstack([jac.T, np.diag(slack)])
    rhs = np.concatenate([-g0, np.zeros(comp.m)])
    lam, _ = scipy.optimize.nnls(aug, rhs)
    stationarity = float(np.linalg.norm(g0 + jac.T @ lam))
    gap = float(lam @ slack) + stationarity
    t0 = 0.1 * comp.m / max(gap, comp.m * opts.gap_tol)
    return float(min(max(opts.t_init, t0), comp.m / opts.gap_tol))


def _kkt_residual(comp: _Compiled, z) -> float:
    """Log-domain KKT residual of the returned point: stationarity plus the
    worst complementarity product under exhibited multipliers lam >= 0. The
    multipliers minimize both quantities jointly (augmented NNLS); the
    barrier's own 1/(t*slack) multipliers are useless here because they hit a
    float64 resolution floor of ~t*eps, and a plain stationarity fit can pick
    a huge-lambda vertex when active normals are nearly parallel."""
    _, g0, _ = _lse_full(comp.A0, comp.b0, z)
    if comp.m == 0:
        return float(np.linalg.norm(g0))
    jac = np.empty((comp.m, comp.nz))
    slack = np.empty(comp.m)
    for i in range(comp.m):
        sl = slice(comp.starts[i], comp.starts[i + 1])
        vi, gi_vec, _ = _lse_full(comp.Ac[sl], comp.bc[sl], z)
        jac[i] = gi_vec
        slack[i] = comp.logb[i] - vi
    aug = np.vstack([jac.T, np.diag(slack)])
    rhs = np.concatenate([-g0, np.zeros(comp.m)])
    lam, _ = scipy.optimize.nnls(aug, rhs)
    stationarity = float(np.linalg.norm(g0 + jac.T @ lam))
    complementarity = float(np.max(lam * slack))
    return max(stationarity, complementarity)


def _phase1(comp: _Compiled, z, opts: GpOptions):
    """Minimize s s.t. g_i(z) <= s to find a strictly feasible start.
    Returns a feasible z or None. Cold path, plain numpy."""
    if comp.m == 0:
        return z
    g = comp.constraint_values(z)
    if np.max(g) < -1e-10:
        return z
    s = float(np.max(g)) + 1.0
    t = 1.0
    nz = comp.nz
    for _stage in range(60):
        for _it in range(60):
            vals = np.empty(comp.m)
            grads = np.empty((comp.m, nz))
            hesses = np.empty((comp.m, nz, nz))
            for i in range(comp.m):
                sl = slice(comp.starts[i], comp.starts[i + 1])
                vals[i], grads[i], hesses[i] = _lse_full(comp.Ac[sl], comp.bc[sl], z)
            gcon = vals - comp.logb
            if np.max(gcon) < -1e-10:
                return z
            slack = s - gcon
            if np.any(slack <= 0):
                s = float(np.max(gcon)) + 1.0
                continue
            inv = 1.0 / slack
            grad_z = grads.T @ inv
            grad_s = t - float(np.sum(inv))
            hzz = np.tensordot(inv, hesses, axes=1) + (grads.T * inv**2) @ grads
            hzs = -(grads.T @ inv**2)
            hss = float(np.sum(inv**2))
            big_h = np.block([[hzz, hzs[:, None]], [hzs[None, :], np.array([[hss]])]])
            big_g = np.concatenate([grad_z, [grad_s]])
            delta = _newton_direction(big_h, big_g)
            if 0.5 * float(big_g @ delta) >= -opts.newton_tol:
                break
            phi0 = t * s - float(np.sum(np.log(slack)))
            step = 1.0
            while step > 1e-14:
                zn = z + step * delta[:-1]
                sn = s + step * delta[-1]
                gn = comp.constraint_values(zn)
                if np.all(sn - gn > 0):
                    phin = t * sn - float(np.sum(np.log(sn - gn)))
                    if phin <= phi0 + opts.armijo_slope * step * float(big_g @ delta):
                        break
                step *= opts.backtrack
            if step <= 1e-14:
                break
            z, s = zn, sn
        if comp.m / t <= 1e-8:
            break
        t *= 10.0
    g = comp.constraint_values(z)
    return z if np.max(g) < 0 else None


def solve_gp(problem: GpProblem, opts: GpOptions | None = None,
             start: dict | None = None) -> GpSolution:
    """Solve a GP to global optimality. Returns status 'converged' when the
    stationarity residual and the gap surrogate m/t are both within
    tolerance, 'infeasible' when no strictly feasible point is found, and
    'max_iter' when the barrier budget runs out."""
    opts = opts or GpOptions()
    comp = _Compiled(problem, opts.var_floor)
    if comp.eq_infeasible:
        return GpSolution({}, np.inf, np.inf, STATUS_INFEASIBLE)

    x0 = start or problem.start or {name: 1.0 for name in comp.names}
    x0 = {name: max(float(x0[name]), opts.var_floor * 10.0) for name in comp.names}
    z = comp.project(x0)

    if comp.nz == 0:
        # equalities pin every variable
        y = comp.to_y(z)
        x = {name: float(v) for name, v in zip(comp.names, np.exp(y))}
        feasible = np.max(comp.constraint_values(z)) <= 1e-12
        status = STATUS_CONVERGED if feasible else STATUS_INFEASIBLE
        return GpSolution(x, problem.objective_value(x), 0.0, status)

    if np.max(comp.constraint_values(z)) >= 0:
        z_feas = _phase1(comp, z, opts)
        if z_feas is None:
            x = {name: float(v) for name, v in zip(comp.names, np.exp(comp.to_y(z)))}
            return GpSolution(x, np.inf, np.inf, STATUS_INFEASIBLE)
        z = z_feas

    newton_total = 0
    stages = 0
    status = STATUS_CONVERGED
    t = _initial_t(comp, z, opts)
    kkt = np.inf
    while True:
        final = comp.m / t <= opts.gap_tol
        z, its = _center(comp, z, t, opts, tight=final)
        newton_total += its
        stages += 1
        if final:
            # certify; large multipliers may need further t growth before the
            # complementarity products clear the tolerance
            kkt = max(_kkt_residual(comp, z), comp.m / t)
            if kkt <= opts.kkt_tol:
                break
        if stages >= opts.max_barrier_stages:
            kkt = max(_kkt_residual(comp, z), comp.m / t)
            status = STATUS_MAX_ITER
            break
        t *= opts.t_factor

    y = comp.to_y(z)
    x = {name: float(v) for name, v in zip(comp.names, np.exp(y))}
    return GpSolution(x, problem.objective_value(x), float(kkt), status,
                      barrier_stages=stages, newton_iters=newton_total)


# ---------------------------------------------------------------------------
# builders

def _var(prefix, l):
    return f"{prefix}_{l}"


def aux_subproblem(xi_min, weights: RateWeights) -> GpProblem:
    """GP over (tau, nu): minimize
    sum_l theta_l tau_l^{-1} nu_l^{gamma_l} + sum_l xi_l tau_l^{mu_l}
    subject to prod_l nu_l = 1. Feasible start: all ones."""
    xi = np.asarray(xi_min, dtype=float)
    if np.any(xi <= 0) or np.any(xi > 1 + 1e-9):
        raise ValueError("minimum MSEs must lie in (0, 1]")
    S = xi.size
    if S != weights.omega.size:
        raise ValueError("xi and weights disagree on symbol count")
    names = [_var("tau", l) for l in range(S)] + [_var("nu", l) for l in range(S)]
    objective = []
    for l in range(S):
        objective.append(Monomial(weights.theta[l],
                                  {_var("tau", l): -1.0, _var("nu", l): weights.gamma[l]}))
        objective.append(Monomial(xi[l], {_var("tau", l): weights.mu[l]}))
    equality = (Monomial(1.0, {_var("nu", l): 1.0 for l in range(S)}), 1.0)
    start = {name: 1.0 for name in names}
    return GpProblem(names, objective, [], [equality], start=start)


def power_subproblem(coupling: CouplingMatrices, dec: Decomposition,
                     noise: NoiseModel, p_check, weights: RateWeights) -> GpProblem:
    """GP over (tau, nu, p): the auxiliary objective with each per-symbol MSE
    expanded as a posynomial in the powers, under the per-antenna rows
    varsigma_n^T p <= p_check_n and prod_l nu_l = 1. The incumbent powers
    (rescaled to strict feasibility when tight) seed the start."""
    d = coupling.d
    if np.any(d <= 0):
        raise ValueError(
            "non-positive direct-link coefficient: refresh the receiver (MMSE) "
            "before building the power subproblem")
    p_check = np.asarray(p_check, dtype=float)
    if np.any(p_check <= 0):
        raise ValueError("per-antenna caps must be positive")
    S = d.size
    a2 = dec.alpha**2
    nq = noise_quadratics(dec.U_blocks, noise)
    names = ([_var("tau", l) for l in range(S)] + [_var("nu", l) for l in range(S)]
             + [_var("p", l) for l in range(S)])
    objective = []
    for l in range(S):
        mu_l = weights.mu[l]
        objective.append(Monomial(weights.theta[l],
                                  {_var("tau", l): -1.0, _var("nu", l): weights.gamma[l]}))
        objective.append(Monomial(d[l], {_var("tau", l): mu_l}))
        for j in range(S):
            c = a2[l] * coupling.phi[j, l]
            if j != l and c > 0.0:
                objective.append(Monomial(c, {_var("tau", l): mu_l,
                                              _var("p", j): 1.0, _var("p", l): -1.0}))
        objective.append(Monomial(a2[l] * nq[l],
                                  {_var("tau", l): mu_l, _var("p", l): -1.0}))
    inequalities = []
    for n in range(p_check.size):
        terms = [Monomial(coupling.varsigma[n, i], {_var("p", i): 1.0})
                 for i in range(S) if coupling.varsigma[n, i] > 0.0]
        if terms:
            inequalities.append((terms, float(p_check[n])))
    equality = (Monomial(1.0, {_var("nu", l): 1.0 for l in range(S)}), 1.0)

    p_start = np.array(dec.p, dtype=float)
    loads = coupling.varsigma @ p_start
    with np.errstate(divide="ignore"):
        ratios = np.where(loads > 0, p_check / loads, np.inf)
    margin = float(np.min(ratios))
    if margin <= 1.0 + 1e-12:
        p_start = p_start * (0.99 * margin)
    start = {name: 1.0 for name in names}
    for l in range(S):
        start[_var("p", l)] = float(p_start[l])
    return GpProblem(names, objective, inequalities, [equality], start=start)


def solution_vector(sol: GpSolution, prefix: str, count: int) -> np.ndarray:
    return np.array([sol.x[_var(prefix, l)] for l in range(count)])
