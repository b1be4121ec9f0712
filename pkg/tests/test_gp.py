import numpy as np
import pytest

from pawsr import kernels
from pawsr.gp import (GpOptions, GpProblem, Monomial, aux_subproblem,
                      dump_problem, posynomial_value, power_subproblem,
                      solution_vector, solve_gp)
from pawsr.model import (NoiseModel, RateWeights, SystemDims, coupling_matrices,
                         decompose, mmse_receiver, mmse_values,
                         surrogate_objective)

from conftest import random_channel, random_precoder, rng_for


def grid_minimize(objective, constraints, box, pts=16, passes=14, enrich=None):
    """Zooming log-grid brute force. objective/constraints are (coeffs,
    exponents) pairs over the boxed variables; constraints are (coeffs,
    exponents, bound). `enrich` may map the log-point array to extra
    candidate log-points (e.g. exact boundary projections). Returns
    (best value, best point). Independent of the barrier solver by
    construction."""
    lo = np.log(np.array([b[0] for b in box]))
    hi = np.log(np.array([b[1] for b in box]))
    best_val, best_x = np.inf, None
    for _ in range(passes):
        axes = [np.linspace(lo[i], hi[i], pts) for i in range(len(box))]
        mesh = np.meshgrid(*axes, indexing="ij")
        Y = np.stack([m.ravel() for m in mesh], axis=1)  # (P, n) log points
        if enrich is not None:
            Y = np.vstack([Y, enrich(Y)])
        feas = np.ones(Y.shape[0], dtype=bool)
        for coeffs, expts, bound in constraints:
            vals = np.exp(Y @ expts.T + np.log(coeffs)).sum(axis=1)
            feas &= vals <= bound * (1 + 1e-12)
        if not np.any(feas):
            lo -= 0.5
            hi += 0.5
            continue
        coeffs, expts = objective
        vals = np.exp(Y[feas] @ expts.T + np.log(coeffs)).sum(axis=1)
        k = np.argmin(vals)
        if vals[k] < best_val:
            best_val = float(vals[k])
            best_x = Y[feas][k]
        spacing = (hi - lo) / (pts - 1)
        lo = best_x - 3 * spacing
        hi = best_x + 3 * spacing
    return best_val, np.exp(best_x)


def problem_arrays(problem, names):
    idx = {n: i for i, n in enumerate(names)}

    def pack(terms):
        coeffs = np.array([m.coeff for m in terms])
        expts = np.zeros((len(terms), len(names)))
        for t, m in enumerate(terms):
            for v, e in m.exponents.items():
                expts[t, idx[v]] = e
        return coeffs, expts

    objective = pack(problem.objective)
    cons = [(*pack(terms), bound) for terms, bound in problem.inequalities]
    return objective, cons


class TestSolverBasics:
    def test_am_gm(self):
        prob = GpProblem(["x"], [Monomial(1.0, {"x": 1.0}), Monomial(1.0, {"x": -1.0})])
        sol = solve_gp(prob)
        assert sol.status == "converged"
        assert sol.x["x"] == pytest.approx(1.0, rel=1e-8)
        assert sol.objective_value == pytest.approx(2.0, rel=1e-10)

    def test_monotone_hits_bound(self):
        prob = GpProblem(["x"], [Monomial(1.0, {"x": -1.0})],
                         [([Monomial(1.0, {"x": 1.0})], 2.0)])
        sol = solve_gp(prob)
        assert sol.status == "converged"
        assert sol.x["x"] == pytest.approx(2.0, rel=1e-6)
        assert sol.objective_value == pytest.approx(0.5, rel=1e-6)
        assert sol.kkt_residual <= 1e-8

    def test_stationary_point(self):
        # theta/tau + mu-power term: optimum (theta/(mu*xi))^(1/(mu+1))
        prob = GpProblem(["tau"], [Monomial(0.5, {"tau": -1.0}), Monomial(0.5, {"tau": 1.0})])
        sol = solve_gp(prob)
        assert sol.x["tau"] == pytest.approx(1.0, rel=1e-8)
        assert sol.objective_value == pytest.approx(1.0, rel=1e-10)

    def test_infeasible_detected(self):
        prob = GpProblem(["x"], [Monomial(1.0, {"x": 1.0})],
                         [([Monomial(1.0, {"x": 1.0})], 1.0),
                          ([Monomial(3.0, {"x": -1.0})], 1.0)])
        assert solve_gp(prob).status == "infeasible"

    def test_equality_respected(self):
        prob = GpProblem(
            ["a", "b"],
            [Monomial(1.0, {"a": 1.0}), Monomial(1.0, {"b": 2.0})],
            [],
            [(Monomial(1.0, {"a": 1.0, "b": 1.0}), 4.0)],
        )
        sol = solve_gp(prob)
        assert sol.status == "converged"
        assert sol.x["a"] * sol.x["b"] == pytest.approx(4.0, rel=1e-9)

    def test_rejects_nonpositive_coeff(self):
        with pytest.raises(ValueError):
            Monomial(0.0, {"x": 1.0})

    def test_random_gps_match_grid_oracle(self):
        r = rng_for(42)
        for trial in range(6):
            n = int(r.integers(2, 5))
            names = [f"x{i}" for i in range(n)]
            terms = []
            for _ in range(int(r.integers(3, 7))):
                expt = {names[i]: float(r.uniform(-2, 2)) for i in range(n)}
                terms.append(Monomial(float(r.uniform(0.1, 3.0)), expt))
            # coercivity guards so the minimum is attained
            for i in range(n):
                terms.append(Monomial(1e-3, {names[i]: 1.0}))
                terms.append(Monomial(1e-3, {names[i]: -1.0}))
            prob = GpProblem(names, terms)
            sol = solve_gp(prob)
            assert sol.status == "converged"
            obj, cons = problem_arrays(prob, names)
            box = [(1e-4, 1e4)] * n
            ref, _ = grid_minimize(obj, cons, box, pts=25 if n <= 3 else 16)
            assert sol.objective_value <= ref * (1 + 1e-4)
            assert abs(sol.objective_value - ref) <= 1e-4 * ref


class TestBackendParity:
    def test_both_backends_agree(self):
        if not kernels.compiled_available():
            pytest.skip("compiled kernels unavailable")
        r = rng_for(3)
        names = ["a", "b", "c"]
        terms = [Monomial(float(r.uniform(0.2, 2.0)),
                          {v: float(r.uniform(-2, 2)) for v in names})
                 for _ in range(5)]
        terms += [Monomial(1e-3, {v: s}) for v in names for s in (1.0, -1.0)]
        prob = GpProblem(names, terms,
                         [([Monomial(1.0, {"a": 1.0}), Monomial(0.5, {"b": 1.0})], 3.0)])
        old = kernels.set_backend("cython")
        try:
            sol_c = solve_gp(prob)
            kernels.set_backend("python")
            sol_p = solve_gp(prob)
        finally:
            kernels.set_backend(old)
        assert sol_c.status == sol_p.status == "converged"
        assert sol_c.objective_value == pytest.approx(sol_p.objective_value, rel=1e-9)
        for v in names:
            assert sol_c.x[v] == pytest.approx(sol_p.x[v], rel=1e-6)


class TestAuxSubproblem:
    def test_single_symbol_closed_form(self):
        w = RateWeights(np.array([0.4]))
        xi = np.array([0.3])
        sol = solve_gp(aux_subproblem(xi, w))
        assert sol.status == "converged"
        # product constraint pins nu at 1; tau from stationarity
        assert sol.x["nu_0"] == pytest.approx(1.0, rel=1e-9)
        tau_star = (w.theta[0] / (w.mu[0] * xi[0])) ** (1.0 / (w.mu[0] + 1.0))
        assert sol.x["tau_0"] == pytest.approx(tau_star, rel=1e-7)

    def test_symmetric_weights_give_unit_nu(self):
        w = RateWeights(np.full(3, 0.3))
        xi = np.full(3, 0.4)
        sol = solve_gp(aux_subproblem(xi, w))
        for l in range(3):
            assert sol.x[f"nu_{l}"] == pytest.approx(1.0, rel=1e-6)

    def test_beats_unit_start(self, paper_omega):
        w = RateWeights(paper_omega)
        xi = 0.05 + rng_for(10).random(4) * 0.9
        prob = aux_subproblem(xi, w)
        sol = solve_gp(prob)
        at_ones = prob.objective_value({n: 1.0 for n in prob.variables})
        assert sol.objective_value <= at_ones + 1e-12

    def test_matches_surrogate_objective(self, paper_omega):
        w = RateWeights(paper_omega)
        xi = 0.05 + rng_for(11).random(4) * 0.9
        sol = solve_gp(aux_subproblem(xi, w))
        tau = solution_vector(sol, "tau", 4)
        nu = solution_vector(sol, "nu", 4)
        assert sol.objective_value == pytest.approx(
            surrogate_objective(tau, nu, xi, w), rel=1e-8)

    def test_product_constraint_satisfied(self, paper_omega):
        w = RateWeights(paper_omega)
        xi = 0.05 + rng_for(12).random(4) * 0.9
        sol = solve_gp(aux_subproblem(xi, w))
        assert np.prod(solution_vector(sol, "nu", 4)) == pytest.approx(1.0, rel=1e-9)

    def test_rejects_bad_xi(self, paper_omega):
        w = RateWeights(paper_omega)
        with pytest.raises(ValueError):
            aux_subproblem(np.array([0.5, 0.0, 0.5, 0.5]), w)


def make_power_instance(seed, dims=None, sigma2=0.6, p_check=None):
    dims = dims or SystemDims(2, 4, (2, 2), (2, 2))
    p_check = np.asarray(p_check if p_check is not None else np.full(dims.N, 2.5))
    ch = random_channel(dims, seed)
    noise = NoiseModel.isotropic(dims, sigma2)
    B = random_precoder(dims, seed)
    # scale inside the caps so the incumbent is strictly feasible
    loads = np.real(np.sum(B.conj() * B, axis=1))
    B = B * np.sqrt(0.8 * np.min(p_check / loads))
    W = mmse_receiver(B, ch, noise)
    dec = decompose(B, W, dims)
    coup = coupling_matrices(dec, ch)
    weights = RateWeights(np.array([0.4, 0.2, 0.6, 0.25])[: dims.S_total])
    return dims, ch, noise, dec, coup, weights, p_check


class TestPowerSubproblem:
    def test_reference_dims_constraints_hold(self):
        for seed in range(10):
            dims, ch, noise, dec, coup, weights, p_check = make_power_instance(seed)
            sol = solve_gp(power_subproblem(coup, dec, noise, p_check, weights))
            assert sol.status == "converged"
            assert sol.kkt_residual <= 1e-8
            p = solution_vector(sol, "p", 4)
            assert np.all(coup.varsigma @ p <= p_check + 1e-8)
            nu = solution_vector(sol, "nu", 4)
            assert np.prod(nu) == pytest.approx(1.0, rel=1e-9)

    def test_single_stream_saturates(self):
        # no cross terms: the MSE decreases in p, so the power rail binds
        dims = SystemDims(1, 2, (1,), (1,))
        ch = random_channel(dims, 5)
        noise = NoiseModel.isotropic(dims, 0.5)
        B = random_precoder(dims, 5, scale=0.5)
        W = mmse_receiver(B, ch, noise)
        dec = decompose(B, W, dims)
        coup = coupling_matrices(dec, ch)
        weights = RateWeights(np.array([0.5]))
        p_check = np.array([2.0, 3.0])
        sol = solve_gp(power_subproblem(coup, dec, noise, p_check, weights))
        p = sol.x["p_0"]
        load = coup.varsigma[:, 0] * p
        assert np.max(load / p_check) == pytest.approx(1.0, rel=1e-6)

    def test_improves_on_feasible_incumbent(self, paper_omega):
        for seed in range(10):
            dims, ch, noise, dec, coup, weights, p_check = make_power_instance(seed)
            prob = power_subproblem(coup, dec, noise, p_check, weights)
            sol = solve_gp(prob)
            xi = mmse_values(dec.G * np.sqrt(dec.p), ch, noise)
            aux = solve_gp(aux_subproblem(xi, weights))
            incumbent = surrogate_objective(solution_vector(aux, "tau", 4),
                                            solution_vector(aux, "nu", 4), xi, weights)
            assert sol.objective_value <= incumbent + 1e-9

    def test_rejects_nonpositive_d(self):
        dims, ch, noise, dec, coup, weights, p_check = make_power_instance(3)
        coup.d[0] = -0.1
        with pytest.raises(ValueError):
            power_subproblem(coup, dec, noise, p_check, weights)

    def test_two_symbol_instances_match_grid_oracle(self):
        dims = SystemDims(1, 2, (2,), (2,))
        for seed in range(5):
            _, ch, noise, dec, coup, weights, p_check = make_power_instance(
                seed, dims=dims, sigma2=0.5 + 0.2 * seed, p_check=[2.0, 2.5])
            prob = power_subproblem(coup, dec, noise, p_check, weights)
            sol = solve_gp(prob)
            assert sol.status == "converged"
            names = prob.variables
            obj, cons = problem_arrays(prob, names)
            # equality nu_0*nu_1=1: eliminate nu_1 = 1/nu_0 by substitution
            i0, i1 = names.index("nu_0"), names.index("nu_1")
            keep = [i for i in range(len(names)) if i != i1]
            obj_expts = obj[1].copy()
            obj_expts[:, i0] -= obj_expts[:, i1]
            obj_r = (obj[0], obj_expts[:, keep])
            cons_r = []
            for c, e, b in cons:
                e2 = e.copy()
                e2[:, i0] -= e2[:, i1]
                cons_r.append((c, e2[:, keep], b))
            box = []
            p_cols = []
            for j, i in enumerate(keep):
                if names[i].startswith("p_"):
                    p_cols.append(j)
                    hi = float(np.min(p_check / np.maximum(coup.varsigma[:, int(names[i][2:])], 1e-12)))
                    box.append((1e-4 * hi, hi))
                else:
                    box.append((1e-4, 1e4))
            vs = coup.varsigma

            def scale_to_boundary(Y):
                # exact projection of the power block onto the binding cap:
                # scaling all p by the same factor is feasibility-exact and
                # never hurts the objective (cross ratios are scale-free)
                p = np.exp(Y[:, p_cols])
                loads = p @ vs.T
                s = np.min(np.asarray(p_check)[None, :] / np.maximum(loads, 1e-300), axis=1)
                out = Y.copy()
                out[:, p_cols] += np.log(s)[:, None]
                return out

            ref, _ = grid_minimize(obj_r, cons_r, box, pts=16, passes=8,
                                   enrich=scale_to_boundary)
            assert abs(sol.objective_value - ref) <= 1e-4 * max(ref, 1e-12)

    def test_probed_feasible_points_never_beat_solver(self):
        dims, ch, noise, dec, coup, weights, p_check = make_power_instance(7)
        prob = power_subproblem(coup, dec, noise, p_check, weights)
        sol = solve_gp(prob)
        r = rng_for(77)
        for _ in range(1000):
            x = {}
            for name in prob.variables:
                x[name] = float(np.exp(r.uniform(-3, 3)))
            # repair the equality and the power constraints
            nus = [n for n in prob.variables if n.startswith("nu_")]
            logs = np.array([np.log(x[n]) for n in nus])
            logs -= logs.mean()
            for n, v in zip(nus, np.exp(logs)):
                x[n] = float(v)
            p = np.array([x[f"p_{l}"] for l in range(4)])
            scale = 0.999 * float(np.min(p_check / (coup.varsigma @ p)))
            if scale < 1.0:
                p *= scale
            for l in range(4):
                x[f"p_{l}"] = float(p[l])
            assert prob.objective_value(x) >= sol.objective_value - 1e-9

    def test_scaling_all_coefficients(self, paper_omega):
        # scaling every objective coefficient by c scales the optimum by c
        # and leaves the argmin unchanged
        dims, ch, noise, dec, coup, weights, p_check = make_power_instance(9)
        prob = power_subproblem(coup, dec, noise, p_check, weights)
        sol = solve_gp(prob)
        c = 7.3
        scaled = GpProblem(prob.variables,
                           [Monomial(c * m.coeff, dict(m.exponents)) for m in prob.objective],
                           prob.inequalities, prob.equalities, start=prob.start)
        sol2 = solve_gp(scaled)
        assert sol2.objective_value == pytest.approx(c * sol.objective_value, rel=1e-7)
        for name in prob.variables:
            if name.startswith("tau"):
                assert sol2.x[name] == pytest.approx(sol.x[name], rel=1e-5)


class TestDump:
    def test_round_trippable_text(self):
        prob = GpProblem(["x", "y"],
                         [Monomial(0.5, {"x": -1.0, "y": 2.0}), Monomial(1.5, {"x": 1.0})],
                         [([Monomial(2.0, {"y": 1.0})], 3.0)],
                         [(Monomial(1.0, {"x": 1.0, "y": 1.0}), 1.0)])
        text = dump_problem(prob)
        lines = text.strip().split("\n")
        assert lines[0] == "variables: x y"
        assert "objective:" in lines
        assert any(line.startswith("ineq <= 3.0") for line in lines)
        assert any(line.startswith("eq = 1.0") for line in lines)
        # one term per line: coefficient then name:exponent pairs
        assert "0.5 x:-1.0 y:2.0" in lines
