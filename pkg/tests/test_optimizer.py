import numpy as np
import pytest

from pawsr.model import ChannelSet, NoiseModel, SystemDims, mmse_values, weighted_sum_rate
from pawsr.optimizer import (OptimizationError, SolveOptions, antenna_powers,
                             evaluate_solution, init_precoder,
                             maximize_weighted_sum_rate)

from conftest import random_channel


def scalar_problem(h=1.0, p=1.0, sigma2=1.0):
    dims = SystemDims(1, 1, (1,), (1,))
    ch = ChannelSet(dims, np.array([[h + 0j]]))
    noise = NoiseModel.isotropic(dims, sigma2)
    return dims, ch, noise, np.array([p])


class TestInitPrecoder:
    def test_single_antenna_row_power(self):
        dims = SystemDims(1, 1, (1,), (1,))
        ch = ChannelSet(dims, np.array([[2.0 - 1j]]))
        B = init_precoder(ch, np.array([3.0]))
        assert antenna_powers(B)[0] == pytest.approx(3.0, rel=1e-14)

    def test_reference_dims_full_power_rows(self, paper_dims):
        ch = random_channel(paper_dims, 0)
        B = init_precoder(ch, np.full(4, 2.5))
        assert np.allclose(antenna_powers(B), 2.5, atol=1e-12)
        assert B.shape == (4, 4)

    def test_rows_keep_channel_direction(self, paper_dims):
        ch = random_channel(paper_dims, 1)
        B = init_precoder(ch, np.full(4, 2.5))
        # each row is a positive multiple of the channel's leading block row
        lead = ch.H[:, :4]
        for n in range(4):
            ratio = B[n] / lead[n]
            assert np.allclose(ratio, ratio[0], rtol=1e-12)
            assert ratio[0].real > 0 and abs(ratio[0].imag) < 1e-15

    def test_rejects_wrong_cap_count(self, paper_dims):
        ch = random_channel(paper_dims, 0)
        with pytest.raises(ValueError):
            init_precoder(ch, np.full(3, 2.5))


class TestScalarGroundTruth:
    @pytest.mark.parametrize("p,sigma2,omega", [(1.0, 1.0, 0.5), (4.0, 0.5, 0.3)])
    def test_converges_to_capacity(self, p, sigma2, omega):
        dims, ch, noise, p_check = scalar_problem(p=p, sigma2=sigma2)
        res = maximize_weighted_sum_rate(ch, noise, p_check, [omega])
        assert res.converged
        rep = evaluate_solution(res.B, ch, noise, [omega], p_check)
        expect = omega * np.log2(1.0 + p / sigma2)
        assert rep.weighted_sum_rate == pytest.approx(expect, abs=1e-6)
        assert rep.total_power == pytest.approx(p, rel=1e-6)


class TestOuterLoop:
    @pytest.mark.parametrize("sigma2", [5.0, 0.5])
    def test_reference_configuration(self, paper_dims, paper_omega, sigma2):
        p_check = np.full(4, 2.5)
        ch = random_channel(paper_dims, 3)
        noise = NoiseModel.isotropic(paper_dims, sigma2)
        res = maximize_weighted_sum_rate(ch, noise, p_check, paper_omega)
        objs = res.trace.objectives()
        assert np.all(np.diff(objs) <= 1e-9)
        for rec in res.trace.records:
            assert np.max(rec.powers - p_check) <= 1e-8
            if rec.powers_post_transfer is not None:
                assert np.max(rec.powers_post_transfer - p_check) <= 1e-8

    def test_rate_consistency_between_paths(self, paper_dims, paper_omega):
        # rate from the minimum MSEs vs rate reported on the trace record
        ch = random_channel(paper_dims, 4)
        noise = NoiseModel.isotropic(paper_dims, 0.5)
        res = maximize_weighted_sum_rate(ch, noise, np.full(4, 2.5), paper_omega)
        xi = mmse_values(res.B, ch, noise)
        direct = weighted_sum_rate(xi, paper_omega)
        assert res.trace.records[-1].rate == pytest.approx(direct, abs=1e-10)

    def test_gp_view_agrees_with_mmse_view(self, paper_dims, paper_omega):
        # the power-domain MSE expansion evaluated on the final decomposition
        # must reproduce the closed-form minimum MSEs
        from pawsr.model import coupling_matrices, decompose, mse_from_powers, mmse_receiver
        ch = random_channel(paper_dims, 5)
        noise = NoiseModel.isotropic(paper_dims, 0.5)
        res = maximize_weighted_sum_rate(ch, noise, np.full(4, 2.5), paper_omega)
        W = mmse_receiver(res.B, ch, noise)
        dec = decompose(res.B, W, paper_dims)
        coup = coupling_matrices(dec, ch)
        xi_gp = mse_from_powers(dec.p, coup, dec.alpha, dec.U_blocks, noise)
        rate_gp = weighted_sum_rate(xi_gp, paper_omega)
        rate_direct = weighted_sum_rate(mmse_values(res.B, ch, noise), paper_omega)
        assert rate_gp == pytest.approx(rate_direct, abs=1e-8)

    def test_deterministic(self, paper_dims, paper_omega):
        ch = random_channel(paper_dims, 6)
        noise = NoiseModel.isotropic(paper_dims, 0.5)
        r1 = maximize_weighted_sum_rate(ch, noise, np.full(4, 2.5), paper_omega)
        r2 = maximize_weighted_sum_rate(ch, noise, np.full(4, 2.5), paper_omega)
        assert np.array_equal(r1.B, r2.B)
        assert r1.trace.objectives().tolist() == r2.trace.objectives().tolist()

    def test_partial_trace_on_failure(self, paper_dims, paper_omega):
        ch = random_channel(paper_dims, 7)
        noise = NoiseModel.isotropic(paper_dims, 0.5)
        opts = SolveOptions(fixed_point_max_iters=1)
        with pytest.raises(OptimizationError) as exc:
            maximize_weighted_sum_rate(ch, noise, np.full(4, 2.5), paper_omega, opts)
        assert len(exc.value.trace.records) >= 1
        assert exc.value.iteration == 1

    def test_objective_recorded_from_aux_solution(self, paper_dims, paper_omega):
        from pawsr.model import surrogate_objective, RateWeights
        ch = random_channel(paper_dims, 8)
        noise = NoiseModel.isotropic(paper_dims, 0.5)
        res = maximize_weighted_sum_rate(ch, noise, np.full(4, 2.5), paper_omega)
        weights = RateWeights(paper_omega)
        xi = mmse_values(res.B, ch, noise)
        assert res.trace.records[-1].objective == pytest.approx(
            surrogate_objective(res.tau, res.nu, xi, weights), rel=1e-12)


class TestEvaluateSolution:
    def test_zero_precoder(self, paper_dims, paper_omega):
        ch = random_channel(paper_dims, 0)
        noise = NoiseModel.isotropic(paper_dims, 1.0)
        rep = evaluate_solution(np.zeros((4, 4), complex), ch, noise, paper_omega,
                                np.full(4, 2.5))
        assert rep.weighted_sum_rate == 0.0 and rep.total_power == 0.0

    def test_init_precoder_total_power(self, paper_dims, paper_omega):
        ch = random_channel(paper_dims, 0)
        noise = NoiseModel.isotropic(paper_dims, 1.0)
        B = init_precoder(ch, np.full(4, 2.5))
        rep = evaluate_solution(B, ch, noise, paper_omega, np.full(4, 2.5))
        assert rep.total_power == pytest.approx(10.0, rel=1e-12)

    def test_total_power_matches_elementwise_sum(self, paper_dims, paper_omega):
        from conftest import random_precoder
        B = random_precoder(paper_dims, 9)
        ch = random_channel(paper_dims, 9)
        noise = NoiseModel.isotropic(paper_dims, 0.7)
        rep = evaluate_solution(B, ch, noise, paper_omega, np.full(4, 2.5))
        manual = float(sum(abs(B[n, l]) ** 2 for n in range(4) for l in range(4)))
        assert rep.total_power == pytest.approx(manual, abs=1e-12)
