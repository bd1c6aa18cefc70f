"""End-to-end tests for the composed two-stage recovery."""

import numpy as np
import pytest

from sparsephase.ensembles import add_noise, forward, make_ensemble
from sparsephase.pipeline import RecoverOptions, check_cpr_error_bound, recover
from sparsephase.signals import SparseSignal, align_phase, gen_sparse_signal


def small_instance(seed=0, n=32, s=2, m=12, m_tilde=96):
    sig = gen_sparse_signal(n, s, np.random.default_rng(seed))
    ens = make_ensemble(n, m, m_tilde, seed=seed + 1)
    return sig, ens


class TestRecover:
    def test_noiseless_recovery(self):
        sig, ens = small_instance(seed=3)
        res = recover(ens, forward(ens, sig.values), ground_truth=sig)
        assert res.error.relative_l2 < 1e-5
        assert res.success is True
        assert res.stage1.converged and res.stage2.converged

    def test_zero_measurements_give_zero_estimate(self):
        _, ens = small_instance(seed=5)
        res = recover(ens, np.zeros(ens.m_tilde))
        np.testing.assert_array_equal(res.x_hat, np.zeros(ens.n))
        assert res.error is None and res.success is None

    def test_length_mismatch(self):
        _, ens = small_instance(seed=7)
        with pytest.raises(ValueError):
            recover(ens, np.zeros(ens.m_tilde - 1))

    def test_timing_fields_consistent(self):
        sig, ens = small_instance(seed=9)
        res = recover(ens, forward(ens, sig.values), ground_truth=sig)
        assert res.total_seconds >= res.stage1.seconds + res.stage2.seconds - 1e-3
        assert res.stage1.iterations > 0 and res.stage2.iterations >= 0

    def test_compressibility_stability(self):
        # one extra 1e-9 entry moves the recovery error by at most 1e-6
        sig, ens = small_instance(seed=11)
        exact = recover(ens, forward(ens, sig.values), ground_truth=sig)
        bumped = sig.values.copy()
        spot = (sig.support[0] + 7) % sig.n
        bumped[spot] += 1e-9
        res2 = recover(ens, forward(ens, bumped), ground_truth=bumped)
        assert abs(exact.error.relative_l2 - res2.error.relative_l2) <= 1e-6

    def test_global_phase_invariance_end_to_end(self):
        sig, ens = small_instance(seed=13)
        b1 = forward(ens, sig.values)
        b2 = forward(ens, np.exp(1j * 0.456) * sig.values)
        res1 = recover(ens, b1)
        res2 = recover(ens, b2)
        assert align_phase(res1.x_hat, res2.x_hat).aligned_l2 < 1e-7

    def test_measurement_scale_covariance(self):
        sig, ens = small_instance(seed=15)
        b = forward(ens, sig.values)
        c = 16.0
        base = recover(ens, b)
        scaled = recover(ens, c * b)
        ratio = np.linalg.norm(scaled.x_hat) / np.linalg.norm(base.x_hat)
        assert ratio == pytest.approx(np.sqrt(c), rel=1e-5)

    def test_deterministic_given_inputs(self):
        sig, ens = small_instance(seed=17)
        b = forward(ens, sig.values)
        r1 = recover(ens, b, ground_truth=sig)
        r2 = recover(ens, b, ground_truth=sig)
        np.testing.assert_array_equal(r1.x_hat, r2.x_hat)
        assert r1.eta_used == r2.eta_used
        assert r1.stage1.iterations == r2.stage1.iterations
        assert r1.stage2.iterations == r2.stage2.iterations
        assert r1.error.relative_l2 == r2.error.relative_l2

    def test_success_threshold_drives_flag(self):
        sig, ens = small_instance(seed=19)
        b = forward(ens, sig.values)
        strict = recover(ens, b, RecoverOptions(success_threshold=1e-30), ground_truth=sig)
        assert strict.success is False
        loose = recover(ens, b, RecoverOptions(success_threshold=1.0), ground_truth=sig)
        assert loose.success is True


class TestEtaPrecedence:
    def test_explicit_eta_wins(self):
        sig, ens = small_instance(seed=21)
        b = forward(ens, sig.values)
        res = recover(ens, b, RecoverOptions(eta=0.123, oracle_eta=True), ground_truth=sig)
        assert res.eta_used == 0.123

    def test_oracle_eta_uses_ground_truth(self):
        sig, ens = small_instance(seed=23)
        b = forward(ens, sig.values)
        res = recover(ens, b, RecoverOptions(oracle_eta=True), ground_truth=sig)
        # oracle radius equals the realized stage-1 aligned error, which the
        # noiseless run makes tiny
        assert res.eta_used < 1e-6

    def test_oracle_eta_requires_truth(self):
        _, ens = small_instance(seed=25)
        with pytest.raises(ValueError):
            recover(ens, np.ones(ens.m_tilde), RecoverOptions(oracle_eta=True))

    def test_heuristic_eta_default(self):
        sig, ens = small_instance(seed=27)
        res = recover(ens, forward(ens, sig.values), ground_truth=sig)
        assert res.eta_used >= 1e-8  # floor applies on clean data


class TestCprErrorBound:
    def test_exact_recovery_regime_flag(self):
        sig, ens = small_instance(seed=29)
        res = recover(ens, forward(ens, sig.values), ground_truth=sig)
        report = check_cpr_error_bound(res, sig, sig.s)
        assert report.exact_recovery_regime
        assert report.sparsity_term == 0.0 and report.noise_term == 0.0

    def test_noise_term_monotone_in_noise(self):
        sig, ens = small_instance(seed=31)
        clean = forward(ens, sig.values)
        terms = []
        for snr in (60.0, 40.0, 20.0):
            meas = add_noise(clean, snr, np.random.default_rng(33))
            res = recover(ens, meas.b, ground_truth=sig)
            report = check_cpr_error_bound(res, sig, sig.s, ensemble=ens, measurements=meas)
            terms.append(report.noise_term)
        assert terms[0] < terms[1] < terms[2]

    def test_noise_term_requires_ensemble(self):
        sig, ens = small_instance(seed=35)
        clean = forward(ens, sig.values)
        meas = add_noise(clean, 20.0, np.random.default_rng(0))
        res = recover(ens, meas.b, ground_truth=sig)
        with pytest.raises(ValueError):
            check_cpr_error_bound(res, sig, sig.s, measurements=meas)

    def test_ratio_bounded_on_noiseless_batch(self):
        # the bound constants hold on the high-probability recovery event, so
        # the calibration excludes the rare draws where l1 recovery itself fails
        ratios = []
        successes = 0
        for seed in range(10):
            sig, ens = small_instance(seed=100 + seed, n=64, s=3, m=20, m_tilde=160)
            res = recover(ens, forward(ens, sig.values), ground_truth=sig)
            report = check_cpr_error_bound(res, sig, sig.s)
            if res.success:
                successes += 1
                ratios.append(report.ratio)
        assert successes >= 8
        assert max(ratios) < 1e3

    def test_compressible_signal_terms(self):
        # a slightly compressible ground truth turns on the sparsity term
        sig, ens = small_instance(seed=37)
        values = sig.values.copy()
        values[(sig.support[0] + 5) % sig.n] = 1e-3
        values /= np.linalg.norm(values)
        truth = SparseSignal(values=values, support=sig.support, n=sig.n, s=sig.s)
        res = recover(ens, forward(ens, values), ground_truth=truth)
        report = check_cpr_error_bound(res, truth, sig.s)
        assert report.sparsity_term > 0
        assert not report.exact_recovery_regime
        assert np.isfinite(report.ratio)
