"""Tests for measurement-ensemble construction and the magnitude forward model."""

import numpy as np
import pytest

from sparsephase.ensembles import (
    MeasurementEnsemble,
    add_noise,
    forward,
    gen_cs_matrix,
    gen_phase_matrix,
    load_ensemble,
    make_ensemble,
    save_ensemble,
)


class TestGenPhaseMatrix:
    def test_complex_gaussian_energy(self):
        P = gen_phase_matrix(371, 47, "complex-gaussian", np.random.default_rng(0))
        assert P.shape == (371, 47)
        assert 0.9 <= np.mean(np.abs(P) ** 2) <= 1.1

    def test_sphere_row_norms(self):
        P = gen_phase_matrix(5, 3, "sphere-uniform", np.random.default_rng(1))
        np.testing.assert_allclose(np.linalg.norm(P, axis=1), np.sqrt(3), atol=1e-12)

    def test_deterministic(self):
        a = gen_phase_matrix(10, 4, "complex-gaussian", np.random.default_rng(5))
        b = gen_phase_matrix(10, 4, "complex-gaussian", np.random.default_rng(5))
        np.testing.assert_array_equal(a, b)

    def test_invalid(self):
        with pytest.raises(ValueError):
            gen_phase_matrix(0, 3, "complex-gaussian", np.random.default_rng(0))
        with pytest.raises(ValueError):
            gen_phase_matrix(3, 3, "bogus", np.random.default_rng(0))


class TestGenCsMatrix:
    def test_real_gaussian_columns(self):
        C = gen_cs_matrix(47, 1024, "real-gaussian", np.random.default_rng(2))
        assert np.all(C.imag == 0)
        col_norms = np.linalg.norm(C, axis=0)
        assert 0.9 <= np.mean(col_norms) <= 1.1

    def test_subsampled_dft_rows(self):
        C = gen_cs_matrix(4, 8, "subsampled-dft", np.random.default_rng(3))
        gram = C @ C.conj().T
        np.testing.assert_allclose(gram, (8 / 4) * np.eye(4), atol=1e-10)
        np.testing.assert_allclose(np.linalg.norm(C, axis=1), np.sqrt(2), atol=1e-12)

    def test_fourier_combination_shape(self):
        C = gen_cs_matrix(6, 32, "fourier-combination", np.random.default_rng(4))
        assert C.shape == (6, 32)
        assert np.iscomplexobj(C)

    def test_rejects_non_compressive(self):
        with pytest.raises(ValueError):
            gen_cs_matrix(8, 8, "real-gaussian", np.random.default_rng(0))

    def test_deterministic(self):
        a = gen_cs_matrix(5, 16, "subsampled-dft", np.random.default_rng(7))
        b = gen_cs_matrix(5, 16, "subsampled-dft", np.random.default_rng(7))
        np.testing.assert_array_equal(a, b)


class TestForward:
    def test_zero_signal(self):
        ens = make_ensemble(16, 4, 12, seed=0)
        np.testing.assert_array_equal(forward(ens, np.zeros(16)), np.zeros(12))

    def test_identity_factors(self):
        eye2 = np.eye(2, dtype=complex)
        ens = MeasurementEnsemble(P=eye2, C=eye2, A=eye2, kinds=("manual", "manual"), seed=None)
        np.testing.assert_allclose(forward(ens, np.array([1 + 1j, 0])), [2.0, 0.0])

    def test_matches_direct_summation(self):
        rng = np.random.default_rng(8)
        P = gen_phase_matrix(3, 2, "complex-gaussian", rng)
        C = gen_cs_matrix(2, 4, "real-gaussian", rng)
        ens = MeasurementEnsemble(P=P, C=C, A=P @ C, kinds=("t", "t"), seed=None)
        x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        A = P @ C
        expected = [abs(sum(A[j, k] * x[k] for k in range(4))) ** 2 for j in range(3)]
        np.testing.assert_allclose(forward(ens, x), expected, atol=1e-12)

    def test_global_phase_blind(self):
        ens = make_ensemble(20, 5, 15, seed=9)
        x = np.random.default_rng(10).standard_normal(20) * 1j
        np.testing.assert_allclose(
            forward(ens, x), forward(ens, np.exp(1j * 0.77) * x), atol=1e-12
        )

    def test_two_homogeneous(self):
        ens = make_ensemble(12, 3, 9, seed=11)
        x = np.random.default_rng(12).standard_normal(12).astype(complex)
        np.testing.assert_allclose(forward(ens, 3.0 * x), 9.0 * forward(ens, x), rtol=1e-10)

    def test_lazy_composition_matches_materialized(self):
        rng = np.random.default_rng(13)
        P = gen_phase_matrix(7, 3, "complex-gaussian", rng)
        C = gen_cs_matrix(3, 10, "real-gaussian", rng)
        eager = MeasurementEnsemble(P=P, C=C, A=P @ C, kinds=("t", "t"), seed=None)
        lazy = MeasurementEnsemble(P=P, C=C, A=None, kinds=("t", "t"), seed=None)
        for _ in range(100):
            x = rng.standard_normal(10) + 1j * rng.standard_normal(10)
            np.testing.assert_allclose(eager.apply(x), lazy.apply(x), atol=1e-10)

    def test_dimension_mismatch(self):
        ens = make_ensemble(16, 4, 12, seed=0)
        with pytest.raises(ValueError):
            forward(ens, np.zeros(15))


class TestAddNoise:
    def test_exact_realized_snr(self):
        rng = np.random.default_rng(14)
        clean = np.abs(rng.standard_normal(50)) + 0.1
        meas = add_noise(clean, 60.0, np.random.default_rng(15))
        realized = 10 * np.log10(
            np.linalg.norm(clean) ** 2 / np.linalg.norm(meas.noise) ** 2
        )
        assert realized == pytest.approx(60.0, abs=1e-9)
        np.testing.assert_array_equal(meas.b, clean + meas.noise)

    def test_noiseless_sentinel(self):
        clean = np.ones(8)
        meas = add_noise(clean, float("inf"), np.random.default_rng(0))
        np.testing.assert_array_equal(meas.noise, np.zeros(8))
        np.testing.assert_array_equal(meas.b, clean)

    def test_seeds_change_direction_not_norm(self):
        clean = np.linspace(1, 2, 30)
        a = add_noise(clean, 20.0, np.random.default_rng(1))
        b = add_noise(clean, 20.0, np.random.default_rng(2))
        assert not np.allclose(a.noise, b.noise)
        assert np.linalg.norm(a.noise) == pytest.approx(np.linalg.norm(b.noise), rel=1e-12)

    def test_zero_clean_rejected(self):
        with pytest.raises(ValueError):
            add_noise(np.zeros(5), 20.0, np.random.default_rng(0))


class TestPersistence:
    def test_roundtrip_regenerates_exactly(self, tmp_path):
        ens = make_ensemble(64, 10, 50, p_kind="sphere-uniform", c_kind="subsampled-dft", seed=77)
        path = tmp_path / "ensemble.json"
        save_ensemble(ens, path)
        back = load_ensemble(path)
        np.testing.assert_array_equal(ens.P, back.P)
        np.testing.assert_array_equal(ens.C, back.C)
        assert back.kinds == ens.kinds
        assert back.seed == 77

    def test_manual_ensembles_not_persistable(self, tmp_path):
        eye = np.eye(3, dtype=complex)
        ens = MeasurementEnsemble(P=eye, C=eye, A=eye, kinds=("m", "m"), seed=None)
        with pytest.raises(ValueError):
            save_ensemble(ens, tmp_path / "nope.json")
