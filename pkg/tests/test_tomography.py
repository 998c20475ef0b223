import numpy as np
import pytest

from oamlink.errors import ConvergenceError, ValidationError
from oamlink.measurement import MeasurementSetting
from oamlink.quantum import DensityMatrix, density_from_ket, maximally_mixed, trace_distance
from oamlink.states import basis_state, bell_state
from oamlink.tomography import (
    OAM_SIDE,
    POL_SIDE,
    MleParamsQubit,
    MleParamsTwoQubit,
    TomographyCounts,
    _two_qubit_design,
    _two_qubit_loss_and_grad,
    forward_counts,
    likelihood_loss,
    mle,
    qubit_mle_fit,
    qubit_probabilities,
    stokes_from_counts,
    stokes_reconstruct,
    two_qubit_loss,
    two_qubit_mle_fit,
    two_qubit_settings,
)

from conftest import random_density

IDEAL = {
    "R": np.array([[1, 0], [0, 0]]),
    "L": np.array([[0, 0], [0, 1]]),
    "H": np.array([[1, 1], [1, 1]]) / 2,
    "D": np.array([[1, -1j], [1j, 1]]) / 2,
}


class TestCounts:
    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            TomographyCounts(("R", "L", "H", "A"), (1, 2, 3))

    def test_negative(self):
        with pytest.raises(ValidationError):
            TomographyCounts.qubit([1, -1, 0, 0])

    def test_normalization(self):
        assert TomographyCounts.qubit([3, 4, 5, 6]).normalization == 7
        data = TomographyCounts.two_qubit(range(16))
        # (R, L) x (R, L) are indices 0, 1, 4, 5
        assert data.normalization == 0 + 1 + 4 + 5

    def test_zero_counts(self):
        with pytest.raises(ValidationError):
            qubit_mle_fit(TomographyCounts.qubit([0, 0, 0, 0]))

    def test_wrong_qubit_basis(self):
        with pytest.raises(ValidationError):
            qubit_mle_fit(TomographyCounts.qubit([1, 1, 1, 1], labels=("R", "L", "H", "D")))


class TestStokes:
    @pytest.mark.parametrize("label", list(IDEAL))
    def test_ideal_states(self, label):
        rho = density_from_ket(basis_state(label))
        probs = [abs(basis_state(b).inner(basis_state(label))) ** 2 for b in ("R", "L", "H", "D")]
        assert np.allclose(stokes_reconstruct(*probs).entries, rho.entries, atol=1e-12)

    def test_random_mixed(self, rng):
        for _ in range(20):
            rho = random_density(rng, 2)
            probs = [np.real(np.vdot(basis_state(b).amplitudes, rho.entries @ basis_state(b).amplitudes))
                     for b in ("R", "L", "H", "D")]
            assert np.allclose(stokes_reconstruct(*probs).entries, rho.entries, atol=1e-12)

    def test_unphysical_is_operator(self):
        op = stokes_reconstruct(1.0, 0.0, 1.0, 1.0)
        assert np.linalg.eigvalsh(op.entries).min() < 0
        with pytest.raises(ValidationError):
            DensityMatrix(op.entries)

    def test_sum_check(self):
        with pytest.raises(ValidationError):
            stokes_reconstruct(0.6, 0.6, 0.5, 0.5)

    def test_from_counts(self):
        rho = density_from_ket(basis_state("D"))
        counts = forward_counts(rho, total=1000).counts
        assert np.allclose(stokes_from_counts(counts).entries, rho.entries, atol=1e-12)


class TestQubitMle:
    def test_closed_form_probabilities(self, rng):
        for _ in range(10):
            t = rng.normal(size=4)
            p = qubit_probabilities(MleParamsQubit.from_vector(t))
            rho = MleParamsQubit.from_vector(t).rho().entries
            chi = [basis_state(b).amplitudes for b in ("R", "L", "H", "A")]
            direct = [np.real(np.vdot(c, rho @ c)) for c in chi]
            assert np.allclose(p, direct, atol=1e-14)

    def test_loss_zero_at_truth(self):
        assert likelihood_loss([0.5, 0.5], [50, 50], 100) == 0.0
        assert likelihood_loss([0.5, 0.5], [60, 40], 100) == pytest.approx(2.0)

    @pytest.mark.parametrize("label", list(IDEAL))
    def test_ideal_reconstruction(self, label):
        rho = qubit_mle_fit(forward_counts(density_from_ket(basis_state(label)))).rho
        assert np.max(np.abs(rho.entries - IDEAL[label])) < 1e-4

    def test_random_states(self, rng):
        for _ in range(20):
            rho = random_density(rng, 2)
            fit = qubit_mle_fit(forward_counts(rho), seed=1)
            assert trace_distance(fit.rho, rho) < 1e-3

    def test_output_is_physical_for_unphysical_counts(self):
        # linear inversion of these counts has a negative eigenvalue
        data = TomographyCounts.qubit([100, 0, 100, 0])
        rho = qubit_mle_fit(data).rho
        assert rho.eigenvalues().min() >= 0

    def test_deterministic(self):
        data = TomographyCounts.qubit([70, 30, 60, 45])
        a, b = qubit_mle_fit(data, seed=3), qubit_mle_fit(data, seed=3)
        assert np.array_equal(a.rho.entries, b.rho.entries)

    def test_convergence_error_carries_best(self):
        with pytest.raises(ConvergenceError) as info:
            qubit_mle_fit(TomographyCounts.qubit([70, 30, 60, 45]), max_evals=10)
        assert isinstance(info.value.best, DensityMatrix)


class TestTwoQubitDesign:
    def test_row_major_order(self):
        s = two_qubit_settings(POL_SIDE, OAM_SIDE)
        assert s[0] == MeasurementSetting("h", "R")
        assert s[1] == MeasurementSetting("h", "L")
        assert s[4] == MeasurementSetting("v", "R")

    def test_incomplete_basis(self):
        settings = two_qubit_settings(("R", "L", "H", "V"), OAM_SIDE)
        with pytest.raises(ValidationError, match="complete"):
            _two_qubit_design(settings)

    def test_wrong_size(self):
        with pytest.raises(ValidationError):
            _two_qubit_design(two_qubit_settings()[:15])

    def test_gradient_matches_finite_differences(self, rng):
        data = forward_counts(random_density(rng, 4))
        vectors, idx = _two_qubit_design(data.basis_labels)
        n = np.asarray(data.counts)
        t = rng.normal(size=16)
        _, grad = _two_qubit_loss_and_grad(t, vectors, n, n[idx].sum())
        h = 1e-6
        fd = np.array([
            (two_qubit_loss(t + h * e, data) - two_qubit_loss(t - h * e, data)) / (2 * h)
            for e in np.eye(16)
        ])
        assert np.allclose(grad, fd, rtol=1e-5, atol=1e-5)

    def test_params_rho(self):
        t = np.concatenate([np.ones(4), np.zeros(12)])
        assert np.allclose(MleParamsTwoQubit(tuple(t)).rho().entries, maximally_mixed(4).entries)


class TestTwoQubitMle:
    def test_bell_state(self):
        rho = density_from_ket(bell_state("oam-minus"))
        fit = two_qubit_mle_fit(forward_counts(rho))
        assert trace_distance(fit.rho, rho) < 5e-3

    def test_hybrid_design(self):
        rho = density_from_ket(bell_state("hybrid-plus"))
        basis = two_qubit_settings(POL_SIDE, OAM_SIDE)
        fit = two_qubit_mle_fit(forward_counts(rho, basis))
        assert trace_distance(fit.rho, rho) < 5e-3

    def test_random(self, rng):
        for _ in range(5):
            rho = random_density(rng, 4)
            assert trace_distance(mle(forward_counts(rho)), rho) < 5e-3

    def test_deterministic(self, rng):
        data = forward_counts(random_density(rng, 4), total=500)
        a, b = two_qubit_mle_fit(data, seed=2), two_qubit_mle_fit(data, seed=2)
        assert np.array_equal(a.rho.entries, b.rho.entries)
