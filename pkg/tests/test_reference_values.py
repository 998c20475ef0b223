"""Fixed input/output pairs, each checked against an independent derivation."""

import math

import numpy as np
import pytest

from oamlink.conversion import (
    SfgParams,
    SpectralWindows,
    apply_conversion,
    conversion_efficiency,
    sfg_mode_rotation,
    spectral_acceptance,
)
from oamlink.measurement import (
    MeasurementSetting,
    NoiseModel,
    accidental_coincidences,
    apply_noise_state,
    coincidence_probability,
    expected_counts,
    projector,
    sample_counts,
    subtract_background,
)
from oamlink.metrics import FringeScan, chsh_S, correlation_E, fit_fringe, poisson_error, witness
from oamlink.quantum import density_from_ket, fidelity, maximally_mixed, partial_trace, tensor, trace_distance
from oamlink.states import basis_state, bell_state, theta_state
from oamlink.tomography import (
    OAM_SIDE,
    POL_SIDE,
    MleParamsQubit,
    TomographyCounts,
    forward_counts,
    qubit_mle,
    qubit_probabilities,
    stokes_reconstruct,
    two_qubit_mle,
    two_qubit_settings,
)

RHO_R = np.diag([1.0, 0.0])
RHO_H = np.full((2, 2), 0.5)
WERNER = apply_noise_state(density_from_ket(bell_state("oam-minus")), NoiseModel(werner_v=0.845))


class TestQuantumCore:
    def test_product_of_mixed(self):
        assert np.allclose(tensor(maximally_mixed(2), maximally_mixed(2)).entries, np.eye(4) / 4)

    def test_fidelity_mixed(self):
        assert fidelity(maximally_mixed(2), basis_state("D")) == pytest.approx(0.5)

    def test_werner_fidelity(self):
        assert fidelity(WERNER, bell_state("oam-minus")) == pytest.approx(0.88375, abs=1e-12)

    def test_marginals(self):
        rl = density_from_ket(tensor(basis_state("R"), basis_state("L")))
        assert np.allclose(partial_trace(rl).entries, RHO_R)
        assert np.allclose(partial_trace(WERNER).entries, np.eye(2) / 2)

    def test_bell_orthogonality(self):
        assert fidelity(density_from_ket(bell_state("oam-minus")), bell_state("oam-plus")) == pytest.approx(0.0, abs=1e-15)


class TestConversion:
    def test_rotation_values(self):
        assert np.allclose(sfg_mode_rotation(SfgParams(0.0)).entries, np.eye(2))
        assert np.allclose(sfg_mode_rotation(SfgParams(math.pi / 2)).entries, [[0, -1], [1, 0]])
        assert np.allclose(np.diag(sfg_mode_rotation(SfgParams(math.pi / 4)).entries), [1 / math.sqrt(2)] * 2)

    def test_efficiency_values(self):
        assert conversion_efficiency(SfgParams(0.0)) == 0.0
        assert conversion_efficiency(SfgParams(math.pi / 4)) == pytest.approx(0.5)

    def test_heralded(self):
        rho = density_from_ket(bell_state("oam-minus"))
        out, eta = apply_conversion(rho, 0.002)
        assert out is rho and eta == 0.002

    def test_acceptance_values(self):
        assert spectral_acceptance(SpectralWindows(1.0, 1.0)) == 1.0
        assert spectral_acceptance(SpectralWindows(2.5, 1.0)) == pytest.approx(0.4)


class TestMeasurementSim:
    def test_chi4_projector(self):
        chi4 = np.array([1, -1j]) / math.sqrt(2)
        assert np.allclose(projector("A").entries, np.outer(chi4, chi4.conj()))

    def test_theta_projector(self):
        v = theta_state(math.pi / 8).amplitudes
        assert np.allclose(projector({"theta": math.pi / 8}).entries, np.outer(v, v.conj()))

    def test_coincidence_values(self):
        rho = density_from_ket(bell_state("oam-minus"))
        assert coincidence_probability(rho, MeasurementSetting({"theta": math.pi / 2}, {"theta": 0.0})) == pytest.approx(0.5)
        assert coincidence_probability(rho, MeasurementSetting({"theta": 0.7}, {"theta": 0.7})) == pytest.approx(0.0, abs=1e-15)
        hybrid = density_from_ket(bell_state("hybrid-plus"))
        assert coincidence_probability(hybrid, MeasurementSetting("d", {"theta": 0.0})) == pytest.approx(0.5)

    def test_full_depolarization(self):
        rho = apply_noise_state(density_from_ket(bell_state("oam-minus")), NoiseModel(werner_v=0.0))
        assert np.allclose(rho.entries, np.eye(4) / 4)

    def test_expected_counts(self):
        assert expected_counts(0.5, 10, 100) == 500
        assert expected_counts(0.0, 7, 3) == 0
        assert expected_counts(math.sin(math.pi / 8) ** 2 / 2, 2, 900) == pytest.approx(131.8, abs=0.05)

    def test_accidental_values(self):
        assert accidental_coincidences(NoiseModel(1e4, 1e4, 1.6e-9), 100) == pytest.approx(16.0)
        assert accidental_coincidences(NoiseModel(1e3, 1e4, 1.6e-9), 900) == pytest.approx(14.4)

    def test_large_sample_moments(self):
        draws = np.array([sample_counts(500.0, seed=12, index=k) for k in range(100_000)])
        assert draws.mean() == pytest.approx(500, rel=0.01)
        assert draws.var() == pytest.approx(500, rel=0.03)

    def test_subtraction_values(self):
        assert subtract_background(100, 16) == (84.0, False)
        assert subtract_background(10, 16) == (0.0, True)
        assert subtract_background(500, 0) == (500.0, False)


class TestTomographyValues:
    def test_stokes(self):
        assert np.allclose(stokes_reconstruct(1, 0, 0.5, 0.5).entries, RHO_R)
        assert np.allclose(stokes_reconstruct(0.5, 0.5, 1, 0.5).entries, RHO_H)
        assert np.allclose(stokes_reconstruct(0.5, 0.5, 0.5, 0.5).entries, np.eye(2) / 2)

    @pytest.mark.parametrize(
        "t, probs",
        [((1, 0, 0, 0), (1, 0, 0.5, 0.5)), ((0, 1, 0, 0), (0, 1, 0.5, 0.5)), ((1, 1, 0, 0), (0.5, 0.5, 0.5, 0.5))],
    )
    def test_parametrization(self, t, probs):
        assert np.allclose(qubit_probabilities(MleParamsQubit(*t)), probs)

    def test_parametrization_states(self):
        assert np.allclose(MleParamsQubit(1, 0, 0, 0).rho().entries, RHO_R)
        assert np.allclose(MleParamsQubit(1, 1, 0, 0).rho().entries, np.eye(2) / 2)

    @pytest.mark.parametrize(
        "counts, target",
        [((1000, 0, 500, 500), RHO_R), ((500, 500, 1000, 500), RHO_H), ((500, 500, 500, 500), np.eye(2) / 2)],
    )
    def test_qubit_counts(self, counts, target):
        rho = qubit_mle(TomographyCounts.qubit(counts))
        assert 0.5 * np.abs(np.linalg.eigvalsh(rho.entries - target)).sum() < 1e-4

    def test_hybrid_bell(self):
        psi = bell_state("hybrid-plus")
        data = forward_counts(density_from_ket(psi), two_qubit_settings(POL_SIDE, OAM_SIDE))
        assert fidelity(two_qubit_mle(data), psi) >= 0.9999

    def test_product_state(self):
        psi = tensor(basis_state("h"), basis_state("R"))
        data = forward_counts(density_from_ket(psi), two_qubit_settings(POL_SIDE, OAM_SIDE))
        assert fidelity(two_qubit_mle(data), psi) >= 0.9999

    def test_werner(self):
        rho = two_qubit_mle(forward_counts(WERNER))
        assert fidelity(rho, bell_state("oam-minus")) == pytest.approx(0.884, abs=0.002)
        assert trace_distance(rho, WERNER) < 1e-4


class TestMetricValues:
    def test_twelve_point_fringe(self):
        angles = tuple(k * math.pi / 12 for k in range(12))
        counts = tuple(100 * (1 + 0.85 * math.cos(2 * t - 0.3)) for t in angles)
        fit = fit_fringe(FringeScan(angles, counts))
        assert fit.visibility == pytest.approx(0.85, abs=1e-10)
        assert fit.phase == pytest.approx(0.3, abs=1e-10)

    def test_ideal_fringe_full_contrast(self):
        rho = density_from_ket(bell_state("oam-minus"))
        angles = tuple(k * math.pi / 12 for k in range(12))
        counts = [coincidence_probability(rho, MeasurementSetting({"theta": 0.0}, {"theta": t})) for t in angles]
        assert fit_fringe(FringeScan(angles, counts)).visibility == pytest.approx(1.0, abs=1e-10)

    def test_witness_values(self):
        assert witness(1, 1) == 2
        assert witness(0.5, 0.5) == 1.0

    def test_correlation_values(self):
        assert correlation_E(1, 1, 0, 0) == 1.0
        assert correlation_E(7, 7, 7, 7) == 0.0

    def test_product_state_chsh(self):
        rho = density_from_ket(tensor(basis_state("R"), basis_state("L")))
        assert chsh_S(rho=rho).S == pytest.approx(0.0, abs=1e-15)

    def test_bootstrap_delta_method(self):
        res = poisson_error(lambda c: c[0] / (c[0] + c[1]), [100, 100], resamples=10_000, seed=0)
        assert res.sigma == pytest.approx(0.0354, rel=0.2)

    def test_bootstrap_shrinks_with_counts(self):
        f = lambda c: c[0] / (c[0] + c[1])  # noqa: E731
        small = poisson_error(f, [1e6, 1e6], resamples=200).sigma
        large = poisson_error(f, [1e8, 1e8], resamples=200).sigma
        assert large < small < 1e-3
        assert large / small == pytest.approx(0.1, rel=0.3)
