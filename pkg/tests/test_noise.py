"""Tests for flux sensitivities, dephasing rates and sweeps."""

import math

import numpy as np
import pytest

from flatsonium.circuit import FluxBias, FluxMode
from flatsonium.noise import (
    DephasingProfile,
    ZETA,
    NoiseModel,
    NoiseModelError,
    SensitivityError,
    beta_form_local_rate,
    coherence_envelope,
    dephasing_sweep,
    flux_sensitivity,
    hellmann_feynman_sensitivity,
    local_amplitude_overlay,
    mode_dephasing_rate,
    richardson_sensitivity,
    self_consistent_log_factor,
    total_dephasing_rate,
    with_mode,
)


class TestNoiseModel:
    """Test noise model validation."""

    def test_defaults(self):
        """Global noise of 5 uPhi0, lf = 4."""
        model = NoiseModel()
        assert model.a_s == 5e-6
        assert model.a_d == 0.0
        assert model.log_factor == 4.0

    @pytest.mark.parametrize("kwargs", [
        {"a_s": -1e-6},
        {"a_d": math.nan},
        {"c_sd": 1.5},
        {"c_sd": -0.1},
        {"log_factor": 0.0},
        {"f_ir_hz": 0.0},
    ])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(NoiseModelError):
            NoiseModel(**kwargs)

    def test_is_value_error(self):
        """Callers may catch ValueError."""
        with pytest.raises(ValueError):
            NoiseModel(c_sd=2.0)

    def test_cross_amplitude(self):
        """A_sd^2 = c A_s A_d."""
        model = NoiseModel.correlated(5e-6, 1e-6, c_sd=0.5)
        assert model.cross_amplitude_sq == pytest.approx(2.5e-12)

    def test_constructors(self):
        assert NoiseModel.global_only(3e-6).a_d == 0.0
        assert NoiseModel.uncorrelated(3e-6, 1e-6).c_sd == 0.0
        assert NoiseModel.correlated(3e-6, 1e-6).c_sd == 1.0

    def test_zeta(self):
        """zeta = exp(3/2 - gamma_E) / (2 pi)."""
        assert ZETA == pytest.approx(0.400479, abs=1e-6)


class TestWithMode:
    """Test restricting a model to a run mode."""

    def test_global_only(self):
        model = with_mode(NoiseModel.correlated(5e-6, 1e-6), "global-only")
        assert model.a_d == 0.0
        assert model.c_sd == 0.0

    def test_uncorrelated(self):
        model = with_mode(NoiseModel.correlated(5e-6, 1e-6), "uncorrelated")
        assert model.a_d == 1e-6
        assert model.c_sd == 0.0

    def test_correlated_unchanged(self):
        model = NoiseModel.correlated(5e-6, 1e-6)
        assert with_mode(model, "correlated") is model

    def test_unknown(self):
        with pytest.raises(NoiseModelError):
            with_mode(NoiseModel(), "pink")


class TestModeRate:
    """Test single-mode rates."""

    def test_reference_value(self):
        """2 pi * 4 * 5e-6 * 19.26 GHz = 2.42e6 /s."""
        assert mode_dephasing_rate(5e-6, 19.26) == pytest.approx(2.4203e6, rel=1e-4)

    def test_sign_ignored(self):
        assert mode_dephasing_rate(5e-6, -3.0) == mode_dephasing_rate(5e-6, 3.0)

    def test_linear_in_amplitude(self):
        """Doubling A doubles the rate exactly."""
        assert mode_dephasing_rate(1e-5, 7.3) == 2 * mode_dephasing_rate(5e-6, 7.3)

    def test_rejects_invalid(self):
        with pytest.raises(ValueError):
            mode_dephasing_rate(-1e-6, 1.0)
        with pytest.raises(ValueError):
            mode_dephasing_rate(1e-6, 1.0, log_factor=0.0)


class TestTotalRate:
    """Test combining the two flux modes."""

    def test_uncorrelated_is_quadrature(self):
        """c=0 adds the mode rates in quadrature."""
        model = NoiseModel.uncorrelated(5e-6, 1e-6)
        rng = np.random.default_rng(7)
        for s_s, s_d in rng.uniform(-20, 20, size=(50, 2)):
            expected = math.hypot(mode_dephasing_rate(5e-6, s_s), mode_dephasing_rate(1e-6, s_d))
            assert total_dephasing_rate(model, s_s, s_d) == pytest.approx(expected, rel=1e-12)

    def test_global_only(self):
        """No local noise leaves the common-mode rate."""
        model = NoiseModel.global_only(5e-6)
        assert total_dephasing_rate(model, 3.0, 11.0) == pytest.approx(mode_dephasing_rate(5e-6, 3.0))

    def test_exact_cancellation(self):
        """Fully correlated, opposite contributions cancel to exactly zero."""
        model = NoiseModel.correlated(4e-6, 1e-6, c_sd=1.0)
        assert total_dephasing_rate(model, 2.0, -8.0) == 0.0

    def test_correlated_adds(self):
        """Same-sign contributions add linearly at c=1."""
        model = NoiseModel.correlated(4e-6, 1e-6, c_sd=1.0)
        expected = mode_dephasing_rate(4e-6, 2.0) + mode_dephasing_rate(1e-6, 8.0)
        assert total_dephasing_rate(model, 2.0, 8.0) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("c_sd", [0.0, 0.3, 0.7, 1.0])
    def test_bounds(self, c_sd):
        """|Gs - Gd| <= Gamma <= Gs + Gd."""
        model = NoiseModel.correlated(5e-6, 2e-6, c_sd=c_sd)
        rng = np.random.default_rng(11)
        for s_s, s_d in rng.uniform(-20, 20, size=(50, 2)):
            g_s = mode_dephasing_rate(5e-6, s_s)
            g_d = mode_dephasing_rate(2e-6, s_d)
            total = total_dephasing_rate(model, s_s, s_d)
            assert abs(g_s - g_d) * (1 - 1e-9) <= total <= (g_s + g_d) * (1 + 1e-9)

    def test_log_factor_override(self):
        model = NoiseModel.global_only(5e-6)
        assert total_dephasing_rate(model, 1.0, 0.0, log_factor=8.0) == pytest.approx(
            2 * total_dephasing_rate(model, 1.0, 0.0)
        )


class TestSelfConsistent:
    """Test the measurement-time log factor iteration."""

    def test_fixed_point(self):
        """The returned factor matches the returned rate."""
        model = NoiseModel(a_s=5e-6, self_consistent=True)
        gamma, lf = self_consistent_log_factor(model, 18.67, 0.0)
        assert lf == pytest.approx(math.sqrt(abs(math.log(ZETA * gamma / model.f_ir_hz))), rel=1e-2)
        assert gamma == total_dephasing_rate(model, 18.67, 0.0, lf)
        assert 4.0 < lf < 6.0

    def test_zero_rate(self):
        """A vanishing rate stops the iteration at once."""
        model = NoiseModel(a_s=5e-6, self_consistent=True)
        assert self_consistent_log_factor(model, 0.0, 0.0) == (0.0, model.log_factor)


class TestCoherenceEnvelope:
    def test_decay(self):
        """exp(-(Gamma t)^2): 1 at t=0, 1/e at t = 1/Gamma."""
        envelope = coherence_envelope(2e6, np.array([0.0, 5e-7]))
        assert envelope[0] == 1.0
        assert envelope[1] == pytest.approx(math.exp(-1))


class TestFluxSensitivity:
    """Test finite-difference and Hellmann-Feynman sensitivities."""

    def test_fluxonium_sweet_spot(self, fluxonium_params):
        """The fluxonium is first-order insensitive at half flux."""
        flux = FluxBias.from_constrained(fluxonium_params, 0.5)
        assert abs(flux_sensitivity(fluxonium_params, flux, FluxMode.COMMON)) < 1e-3

    def test_fluxonium_quarter_flux(self, fluxonium_params):
        """Slope -18.67 GHz/Phi0 at a quarter flux quantum."""
        flux = FluxBias.from_constrained(fluxonium_params, 0.25)
        assert flux_sensitivity(fluxonium_params, flux, FluxMode.COMMON) == pytest.approx(-18.67, abs=0.05)

    def test_engineered_bias_line(self, fig2_params):
        """At the quarter-flux plateau the bias-line slope vanishes."""
        flux = FluxBias.from_constrained(fig2_params, 0.25)
        assert abs(flux_sensitivity(fig2_params, flux, FluxMode.COMMON)) < 1e-3

    def test_engineered_strict_partial(self, fig2_params):
        """The partial at fixed Phi_d does not vanish there."""
        flux = FluxBias.from_constrained(fig2_params, 0.25)
        slope = flux_sensitivity(fig2_params, flux, FluxMode.COMMON, along_bias_line=False)
        assert slope == pytest.approx(-4.01, abs=0.05)

    def test_engineered_differential(self, fig2_params):
        """The local mode stays sensitive at the plateau."""
        flux = FluxBias.from_constrained(fig2_params, 0.25)
        slope = flux_sensitivity(fig2_params, flux, FluxMode.DIFFERENTIAL)
        assert abs(slope) == pytest.approx(12.03, abs=0.05)

    def test_rejects_bad_step(self, fig2_params):
        with pytest.raises(ValueError):
            flux_sensitivity(fig2_params, FluxBias(0.0, 0.0), FluxMode.COMMON, step=0.0)

    def test_step_below_noise_floor(self, fig2_params):
        """A step of 1e-10 Phi0 cannot resolve 1e-3 GHz/Phi0."""
        flux = FluxBias(0.1, 0.05)
        with pytest.raises(SensitivityError) as exc_info:
            flux_sensitivity(fig2_params, flux, FluxMode.COMMON, step=1e-10)
        assert exc_info.value.flux == flux

    @pytest.mark.parametrize("mode", [FluxMode.COMMON, FluxMode.DIFFERENTIAL])
    def test_hellmann_feynman_agrees(self, fig2_params, mode):
        """Expectation values of dH/dPhi match the central difference."""
        flux = FluxBias.from_constrained(fig2_params, 0.2)
        fd = flux_sensitivity(fig2_params, flux, mode)
        hf = hellmann_feynman_sensitivity(fig2_params, flux, mode)
        assert hf == pytest.approx(fd, rel=1e-5, abs=1e-6)

    def test_richardson_agrees(self, fluxonium_params):
        flux = FluxBias.from_constrained(fluxonium_params, 0.25)
        fd = flux_sensitivity(fluxonium_params, flux, FluxMode.COMMON)
        assert richardson_sensitivity(fluxonium_params, flux, FluxMode.COMMON) == pytest.approx(fd, rel=1e-2)

    def test_beta_form(self, fig2_params):
        """Varying beta at fixed Phi_s gives the differential-mode rate."""
        model = NoiseModel.uncorrelated(5e-6, 1e-6)
        flux = FluxBias.from_constrained(fig2_params, 0.2)
        expected = mode_dephasing_rate(1e-6, flux_sensitivity(fig2_params, flux, FluxMode.DIFFERENTIAL))
        assert beta_form_local_rate(fig2_params, model, flux) == pytest.approx(expected, rel=1e-5)

    def test_beta_form_undefined(self, fig2_params):
        with pytest.raises(ValueError):
            beta_form_local_rate(fig2_params, NoiseModel(), FluxBias(0.0, 0.0))


class TestDephasingSweep:
    """Test dephasing profiles along the bias line."""

    def test_invariants(self, fig2_params):
        """T_phi = 1/Gamma and the mode rates bound the total."""
        model = NoiseModel.uncorrelated(5e-6, 1e-6)
        profile = dephasing_sweep(fig2_params, model, np.linspace(0.05, 0.45, 9))
        np.testing.assert_allclose(profile.t_phi, 1.0 / profile.gamma_total)
        assert np.all(profile.gamma_total <= (profile.gamma_s + profile.gamma_d) * (1 + 1e-12))
        np.testing.assert_array_equal(profile.log_factor, 4.0)
        np.testing.assert_allclose(profile.t_phi_s, 1.0 / profile.gamma_s)

    def test_global_only(self, fluxonium_params):
        """The fluxonium T_phi at a quarter flux quantum is about 0.43 us."""
        profile = dephasing_sweep(fluxonium_params, NoiseModel.global_only(5e-6), [0.25])
        assert profile.gamma_d[0] == 0.0
        assert profile.t_phi[0] == pytest.approx(0.426e-6, rel=1e-2)

    def test_flux_independent_circuit(self, harmonic_params):
        """No Josephson energy, no sensitivity, infinite T_phi."""
        profile = dephasing_sweep(harmonic_params, NoiseModel.uncorrelated(5e-6, 1e-6), [0.1, 0.3])
        np.testing.assert_array_equal(profile.gamma_total, 0.0)
        assert np.all(np.isinf(profile.t_phi))
        assert np.all(np.isinf(profile.t_phi_d))

    def test_thread_count_independent(self, fig2_params):
        model = NoiseModel.correlated(5e-6, 1e-6)
        grid = np.linspace(0.1, 0.4, 7)
        serial = dephasing_sweep(fig2_params, model, grid, workers=1)
        threaded = dephasing_sweep(fig2_params, model, grid, workers=3)
        np.testing.assert_array_equal(serial.gamma_total, threaded.gamma_total)

    def test_self_consistent(self, fluxonium_params):
        """Self-consistent runs record a per-point log factor above the default."""
        model = NoiseModel(a_s=5e-6, self_consistent=True)
        profile = dephasing_sweep(fluxonium_params, model, [0.2, 0.3])
        assert np.all(profile.log_factor > 4.0)



class TestLocalAmplitudeOverlay:
    """Test T_phi for extra local-noise amplitudes from stored sensitivities."""

    @staticmethod
    def profile(model, sens_s, sens_d):
        sens_s, sens_d = np.asarray(sens_s, dtype=float), np.asarray(sens_d, dtype=float)
        gamma = np.array([total_dephasing_rate(model, s, d) for s, d in zip(sens_s, sens_d)])
        zeros = np.zeros_like(sens_s)
        return DephasingProfile(
            grid=np.linspace(0.0, 1.0, sens_s.size), sens_s=sens_s, sens_d=sens_d,
            gamma_s=zeros, gamma_d=zeros, gamma_total=gamma, t_phi=1.0 / gamma,
            log_factor=np.full_like(sens_s, model.log_factor),
        )

    def test_own_amplitude_reproduces_profile(self):
        model = NoiseModel.correlated(5e-6, 1e-6, c_sd=0.5)
        profile = self.profile(model, [1.0, -3.0, 0.2], [4.0, 2.0, -7.0])
        overlay = local_amplitude_overlay(model, profile, [1e-6])
        np.testing.assert_allclose(overlay[1e-6], profile.t_phi, rtol=1e-14)

    def test_uncorrelated_scaling(self):
        """Without correlation Gamma^2 grows by (A_d sens_d)^2 terms only."""
        model = NoiseModel.uncorrelated(5e-6, 1e-6)
        profile = self.profile(model, [2.0], [3.0])
        t_phi = local_amplitude_overlay(model, profile, [0.0, 4e-6])
        assert t_phi[0.0][0] == pytest.approx(1.0 / mode_dephasing_rate(5e-6, 2.0))
        expected = math.hypot(mode_dephasing_rate(5e-6, 2.0), mode_dephasing_rate(4e-6, 3.0))
        assert t_phi[4e-6][0] == pytest.approx(1.0 / expected)

    def test_correlated_cancellation(self):
        """c_sd = 1 and A_s sens_s = -A_d sens_d give an infinite T_phi."""
        model = NoiseModel.correlated(5e-6, 1e-6)
        profile = self.profile(model, [1.0], [-1.0])
        assert math.isinf(local_amplitude_overlay(model, profile, [5e-6])[5e-6][0])

    def test_rejects_negative_amplitude(self):
        model = NoiseModel.uncorrelated(5e-6, 1e-6)
        with pytest.raises(NoiseModelError):
            local_amplitude_overlay(model, self.profile(model, [1.0], [1.0]), [-1e-6])


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
