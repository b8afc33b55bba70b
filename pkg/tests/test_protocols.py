"""Tests of the protocol-level post-herald states against closed forms and the
truncated-Fock oracle."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heraldkick.collection import DipoleChannel, GaussianLens, ZeroNA
from heraldkick.phase_space import ThermalState, isotropic_trap
from heraldkick.protocols import (
    HeraldWindow,
    NodeConfig,
    closest_bell_fidelity,
    geometry_contrast,
    geometry_contrast_numeric,
    herald_quadrature,
    low_efficiency_fidelity,
    pi_sigma_high_na_fidelity,
    single_photon_result,
    single_photon_zero_na_contrast,
    time_bin_fidelity,
    time_bin_zero_na_contrast,
    two_photon_fidelity,
    two_photon_post_herald,
    two_photon_zero_na_timing,
)

X, Y, Z = np.eye(3)
ETA, MU = 0.07, 0.1


def _node(
    nbar,
    channels,
    geometry=None,
    excitation=None,
    p=0.0,
    link_phase=0.0,
    eta=ETA,
    mu=MU,
):
    return NodeConfig(
        trap=isotropic_trap(mu, eta),
        motion=ThermalState([nbar] * 3),
        geometry=ZeroNA(Z) if geometry is None else geometry,
        channels=channels,
        excitation=excitation,
        excitation_probability=p,
        link_phase=link_phase,
    )


def _check_density_matrix(rho, tol=1e-10):
    assert np.allclose(rho, rho.conj().T, atol=tol)
    assert abs(np.trace(rho).real - 1.0) < tol
    assert np.linalg.eigvalsh(rho).min() > -tol


class TestValidation:
    def test_window_rejects_nonpositive_tmax(self):
        with pytest.raises(ValueError):
            HeraldWindow(t_max=0.0)

    def test_window_rejects_negative_dt(self):
        with pytest.raises(ValueError):
            HeraldWindow(dt_max=-0.1)

    def test_node_requires_channels(self):
        with pytest.raises(ValueError):
            _node(1.0, ())

    def test_node_requires_matching_mode_counts(self):
        with pytest.raises(ValueError):
            NodeConfig(
                trap=isotropic_trap(MU, ETA),
                motion=ThermalState([1.0, 1.0]),
                geometry=ZeroNA(Z),
                channels=(DipoleChannel("H", X),),
            )

    def test_node_rejects_bad_probability(self):
        with pytest.raises(ValueError):
            _node(1.0, (DipoleChannel("H", X),), p=1.5)

    def test_node_requires_unit_excitation(self):
        with pytest.raises(ValueError):
            _node(1.0, (DipoleChannel("H", X),), excitation=[0.0, 0.0, 2.0])

    def test_single_photon_needs_one_channel(self):
        n = _node(1.0, (DipoleChannel("H", X), DipoleChannel("V", Y)))
        with pytest.raises(ValueError):
            single_photon_result(n, n)

    def test_single_photon_rejects_dt_window(self):
        n = _node(1.0, (DipoleChannel("H", X),), excitation=X, p=0.1)
        with pytest.raises(ValueError):
            single_photon_result(n, n, window=HeraldWindow(dt_max=1.0))

    def test_two_photon_needs_two_channels(self):
        n = _node(1.0, (DipoleChannel("H", X),))
        with pytest.raises(ValueError):
            two_photon_fidelity(n, n)

    def test_two_photon_rejects_empty_dt_window(self):
        n = _node(1.0, (DipoleChannel("H", X), DipoleChannel("V", X)))
        with pytest.raises(ValueError):
            two_photon_fidelity(n, n, window=HeraldWindow(dt_max=0.0))

    def test_time_bin_needs_excitation(self):
        n = _node(1.0, (DipoleChannel("H", X),))
        with pytest.raises(ValueError):
            time_bin_fidelity(n, 1.0)

    def test_time_bin_needs_positive_tau(self):
        n = _node(1.0, (DipoleChannel("H", X),), excitation=X)
        with pytest.raises(ValueError):
            time_bin_fidelity(n, 0.0)


class TestHelpers:
    def test_closest_bell_picks_best_sector(self):
        psi_odd = np.zeros(4, dtype=complex)
        psi_odd[[1, 2]] = [1.0, 1.0]
        psi_odd /= np.sqrt(2.0)
        assert closest_bell_fidelity(np.outer(psi_odd, psi_odd.conj())) == pytest.approx(1.0)
        psi_even = np.zeros(4, dtype=complex)
        psi_even[[0, 3]] = [1.0, -1j]
        psi_even /= np.sqrt(2.0)
        assert closest_bell_fidelity(np.outer(psi_even, psi_even.conj())) == pytest.approx(1.0)

    def test_closest_bell_of_maximally_mixed(self):
        assert closest_bell_fidelity(np.eye(4) / 4.0) == pytest.approx(0.25)

    def test_low_efficiency_fidelity(self):
        assert low_efficiency_fidelity(0.1, 1.0) == pytest.approx(0.9)
        assert low_efficiency_fidelity(0.0, 0.5) == pytest.approx(0.75)

    @given(st.integers(min_value=0, max_value=12))
    def test_quadrature_moments(self, k):
        t, w = herald_quadrature(HeraldWindow(), mu_max=0.1)
        assert w @ t**k == pytest.approx(float(math.factorial(k)), rel=1e-10)

    def test_quadrature_finite_window(self):
        window = HeraldWindow(t_max=3.0)
        t, w = herald_quadrature(window, mu_max=0.1)
        assert np.all(t <= 3.0)
        assert w @ np.ones_like(t) == pytest.approx(1.0 - np.exp(-3.0), rel=1e-12)

    def test_quadrature_doubles_for_fast_motion(self):
        slow, _ = herald_quadrature(HeraldWindow(), mu_max=0.1)
        fast, _ = herald_quadrature(HeraldWindow(), mu_max=2.0)
        assert fast.size == 2 * slow.size


class TestSinglePhoton:
    @pytest.mark.parametrize("chi", [0.0, 0.4, np.pi / 2, 2.1])
    def test_contrast_matches_quadrature_closed_form(self, chi):
        k_ex = np.array([np.sin(chi), 0.0, np.cos(chi)])
        n = _node(10.0, (DipoleChannel("H", X),), excitation=k_ex, p=0.05)
        res = single_photon_result(n, n)
        closed = single_photon_zero_na_contrast(chi, ETA, MU, 10.0)
        assert res.contrast == pytest.approx(closed, abs=1e-10)

    def test_perpendicular_contrast_analytic(self):
        n = _node(10.0, (DipoleChannel("H", X),), excitation=X, p=0.05)
        res = single_photon_result(n, n)
        assert res.contrast == pytest.approx(np.exp(-2 * ETA**2 * 21.0), abs=1e-12)
        assert single_photon_zero_na_contrast(np.pi / 2, ETA, MU, 10.0) == pytest.approx(
            np.exp(-2 * ETA**2 * 21.0), rel=1e-10
        )

    def test_recoil_free_matrix_matches_hand_assembly(self):
        # Without recoil the conditional matrix depends only on p and the
        # collection efficiency; assemble it directly for comparison.
        p = 0.1
        n = _node(0.0, (DipoleChannel("H", X),), excitation=X, p=p, eta=0.0)
        res = single_photon_result(n, n)
        grid = n.weight_grid()
        e = grid.collected_power("H") / grid.channel_norms[0]
        rho = np.zeros((4, 4), dtype=complex)
        rho[1, 1] = rho[2, 2] = (1 - p) * p * e / 2
        rho[1, 2] = rho[2, 1] = p * (1 - p) * e / 2
        rho[3, 3] = p**2 * ((1 - e) * e + e**2 / 8)
        rho /= np.trace(rho)
        assert np.allclose(res.rho_qubits, rho, atol=1e-10)
        assert res.fidelity == pytest.approx(closest_bell_fidelity(rho), abs=1e-10)
        # for small efficiency this approaches (1 - p)(1 + C)/2
        assert res.fidelity == pytest.approx(low_efficiency_fidelity(p, 1.0), abs=2 * e)

    def test_dark_partner_halves_fidelity(self):
        a = _node(1.0, (DipoleChannel("H", X),), excitation=X, p=0.2)
        b = _node(1.0, (DipoleChannel("H", X),), excitation=X, p=0.0)
        res = single_photon_result(a, b)
        assert res.fidelity == pytest.approx(0.5, abs=1e-12)

    def test_no_excitation_reports_no_herald(self):
        n = _node(1.0, (DipoleChannel("H", X),), excitation=X, p=0.0)
        res = single_photon_result(n, n)
        assert not res.heralded
        assert res.efficiency == 0.0
        assert np.isnan(res.fidelity) and np.isnan(res.contrast)
        assert np.all(res.rho_qubits == 0)

    def test_weak_drive_fidelity_approaches_contrast_bound(self):
        p = 1e-6
        n = _node(0.0, (DipoleChannel("H", X),), excitation=X, p=p)
        res = single_photon_result(n, n)
        c = np.exp(-2 * ETA**2)
        assert res.contrast == pytest.approx(c, abs=1e-10)
        assert res.fidelity == pytest.approx((1 + c) / 2, abs=1e-4)

    def test_detector_sign_and_link_phase_rotate_coherence(self):
        a = _node(2.0, (DipoleChannel("H", X),), excitation=X, p=0.1, link_phase=0.3)
        b = _node(2.0, (DipoleChannel("H", X),), excitation=X, p=0.1, link_phase=1.1)
        plus = single_photon_result(a, b, detector_sign=1)
        minus = single_photon_result(a, b, detector_sign=-1)
        assert plus.fidelity == pytest.approx(minus.fidelity, abs=1e-12)
        assert plus.rho_qubits[1, 2] == pytest.approx(-minus.rho_qubits[1, 2], abs=1e-12)
        c = _node(2.0, (DipoleChannel("H", X),), excitation=X, p=0.1)
        base = single_photon_result(c, c)
        rotation = np.angle(plus.rho_qubits[1, 2]) - np.angle(base.rho_qubits[1, 2])
        assert rotation % (2 * np.pi) == pytest.approx(0.8, abs=1e-9)

    def test_correction_recovers_full_contrast(self):
        n = _node(10.0, (DipoleChannel("H", X),), excitation=Z, p=0.05)
        base = single_photon_result(n, n)
        corr = single_photon_result(n, n, corrected=True)
        assert corr.contrast == pytest.approx(1.0, abs=1e-9)
        assert corr.fidelity >= base.fidelity

    def test_density_matrix_structure(self):
        a = _node(3.0, (DipoleChannel("H", X),), excitation=Y, p=0.3)
        b = _node(1.0, (DipoleChannel("H", Y),), excitation=X, p=0.2)
        res = single_photon_result(a, b)
        _check_density_matrix(res.rho_qubits)

    def test_oracle_agreement(self):
        n = _node(1.5, (DipoleChannel("H", X),), excitation=Y, p=0.3, eta=0.12, mu=0.17)
        analytic = single_photon_result(n, n, n_time=8)
        fock = single_photon_result(n, n, n_time=8, oracle=True)
        assert np.allclose(analytic.rho_qubits, fock.rho_qubits, atol=1e-8)

    @given(
        st.floats(min_value=0.0, max_value=3.0),
        st.floats(min_value=0.0, max_value=50.0),
    )
    @settings(max_examples=25, deadline=None)
    def test_zero_na_contrast_bounds(self, chi, nbar):
        c = single_photon_zero_na_contrast(chi, ETA, MU, nbar)
        assert 0.0 < c <= 1.0 + 1e-12

    @given(
        st.floats(min_value=0.0, max_value=20.0),
        st.floats(min_value=0.1, max_value=30.0),
    )
    @settings(max_examples=25, deadline=None)
    def test_zero_na_contrast_decreases_with_temperature(self, nbar, step):
        cold = single_photon_zero_na_contrast(0.7, ETA, MU, nbar)
        hot = single_photon_zero_na_contrast(0.7, ETA, MU, nbar + step)
        assert hot <= cold + 1e-12


class TestTwoPhoton:
    def _identical(self, nbar, geometry=None, eta=ETA):
        return _node(
            nbar, (DipoleChannel("H", X), DipoleChannel("V", X)), geometry, eta=eta
        )

    def test_recoil_free_gives_bell_projector(self):
        n = self._identical(5.0, eta=0.0)
        for parity, sign in ((1, 1.0), (-1, -1.0)):
            res = two_photon_fidelity(n, n, detector_parity=parity)
            psi = np.zeros(4, dtype=complex)
            psi[[1, 2]] = [1.0, sign]
            psi /= np.sqrt(2.0)
            assert np.allclose(res.rho_qubits, np.outer(psi, psi.conj()), atol=1e-12)
            assert res.fidelity == pytest.approx(1.0, abs=1e-12)

    def test_matched_herald_times_have_unit_contrast(self):
        n = self._identical(20.0, geometry=GaussianLens(0.6, 1e5, axis=Z))
        for t in (0.0, 1.3):
            rho = two_photon_post_herald(n, n, t, t)
            c = 2 * abs(rho[1, 2]) / (rho[1, 1].real + rho[2, 2].real)
            assert c == pytest.approx(1.0, abs=1e-12)

    def test_contrast_matches_timing_quadrature(self):
        for nbar in (20.0, 100.0):
            n = self._identical(nbar)
            res = two_photon_fidelity(n, n)
            exact, approx = two_photon_zero_na_timing(ETA, MU, nbar)
            assert res.contrast == pytest.approx(exact, abs=1e-8)
            assert res.fidelity == pytest.approx((1 + res.contrast) / 2, abs=1e-12)
            assert abs(exact - approx) < 2e-3

    def test_quadratic_timing_approximation_value(self):
        _, approx = two_photon_zero_na_timing(ETA, MU, 100.0)
        assert approx == pytest.approx(np.exp(-2 * ETA**2 * 201 * MU**2), rel=1e-12)

    def test_timing_contrast_decreases_with_temperature(self):
        values = [two_photon_zero_na_timing(ETA, MU, nb)[0] for nb in (0.0, 5.0, 20.0)]
        assert values[0] > values[1] > values[2]

    def test_anisotropic_broadcast(self):
        exact, approx = two_photon_zero_na_timing(
            [0.05, 0.06, 0.07], [0.1, 0.2, 0.3], [1.0, 2.0, 3.0], k_coll=Z
        )
        # only the z mode couples to collection along z
        e1, a1 = two_photon_zero_na_timing(0.07, 0.3, 3.0)
        assert exact == pytest.approx(e1, rel=1e-12)
        assert approx == pytest.approx(a1, rel=1e-12)

    def test_narrow_window_restores_contrast(self):
        n = self._identical(20.0)
        tight = two_photon_fidelity(n, n, window=HeraldWindow(dt_max=0.05))
        wide = two_photon_fidelity(n, n, window=HeraldWindow(dt_max=2.0))
        full = two_photon_fidelity(n, n)
        assert tight.contrast > wide.contrast > full.contrast
        assert tight.efficiency < wide.efficiency < full.efficiency
        assert tight.contrast > 0.99999

    def test_wide_window_approaches_unwindowed(self):
        n = self._identical(20.0)
        wide = two_photon_fidelity(n, n, window=HeraldWindow(dt_max=40.0))
        full = two_photon_fidelity(n, n)
        assert wide.contrast == pytest.approx(full.contrast, abs=1e-6)
        assert wide.efficiency == pytest.approx(full.efficiency, rel=1e-4)

    def test_correction_dominance_lens(self):
        n = self._identical(20.0, geometry=GaussianLens(0.6, 1e5, axis=Z))
        base = two_photon_fidelity(n, n, n_time=32)
        corr = two_photon_fidelity(n, n, n_time=32, corrected=True)
        assert corr.fidelity >= base.fidelity
        assert corr.efficiency == pytest.approx(base.efficiency, rel=1e-12)

    def test_recoil_free_correction_falls_back(self):
        n = self._identical(1.0, eta=0.0)
        res = two_photon_fidelity(n, n, corrected=True)
        assert res.fidelity == pytest.approx(1.0, abs=1e-12)

    def test_density_matrix_structure(self):
        n = _node(2.0, (DipoleChannel("H", X), DipoleChannel("V", Y)))
        res = two_photon_fidelity(n, n)
        _check_density_matrix(res.rho_qubits)

    def test_oracle_agreement(self):
        n = _node(
            2.0, (DipoleChannel("H", X), DipoleChannel("V", Y)), eta=0.12, mu=0.17
        )
        analytic = two_photon_fidelity(n, n, n_time=8)
        fock = two_photon_fidelity(n, n, n_time=8, oracle=True)
        assert np.allclose(analytic.rho_qubits, fock.rho_qubits, atol=1e-8)
        assert analytic.efficiency == pytest.approx(fock.efficiency, abs=1e-8)

    def test_oracle_agreement_windowed(self):
        n = _node(1.0, (DipoleChannel("H", X), DipoleChannel("V", Y)), eta=0.15, mu=0.3)
        window = HeraldWindow(dt_max=0.8)
        analytic = two_photon_fidelity(n, n, window=window, n_time=6)
        fock = two_photon_fidelity(n, n, window=window, n_time=6, oracle=True)
        assert np.allclose(analytic.rho_qubits, fock.rho_qubits, atol=1e-8)


class TestGeometry:
    def test_one_sided_closed_form_value(self):
        contrast, eff = geometry_contrast(ETA, np.pi / 4, 10.0)
        gamma = ETA**2 * 0.5 * 21.0
        assert gamma == pytest.approx(0.051450, abs=1e-6)
        assert contrast == pytest.approx(np.exp(-2 * gamma), rel=1e-12)
        assert (1 - contrast) / 2 == pytest.approx(0.04889, abs=1e-5)
        assert eff == 1.0

    def test_two_sided_closed_form_value(self):
        contrast, eff = geometry_contrast(ETA, np.pi / 4, 10.0, two_sided=True)
        gamma = 0.051450
        assert contrast == pytest.approx(1 / np.cosh(gamma) ** 2, abs=1e-6)
        assert (1 - contrast) / 2 == pytest.approx(1.32e-3, abs=2e-5)
        assert eff == pytest.approx((1 + np.exp(-2 * gamma)) / 2, abs=1e-6)

    @pytest.mark.parametrize("two_sided", [False, True])
    @pytest.mark.parametrize("xi", [0.2, np.pi / 4, 1.2])
    def test_numeric_matches_closed_form(self, two_sided, xi):
        closed = geometry_contrast(ETA, xi, 10.0, two_sided)
        numeric = geometry_contrast_numeric(ETA, xi, 10.0, two_sided)
        assert numeric[0] == pytest.approx(closed[0], abs=1e-12)
        assert numeric[1] == pytest.approx(closed[1], abs=1e-12)

    def test_small_gamma_error_laws(self):
        # leading error: gamma for one-sided, gamma^2 / 2 for two-sided
        eta, xi, nbar = 0.02, 0.5, 3.0
        gamma = eta**2 * np.sin(xi) ** 2 * (1 + 2 * nbar)
        c1, _ = geometry_contrast(eta, xi, nbar)
        c2, _ = geometry_contrast(eta, xi, nbar, two_sided=True)
        assert (1 - c1) / 2 == pytest.approx(gamma, rel=0.05)
        assert (1 - c2) / 2 == pytest.approx(gamma**2 / 2, rel=0.05)

    def test_untilted_arms_are_error_free(self):
        for two_sided in (False, True):
            contrast, eff = geometry_contrast(ETA, 0.0, 10.0, two_sided)
            assert contrast == pytest.approx(1.0, rel=1e-12)
            assert eff == pytest.approx(1.0, rel=1e-12)

    @given(
        st.floats(min_value=0.0, max_value=1.4),
        st.floats(min_value=0.0, max_value=40.0),
    )
    @settings(max_examples=30, deadline=None)
    def test_two_sided_always_beats_one_sided(self, xi, nbar):
        c1, _ = geometry_contrast(ETA, xi, nbar)
        c2, _ = geometry_contrast(ETA, xi, nbar, two_sided=True)
        assert c2 >= c1 - 1e-12


class TestTimeBin:
    def _tb(self, nbar, geometry=None, eta=ETA, mu=MU):
        return _node(nbar, (DipoleChannel("H", X),), geometry, excitation=X, eta=eta, mu=mu)

    def test_worst_case_closed_form(self):
        c = time_bin_zero_na_contrast(ETA, 0.0, np.pi, 20.0)
        assert c == pytest.approx(np.exp(-8 * ETA**2 * 41.0), rel=1e-10)

    def test_engine_matches_closed_form(self):
        n = self._tb(20.0)
        res = time_bin_fidelity(n, np.pi / MU)
        closed = time_bin_zero_na_contrast(ETA, MU, np.pi, 20.0)
        assert res.contrast == pytest.approx(closed, abs=1e-6)
        assert res.fidelity == pytest.approx((1 + res.contrast) / 2, abs=1e-12)

    def test_commensurate_bin_matches_pure_timing(self):
        # mu tau = 2 pi: the early/late excitation kicks interfere away and
        # only the two-photon timing spread remains.
        for nbar in (0.0, 20.0):
            tb = time_bin_zero_na_contrast(ETA, MU, 2 * np.pi, nbar)
            tp, _ = two_photon_zero_na_timing(ETA, MU, nbar)
            assert tb == pytest.approx(tp, rel=1e-10)

    def test_engine_commensurate_bin(self):
        n = self._tb(20.0)
        res = time_bin_fidelity(n, 2 * np.pi / MU)
        tp, _ = two_photon_zero_na_timing(ETA, MU, 20.0)
        assert res.contrast == pytest.approx(tp, abs=1e-6)

    def test_half_period_is_worst(self):
        values = [
            time_bin_zero_na_contrast(ETA, 0.0, mt, 5.0)
            for mt in (0.3, np.pi / 2, np.pi)
        ]
        assert values[0] > values[1] > values[2]

    def test_correction_restores_fidelity_zero_na(self):
        n = self._tb(20.0)
        base = time_bin_fidelity(n, np.pi / MU)
        corr = time_bin_fidelity(n, np.pi / MU, corrected=True)
        assert corr.fidelity >= base.fidelity
        assert corr.fidelity > 0.9999
        assert corr.efficiency == pytest.approx(base.efficiency, rel=1e-9)

    def test_window_narrowing_trades_efficiency_for_timing_error(self):
        n = self._tb(10.0)
        # commensurate bins: the residual kick vanishes at equal bin-local
        # times, so a tight coincidence window recovers contrast
        tau = 2 * np.pi / MU
        tight = time_bin_fidelity(n, tau, window=HeraldWindow(dt_max=0.1))
        full = time_bin_fidelity(n, tau)
        assert tight.efficiency < full.efficiency
        assert tight.contrast > full.contrast
        assert tight.contrast > 0.9999
        # half-period bins: the residual is dominated by the constant
        # excitation mismatch, which no window can remove
        tight_pi = time_bin_fidelity(n, np.pi / MU, window=HeraldWindow(dt_max=0.1))
        full_pi = time_bin_fidelity(n, np.pi / MU)
        assert tight_pi.efficiency < full_pi.efficiency
        assert tight_pi.contrast == pytest.approx(full_pi.contrast, abs=0.01)

    def test_density_matrix_structure(self):
        res = time_bin_fidelity(self._tb(3.0), 4.0)
        _check_density_matrix(res.rho_qubits)

    def test_oracle_agreement(self):
        n = self._tb(1.0, eta=0.1, mu=0.3)
        analytic = time_bin_fidelity(n, 2.0, n_time=8)
        fock = time_bin_fidelity(n, 2.0, n_time=8, oracle=True)
        assert np.allclose(analytic.rho_qubits, fock.rho_qubits, atol=1e-8)

    @given(
        st.floats(min_value=0.0, max_value=2 * np.pi),
        st.floats(min_value=0.0, max_value=30.0),
        st.floats(min_value=-1.0, max_value=1.0),
    )
    @settings(max_examples=20, deadline=None)
    def test_closed_form_bounds(self, mu_tau, nbar, cos_chi):
        c = time_bin_zero_na_contrast(ETA, MU, mu_tau, nbar, cos_chi)
        assert 0.0 < c <= 1.0 + 1e-12


class TestPiSigma:
    def test_recoil_free_is_bell_state(self):
        res = pi_sigma_high_na_fidelity(eta=0.0, na=0.6, nbar=10.0)
        assert res.fidelity == pytest.approx(1.0, abs=1e-10)

    def test_error_vanishes_on_axis(self):
        res = pi_sigma_high_na_fidelity(eta=0.07, na=0.05, nbar=10.0)
        assert 1 - res.fidelity < 1e-6

    def test_error_grows_with_aperture_and_temperature(self):
        errs_na = [
            1 - pi_sigma_high_na_fidelity(eta=0.07, na=na, nbar=10.0).fidelity
            for na in (0.2, 0.4, 0.6)
        ]
        assert errs_na[0] < errs_na[1] < errs_na[2]
        errs_nb = [
            1 - pi_sigma_high_na_fidelity(eta=0.07, na=0.6, nbar=nb).fidelity
            for nb in (0.0, 10.0, 20.0)
        ]
        assert errs_nb[0] < errs_nb[1] < errs_nb[2]

    def test_transverse_only_error_is_smaller(self):
        full = pi_sigma_high_na_fidelity(eta=0.07, na=0.6, nbar=10.0)
        trans = pi_sigma_high_na_fidelity(eta=0.07, na=0.6, nbar=10.0, transverse_only=True)
        assert 1 - trans.fidelity < (1 - full.fidelity) / 10

    def test_sigma_sign_and_parity_invariance(self):
        base = pi_sigma_high_na_fidelity(eta=0.07, na=0.5, nbar=5.0)
        for sign in (1, -1):
            for parity in (1, -1):
                res = pi_sigma_high_na_fidelity(
                    eta=0.07, na=0.5, nbar=5.0, sigma_sign=sign, detector_parity=parity
                )
                assert res.fidelity == pytest.approx(base.fidelity, abs=1e-12)

    def test_density_matrix_structure(self):
        res = pi_sigma_high_na_fidelity(eta=0.1, na=0.7, nbar=3.0)
        _check_density_matrix(res.rho_qubits)
        assert 0.0 < res.contrast <= 1.0 + 1e-12

    def test_oracle_agreement(self):
        kwargs = dict(eta=0.1, na=0.5, nbar=1.0, n_polar=3, n_azimuthal=6)
        analytic = pi_sigma_high_na_fidelity(**kwargs)
        fock = pi_sigma_high_na_fidelity(oracle=True, **kwargs)
        assert np.allclose(analytic.rho_qubits, fock.rho_qubits, atol=1e-8)
