import math

import numpy as np
import pytest

from revival_lab import analytic, fock
from revival_lab.dynamics import JCParams, evolve_unitary

OMEGA0 = 2 * math.pi * 49.88e3
NBAR = 13.2


def poisson(nbar, dim):
    n = np.arange(dim)
    p = np.exp(-nbar + n * math.log(nbar) - [math.lgamma(k + 1) for k in n])
    return p / p.sum()


class TestRabiSignal:
    def test_vacuum_reduces_to_single_oscillation(self):
        p = np.zeros(10)
        p[0] = 1.0
        assert analytic.rabi_signal(p, OMEGA0, 0.0) == 0.0
        t = np.linspace(0, 50e-6, 40)
        assert np.allclose(analytic.rabi_signal(p, OMEGA0, t), np.sin(OMEGA0 * t / 2) ** 2)

    def test_revival_envelope_peaks_near_146_us(self):
        p = poisson(NBAR, 80)
        t = np.arange(130e-6, 160e-6, 0.02e-6)
        sig = np.abs(analytic.rabi_signal(p, OMEGA0, t) - 0.5)
        t_peak = t[np.argmax(sig)]
        assert 140e-6 < t_peak < 152e-6

    def test_collapsed_plateau(self):
        p = poisson(NBAR, 80)
        t = np.arange(30e-6, 55e-6, 0.05e-6)
        assert np.max(np.abs(analytic.rabi_signal(p, OMEGA0, t) - 0.5)) < 0.01

    def test_matches_unitary_simulation_pointwise(self):
        dim = 40
        rng = np.random.default_rng(2)
        p = rng.random(dim)
        p[dim - 1 :] = 0.0  # support below the truncation edge
        p /= p.sum()
        amps = np.sqrt(p).astype(complex)
        psi0 = fock.joint_ket(fock.atom_ket("e"), fock.from_amplitudes(amps))
        params = JCParams(omega0=OMEGA0, dim=dim)
        for t in np.linspace(0, 250e-6, 26):
            pg = fock.ground_probability(evolve_unitary(psi0, params, t))
            assert pg == pytest.approx(analytic.rabi_signal(p, OMEGA0, t), abs=1e-9)

    def test_single_parity_class_revives_at_half_time(self):
        # Distribution restricted to even photon numbers: parity +1, and the
        # first-order expansion predicts oscillation amplitude 1/2 near
        # T_r/2.  That prediction requires the quadratic dephasing
        # pi (n - nbar)^2 / (8 nbar) to stay small over the support, so the
        # clean bound only applies to narrow distributions.
        n = np.arange(80)
        p = np.exp(-((n - NBAR) ** 2) / (2 * 1.2**2))
        p[1::2] = 0.0
        p /= p.sum()
        nbar_eff = float(n @ p)
        half = analytic.timescales(nbar_eff, OMEGA0).t_r / 2
        t = np.arange(half - 8e-6, half + 8e-6, 0.02e-6)
        sig = analytic.rabi_signal(p, OMEGA0, t)
        amplitude = 0.5 * (sig.max() - sig.min())
        assert amplitude == pytest.approx(0.5, abs=0.02)

    def test_poisson_parity_class_amplitude_reduced_by_phase_spread(self):
        # For Poissonian spread the quadratic term caps the half-revival
        # amplitude well below 1/2 (about 0.37 at nbar = 13.2).
        p = poisson(NBAR, 80)
        p[1::2] = 0.0
        p /= p.sum()
        t = np.arange(55e-6, 95e-6, 0.02e-6)
        sig = analytic.rabi_signal(p, OMEGA0, t)
        amplitude = 0.5 * (sig.max() - sig.min())
        assert 0.30 < amplitude < 0.45


class TestTimescales:
    def test_reference_values(self):
        ts = analytic.timescales(NBAR, OMEGA0)
        assert ts.t_r == pytest.approx(145.68e-6, abs=0.05e-6)
        assert ts.t_c == pytest.approx(9.02e-6, abs=0.01e-6)
        assert ts.omega_r == pytest.approx(OMEGA0 * math.sqrt(NBAR))
        assert ts.omega_slow == pytest.approx(OMEGA0 / (4 * math.sqrt(NBAR)))

    def test_unit_mean(self):
        assert analytic.timescales(1.0, OMEGA0).t_r == pytest.approx(4 * math.pi / OMEGA0)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            analytic.timescales(0.0, OMEGA0)


class TestFactorizedState:
    def test_initial_overlap(self):
        br = analytic.factorized_state(math.sqrt(NBAR), OMEGA0, 0.0)
        assert br.field_amplitude_plus == pytest.approx(math.sqrt(NBAR))
        assert br.field_amplitude_minus == pytest.approx(math.sqrt(NBAR))
        assert np.allclose(br.atom_plus, [1 / math.sqrt(2), -1 / math.sqrt(2)])
        assert np.allclose(br.atom_minus, [1 / math.sqrt(2), 1 / math.sqrt(2)])

    def test_atoms_align_at_half_revival(self):
        ts = analytic.timescales(NBAR, OMEGA0)
        t_half = ts.t_r / 2
        assert ts.omega_slow * t_half == pytest.approx(math.pi / 2)
        br = analytic.factorized_state(math.sqrt(NBAR), OMEGA0, t_half)
        overlap = abs(np.vdot(br.atom_plus, br.atom_minus))
        assert overlap == pytest.approx(1.0, abs=1e-12)

    def test_field_labels_rotate_quarter_turn_at_half_revival(self):
        t_half = analytic.timescales(NBAR, OMEGA0).t_r / 2
        br = analytic.factorized_state(math.sqrt(NBAR), OMEGA0, t_half)
        assert br.field_amplitude_plus == pytest.approx(1j * math.sqrt(NBAR), abs=1e-9)
        assert br.field_amplitude_minus == pytest.approx(-1j * math.sqrt(NBAR), abs=1e-9)

    def test_fidelity_against_exact_evolution(self):
        # The first-order branch decomposition is excellent during the
        # collapse; by T_r/2 the neglected quadratic phase spread caps the
        # overlap with the exact state near 0.70 at nbar = 13.2.
        dim = 50
        beta = math.sqrt(NBAR)
        t_half = analytic.timescales(NBAR, OMEGA0).t_r / 2
        psi0 = fock.joint_ket(fock.atom_ket("e"), fock.coherent_state(beta, dim))
        params = JCParams(omega0=OMEGA0, dim=dim)

        early = 0.2 * t_half
        exact = evolve_unitary(psi0, params, early)
        approx = analytic.factorized_state(beta, OMEGA0, early).joint_state(dim)
        assert abs(np.vdot(approx, exact)) ** 2 > 0.95

        exact = evolve_unitary(psi0, params, t_half)
        approx = analytic.factorized_state(beta, OMEGA0, t_half).joint_state(dim)
        assert 0.65 < abs(np.vdot(approx, exact)) ** 2 < 0.78

    def test_warns_below_mesoscopic_regime(self):
        with pytest.warns(UserWarning):
            analytic.factorized_state(1.0, OMEGA0, 0.0)


class TestParityRelations:
    def test_cat_parity_values(self):
        assert analytic.cat_parity(4.0) == pytest.approx(-1.0)
        assert analytic.cat_parity(NBAR) == pytest.approx(-math.cos(13.2 * math.pi), abs=1e-12)
        assert analytic.cat_parity(NBAR) == pytest.approx(0.80902, abs=1e-5)

    def test_cat_parity_matches_truncated_state(self):
        st = fock.cat_state(math.sqrt(NBAR), math.pi * NBAR, 50)
        assert fock.parity_expectation(st) == pytest.approx(analytic.cat_parity(NBAR), abs=2e-2)

    def test_parity_probability_mapping(self):
        assert analytic.parity_to_pg(1.0) == 0.0
        assert analytic.parity_to_pg(-0.48) == pytest.approx(0.74)
        assert analytic.wigner_origin(1.0) == pytest.approx(2 / math.pi)
        rng = np.random.default_rng(0)
        for parity in rng.uniform(-1, 1, 100):
            assert analytic.pg_to_parity(analytic.parity_to_pg(parity)) == pytest.approx(parity)
        with pytest.raises(ValueError):
            analytic.parity_to_pg(1.5)
        with pytest.raises(ValueError):
            analytic.pg_to_parity(-0.1)


class TestDecoherenceTime:
    def test_zero_temperature_limit(self):
        assert analytic.decoherence_time(8.1e-3, 1.0, 0.0) == pytest.approx(8.1e-3 / 2)

    def test_reference_value(self):
        assert analytic.decoherence_time(8.1e-3, NBAR, 0.38) == pytest.approx(171.5e-6, abs=0.1e-6)

    def test_scaling_with_photon_number(self):
        t1 = analytic.decoherence_time(8.1e-3, 6.0, 0.0)
        t2 = analytic.decoherence_time(8.1e-3, 12.0, 0.0)
        assert t1 == pytest.approx(2 * t2)

    def test_division_guard(self):
        with pytest.raises(ValueError):
            analytic.decoherence_time(8.1e-3, 0.0, 0.0)


class TestDispersiveComparison:
    def test_boundary_speedup(self):
        delta = OMEGA0 * math.sqrt(NBAR)
        with pytest.warns(UserWarning):
            cmp = analytic.dispersive_comparison(delta, OMEGA0, NBAR)
        assert cmp.speedup == pytest.approx(1.0)

    def test_linear_in_detuning(self):
        cmp = analytic.dispersive_comparison(10 * OMEGA0 * math.sqrt(NBAR), OMEGA0, NBAR)
        assert cmp.speedup == pytest.approx(10.0)

    def test_reference_time(self):
        cmp = analytic.dispersive_comparison(2 * math.pi * 1e6, OMEGA0, NBAR)
        assert cmp.t_parity_cat == pytest.approx(401.9e-6, abs=0.1e-6)
