"""Acceptance suite: one test per exit criterion, at the stated tolerances.

Run `pytest tests/test_acceptance.py -v -s` to see a summary line per
criterion.  Expensive simulations are shared through module-scoped
fixtures; everything is deterministic (fixed seeds, fixed grids).
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from revival_lab import analytic, fock
from revival_lab.analysis import (
    SignalTrace,
    cat_size_from_fringes,
    dft_spectrum,
    envelope_peak_time,
    extract_photon_distribution,
    fit_exponential_decay,
    fit_revival_contrast,
    parity_of,
    preprocess,
    wigner_point,
)
from revival_lab.dynamics import BathParams, JCParams, evolve_unitary, lindblad_trajectory
from revival_lab.fitting import (
    PUBLISHED_PARAMS,
    RabiFitParams,
    fit_vacuum_rabi,
    generate_synthetic,
    model_pg,
)
from revival_lab.sequence import (
    Inject,
    SequenceEngine,
    _displacement_step,
    cat_alpha_sweep,
    cat_time_sweep,
    detection_homography,
    invert_effective_time,
    load_config,
    rabi_sweep,
)

CFG, SCEN = load_config(None)
OMEGA0 = CFG.omega0
NBAR = CFG.n_bar


def announce(num, passed, detail):
    print(f"\nCRITERION {num}: {'PASS' if passed else 'FAIL'} - {detail}")


def poisson(nbar, count):
    n = np.arange(count)
    return np.exp(-nbar + n * np.log(nbar) - [math.lgamma(k + 1) for k in n])


@pytest.fixture(scope="module")
def revival_sweep():
    """Simulated coherent-field revival, uniform in effective time."""
    te = np.arange(0.0, SCEN.revival_t_e_max + SCEN.revival_t_e_step / 2, SCEN.revival_t_e_step)
    ti = np.array([invert_effective_time(t, CFG) for t in te])
    return rabi_sweep(CFG, CFG.bath(), CFG.beta(), ti, tol=SCEN.tol)


@pytest.fixture(scope="module")
def cat_sweep():
    """Cat protocol probe sweep at the published displacement."""
    start = SCEN.t_first + SCEN.t_delay
    te = np.arange(0.0, SCEN.revival_t_e_max + SCEN.revival_t_e_step / 2, SCEN.revival_t_e_step)
    ti = np.array([invert_effective_time(t, CFG, t_start=start) for t in te])
    t0 = time.perf_counter()
    sweep = cat_time_sweep(
        CFG, CFG.bath(), CFG.beta(), SCEN.alpha, SCEN.t_first, SCEN.t_delay, ti, tol=SCEN.tol
    )
    return sweep, time.perf_counter() - t0


def test_criterion_1_analytic_numeric_equivalence():
    t0 = time.perf_counter()
    field = fock.coherent_state(math.sqrt(NBAR), 50)
    p = fock.photon_distribution(field)
    psi0 = fock.joint_ket(fock.atom_ket("e"), field)
    params = JCParams(omega0=OMEGA0, dim=50)
    times = np.arange(0.0, 300e-6 + 0.05e-6, 0.1e-6)
    worst = 0.0
    for t in times:
        pg = fock.ground_probability(evolve_unitary(psi0, params, t))
        worst = max(worst, abs(pg - analytic.rabi_signal(p, OMEGA0, float(t))))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-6 and elapsed < 10.0
    announce(1, ok, f"max |sum - unitary| = {worst:.2e} over 0-300 us, runtime {elapsed:.1f} s")
    assert worst < 1e-6
    assert elapsed < 10.0


def test_criterion_2_revival_time(revival_sweep):
    peak = envelope_peak_time(
        SignalTrace(revival_sweep.t_e, revival_sweep.p_g), (110e-6, 180e-6)
    )
    ok = 140e-6 < peak < 152e-6
    announce(2, ok, f"revival envelope maximum at {peak * 1e6:.2f} us (band 140-152 us)")
    assert ok


def test_criterion_3_spectrum(revival_sweep):
    spec = dft_spectrum(preprocess(SignalTrace(revival_sweep.t_e, revival_sweep.p_g)))
    ext = extract_photon_distribution(spec, OMEGA0, SCEN.spectrum_n_max)
    n = np.arange(SCEN.spectrum_n_max + 1)
    weighty = (ext.p >= 0.005) & (n <= 18)
    center_err = np.abs(ext.centers - ext.expected_centers)[weighty]
    pois = poisson(NBAR, SCEN.spectrum_n_max + 1)
    tv18 = 0.5 * np.sum(np.abs(ext.p[:19] / ext.p[:19].sum() - pois[:19] / pois[:19].sum()))
    tv_full = 0.5 * (np.sum(np.abs(ext.p - pois)) + (1.0 - pois.sum()))
    ok = center_err.max() < 0.5e3 and tv18 < 0.05
    announce(
        3,
        ok,
        f"max peak-center error {center_err.max():.0f} Hz (n<=18, weight>=0.5%), "
        f"TV(n<=18) = {tv18:.4f} < 0.05 (full-support TV {tv_full:.4f}, "
        f"initial-state floor 0.0455 from p1)",
    )
    assert center_err.max() < 0.5e3
    assert tv18 < 0.05


def test_criterion_4_cat_parity_chain(cat_sweep):
    sweep, sim_seconds = cat_sweep
    t0 = time.perf_counter()
    spec = dft_spectrum(preprocess(SignalTrace(sweep.t_e, sweep.p_g)))
    ext = extract_photon_distribution(spec, OMEGA0, SCEN.spectrum_n_max)
    detected = parity_of(ext.p)

    # lossless-detection variant: pristine initial field, relaxation on,
    # parity of the displaced cat at the probe start
    cfg0 = replace(CFG, p1=0.0)
    eng = SequenceEngine(cfg0, cfg0.bath(), tol=SCEN.tol)
    eng.inject(Inject(amplitude=cfg0.beta()))
    eng.resonant(SCEN.t_first)
    eng.reset_discard_g()
    eng.inject(_displacement_step(SCEN.alpha))
    eng.wait(SCEN.t_delay)
    rho_f = fock.partial_trace_atom(eng.rho)
    ideal = fock.parity_expectation(rho_f / np.trace(rho_f).real)
    elapsed = sim_seconds + time.perf_counter() - t0

    ok = (-0.55 < detected < -0.35) and abs(ideal - (-0.49)) < 0.03 and elapsed < 300
    announce(
        4,
        ok,
        f"extracted parity {detected:.3f} (band [-0.55, -0.35]); lossless-detection "
        f"parity {ideal:.3f} (-0.49 +- 0.03); runtime {elapsed:.0f} s < 300 s",
    )
    assert -0.55 < detected < -0.35
    assert abs(ideal - (-0.49)) < 0.03
    assert elapsed < 300


@pytest.fixture(scope="module")
def alpha_sweep():
    alphas = np.arange(SCEN.alpha_min, SCEN.alpha_max + SCEN.alpha_step / 2, SCEN.alpha_step)
    start = SCEN.t_first + SCEN.t_delay
    t_probe = invert_effective_time(SCEN.probe_t_e, CFG, t_start=start)
    sweep = cat_alpha_sweep(
        CFG, CFG.bath(), CFG.beta(), alphas, SCEN.t_first, SCEN.t_delay, t_probe, tol=SCEN.tol
    )
    return alphas, sweep


def test_criterion_5_cat_size(alpha_sweep):
    alphas, sweep = alpha_sweep
    fit = cat_size_from_fringes(alphas, sweep.p_g, (SCEN.fringe_fit_min, SCEN.fringe_fit_max))
    ok = abs(fit.d_squared - 45.1) < 1.5
    announce(
        5, ok, f"fringe fit D^2 = {fit.d_squared:.2f} photons (45.1 +- 1.5), "
        f"period {fit.period:.4f}"
    )
    assert ok


def test_criterion_6_decoherence():
    omega_r = OMEGA0 * math.sqrt(NBAR)
    te = np.arange(SCEN.decoherence_t_e_min, SCEN.decoherence_t_e_max, SCEN.revival_t_e_step)
    contrasts = []
    for delay in SCEN.decoherence_delays:
        start = SCEN.t_first + delay
        ti = np.array([invert_effective_time(t, CFG, t_start=start) for t in te])
        sweep = cat_time_sweep(
            CFG, CFG.bath(), CFG.beta(), SCEN.alpha, SCEN.t_first, delay, ti, tol=SCEN.tol
        )
        contrasts.append(fit_revival_contrast(sweep.t_e, sweep.p_g, omega_r).contrast)
    tau, _ = fit_exponential_decay(np.array(SCEN.decoherence_delays), np.array(contrasts))

    # decoherence-relevant photon number: half squared component separation
    # of the monitored cat (the open question on which nbar enters the
    # formula is resolved toward the cat's own size; see the fig4 pipeline)
    eng = SequenceEngine(CFG, CFG.bath(), tol=SCEN.tol)
    eng.inject(Inject(amplitude=CFG.beta()))
    eng.resonant(SCEN.t_first)
    eng.reset_discard_g()
    eng.inject(_displacement_step(SCEN.alpha))
    rho_f = fock.partial_trace_atom(eng.rho)
    rho_f = rho_f / np.trace(rho_f).real
    nbar_cat = fock.number_expectation(rho_f) - abs(fock.mean_amplitude(rho_f)) ** 2
    t_d_cat = analytic.decoherence_time(CFG.t_cav, nbar_cat, CFG.n_th)
    t_d_initial = analytic.decoherence_time(CFG.t_cav, NBAR, CFG.n_th)

    ratio = tau / t_d_cat
    ok = abs(ratio - 1.0) < 0.25
    announce(
        6,
        ok,
        f"contrast decay tau = {tau * 1e6:.1f} us vs formula {t_d_cat * 1e6:.1f} us at the "
        f"cat size nbar = {nbar_cat:.2f} (ratio {ratio:.3f}, tolerance 25%); formula at the "
        f"initial nbar = {NBAR} gives {t_d_initial * 1e6:.1f} us (ratio {tau / t_d_initial:.3f})",
    )
    assert abs(ratio - 1.0) < 0.25


def test_criterion_7_fit_recovery():
    grid = np.arange(0.0, 400e-6, 0.5e-6)
    data = generate_synthetic(PUBLISHED_PARAMS, 0.02, grid, seed=2024, v=CFG.v, w=CFG.w)
    fit = fit_vacuum_rabi(data, v=CFG.v, w=CFG.w)
    truth = PUBLISHED_PARAMS.as_array()
    got = fit.params.as_array()
    sig = fit.uncertainties.as_array()
    names = RabiFitParams.names()
    failures = [
        name
        for name, tv, gv, sv in zip(names, truth, got, sig)
        if name != "a" and abs(gv - tv) >= 3 * sv
    ]
    omega_rel = abs(fit.params.omega0 - PUBLISHED_PARAMS.omega0) / PUBLISHED_PARAMS.omega0
    ok = not failures and omega_rel < 0.002 and fit.converged
    announce(
        7,
        ok,
        f"all parameters within 3 sigma ({'none' if not failures else ', '.join(failures)} "
        f"outside), omega0 recovered to {omega_rel * 100:.4f}% (< 0.2%)",
    )
    assert not failures
    assert omega_rel < 0.002


class TestCriterion8PropertySuites:
    """Randomized invariant sweeps, 100 cases each, fixed seeds."""

    def test_norm_and_trace_preservation(self):
        rng = np.random.default_rng(81)
        params = JCParams(omega0=OMEGA0, dim=24)
        worst_norm = 0.0
        for _ in range(100):
            psi = rng.normal(size=48) + 1j * rng.normal(size=48)
            psi /= np.linalg.norm(psi)
            out = evolve_unitary(psi, params, rng.uniform(0, 200e-6))
            worst_norm = max(worst_norm, abs(np.linalg.norm(out) - 1.0))
        bath = BathParams(t_cav=8.1e-3, n_th=0.38)
        worst_trace = 0.0
        for _ in range(20):
            amps = rng.normal(size=(3, 40)) + 1j * rng.normal(size=(3, 40))
            weights = rng.dirichlet(np.ones(3))
            rho = sum(
                w * np.outer(a, a.conj()) / (np.linalg.norm(a) ** 2)
                for w, a in zip(weights, amps)
            )
            traj = lindblad_trajectory(rho, JCParams(omega0=OMEGA0, dim=20), bath, 5e-6, tol=1e-8)
            worst_trace = max(worst_trace, abs(np.trace(traj.final).real - 1.0))
        ok = worst_norm < 1e-9 and worst_trace < 1e-8
        announce(
            8,
            ok,
            f"property suites: unitary norm drift {worst_norm:.1e} (100 cases), "
            f"master-equation trace drift {worst_trace:.1e} (20 cases)",
        )
        assert worst_norm < 1e-9
        assert worst_trace < 1e-8

    def test_displacement_composition_law(self):
        rng = np.random.default_rng(82)
        dim, keep = 180, 6
        worst = 0.0
        for _ in range(100):
            re = rng.uniform(-4 / math.sqrt(2), 4 / math.sqrt(2), 4)
            alpha, beta = re[0] + 1j * re[1], re[2] + 1j * re[3]
            lhs = fock.displacement(alpha, dim).matrix @ fock.displacement(beta, dim).matrix
            rhs = np.exp(1j * np.imag(alpha * np.conj(beta)))
            rhs = rhs * fock.displacement(alpha + beta, dim).matrix
            worst = max(worst, np.linalg.norm((lhs - rhs)[:, :keep], 2))
        print(f"\n  displacement composition residual (100 cases): {worst:.2e}")
        assert worst < 1e-8

    def test_homography_gauge_invariance(self):
        rng = np.random.default_rng(83)
        worst = 0.0
        t = np.linspace(0, 400e-6, 120)
        for _ in range(100):
            b = rng.uniform(-0.3, 0.5)
            c = rng.uniform(-0.4, 0.8)  # any root -d/c lies outside [0, 1]
            d = rng.uniform(0.8, 2.0)
            lam = rng.uniform(0.1, 5.0)
            base = RabiFitParams(OMEGA0, 1.72e-3, 0.094, 1.0, b, c, d)
            scaled = RabiFitParams(OMEGA0, 1.72e-3, 0.094, lam, lam * b, lam * c, lam * d)
            worst = max(worst, np.max(np.abs(model_pg(t, base) - model_pg(t, scaled))))
        print(f"\n  homography gauge residual (100 cases): {worst:.2e}")
        assert worst < 1e-12

    def test_wigner_parity_identity_at_origin(self):
        rng = np.random.default_rng(84)
        worst = 0.0
        for _ in range(100):
            dim = int(rng.integers(4, 17))
            amp = rng.normal(size=dim) + 1j * rng.normal(size=dim)
            state = fock.from_amplitudes(amp, normalize=True)
            lhs = wigner_point(state, 0.0, dim_work=dim)
            rhs = 2 / math.pi * parity_of(fock.photon_distribution(state))
            worst = max(worst, abs(lhs - rhs))
        print(f"\n  Wigner/parity identity residual (100 cases): {worst:.2e}")
        assert worst < 1e-10

    def test_dft_roundtrip_of_distributions(self):
        rng = np.random.default_rng(85)
        t = np.arange(0, 300e-6 + 0.125e-6, 0.25e-6)
        worst = 0.0
        for _ in range(100):
            support = rng.choice(19, size=int(rng.integers(1, 9)), replace=False)
            p = np.zeros(19)
            p[support] = rng.random(support.size)
            p /= p.sum()
            trace = SignalTrace(t, analytic.rabi_signal(p, OMEGA0, t))
            ext = extract_photon_distribution(
                dft_spectrum(preprocess(trace)), OMEGA0, n_max=20
            )
            tv = 0.5 * (np.sum(np.abs(ext.p[:19] - p)) + np.sum(ext.p[19:]))
            worst = max(worst, tv)
        print(f"\n  DFT round-trip worst TV (100 cases): {worst:.4f}")
        assert worst < 0.05
