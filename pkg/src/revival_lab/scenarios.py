"""Figure and fit pipelines: one runner per reproduced measurement.

Each runner simulates its protocol from an ExperimentConfig plus
ScenarioSettings, writes `<name>.csv` / `<name>.svg` / `<name>.meta`
(auxiliary CSVs carry suffixed names) into the output directory and
returns the summary values it derived.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__, io, plotting
from .analysis import (
    SignalTrace,
    cat_size_from_fringes,
    dft_spectrum,
    envelope_peak_time,
    extract_photon_distribution,
    fit_exponential_decay,
    fit_revival_contrast,
    parity_of,
    preprocess,
)
from .analytic import decoherence_time, timescales
from .fitting import RabiFitParams, fit_vacuum_rabi, generate_synthetic, model_pg
from .sequence import (
    ExperimentConfig,
    ScenarioSettings,
    cat_alpha_sweep,
    cat_time_sweep,
    effective_time,
    invert_effective_time,
    rabi_sweep,
)

SCENARIO_NAMES = ("fig2a", "fig2b", "fig2c", "fig3a", "fig3b", "fig3c", "fig4", "fit", "custom")


@dataclass
class ScenarioOutput:
    name: str
    files: list
    summary: dict


def _config_hash(cfg: ExperimentConfig, scen: ScenarioSettings) -> str:
    blob = (repr(cfg) + "|" + repr(scen)).encode()
    return hashlib.sha256(blob).hexdigest()


def _write_meta(outdir: Path, name: str, cfg, scen, seed, summary: dict) -> Path:
    path = outdir / f"{name}.meta"
    lines = [
        f"scenario={name}",
        f"tool=revival-lab {__version__}",
        f"config_sha256={_config_hash(cfg, scen)}",
        f"seed={seed}",
        f"tol={scen.tol:g}",
    ]
    lines += [f"{key}={summary[key]}" for key in sorted(summary)]
    path.write_text("\n".join(lines) + "\n")
    return path


def _t_e_grid(scen: ScenarioSettings) -> np.ndarray:
    return np.arange(0.0, scen.revival_t_e_max + scen.revival_t_e_step / 2, scen.revival_t_e_step)


def _invert_grid(t_e_grid, cfg, t_start=0.0) -> np.ndarray:
    return np.array([invert_effective_time(te, cfg, t_start) for te in t_e_grid])


def _revival_trace(cfg, scen):
    """Single-window protocol at the nominal photon number, uniform in t_e."""
    t_i = _invert_grid(_t_e_grid(scen), cfg)
    return rabi_sweep(cfg, cfg.bath(), cfg.beta(), t_i, tol=scen.tol)


def _cat_trace(cfg, scen, t_delay=None):
    """Cat protocol probe sweep, uniform in probe effective time."""
    delay = scen.t_delay if t_delay is None else t_delay
    start = scen.t_first + delay
    t_probe = _invert_grid(_t_e_grid(scen), cfg, t_start=start)
    return cat_time_sweep(
        cfg, cfg.bath(), cfg.beta(), scen.alpha, scen.t_first, delay, t_probe, tol=scen.tol
    )


def run_fig2a(cfg, scen, outdir, seed=0, threads=1):
    t_i = np.arange(0.0, scen.rabi_t_i_max + scen.rabi_t_i_step / 2, scen.rabi_t_i_step)
    sweep = rabi_sweep(cfg, cfg.bath(), 0.0, t_i, tol=scen.tol)
    csv = outdir / "fig2a.csv"
    io.write_time_sweep(csv, sweep.t_i, sweep.t_e, sweep.p_g)
    svg = outdir / "fig2a.svg"
    plotting.plot_time_sweep(svg, sweep.t_e, sweep.p_g, "vacuum Rabi oscillation")
    n_periods = sweep.t_e[-1] * cfg.omega0 / (2 * math.pi)
    summary = {"visible_periods": f"{n_periods:.2f}"}
    meta = _write_meta(outdir, "fig2a", cfg, scen, seed, summary)
    return ScenarioOutput("fig2a", [csv, svg, meta], summary)


def run_fig2b(cfg, scen, outdir, seed=0, threads=1):
    sweep = _revival_trace(cfg, scen)
    csv = outdir / "fig2b.csv"
    io.write_time_sweep(csv, sweep.t_i, sweep.t_e, sweep.p_g)
    svg = outdir / "fig2b.svg"
    plotting.plot_time_sweep(svg, sweep.t_e, sweep.p_g, f"Rabi revival, nbar = {cfg.n_bar}")
    t_r = timescales(cfg.n_bar, cfg.omega0).t_r
    peak = envelope_peak_time(
        SignalTrace(sweep.t_e, sweep.p_g), (0.75 * t_r, min(1.25 * t_r, sweep.t_e[-1]))
    )
    summary = {"revival_peak_us": f"{peak * 1e6:.2f}", "t_r_formula_us": f"{t_r * 1e6:.2f}"}
    meta = _write_meta(outdir, "fig2b", cfg, scen, seed, summary)
    return ScenarioOutput("fig2b", [csv, svg, meta], summary)


def _poisson(nbar: float, count: int) -> np.ndarray:
    n = np.arange(count)
    return np.exp(-nbar + n * np.log(nbar) - [math.lgamma(k + 1) for k in n])


def run_fig2c(cfg, scen, outdir, seed=0, threads=1):
    sweep = _revival_trace(cfg, scen)
    spec = dft_spectrum(preprocess(SignalTrace(sweep.t_e, sweep.p_g)))
    csv = outdir / "fig2c.csv"
    io.write_spectrum(csv, spec)
    ext = extract_photon_distribution(spec, cfg.omega0, scen.spectrum_n_max)
    reference = _poisson(cfg.n_bar, scen.spectrum_n_max + 1)
    pn_csv = outdir / "fig2c_pn.csv"
    io.write_distribution(pn_csv, ext.p, reference, reference_name="p_poisson")
    svg = outdir / "fig2c.svg"
    plotting.plot_spectrum(svg, spec.frequencies, spec.magnitudes,
                           "revival spectrum", markers=ext.expected_centers)
    pn_svg = outdir / "fig2c_pn.svg"
    plotting.plot_distribution(pn_svg, ext.p, "extracted photon distribution",
                               reference, "Poisson")
    tv = 0.5 * float(np.sum(np.abs(ext.p - reference))) + 0.5 * (1 - float(reference.sum()))
    summary = {
        "parity": f"{parity_of(ext.p):.4f}",
        "tv_distance_to_poisson": f"{tv:.4f}",
    }
    meta = _write_meta(outdir, "fig2c", cfg, scen, seed, summary)
    return ScenarioOutput("fig2c", [csv, pn_csv, svg, pn_svg, meta], summary)


def run_fig3a(cfg, scen, outdir, seed=0, threads=1):
    alphas = np.arange(scen.alpha_min, scen.alpha_max + scen.alpha_step / 2, scen.alpha_step)
    start = scen.t_first + scen.t_delay
    t_probe = invert_effective_time(scen.probe_t_e, cfg, t_start=start)
    sweep = cat_alpha_sweep(
        cfg, cfg.bath(), cfg.beta(), alphas, scen.t_first, scen.t_delay, t_probe,
        tol=scen.tol, threads=threads,
    )
    csv = outdir / "fig3a.csv"
    io.write_alpha_sweep(csv, alphas, sweep.p_g)
    # Wigner cut of the generated cat implied by the ideal probe relation
    w_cut = (2 / math.pi) * (1.0 - 2.0 * sweep.p_ideal)
    wig_csv = outdir / "fig3a_wigner.csv"
    io.write_wigner_cut(wig_csv, alphas, w_cut)
    svg = outdir / "fig3a.svg"
    plotting.plot_alpha_sweep(svg, alphas, sweep.p_g, f"Wigner cut at t'_e = {scen.probe_t_e * 1e6:.1f} us")
    fringe = cat_size_from_fringes(alphas, sweep.p_g, (scen.fringe_fit_min, scen.fringe_fit_max))
    summary = {
        "d_squared": f"{fringe.d_squared:.2f}",
        "fringe_period": f"{fringe.period:.4f}",
        "fringe_amplitude": f"{fringe.amplitude:.4f}",
        "probe_t_i_us": f"{t_probe * 1e6:.3f}",
    }
    meta = _write_meta(outdir, "fig3a", cfg, scen, seed, summary)
    return ScenarioOutput("fig3a", [csv, wig_csv, svg, meta], summary)


def run_fig3b(cfg, scen, outdir, seed=0, threads=1):
    sweep = _cat_trace(cfg, scen)
    csv = outdir / "fig3b.csv"
    io.write_time_sweep(csv, sweep.t_i, sweep.t_e, sweep.p_g)
    svg = outdir / "fig3b.svg"
    plotting.plot_time_sweep(
        svg, sweep.t_e, sweep.p_g, f"revivals in the displaced cat, alpha = {scen.alpha}"
    )
    t_r = timescales(cfg.n_bar, cfg.omega0).t_r
    half = envelope_peak_time(
        SignalTrace(sweep.t_e, sweep.p_g), (0.3 * t_r, 0.7 * t_r)
    )
    summary = {"half_revival_peak_us": f"{half * 1e6:.2f}"}
    meta = _write_meta(outdir, "fig3b", cfg, scen, seed, summary)
    return ScenarioOutput("fig3b", [csv, svg, meta], summary)


def run_fig3c(cfg, scen, outdir, seed=0, threads=1):
    sweep = _cat_trace(cfg, scen)
    spec = dft_spectrum(preprocess(SignalTrace(sweep.t_e, sweep.p_g)))
    csv = outdir / "fig3c.csv"
    io.write_spectrum(csv, spec)
    ext = extract_photon_distribution(spec, cfg.omega0, scen.spectrum_n_max)
    pn_csv = outdir / "fig3c_pn.csv"
    io.write_distribution(pn_csv, ext.p)
    svg = outdir / "fig3c.svg"
    plotting.plot_spectrum(svg, spec.frequencies, spec.magnitudes,
                           "displaced-cat spectrum", markers=ext.expected_centers)
    summary = {"parity": f"{parity_of(ext.p):.4f}"}
    meta = _write_meta(outdir, "fig3c", cfg, scen, seed, summary)
    return ScenarioOutput("fig3c", [csv, pn_csv, svg, meta], summary)


def _cat_photon_number(cfg, scen) -> float:
    """Mean photon number of the monitored cat: <N> - Re<a>^2 of the field
    right after the probe displacement (half the squared component
    separation is the decoherence-relevant size)."""
    from . import fock
    from .sequence import Inject, SequenceEngine, _displacement_step

    eng = SequenceEngine(cfg, cfg.bath(), tol=scen.tol)
    eng.inject(Inject(amplitude=cfg.beta()))
    eng.resonant(scen.t_first)
    eng.reset_discard_g()
    eng.inject(_displacement_step(scen.alpha))
    rho_f = fock.partial_trace_atom(eng.rho)
    rho_f = rho_f / np.trace(rho_f).real
    mean_n = fock.number_expectation(rho_f)
    mean_a = fock.mean_amplitude(rho_f)
    return mean_n - abs(mean_a) ** 2


def run_fig4(cfg, scen, outdir, seed=0, threads=1):
    omega_r = cfg.omega0 * math.sqrt(cfg.n_bar)
    t_e_grid = np.arange(
        scen.decoherence_t_e_min, scen.decoherence_t_e_max, scen.revival_t_e_step
    )
    groups = []
    all_td, all_ti, all_te, all_pg = [], [], [], []
    contrasts = []
    for delay in scen.decoherence_delays:
        start = scen.t_first + delay
        t_probe = _invert_grid(t_e_grid, cfg, t_start=start)
        sweep = cat_time_sweep(
            cfg, cfg.bath(), cfg.beta(), scen.alpha, scen.t_first, delay, t_probe, tol=scen.tol
        )
        fitres = fit_revival_contrast(sweep.t_e, sweep.p_g, omega_r)
        contrasts.append(fitres.contrast)
        groups.append((f"t_d = {delay * 1e6:.0f} us", sweep.t_e, sweep.p_g))
        all_td.append(np.full(t_e_grid.size, delay))
        all_ti.append(sweep.t_i)
        all_te.append(sweep.t_e)
        all_pg.append(sweep.p_g)
    csv = outdir / "fig4.csv"
    io.write_decoherence_sweep(
        csv, np.concatenate(all_td), np.concatenate(all_ti),
        np.concatenate(all_te), np.concatenate(all_pg),
    )
    contrast_csv = outdir / "fig4_contrast.csv"
    io.write_csv(
        contrast_csv,
        ["t_d_us", "contrast"],
        [np.asarray(scen.decoherence_delays) * 1e6, contrasts],
    )
    svg = outdir / "fig4.svg"
    plotting.plot_decoherence(svg, groups, "revival contrast versus delay")
    tau, _ = fit_exponential_decay(np.asarray(scen.decoherence_delays), np.asarray(contrasts))
    t_d_formula = decoherence_time(cfg.t_cav, cfg.n_bar, cfg.n_th)
    nbar_cat = _cat_photon_number(cfg, scen)
    t_d_cat = decoherence_time(cfg.t_cav, nbar_cat, cfg.n_th)
    summary = {
        "decay_constant_us": f"{tau * 1e6:.1f}",
        "decoherence_time_formula_us": f"{t_d_formula * 1e6:.1f}",
        "decoherence_time_cat_us": f"{t_d_cat * 1e6:.1f}",
        "cat_photon_number": f"{nbar_cat:.2f}",
    }
    meta = _write_meta(outdir, "fig4", cfg, scen, seed, summary)
    return ScenarioOutput("fig4", [csv, contrast_csv, svg, meta], summary)


def run_fit(cfg, scen, outdir, seed=0, threads=1, data_path=None):
    if data_path is None:
        params = RabiFitParams(
            omega0=cfg.omega0, x0=cfg.x0, p1=cfg.p1, a=cfg.a, b=cfg.b, c=cfg.c, d=cfg.d
        )
        grid = np.arange(0.0, scen.rabi_t_i_max + scen.rabi_t_i_step / 2, scen.rabi_t_i_step)
        data = generate_synthetic(params, 0.02, grid, seed=seed, v=cfg.v, w=cfg.w)
        data_csv = outdir / "fit_data.csv"
        io.write_csv(data_csv, ["t_i_us", "p_g"], [data.times * 1e6, data.values])
    else:
        data = io.read_fit_input(data_path)
        data_csv = Path(data_path)
    fit = fit_vacuum_rabi(data, v=cfg.v, w=cfg.w)
    csv = outdir / "fit.csv"
    io.write_fit_result(csv, fit)
    report = outdir / "fit_report.txt"
    report.write_text(fit.report() + "\n")
    svg = outdir / "fit.svg"
    plotting.plot_fit(svg, data.times, data.values,
                      model_pg(data.times, fit.params, cfg.v, cfg.w), "vacuum Rabi fit")
    summary = {
        "omega0_khz": f"{fit.params.omega0 / (2 * math.pi * 1e3):.4f}",
        "x0_mm": f"{fit.params.x0 * 1e3:.4f}",
        "p1": f"{fit.params.p1:.4f}",
        "converged": str(fit.converged).lower(),
        "residual_rms": f"{fit.residual_rms:.5f}",
    }
    meta = _write_meta(outdir, "fit", cfg, scen, seed, summary)
    return ScenarioOutput("fit", [data_csv, csv, report, svg, meta], summary)


def run_custom(cfg, scen, outdir, seed=0, threads=1):
    """Config-driven cat protocol sweep (the fig3b pipeline, custom knobs)."""
    sweep = _cat_trace(cfg, scen)
    csv = outdir / "custom.csv"
    io.write_time_sweep(csv, sweep.t_i, sweep.t_e, sweep.p_g)
    svg = outdir / "custom.svg"
    plotting.plot_time_sweep(svg, sweep.t_e, sweep.p_g, "custom protocol sweep")
    summary = {"points": str(len(sweep.t_i))}
    meta = _write_meta(outdir, "custom", cfg, scen, seed, summary)
    return ScenarioOutput("custom", [csv, svg, meta], summary)


_RUNNERS = {
    "fig2a": run_fig2a,
    "fig2b": run_fig2b,
    "fig2c": run_fig2c,
    "fig3a": run_fig3a,
    "fig3b": run_fig3b,
    "fig3c": run_fig3c,
    "fig4": run_fig4,
    "fit": run_fit,
    "custom": run_custom,
}


def run_scenario(
    name: str,
    cfg: ExperimentConfig,
    scen: ScenarioSettings,
    outdir,
    seed: int = 0,
    tol: float = None,
    threads: int = 1,
    data_path=None,
) -> ScenarioOutput:
    if name not in _RUNNERS:
        raise ValueError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIO_NAMES)}")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if tol is not None:
        scen = replace(scen, tol=tol)
    kwargs = {"seed": seed, "threads": threads}
    if name == "fit":
        kwargs["data_path"] = data_path
    return _RUNNERS[name](cfg, scen, outdir, **kwargs)
