"""CSV writers and readers for all emitted artifacts.

Columns follow the scenario contracts: time sweeps are
(t_i_us, t_e_us, p_g), displacement sweeps (alpha, p_g), spectra
(freq_khz, magnitude), Wigner cuts (alpha, w_value), photon
distributions (n, p, ...).  Floats are written with %.12g so a
write/read/write cycle is byte-stable.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .analysis import SignalTrace, Spectrum

_FMT = "%.12g"


def write_csv(path, names, columns) -> None:
    """Write named columns; all columns must share one length."""
    columns = [np.asarray(col) for col in columns]
    if len({col.shape[0] for col in columns}) > 1:
        raise ValueError("columns must have equal length")
    lines = [",".join(names)]
    for row in zip(*columns):
        lines.append(",".join(_FMT % v for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path):
    """Read a CSV written by this package; returns (names, columns)."""
    text = Path(path).read_text().strip().splitlines()
    names = text[0].split(",")
    rows = [[float(tok) for tok in line.split(",")] for line in text[1:]]
    data = np.array(rows, dtype=float)
    if data.size == 0:
        data = data.reshape(0, len(names))
    return names, [data[:, i] for i in range(len(names))]


def write_time_sweep(path, t_i, t_e, p_g) -> None:
    write_csv(path, ["t_i_us", "t_e_us", "p_g"], [np.asarray(t_i) * 1e6, np.asarray(t_e) * 1e6, p_g])


def read_time_sweep(path):
    """Returns (t_i seconds, t_e seconds, p_g)."""
    names, cols = read_csv(path)
    if names[:3] != ["t_i_us", "t_e_us", "p_g"]:
        raise ValueError(f"unexpected columns {names} in {path}")
    return cols[0] * 1e-6, cols[1] * 1e-6, cols[2]


def write_alpha_sweep(path, alpha, p_g) -> None:
    write_csv(path, ["alpha", "p_g"], [alpha, p_g])


def read_alpha_sweep(path):
    names, cols = read_csv(path)
    if names[:2] != ["alpha", "p_g"]:
        raise ValueError(f"unexpected columns {names} in {path}")
    return cols[0], cols[1]


def write_spectrum(path, spec: Spectrum) -> None:
    write_csv(path, ["freq_khz", "magnitude"], [spec.frequencies / 1e3, spec.magnitudes])


def read_spectrum(path) -> Spectrum:
    names, cols = read_csv(path)
    if names[:2] != ["freq_khz", "magnitude"]:
        raise ValueError(f"unexpected columns {names} in {path}")
    return Spectrum(cols[0] * 1e3, cols[1])


def write_wigner_cut(path, alpha, w_value) -> None:
    write_csv(path, ["alpha", "w_value"], [alpha, w_value])


def write_distribution(path, p, reference=None, reference_name="p_ref") -> None:
    n = np.arange(len(p))
    if reference is None:
        write_csv(path, ["n", "p"], [n, p])
    else:
        write_csv(path, ["n", "p", reference_name], [n, p, reference])


def write_decoherence_sweep(path, t_d, t_i, t_e, p_g) -> None:
    write_csv(
        path,
        ["t_d_us", "t_i_us", "t_e_us", "p_g"],
        [np.asarray(t_d) * 1e6, np.asarray(t_i) * 1e6, np.asarray(t_e) * 1e6, p_g],
    )


def read_fit_input(path) -> SignalTrace:
    """Vacuum Rabi data: columns t_i_us, p_g."""
    names, cols = read_csv(path)
    if "p_g" not in names:
        raise ValueError(f"no p_g column in {path}")
    t = cols[names.index("t_i_us")] * 1e-6
    return SignalTrace(t, cols[names.index("p_g")])


def write_fit_result(path, fit) -> None:
    names = list(type(fit.params).names())
    values = [getattr(fit.params, n) for n in names]
    sigmas = [getattr(fit.uncertainties, n) for n in names]
    lines = ["parameter,value,sigma"]
    for n, v, s in zip(names, values, sigmas):
        lines.append(f"{n},{_FMT % v},{_FMT % s}")
    lines.append(f"residual_rms,{_FMT % fit.residual_rms},0")
    lines.append(f"converged,{int(fit.converged)},0")
    Path(path).write_text("\n".join(lines) + "\n")
