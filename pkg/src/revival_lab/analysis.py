"""Signal analysis: spectra, photon-number extraction, Wigner cuts, fringes.

The frequency-domain pipeline follows a fixed recipe: linear interpolation
onto a 0.1 us grid, mean subtraction, even symmetrization about t = 0,
zero padding to +-3000 us, then a plain FFT (rectangular window).  Peak
weights at the Fock-state Rabi frequencies Omega0 sqrt(n+1) measure the
photon number distribution directly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import least_squares, nnls
from scipy.signal import hilbert

from .errors import (
    EmptyTrace,
    FitDiverged,
    InsufficientFringes,
    NonUniformGrid,
    OverlappingPeaks,
    TruncationTooSmall,
)
from .fock import FieldState, displacement, mean_amplitude, parity, required_dim

GRID_STEP = 0.1e-6
PAD_EXTENT = 3000e-6


@dataclass(frozen=True)
class SignalTrace:
    """Real time series; samples are sorted by time on construction."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape:
            raise ValueError("times and values must be matching 1-D arrays")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("trace contains non-finite entries")
        order = np.argsort(t, kind="stable")
        t, v = t[order], v[order]
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("duplicate sample times")
        t.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.times.size


@dataclass(frozen=True)
class Spectrum:
    """Magnitude spectrum on a uniform frequency grid (Hz).

    half_extent, when known, is the half-width of the (symmetrized) time
    support of the transformed signal; it seeds the window-kernel shape in
    peak extraction.
    """

    frequencies: np.ndarray
    magnitudes: np.ndarray
    half_extent: Optional[float] = None

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        m = np.asarray(self.magnitudes, dtype=float)
        if f.shape != m.shape or f.ndim != 1:
            raise ValueError("frequencies and magnitudes must be matching 1-D arrays")
        if f.size > 1:
            steps = np.diff(f)
            if np.max(np.abs(steps - steps[0])) > 1e-6 * abs(steps[0]):
                raise ValueError("frequency grid must be uniform")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise ValueError("magnitudes must be finite and nonnegative")
        f.flags.writeable = False
        m.flags.writeable = False
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "magnitudes", m)

    @property
    def resolution(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])


def preprocess(trace: SignalTrace) -> SignalTrace:
    """Interpolate, mean-subtract, symmetrize and zero-pad a trace.

    Output is the fixed +-3000 us window sampled at 0.1 us (60001 points),
    even about t = 0.
    """
    if len(trace) < 2:
        raise EmptyTrace("need at least two samples")
    t_max = min(trace.times[-1], PAD_EXTENT)
    n_data = int(math.floor(t_max / GRID_STEP + 1e-9))
    grid = np.arange(n_data + 1) * GRID_STEP
    interp = np.interp(grid, trace.times, trace.values)
    interp -= interp.mean()
    n_half = int(round(PAD_EXTENT / GRID_STEP))
    padded = np.zeros(2 * n_half + 1)
    padded[n_half : n_half + n_data + 1] = interp
    padded[n_half - n_data : n_half + 1] = interp[::-1]
    times = (np.arange(2 * n_half + 1) - n_half) * GRID_STEP
    return SignalTrace(times, padded)


def _signal_half_extent(trace: SignalTrace) -> Optional[float]:
    """Half-width of the nonzero support of a symmetrized trace."""
    nz = np.nonzero(trace.values != 0.0)[0]
    if nz.size == 0:
        return None
    return float(max(abs(trace.times[nz[0]]), abs(trace.times[nz[-1]])))


def dft_spectrum(trace: SignalTrace) -> Spectrum:
    """Magnitude of the discrete Fourier transform of a uniform trace."""
    t = trace.times
    if len(trace) < 2:
        raise EmptyTrace("need at least two samples")
    steps = np.diff(t)
    if np.max(np.abs(steps - steps[0])) > 1e-6 * steps[0]:
        raise NonUniformGrid("trace must be uniformly sampled; run preprocess first")
    n = len(trace)
    spec = np.fft.fft(trace.values)
    keep = (n + 1) // 2
    freqs = np.arange(keep) / (n * steps[0])
    return Spectrum(freqs, np.abs(spec[:keep]), half_extent=_signal_half_extent(trace))


@dataclass
class PeakExtraction:
    """Photon distribution and per-peak records from the comb fit."""

    p: np.ndarray
    centers: np.ndarray
    amplitudes: np.ndarray
    width: float
    window_extent: float
    expected_centers: np.ndarray
    residual_rms: float
    overlapping: bool


def extract_photon_distribution(
    spec: Spectrum,
    omega0: float,
    n_max: int,
    window: tuple = (30e3, 250e3),
) -> PeakExtraction:
    """Photon distribution from the peak weights at the Rabi frequencies.

    Stage one fits a shared-width Gaussian comb with centers initialized at
    Omega0 sqrt(n+1)/2pi for n = 0..n_max.  A rectangular time window makes
    every peak carry sinc sidelobes that a Gaussian cannot represent, and
    for sparse distributions the sidelobe pickup dominates the weight
    errors; stage two therefore re-fits amplitudes and centers with the
    window kernel |sum_n A_n sinc(2T(f - f_n))| (T = effective half-extent,
    seeded by the Gaussian width).  Normalized stage-two amplitudes give
    p(n).
    """
    expected = omega0 * np.sqrt(np.arange(n_max + 1) + 1.0) / (2 * math.pi)
    lo, hi = window
    if expected[-1] >= hi or expected[0] <= lo:
        raise ValueError("peak ladder does not fit inside the frequency window")
    mask = (spec.frequencies >= lo) & (spec.frequencies <= hi)
    f = spec.frequencies[mask]
    y = spec.magnitudes[mask]
    if f.size < 10 * (n_max + 1) // 4:
        raise ValueError("window contains too few frequency samples")
    npk = n_max + 1

    amp0 = np.array([y[np.argmin(np.abs(f - c))] for c in expected])
    width0 = 0.5e3
    x0 = np.concatenate([amp0, expected, [width0]])
    lower = np.concatenate([np.zeros(npk), expected - 3e3, [0.1e3]])
    upper = np.concatenate([np.full(npk, np.inf), expected + 3e3, [3e3]])

    def gaussian_model(params):
        amps, centers, s = params[:npk], params[npk : 2 * npk], params[-1]
        return np.exp(-((f[:, None] - centers[None, :]) ** 2) / (2 * s * s)) @ amps

    stage1 = least_squares(lambda p: gaussian_model(p) - y, x0, bounds=(lower, upper), xtol=1e-12)
    if not stage1.success:
        raise FitDiverged(f"peak fit failed: {stage1.message}")
    width = float(stage1.x[-1])

    def kernel_model(params):
        amps, centers, t_ext = params[:npk], params[npk : 2 * npk], params[-1]
        core = np.sinc(2 * t_ext * (f[:, None] - centers[None, :]))
        mirror = np.sinc(2 * t_ext * (f[:, None] + centers[None, :]))
        return np.abs((core + mirror) @ amps)

    if spec.half_extent is not None:
        t0 = spec.half_extent
    else:
        # profile the window extent on a grid, solving amplitudes linearly
        centers1 = stage1.x[npk : 2 * npk]
        best = None
        for t_try in (0.187 / width) * np.geomspace(0.25, 4.0, 41):
            kmat = np.sinc(2 * t_try * (f[:, None] - centers1[None, :])) + np.sinc(
                2 * t_try * (f[:, None] + centers1[None, :])
            )
            amps_try, _ = nnls(kmat, y)
            cost = float(np.sum((np.abs(kmat @ amps_try) - y) ** 2))
            if best is None or cost < best[0]:
                best = (cost, t_try)
        t0 = best[1]

    x1 = np.concatenate([stage1.x[:npk], stage1.x[npk : 2 * npk], [t0]])
    lower2 = np.concatenate([np.zeros(npk), expected - 3e3, [0.9 * t0]])
    upper2 = np.concatenate([np.full(npk, np.inf), expected + 3e3, [1.1 * t0]])
    x_scale = np.concatenate([np.full(npk, max(y.max(), 1.0)), np.full(npk, 1e3), [0.01 * t0]])
    stage2 = least_squares(
        lambda p: kernel_model(p) - y, x1, bounds=(lower2, upper2), xtol=1e-12, x_scale=x_scale
    )
    if not stage2.success:
        raise FitDiverged(f"peak refinement failed: {stage2.message}")
    amps = stage2.x[:npk]
    centers = stage2.x[npk : 2 * npk]
    total = amps.sum()
    if total <= 0:
        raise FitDiverged("peak fit found no spectral weight")
    spacing = np.min(np.diff(expected))
    overlapping = bool(spacing < width)
    if overlapping:
        warnings.warn(
            f"adjacent peaks spaced {spacing:.3g} Hz, below fitted width {width:.3g} Hz",
            OverlappingPeaks,
            stacklevel=2,
        )
    return PeakExtraction(
        p=amps / total,
        centers=centers,
        amplitudes=amps,
        width=width,
        window_extent=float(stage2.x[-1]),
        expected_centers=expected,
        residual_rms=float(np.sqrt(np.mean((kernel_model(stage2.x) - y) ** 2))),
        overlapping=overlapping,
    )


def parity_of(p: np.ndarray) -> float:
    """Photon-number parity sum_n (-1)^n p(n)."""
    p = np.asarray(p, dtype=float)
    if abs(p.sum() - 1.0) > 1e-6:
        raise ValueError("distribution must be normalized")
    return float(np.where(np.arange(p.size) % 2 == 0, 1.0, -1.0) @ p)


# --- Wigner function through displaced parity ------------------------------


def _as_field_matrix(rho) -> np.ndarray:
    if isinstance(rho, FieldState):
        return rho.density_matrix()
    mat = np.asarray(rho, dtype=complex)
    if mat.ndim == 1:
        return np.outer(mat, mat.conj())
    return mat


def _embed(mat: np.ndarray, dim: int) -> np.ndarray:
    if mat.shape[0] >= dim:
        return mat
    out = np.zeros((dim, dim), dtype=complex)
    out[: mat.shape[0], : mat.shape[0]] = mat
    return out


def wigner_point(rho, alpha: complex, dim_work: Optional[int] = None) -> float:
    """Wigner function at alpha: (2/pi) Tr[rho D(alpha) P D(-alpha)].

    Parity conjugation collapses the two displacements into a single
    D(2 alpha).  dim_work embeds the state in a larger truncation when the
    displacement would otherwise leak.
    """
    mat = _as_field_matrix(rho)
    if alpha == 0:
        # parity expectation needs no displacement headroom
        needed = mat.shape[0]
    else:
        needed = required_dim(2 * abs(alpha) + abs(mean_amplitude(mat)))
    dim = dim_work or max(mat.shape[0], needed)
    if dim < needed:
        raise TruncationTooSmall(
            f"wigner_point: dim {dim} < required {needed} at alpha = {alpha:.3g}"
        )
    mat = _embed(mat, dim)
    signs = np.where(np.arange(dim) % 2 == 0, 1.0, -1.0)
    d2 = displacement(2 * alpha, dim).matrix
    val = (2 / math.pi) * np.einsum("ij,ji->", mat, d2 * signs[None, :])
    if abs(val.imag) > 1e-9 * max(1.0, abs(val.real)):
        warnings.warn(f"imaginary residual {val.imag:.2e} in Wigner value", stacklevel=2)
    return float(val.real)


def wigner_cut(rho, alphas, dim_work: Optional[int] = None) -> np.ndarray:
    """Wigner values along a set of phase-space points."""
    alphas = np.asarray(alphas)
    mat = _as_field_matrix(rho)
    reach = 2 * np.max(np.abs(alphas)) + abs(mean_amplitude(mat))
    dim = dim_work or max(mat.shape[0], required_dim(reach))
    return np.array([wigner_point(mat, al, dim_work=dim) for al in alphas])


def wigner_grid(rho, xs: np.ndarray, ys: np.ndarray, dim_work: Optional[int] = None) -> np.ndarray:
    """Wigner function on a separable grid alpha = x + i y.

    Factors D(2 alpha) = e^{-4 i x y} D(2 i y) D(2 x), so the grid costs one
    displacement per axis value instead of one per point.  Returns shape
    (len(ys), len(xs)).
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    mat = _as_field_matrix(rho)
    reach = 2 * math.hypot(np.max(np.abs(xs)), np.max(np.abs(ys))) + abs(mean_amplitude(mat))
    dim = dim_work or max(mat.shape[0], required_dim(reach))
    if dim < required_dim(reach):
        raise TruncationTooSmall(f"wigner_grid: dim {dim} < required {required_dim(reach)}")
    mat = _embed(mat, dim)
    signs = np.where(np.arange(dim) % 2 == 0, 1.0, -1.0)
    left = [displacement(2 * x, dim).matrix @ (signs[:, None] * mat) for x in xs]
    out = np.empty((ys.size, xs.size))
    for iy, y in enumerate(ys):
        dy = displacement(2j * y, dim).matrix
        for ix, x in enumerate(xs):
            val = np.exp(-4j * x * y) * np.einsum("ij,ji->", dy, left[ix])
            out[iy, ix] = (2 / math.pi) * val.real
    return out


# --- fringe and contrast fits ----------------------------------------------


@dataclass(frozen=True)
class FringeFit:
    """Single-cosine fit of a Wigner-cut interference pattern."""

    d_squared: float
    period: float
    amplitude: float
    phase: float
    offset: float


def _dominant_period(x: np.ndarray, y: np.ndarray) -> float:
    """Rough period estimate from the dominant nonzero DFT bin."""
    grid = np.linspace(x[0], x[-1], 4 * x.size)
    resampled = np.interp(grid, x, y)
    resampled -= resampled.mean()
    mags = np.abs(np.fft.rfft(resampled))
    if mags.size < 3 or np.max(mags[1:]) <= 0:
        raise InsufficientFringes("no oscillation found in curve")
    k = 1 + int(np.argmax(mags[1:]))
    return (grid[-1] - grid[0]) * grid.size / (grid.size - 1) / k


def cat_size_from_fringes(
    alphas: np.ndarray,
    p_g: np.ndarray,
    fit_window: tuple = (-1.2, 1.2),
    min_periods: float = 3.0,
) -> FringeFit:
    """Cat size D^2 from the fringe period of a P_g versus alpha curve.

    Fits offset + amplitude cos(2 pi alpha / L + phi) inside fit_window and
    returns D^2 = (pi / L)^2 together with the fit parameters.
    """
    alphas = np.asarray(alphas, dtype=float)
    p_g = np.asarray(p_g, dtype=float)
    lo, hi = fit_window
    mask = (alphas >= lo) & (alphas <= hi)
    x, y = alphas[mask], p_g[mask]
    if x.size < 8:
        raise InsufficientFringes("fit window contains too few points")
    if np.std(y) < 1e-9:
        raise InsufficientFringes("curve has no oscillation amplitude")
    period0 = _dominant_period(x, y)
    span = alphas[-1] - alphas[0]
    if span / period0 < min_periods:
        raise InsufficientFringes(
            f"curve spans {span / period0:.2f} fringe periods; need {min_periods}"
        )

    def residual(params):
        off, amp, period, phi = params
        return off + amp * np.cos(2 * math.pi * x / period + phi) - y

    # phase from quadrature projection at the initial period
    c = np.cos(2 * math.pi * x / period0)
    s = np.sin(2 * math.pi * x / period0)
    yc = y - y.mean()
    phi0 = math.atan2(-2 * np.mean(yc * s), 2 * np.mean(yc * c))
    amp0 = math.hypot(2 * np.mean(yc * c), 2 * np.mean(yc * s))
    result = least_squares(
        residual,
        [y.mean(), amp0, period0, phi0],
        bounds=([-np.inf, 0, 0.5 * period0, -2 * math.pi], [np.inf, np.inf, 2 * period0, 2 * math.pi]),
        xtol=1e-14,
    )
    if not result.success:
        raise FitDiverged(f"fringe fit failed: {result.message}")
    off, amp, period, phi = result.x
    if amp < 3e-4:
        raise InsufficientFringes("fitted fringe amplitude is consistent with zero")
    return FringeFit(
        d_squared=(math.pi / period) ** 2,
        period=float(period),
        amplitude=float(amp),
        phase=float(phi),
        offset=float(off),
    )


@dataclass(frozen=True)
class ContrastFit:
    """Cosine fit of a revival oscillation window."""

    amplitude: float
    omega: float
    phase: float
    offset: float

    @property
    def contrast(self) -> float:
        return 2.0 * abs(self.amplitude)


def fit_revival_contrast(times, values, omega_init: float) -> ContrastFit:
    """Fit offset + A cos(omega t + phi) near a known oscillation frequency."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    best = None
    for omega in omega_init * np.linspace(0.9, 1.1, 41):
        c, s = np.cos(omega * t), np.sin(omega * t)
        basis = np.column_stack([np.ones_like(t), c, s])
        coef, res, *_ = np.linalg.lstsq(basis, y, rcond=None)
        sse = float(res[0]) if res.size else float(np.sum((basis @ coef - y) ** 2))
        if best is None or sse < best[0]:
            best = (sse, omega, coef)
    _, omega, coef = best

    def residual(params):
        off, amp, om, phi = params
        return off + amp * np.cos(om * t + phi) - y

    amp0 = math.hypot(coef[1], coef[2])
    phi0 = math.atan2(-coef[2], coef[1])
    result = least_squares(residual, [coef[0], amp0, omega, phi0], xtol=1e-14)
    if not result.success:
        raise FitDiverged(f"contrast fit failed: {result.message}")
    off, amp, om, phi = result.x
    if amp < 0:
        amp, phi = -amp, phi + math.pi
    return ContrastFit(amplitude=float(amp), omega=float(om), phase=float(phi), offset=float(off))


def fit_exponential_decay(delays, amplitudes) -> tuple:
    """Least-squares fit a0 exp(-t/tau); returns (tau, a0)."""
    t = np.asarray(delays, dtype=float)
    a = np.asarray(amplitudes, dtype=float)
    if np.any(a <= 0):
        raise ValueError("amplitudes must be positive for an exponential fit")
    slope, intercept = np.polyfit(t, np.log(a), 1)
    tau0, a0 = -1.0 / slope, math.exp(intercept)

    def residual(params):
        tau, amp = params
        return amp * np.exp(-t / tau) - a

    result = least_squares(residual, [tau0, a0], xtol=1e-14)
    if not result.success:
        raise FitDiverged(f"decay fit failed: {result.message}")
    return float(result.x[0]), float(result.x[1])


def envelope_peak_time(trace: SignalTrace, search_window: tuple) -> float:
    """Location of the oscillation-envelope maximum inside a time window.

    The envelope is the magnitude of the analytic signal of the
    mean-subtracted trace, lightly smoothed before the peak search.
    """
    t = trace.times
    step = np.min(np.diff(t))
    grid = np.arange(t[0], t[-1] + step / 2, step)
    y = np.interp(grid, t, trace.values)
    env = np.abs(hilbert(y - y.mean()))
    n_smooth = max(1, int(round(5e-6 / step)))
    kernel = np.ones(n_smooth) / n_smooth
    env = np.convolve(env, kernel, mode="same")
    lo, hi = search_window
    mask = (grid >= lo) & (grid <= hi)
    if not np.any(mask):
        raise ValueError("search window outside trace")
    return float(grid[mask][np.argmax(env[mask])])
