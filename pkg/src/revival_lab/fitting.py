"""Extraction of the experimental parameters from a raw vacuum Rabi trace.

The model is a two-component Rabi oscillation (zero- and one-photon initial
field) evaluated at the effective interaction time, pushed through the
detection homography:

    P(t_i) = H[(1 - p1) sin^2(Omega0 t_e / 2) + p1 sin^2(sqrt(2) Omega0 t_e / 2)]

with H(P) = (a P + b)/(c P + d) and t_e the erf map of t_i.  The overall
homography scale is a gauge freedom (only ratios enter), fixed by a = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np
from scipy.optimize import least_squares, minimize
from scipy.special import erf

from .analysis import SignalTrace, dft_spectrum, preprocess
from .errors import NoConvergence

DEFAULT_V = 8.1
DEFAULT_W = 6e-3


@dataclass(frozen=True)
class RabiFitParams:
    """Named parameter vector of the vacuum-Rabi model."""

    omega0: float
    x0: float
    p1: float
    a: float
    b: float
    c: float
    d: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)])

    @staticmethod
    def names() -> list:
        return [f.name for f in fields(RabiFitParams)]


PUBLISHED_PARAMS = RabiFitParams(
    omega0=2 * math.pi * 49.88e3, x0=1.72e-3, p1=0.094, a=1.0, b=0.133, c=0.297, d=1.136
)


@dataclass
class FitResult:
    params: RabiFitParams
    uncertainties: RabiFitParams
    residual_rms: float
    converged: bool

    def __post_init__(self):
        if not 0 <= self.params.p1 <= 1:
            raise ValueError("fitted p1 outside [0, 1]")
        if not math.isfinite(self.residual_rms):
            raise ValueError("residual_rms must be finite")

    def report(self) -> str:
        lines = []
        for name in RabiFitParams.names():
            val = getattr(self.params, name)
            sig = getattr(self.uncertainties, name)
            if name == "omega0":
                lines.append(f"omega0 = 2pi x {val / (2 * math.pi * 1e3):.5g} kHz "
                             f"+- {sig / (2 * math.pi * 1e3):.2g} kHz")
            elif name == "x0":
                lines.append(f"x0 = {val * 1e3:.5g} mm +- {sig * 1e3:.2g} mm")
            else:
                lines.append(f"{name} = {val:.5g} +- {sig:.2g}")
        lines.append(f"residual_rms = {self.residual_rms:.3g}")
        lines.append(f"converged = {self.converged}")
        return "\n".join(lines)


def _effective_time(t_i, x0, v, w):
    u0 = -x0 / w
    u1 = (v * t_i - x0) / w
    return (w / v) * (math.sqrt(math.pi) / 2) * (erf(u1) - erf(u0))


def model_pg(t_i, params: RabiFitParams, v: float = DEFAULT_V, w: float = DEFAULT_W):
    """Detected ground-state probability of the vacuum-Rabi model."""
    t_e = _effective_time(np.asarray(t_i, dtype=float), params.x0, v, w)
    ideal = (1 - params.p1) * np.sin(params.omega0 * t_e / 2) ** 2 + params.p1 * np.sin(
        math.sqrt(2) * params.omega0 * t_e / 2
    ) ** 2
    return (params.a * ideal + params.b) / (params.c * ideal + params.d)


def generate_synthetic(
    params: RabiFitParams,
    noise_sigma: float,
    t_grid,
    seed: int = 0,
    v: float = DEFAULT_V,
    w: float = DEFAULT_W,
    binomial_shots: int = 0,
) -> SignalTrace:
    """Model evaluated on a grid plus seeded noise, clipped to [0, 1].

    binomial_shots > 0 replaces the Gaussian noise by per-point binomial
    counting statistics with that many repetitions.
    """
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be nonnegative")
    t = np.asarray(t_grid, dtype=float)
    clean = model_pg(t, params, v, w)
    rng = np.random.default_rng(seed)
    if binomial_shots > 0:
        noisy = rng.binomial(binomial_shots, np.clip(clean, 0, 1)) / binomial_shots
    elif noise_sigma > 0:
        noisy = clean + rng.normal(0.0, noise_sigma, size=t.shape)
    else:
        noisy = clean
    return SignalTrace(t, np.clip(noisy, 0.0, 1.0))


def _pack(params: RabiFitParams) -> np.ndarray:
    return np.array([params.omega0, params.x0, params.p1, params.b, params.c, params.d])


def _unpack(x) -> RabiFitParams:
    return RabiFitParams(omega0=x[0], x0=x[1], p1=x[2], a=1.0, b=x[3], c=x[4], d=x[5])


def _dominant_frequency(data: SignalTrace) -> float:
    spec = dft_spectrum(preprocess(data))
    mask = (spec.frequencies > 10e3) & (spec.frequencies < 200e3)
    return float(spec.frequencies[mask][np.argmax(spec.magnitudes[mask])])


def fit_vacuum_rabi(
    data: SignalTrace,
    v: float = DEFAULT_V,
    w: float = DEFAULT_W,
    n_starts: int = 21,
) -> FitResult:
    """Least-squares extraction of (omega0, x0, p1, b, c, d) with a = 1.

    Multi-start over omega0 (grid around the dominant spectral peak of the
    data), simplex refinement, then a bounded gradient polish; parameter
    uncertainties come from the Jacobian at the optimum.
    """
    if len(data) < 50:
        raise ValueError("need at least 50 samples")
    f_peak = _dominant_frequency(data)
    span_periods = (data.times[-1] - data.times[0]) * f_peak
    if span_periods < 10:
        raise ValueError(f"data spans only {span_periods:.1f} Rabi periods; need 10")

    t, y = data.times, data.values

    def residuals(x):
        return model_pg(t, _unpack(x), v, w) - y

    def cost(x):
        if not 0 <= x[2] <= 1 or x[5] <= 0:
            return 1e6
        r = residuals(x)
        return float(r @ r)

    omega_grid = 2 * math.pi * f_peak * np.linspace(0.90, 1.10, n_starts)
    best = None
    for omega_start in omega_grid:
        x_start = np.array([omega_start, 1.5e-3, 0.08, 0.1, 0.2, 1.0])
        res = minimize(cost, x_start, method="Nelder-Mead",
                       options={"maxiter": 4000, "xatol": 1e-10, "fatol": 1e-14})
        if math.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise NoConvergence("no simplex start produced a finite cost")

    lo = [2 * math.pi * f_peak * 0.8, -5e-3, 0.0, -2.0, -5.0, 0.05]
    hi = [2 * math.pi * f_peak * 1.3, 5e-3, 1.0, 2.0, 5.0, 10.0]
    x_polish = np.clip(best.x, lo, hi)
    polish = least_squares(residuals, x_polish, bounds=(lo, hi), xtol=1e-14, ftol=1e-14)
    x_fit = polish.x

    n, k = len(y), len(x_fit)
    dof = max(n - k, 1)
    variance = 2 * polish.cost / dof
    jtj = polish.jac.T @ polish.jac
    try:
        cov = np.linalg.inv(jtj) * variance
        sigmas = np.sqrt(np.clip(np.diagonal(cov), 0.0, None))
    except np.linalg.LinAlgError:
        sigmas = np.full(k, np.nan)
    converged = bool(polish.success and np.all(np.isfinite(sigmas)))
    unc = RabiFitParams(
        omega0=sigmas[0], x0=sigmas[1], p1=sigmas[2], a=0.0, b=sigmas[3], c=sigmas[4], d=sigmas[5]
    )
    return FitResult(
        params=_unpack(x_fit),
        uncertainties=unc,
        residual_rms=float(np.sqrt(np.mean(residuals(x_fit) ** 2))),
        converged=converged,
    )


def bootstrap_omega0_sigma(
    data: SignalTrace,
    fit: FitResult,
    n_resamples: int = 50,
    seed: int = 1,
    v: float = DEFAULT_V,
    w: float = DEFAULT_W,
) -> float:
    """Residual-bootstrap spread of omega0, warm-started at the fit optimum."""
    t, y = data.times, data.values
    model = model_pg(t, fit.params, v, w)
    residual = y - model
    rng = np.random.default_rng(seed)
    lo = [fit.params.omega0 * 0.9, -5e-3, 0.0, -2.0, -5.0, 0.05]
    hi = [fit.params.omega0 * 1.1, 5e-3, 1.0, 2.0, 5.0, 10.0]
    x0 = np.clip(_pack(fit.params), lo, hi)
    values = []
    for _ in range(n_resamples):
        fake = model + rng.choice(residual, size=residual.size, replace=True)

        def res_fn(x, target=fake):
            return model_pg(t, _unpack(x), v, w) - target

        refit = least_squares(res_fn, x0, bounds=(lo, hi), xtol=1e-12)
        values.append(refit.x[0])
    return float(np.std(values, ddof=1))
