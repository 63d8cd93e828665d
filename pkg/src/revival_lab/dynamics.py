"""Closed and open time evolution of the atom-field system.

The Hamiltonian (in units of hbar, cavity rotating frame) is

    H = (delta/2) sigma_z + (Omega0/2) (a sigma+ + a† sigma-),

with sigma+ = |e><g| and the joint ordering (atom e/g) x (Fock index).
Unitary evolution is exact, done per excitation manifold; open-system
evolution integrates the Lindblad master equation with a finite-temperature
cavity bath and an optional atomic decay channel using an adaptive embedded
Runge-Kutta 4(5) scheme on the vectorized density matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .errors import StepSizeUnderflow
from .fock import JointDensityMatrix

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class JCParams:
    """Coupling parameters: vacuum Rabi frequency and detuning (rad/s)."""

    omega0: float
    delta: float = 0.0
    dim: int = 50

    def __post_init__(self):
        if self.omega0 <= 0:
            raise ValueError("omega0 must be positive")
        if self.dim < 2:
            raise ValueError("dim must be at least 2")


@dataclass(frozen=True)
class BathParams:
    """Cavity damping time, thermal occupation, optional atomic lifetime (s)."""

    t_cav: float
    n_th: float = 0.0
    t_atom: Optional[float] = None

    def __post_init__(self):
        if self.t_cav <= 0:
            raise ValueError("t_cav must be positive")
        if self.n_th < 0:
            raise ValueError("n_th must be nonnegative")
        if self.t_atom is not None and self.t_atom <= 0:
            raise ValueError("t_atom must be positive when given")


@dataclass(frozen=True)
class GaussianCoupling:
    """Transverse mode envelope seen by an atom crossing the waist.

    The coupling is Omega0 * exp(-(x/w)^2) with x = x_start + v * tau,
    tau measured from the start of the evolution window.
    """

    x_start: float
    v: float
    w: float


def jc_hamiltonian(params: JCParams) -> np.ndarray:
    """Joint-space Hamiltonian matrix (units of hbar, rad/s)."""
    d = params.dim
    h = np.zeros((2 * d, 2 * d), dtype=np.complex128)
    n = np.arange(d)
    h[:d, :d] = np.diag(np.full(d, params.delta / 2))
    h[d:, d:] = np.diag(np.full(d, -params.delta / 2))
    g = 0.5 * params.omega0 * np.sqrt(n[1:])
    # <e, n-1| H |g, n> = (Omega0/2) sqrt(n)
    h[n[1:] - 1, d + n[1:]] = g
    h[d + n[1:], n[1:] - 1] = g
    return h


def _manifold_blocks(params: JCParams, t: float):
    d = params.dim
    n = np.arange(d - 1)
    g = 0.5 * params.omega0 * np.sqrt(n + 1.0)
    dd = params.delta / 2
    e = np.hypot(dd, g)
    c = np.cos(e * t)
    s = t * np.sinc(e * t / np.pi)  # sin(e t)/e, finite at e = 0
    return c - 1j * dd * s, -1j * g * s, c + 1j * dd * s


def evolve_unitary(state: np.ndarray, params: JCParams, t: float) -> np.ndarray:
    """Propagate a pure joint state for time t under the lossless Hamiltonian.

    Exact per-manifold two-level rotation; no time stepping involved.
    """
    d = params.dim
    psi = np.asarray(state, dtype=np.complex128)
    if psi.shape != (2 * d,):
        raise ValueError(f"state length {psi.shape} does not match 2*dim = {2 * d}")
    uee, ueg, ugg = _manifold_blocks(params, t)
    out = np.empty_like(psi)
    pe, pg = psi[:d], psi[d:]
    out[: d - 1] = uee * pe[: d - 1] + ueg * pg[1:]
    out[d + 1 :] = ueg * pe[: d - 1] + ugg * pg[1:]
    out[d - 1] = np.exp(-1j * params.delta * t / 2) * pe[d - 1]
    out[d] = np.exp(1j * params.delta * t / 2) * pg[0]
    return out


def unitary_propagator(params: JCParams, t: float) -> np.ndarray:
    """Dense propagator exp(-i H t) on the joint space."""
    d = params.dim
    uee, ueg, ugg = _manifold_blocks(params, t)
    u = np.zeros((2 * d, 2 * d), dtype=np.complex128)
    n = np.arange(d - 1)
    u[n, n] = uee
    u[n, d + 1 + n] = ueg
    u[d + 1 + n, n] = ueg
    u[d + 1 + n, d + 1 + n] = ugg
    u[d - 1, d - 1] = np.exp(-1j * params.delta * t / 2)
    u[d, d] = np.exp(1j * params.delta * t / 2)
    return u


def thermal_mixture(n_th: float, p1_cap: Optional[float] = None, dim: int = 50) -> np.ndarray:
    """Thermal field density matrix, or its zero/one-photon surrogate.

    With p1_cap given, returns (1 - p1)|0><0| + p1|1><1|; otherwise the
    Bose-Einstein distribution at mean occupation n_th, renormalized over
    the truncated basis.
    """
    if n_th < 0:
        raise ValueError("n_th must be nonnegative")
    if p1_cap is not None:
        if not 0 <= p1_cap <= 1:
            raise ValueError("p1_cap must lie in [0, 1]")
        p = np.zeros(dim)
        p[0], p[1] = 1.0 - p1_cap, p1_cap
        return np.diag(p).astype(np.complex128)
    if n_th == 0:
        p = np.zeros(dim)
        p[0] = 1.0
    else:
        n = np.arange(dim)
        p = np.exp(n * np.log(n_th) - (n + 1) * np.log(1.0 + n_th))
        p = p / p.sum()
    return np.diag(p).astype(np.complex128)


@dataclass
class Trajectory:
    """Observables sampled along a Lindblad integration."""

    times: np.ndarray
    p_g: np.ndarray
    trace: np.ndarray
    mean_n: np.ndarray
    final: np.ndarray
    n_steps: int
    n_evals: int


def _bath_rates(bath: Optional[BathParams]):
    if bath is None:
        return 0.0, 0.0, 0.0
    kappa = 1.0 / bath.t_cav
    g_at = 0.0 if bath.t_atom is None else 1.0 / bath.t_atom
    return kappa * (1.0 + bath.n_th), kappa * bath.n_th, g_at


def lindblad_trajectory(
    rho: np.ndarray,
    params: Optional[JCParams],
    bath: Optional[BathParams],
    duration: float,
    tol: float = DEFAULT_TOL,
    t_eval: Optional[np.ndarray] = None,
    envelope: Optional[GaussianCoupling] = None,
    dim: Optional[int] = None,
) -> Trajectory:
    """Integrate the master equation, sampling observables at t_eval.

    rho is a raw (2 dim x 2 dim) density matrix; params None switches the
    Hamiltonian off (free field relaxation), bath None switches dissipation
    off.  Returns the sampled observables and the final matrix.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if duration < 0:
        raise ValueError("duration must be nonnegative")
    mat = np.asarray(rho, dtype=np.complex128)
    d = dim or (params.dim if params is not None else mat.shape[0] // 2)
    if mat.shape != (2 * d, 2 * d):
        raise ValueError("density matrix shape does not match truncation")
    if t_eval is None:
        t_eval = np.array([duration])
    t_eval = np.asarray(t_eval, dtype=np.float64)
    if t_eval.size and (t_eval[0] < -1e-15 or t_eval[-1] > duration * (1 + 1e-12) + 1e-15):
        raise ValueError("t_eval must lie within [0, duration]")
    if np.any(np.diff(t_eval) < 0):
        raise ValueError("t_eval must be sorted")

    coup0 = 0.0 if params is None else 0.5 * params.omega0
    delta = 0.0 if params is None else params.delta
    g_dn, g_up, g_at = _bath_rates(bath)
    if envelope is None:
        env_on, x0pos, v, w = 0, 0.0, 0.0, 1.0
    else:
        env_on, x0pos, v, w = 1, envelope.x_start, envelope.v, envelope.w

    y = np.ascontiguousarray(mat).ravel().copy()
    obs = np.empty((t_eval.size, 3), dtype=np.float64)
    status, nsteps, nfev = _kernels.integrate_lindblad(
        y, 0.0, float(duration), tol, tol * 1e-3, d,
        coup0, delta, g_dn, g_up, g_at,
        env_on, x0pos, v, w, t_eval, obs,
    )
    if status == _kernels.STATUS_STEP_UNDERFLOW:
        raise StepSizeUnderflow(
            f"adaptive step fell below resolution after {nsteps} steps ({nfev} evaluations)"
        )
    return Trajectory(
        times=t_eval,
        p_g=obs[:, 0].copy(),
        trace=obs[:, 1].copy(),
        mean_n=obs[:, 2].copy(),
        final=y.reshape(2 * d, 2 * d),
        n_steps=nsteps,
        n_evals=nfev,
    )


def lindblad_evolve(
    rho,
    params: Optional[JCParams],
    bath: Optional[BathParams],
    t: float,
    tol: float = DEFAULT_TOL,
) -> JointDensityMatrix:
    """Evolve a joint density matrix for time t under the full master equation.

    The returned matrix is re-Hermitized and trace-renormalized; both
    corrections only remove integrator round-off (drift beyond 1e-8 raises).
    """
    mat = rho.matrix if isinstance(rho, JointDensityMatrix) else np.asarray(rho)
    traj = lindblad_trajectory(mat, params, bath, t, tol=tol)
    out = traj.final
    out = 0.5 * (out + out.conj().T)
    drift = abs(np.trace(out).real - 1.0)
    if drift > 1e-8:
        raise StepSizeUnderflow(f"trace drifted by {drift:.2e}; integration accuracy lost")
    return JointDensityMatrix(out / np.trace(out).real)
