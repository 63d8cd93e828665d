"""Closed-form results for collapse, revival and cat generation.

Everything here is a direct function of the photon statistics and the
vacuum Rabi frequency; no numerical integration is involved.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .fock import FieldState, coherent_state, joint_ket

MESOSCOPIC_NBAR = 5.0


@dataclass(frozen=True)
class RevivalTimescales:
    """Collapse/revival times and the slow component rotation rate."""

    t_c: float
    t_r: float
    omega_r: float
    omega_slow: float


def rabi_signal(p: np.ndarray, omega0: float, t_e) -> np.ndarray | float:
    """Ground-state probability: 1/2 [1 - sum_n p(n) cos(Omega0 sqrt(n+1) t)].

    t_e may be a scalar or an array of effective interaction times.
    """
    p = np.asarray(p, dtype=float)
    if abs(p.sum() - 1.0) > 1e-6:
        raise ValueError("photon distribution must be normalized")
    freqs = omega0 * np.sqrt(np.arange(p.size) + 1.0)
    t = np.asarray(t_e, dtype=float)
    out = 0.5 * (1.0 - np.cos(np.multiply.outer(t, freqs)) @ p)
    return float(out) if np.isscalar(t_e) else out


def timescales(n_bar: float, omega0: float) -> RevivalTimescales:
    if n_bar <= 0:
        raise ValueError("n_bar must be positive")
    return RevivalTimescales(
        t_c=2.0 * math.sqrt(2.0) / omega0,
        t_r=4.0 * math.pi * math.sqrt(n_bar) / omega0,
        omega_r=omega0 * math.sqrt(n_bar),
        omega_slow=omega0 / (4.0 * math.sqrt(n_bar)),
    )


@dataclass(frozen=True)
class FactorizedBranches:
    """First-order factorized form of the joint state during collapse.

    Each branch pairs a slowly rotating atomic superposition with a
    coherent field component rotating at the opposite angular rate.
    """

    atom_plus: np.ndarray
    atom_minus: np.ndarray
    field_amplitude_plus: complex
    field_amplitude_minus: complex
    field_phase_plus: complex
    field_phase_minus: complex

    def joint_state(self, dim: int) -> np.ndarray:
        """Equal-weight superposition of the two branches on a truncation."""
        plus = self.field_phase_plus * joint_ket(
            self.atom_plus, coherent_state(self.field_amplitude_plus, dim)
        )
        minus = self.field_phase_minus * joint_ket(
            self.atom_minus, coherent_state(self.field_amplitude_minus, dim)
        )
        psi = (plus + minus) / math.sqrt(2.0)
        return psi / np.linalg.norm(psi)


def factorized_state(beta: float, omega0: float, t_e: float) -> FactorizedBranches:
    """Branch decomposition for an atom in |e> and an initial real field beta."""
    if beta <= 0:
        raise ValueError("beta must be a positive real amplitude")
    n_bar = beta * beta
    if n_bar < MESOSCOPIC_NBAR:
        warnings.warn(
            f"factorized form assumes n_bar >> 1; got n_bar = {n_bar:.2f}",
            stacklevel=2,
        )
    omega_r = omega0 * math.sqrt(n_bar)
    omega = omega0 / (4.0 * math.sqrt(n_bar))
    fast = omega_r * t_e / 2.0
    slow = omega * t_e
    atom_plus = np.exp(1j * fast) / math.sqrt(2.0) * np.array([np.exp(1j * slow), -1.0])
    atom_minus = np.exp(-1j * fast) / math.sqrt(2.0) * np.array([np.exp(-1j * slow), 1.0])
    return FactorizedBranches(
        atom_plus=atom_plus,
        atom_minus=atom_minus,
        field_amplitude_plus=beta * np.exp(1j * slow),
        field_amplitude_minus=beta * np.exp(-1j * slow),
        field_phase_plus=np.exp(-1j * omega_r * t_e / 4.0),
        field_phase_minus=np.exp(1j * omega_r * t_e / 4.0),
    )


def cat_parity(n_bar: float) -> float:
    """Parity of the cat left behind at half the revival time: -cos(pi n_bar)."""
    if n_bar < 0:
        raise ValueError("n_bar must be nonnegative")
    return -math.cos(math.pi * n_bar)


def parity_to_pg(parity: float) -> float:
    """Ground-state detection probability of the parity probe."""
    if abs(parity) > 1:
        raise ValueError("parity must lie in [-1, 1]")
    return (1.0 - parity) / 2.0


def pg_to_parity(p_g: float) -> float:
    if not 0 <= p_g <= 1:
        raise ValueError("probability must lie in [0, 1]")
    return 1.0 - 2.0 * p_g


def wigner_origin(parity: float) -> float:
    """Wigner function value at the phase-space origin, W(0) = 2 P / pi."""
    if abs(parity) > 1:
        raise ValueError("parity must lie in [-1, 1]")
    return 2.0 * parity / math.pi


def decoherence_time(t_cav: float, n_bar: float, n_th: float) -> float:
    """Cat decoherence time T_Cav / 2[n_bar (1 + 2 n_th) + n_th]."""
    if t_cav < 0 or n_bar < 0 or n_th < 0:
        raise ValueError("arguments must be nonnegative")
    denom = n_bar * (1.0 + 2.0 * n_th) + n_th
    if denom <= 0:
        raise ValueError("decoherence rate vanishes; no finite timescale")
    return t_cav / (2.0 * denom)


@dataclass(frozen=True)
class DispersiveComparison:
    """Parity-cat preparation time in the dispersive regime and the speedup
    of resonant generation relative to it."""

    t_parity_cat: float
    speedup: float


def dispersive_comparison(delta: float, omega0: float, n_bar: float) -> DispersiveComparison:
    if delta <= omega0 * math.sqrt(n_bar):
        warnings.warn(
            "detuning does not dominate the coupling; dispersive estimate unreliable",
            stacklevel=2,
        )
    return DispersiveComparison(
        t_parity_cat=2.0 * math.pi * delta / omega0**2,
        speedup=delta / (omega0 * math.sqrt(n_bar)),
    )
