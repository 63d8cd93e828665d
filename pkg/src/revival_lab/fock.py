"""Truncated Fock-space states and single-mode operators.

All field states live in a finite photon-number basis |0>, ..., |dim-1>.
Constructors enforce a leakage guard: the population of the last retained
Fock level must stay below ``LEAKAGE_TOL`` or the truncation is rejected.
The two-level atom ordering used by joint objects is e = 0, g = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import TruncationTooSmall

LEAKAGE_TOL = 1e-8
NORM_TOL = 1e-10

ATOM_E = 0
ATOM_G = 1


def required_dim(amplitude: float) -> int:
    """Smallest truncation that safely holds a state of given field amplitude."""
    a = abs(amplitude)
    return int(math.ceil(a * a + 6.0 * a + 10.0))


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def _fix_global_phase(amplitudes: np.ndarray) -> np.ndarray:
    """Rotate a global phase so the lowest nonzero amplitude is real positive."""
    mags = np.abs(amplitudes)
    nonzero = np.nonzero(mags > 1e-12 * mags.max())[0]
    if nonzero.size == 0:
        return amplitudes
    pivot = amplitudes[nonzero[0]]
    return amplitudes * (abs(pivot) / pivot)


@dataclass(frozen=True)
class FieldState:
    """Pure cavity state as a normalized complex amplitude vector."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm} deviates from 1 beyond {NORM_TOL}")
        object.__setattr__(self, "amplitudes", _freeze(amp))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass(frozen=True)
class ModeOperator:
    """A dim x dim operator on the field mode, tagged with its kind."""

    matrix: np.ndarray
    kind: str

    def __post_init__(self):
        mat = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("operator matrix must be square")
        object.__setattr__(self, "matrix", _freeze(mat))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def annihilation(dim: int) -> ModeOperator:
    """Annihilation operator a with entries (n-1, n) = sqrt(n)."""
    mat = np.zeros((dim, dim), dtype=np.complex128)
    ns = np.arange(1, dim)
    mat[ns - 1, ns] = np.sqrt(ns)
    return ModeOperator(mat, "annihilation")


def number(dim: int) -> ModeOperator:
    return ModeOperator(np.diag(np.arange(dim, dtype=np.complex128)), "number")


def parity(dim: int) -> ModeOperator:
    """Photon-number parity exp(i pi N), diagonal entries (-1)^n."""
    diag = np.where(np.arange(dim) % 2 == 0, 1.0, -1.0).astype(np.complex128)
    return ModeOperator(np.diag(diag), "parity")


def identity(dim: int) -> ModeOperator:
    return ModeOperator(np.eye(dim, dtype=np.complex128), "identity")


@lru_cache(maxsize=16)
def _quadrature_eigensystem(dim: int):
    # Hermitian generator i(a† - a); D(|a|) = V exp(-i |a| w) V†.
    a = np.zeros((dim, dim), dtype=np.complex128)
    ns = np.arange(1, dim)
    a[ns - 1, ns] = np.sqrt(ns)
    m = 1j * (a.conj().T - a)
    w, v = np.linalg.eigh(m)
    return w, v


def displacement(alpha: complex, dim: int) -> ModeOperator:
    """Displacement operator D(alpha) = exp(alpha a† - alpha* a).

    Evaluated through the exact eigendecomposition of the quadrature
    generator, which stays unitary all the way to the truncation edge.
    """
    r = abs(alpha)
    w, v = _quadrature_eigensystem(dim)
    core = (v * np.exp(-1j * r * w)) @ v.conj().T
    if r > 0 and alpha != r:
        phase = np.exp(1j * np.angle(alpha) * np.arange(dim))
        core = (phase[:, None] * core) * phase.conj()[None, :]
    return ModeOperator(core, "displacement")


def vacuum(dim: int) -> FieldState:
    amp = np.zeros(dim, dtype=np.complex128)
    amp[0] = 1.0
    return FieldState(amp)


def fock(n: int, dim: int) -> FieldState:
    if not 0 <= n < dim:
        raise ValueError(f"Fock index {n} outside truncation {dim}")
    amp = np.zeros(dim, dtype=np.complex128)
    amp[n] = 1.0
    return FieldState(amp)


def _coherent_amplitudes(beta: complex, dim: int) -> np.ndarray:
    """Raw coherent-state amplitudes e^{-|b|^2/2} b^n / sqrt(n!), no normalization."""
    n = np.arange(dim)
    if beta == 0:
        amp = np.zeros(dim, dtype=np.complex128)
        amp[0] = 1.0
        return amp
    logmag = -abs(beta) ** 2 / 2 + n * math.log(abs(beta)) - 0.5 * np.array(
        [math.lgamma(k + 1) for k in range(dim)]
    )
    return np.exp(logmag) * np.exp(1j * n * np.angle(beta))


def _check_leakage(amplitudes: np.ndarray, what: str) -> None:
    leak = abs(amplitudes[-1]) ** 2
    if leak >= LEAKAGE_TOL:
        raise TruncationTooSmall(
            f"{what}: population {leak:.2e} on the last Fock level exceeds {LEAKAGE_TOL}"
        )


def coherent_state(beta: complex, dim: int) -> FieldState:
    """Coherent state |beta>, renormalized after truncation.

    Photon statistics are Poissonian with mean |beta|^2.
    """
    if dim < required_dim(abs(beta)):
        raise TruncationTooSmall(
            f"coherent_state: dim {dim} < required {required_dim(abs(beta))} for |beta|={abs(beta):.3g}"
        )
    amp = _coherent_amplitudes(beta, dim)
    amp = amp / np.linalg.norm(amp)
    _check_leakage(amp, "coherent_state")
    return FieldState(_fix_global_phase(amp))


def cat_state(beta: complex, relative_phase: float, dim: int) -> FieldState:
    """Normalized superposition e^{i phi} |i beta> - |-i beta>.

    The normalization constant includes the (generally nonzero) overlap of
    the two coherent components.
    """
    if beta == 0:
        raise ValueError("cat_state requires beta != 0")
    if dim < required_dim(abs(beta)):
        raise TruncationTooSmall(
            f"cat_state: dim {dim} < required {required_dim(abs(beta))} for |beta|={abs(beta):.3g}"
        )
    amp = np.exp(1j * relative_phase) * _coherent_amplitudes(1j * beta, dim)
    amp = amp - _coherent_amplitudes(-1j * beta, dim)
    amp = amp / np.linalg.norm(amp)
    _check_leakage(amp, "cat_state")
    return FieldState(_fix_global_phase(amp))


def from_amplitudes(amplitudes: np.ndarray, normalize: bool = False) -> FieldState:
    amp = np.asarray(amplitudes, dtype=np.complex128).copy()
    if normalize:
        amp = amp / np.linalg.norm(amp)
    return FieldState(_fix_global_phase(amp))


def displace(state: FieldState, alpha: complex) -> FieldState:
    """Apply D(alpha) to a pure field state within the same truncation."""
    reach = abs(alpha) + abs(mean_amplitude(state))
    if state.dim < required_dim(reach):
        raise TruncationTooSmall(
            f"displace: dim {state.dim} < required {required_dim(reach)} for total amplitude {reach:.3g}"
        )
    out = displacement(alpha, state.dim).matrix @ state.amplitudes
    _check_leakage(out, "displace")
    return FieldState(out)


def photon_distribution(rho_or_state) -> np.ndarray:
    """Photon number distribution p(n) of a field state or density matrix.

    Accepts a FieldState, a field density matrix (dim x dim ndarray), a raw
    amplitude vector, or a JointDensityMatrix (traced over the atom first).
    """
    if isinstance(rho_or_state, FieldState):
        p = np.abs(rho_or_state.amplitudes) ** 2
    elif isinstance(rho_or_state, JointDensityMatrix):
        p = np.real(np.diagonal(partial_trace_atom(rho_or_state.matrix)))
    else:
        arr = np.asarray(rho_or_state)
        if arr.ndim == 1:
            p = np.abs(arr) ** 2
        elif arr.ndim == 2:
            p = np.real(np.diagonal(arr)).copy()
        else:
            raise ValueError("expected a state vector or a density matrix")
    total = p.sum()
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"input is not normalized: sum p(n) = {total}")
    return np.clip(p, 0.0, None)


# --- expectation helpers -------------------------------------------------


def number_expectation(rho_or_state) -> float:
    p = photon_distribution(rho_or_state)
    return float(np.dot(np.arange(p.size), p))


def parity_expectation(rho_or_state) -> float:
    p = photon_distribution(rho_or_state)
    signs = np.where(np.arange(p.size) % 2 == 0, 1.0, -1.0)
    return float(np.dot(signs, p))


def mean_amplitude(state_or_rho) -> complex:
    """Expectation value of the annihilation operator."""
    if isinstance(state_or_rho, FieldState):
        amp = state_or_rho.amplitudes
        ns = np.arange(1, amp.size)
        return complex(np.sum(amp[:-1].conj() * np.sqrt(ns) * amp[1:]))
    rho = np.asarray(state_or_rho)
    a = annihilation(rho.shape[0]).matrix
    return complex(np.trace(rho @ a))


# --- two-level atom tensor structure -------------------------------------


@dataclass(frozen=True)
class JointDensityMatrix:
    """Density matrix on (two-level atom) x (Fock space), atom index first."""

    matrix: np.ndarray

    HERMITICITY_TOL = 1e-10
    TRACE_TOL = 1e-9
    EIGENVALUE_TOL = 1e-8

    def __post_init__(self):
        mat = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] % 2:
            raise ValueError("joint density matrix must be square with even size")
        herm = np.max(np.abs(mat - mat.conj().T))
        if herm > self.HERMITICITY_TOL:
            raise ValueError(f"matrix deviates from Hermitian by {herm:.2e}")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > self.TRACE_TOL:
            raise ValueError(f"trace {tr} deviates from 1 beyond {self.TRACE_TOL}")
        lo = np.linalg.eigvalsh(mat)[0]
        if lo < -self.EIGENVALUE_TOL:
            raise ValueError(f"smallest eigenvalue {lo:.2e} below -{self.EIGENVALUE_TOL}")
        object.__setattr__(self, "matrix", _freeze(mat))

    @property
    def dim(self) -> int:
        """Fock-space truncation of the field factor."""
        return self.matrix.shape[0] // 2

    @classmethod
    def from_parts(cls, atom: np.ndarray, field: np.ndarray) -> "JointDensityMatrix":
        """Tensor product of a 2x2 atom density matrix and a field density matrix."""
        return cls(np.kron(np.asarray(atom, dtype=np.complex128), field))

    @classmethod
    def from_ket(cls, ket: np.ndarray) -> "JointDensityMatrix":
        ket = np.asarray(ket, dtype=np.complex128)
        return cls(np.outer(ket, ket.conj()))


def atom_ket(label: str) -> np.ndarray:
    if label == "e":
        return np.array([1.0, 0.0], dtype=np.complex128)
    if label == "g":
        return np.array([0.0, 1.0], dtype=np.complex128)
    raise ValueError(f"unknown atom label {label!r}")


def joint_ket(atom: np.ndarray, field: FieldState | np.ndarray) -> np.ndarray:
    """Pure joint state vector, ordering (atom e/g) x (Fock index)."""
    amp = field.amplitudes if isinstance(field, FieldState) else np.asarray(field)
    return np.kron(np.asarray(atom, dtype=np.complex128), amp)


def partial_trace_atom(joint: np.ndarray) -> np.ndarray:
    """Trace out the atom, returning the dim x dim field density matrix."""
    d = joint.shape[0] // 2
    return joint[:d, :d] + joint[d:, d:]


def partial_trace_field(joint: np.ndarray) -> np.ndarray:
    """Trace out the field, returning the 2x2 atom density matrix."""
    d = joint.shape[0] // 2
    ee = np.trace(joint[:d, :d])
    eg = np.trace(joint[:d, d:])
    gg = np.trace(joint[d:, d:])
    return np.array([[ee, eg], [np.conj(eg), gg]], dtype=np.complex128)


def ground_probability(joint) -> float:
    """Population of the atomic ground state |g>."""
    mat = joint.matrix if isinstance(joint, JointDensityMatrix) else np.asarray(joint)
    d = mat.shape[0] // 2
    if mat.ndim == 1:
        return float(np.sum(np.abs(mat[d:]) ** 2))
    return float(np.trace(mat[d:, d:]).real)
