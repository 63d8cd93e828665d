import math

import mpmath
import numpy as np
import pytest

from revival_lab import fock
from revival_lab.errors import TruncationTooSmall

NBAR = 13.2


def test_vacuum_coherent_state_is_fock_zero():
    st = fock.coherent_state(0.0, 50)
    assert st.amplitudes[0] == 1.0
    assert np.all(st.amplitudes[1:] == 0.0)


def test_coherent_state_matches_poisson():
    st = fock.coherent_state(math.sqrt(NBAR), 50)
    p = fock.photon_distribution(st)
    n = np.arange(50)
    poisson = np.exp(-NBAR + n * math.log(NBAR) - [math.lgamma(k + 1) for k in n])
    assert np.max(np.abs(p - poisson)) < 1e-10


def test_coherent_state_mean_photon_number_arbitrary_precision():
    # oracle: direct sum n * e^{-nbar} nbar^n / n! over the truncated basis
    with mpmath.workdps(60):
        nb = mpmath.mpf("13.2")
        terms = [mpmath.e ** (-nb) * nb**n / mpmath.factorial(n) for n in range(50)]
        total = mpmath.fsum(terms)
        mean = mpmath.fsum(n * t for n, t in enumerate(terms)) / total
        expected = float(mean)
    st = fock.coherent_state(math.sqrt(NBAR), 50)
    assert fock.number_expectation(st) == pytest.approx(expected, abs=1e-12)
    assert fock.number_expectation(st) == pytest.approx(13.2, abs=1e-6)


def test_coherent_state_truncation_guard():
    with pytest.raises(TruncationTooSmall):
        fock.coherent_state(6.0, 50)


def test_cat_state_odd_support():
    # even multiple of pi as relative phase with real beta: odd photon numbers only
    st = fock.cat_state(2.0, 0.0, 40)
    p = fock.photon_distribution(st)
    assert np.all(p[::2] < 1e-20)
    assert np.all(p[::2] * p[1::2] < 1e-20)


def test_cat_state_parity_matches_closed_form():
    st = fock.cat_state(math.sqrt(NBAR), math.pi * NBAR, 50)
    assert fock.parity_expectation(st) == pytest.approx(-math.cos(NBAR * math.pi), abs=2e-2)


@pytest.mark.parametrize("nbar", [1.0, 5.0, 13.2])
def test_cat_state_normalized(nbar):
    st = fock.cat_state(math.sqrt(nbar), math.pi * nbar, 60)
    assert abs(np.linalg.norm(st.amplitudes) - 1.0) < 1e-10


def test_displace_vacuum_gives_coherent():
    alpha = 1.3 - 0.4j
    moved = fock.displace(fock.vacuum(40), alpha)
    ref = fock.coherent_state(alpha, 40)
    assert np.max(np.abs(moved.amplitudes - ref.amplitudes)) < 1e-8


def test_displace_inverse_roundtrip():
    st = fock.coherent_state(1.1 + 0.2j, 90)
    back = fock.displace(fock.displace(st, 2.0), -2.0)
    phase = back.amplitudes[0] / st.amplitudes[0]
    assert np.max(np.abs(back.amplitudes - phase * st.amplitudes)) < 1e-8


def test_displace_mean_photon_number():
    beta, alpha = 1.3, 0.9
    moved = fock.displace(fock.coherent_state(beta, 60), alpha)
    assert fock.number_expectation(moved) == pytest.approx((alpha + beta) ** 2, abs=1e-6)


def test_displace_truncation_guard():
    with pytest.raises(TruncationTooSmall):
        fock.displace(fock.coherent_state(3.0, 50), 3.0)


def test_photon_distribution_fock_state():
    p = fock.photon_distribution(fock.fock(3, 10))
    expected = np.zeros(10)
    expected[3] = 1.0
    assert np.array_equal(p, expected)


def test_photon_distribution_thermal_closed_form():
    nth = 0.38
    n = np.arange(60)
    p_exact = nth**n / (1 + nth) ** (n + 1)
    rho = np.diag(p_exact / p_exact.sum()).astype(complex)
    p = fock.photon_distribution(rho)
    assert np.max(np.abs(p - p_exact)) < 1e-9


def test_photon_distribution_rejects_unnormalized():
    with pytest.raises(ValueError):
        fock.photon_distribution(np.diag([0.5, 0.3]).astype(complex))


def test_annihilation_matrix_elements():
    a = fock.annihilation(6).matrix
    for n in range(1, 6):
        assert a[n - 1, n] == pytest.approx(math.sqrt(n))
    assert np.count_nonzero(a) == 5


def test_parity_is_diagonal_signs_and_flips_annihilation():
    d = 12
    par = fock.parity(d).matrix
    assert np.array_equal(np.diagonal(par).real, (-1.0) ** np.arange(d))
    a = fock.annihilation(d).matrix
    assert np.max(np.abs(par @ a @ par + a)) < 1e-10


def test_displacement_unitarity():
    for alpha in (0.5, 2.0 + 1.0j, -3.2):
        d = fock.displacement(alpha, 80).matrix
        resid = d.conj().T @ d - np.eye(80)
        assert np.linalg.norm(resid, 2) < 1e-9


def test_displacement_composition_on_safe_subspace():
    # Truncated displacement operators satisfy the composition law only on
    # states that stay clear of the truncation edge, so compare the products
    # on a low-Fock-block projector.
    rng = np.random.default_rng(7)
    dim, keep = 180, 6
    for _ in range(10):
        alpha, beta = (rng.uniform(-4, 4, 2) + 1j * rng.uniform(-4, 4, 2)) / math.sqrt(2)
        lhs = fock.displacement(alpha, dim).matrix @ fock.displacement(beta, dim).matrix
        rhs = np.exp(1j * np.imag(alpha * np.conj(beta))) * fock.displacement(alpha + beta, dim).matrix
        assert np.linalg.norm((lhs - rhs)[:, :keep], 2) < 1e-8


def test_joint_density_matrix_validation():
    field = fock.vacuum(4).density_matrix()
    atom = np.array([[1.0, 0.0], [0.0, 0.0]])
    rho = fock.JointDensityMatrix.from_parts(atom, field)
    assert rho.dim == 4
    assert np.trace(rho.matrix) == pytest.approx(1.0)
    bad = rho.matrix.copy()
    bad[0, 1] = 0.5
    with pytest.raises(ValueError):
        fock.JointDensityMatrix(bad)


def test_partial_traces():
    field = fock.coherent_state(1.0, 20)
    ket = fock.joint_ket(fock.atom_ket("g"), field)
    rho = fock.JointDensityMatrix.from_ket(ket)
    rf = fock.partial_trace_atom(rho.matrix)
    assert np.max(np.abs(rf - field.density_matrix())) < 1e-12
    ra = fock.partial_trace_field(rho.matrix)
    assert ra[1, 1] == pytest.approx(1.0)
    assert fock.ground_probability(rho) == pytest.approx(1.0)


def test_global_phase_convention():
    st = fock.coherent_state(1.2j, 30)
    assert st.amplitudes[0].imag == pytest.approx(0.0, abs=1e-15)
    assert st.amplitudes[0].real > 0
    cat = fock.cat_state(1.5, 0.7, 40)
    pivot = cat.amplitudes[np.nonzero(np.abs(cat.amplitudes) > 1e-8)[0][0]]
    assert pivot.imag == pytest.approx(0.0, abs=1e-15)
    assert pivot.real > 0
