import numpy as np
import pytest

from signal_lab.errors import HermiticityError, LocalityError, SignatureError
from signal_lab.evolution import evolve
from signal_lab.hamiltonians import (CouplingConfig, PhysicalConstants, bohm_hamiltonian_1d, derivative_matrix,
                                     local_sum, pointer_momentum, symmetrized_coupling, von_neumann_coupling)
from signal_lab.scenarios import random_hermitian, random_hermitian_on
from signal_lab.states import PointerGrid, gaussian_pointer, pauli, swap_operator
from signal_lab.tensor import Ket, Operator, SpaceSignature, embed, expectation, expm_hermitian


def comm(a, b):
    return a @ b - b @ a


# -- local_sum --------------------------------------------------------------------

def test_local_sum_spectrum_sigma_z():
    sig = SpaceSignature.of(A=2, D=3)
    zero = Operator(np.zeros((3, 3)), sig.restrict(["D"]), hermitian=True)
    H = local_sum(pauli("z", "A"), zero, sig)
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(H.entries)), [-1, -1, -1, 1, 1, 1], atol=1e-14)


def test_local_sum_terms_commute():
    rng = np.random.default_rng(1)
    sig = SpaceSignature.of(D=2, B=2, A=2)
    ha = embed(random_hermitian(2, rng, "A"), sig)
    hb = embed(random_hermitian_on(sig.restrict(["D", "B"]), rng), sig)
    assert np.max(np.abs(comm(ha.entries, hb.entries))) < 1e-13


def test_local_sum_spectrum_pairwise_sums():
    rng = np.random.default_rng(2)
    sig = SpaceSignature.of(A=2, B=3)
    ha, hb = random_hermitian(2, rng, "A"), random_hermitian(3, rng, "B")
    ea, eb = np.linalg.eigvalsh(ha.entries), np.linalg.eigvalsh(hb.entries)
    oracle = np.sort((ea[:, None] + eb[None, :]).ravel())
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(local_sum(ha, hb, sig).entries)), oracle, atol=1e-12)


def test_local_sum_guards():
    sig = SpaceSignature.of(A=2, B=2)
    with pytest.raises(LocalityError):
        local_sum(pauli("z", "A"), pauli("x", "A"), sig)
    with pytest.raises(HermiticityError):
        local_sum(Operator(np.array([[0, 1], [0, 0]]), sig.restrict(["A"])), pauli("x", "B"), sig)


# -- von Neumann coupling --------------------------------------------------------

def test_von_neumann_zero_lambda():
    g = PointerGrid(6, 0.5)
    sig = SpaceSignature.of(A=2, y=6)
    H = von_neumann_coupling(pauli("z"), g, CouplingConfig(0.0), sig)
    assert not np.any(H.entries)


def test_von_neumann_commutes_with_b_side():
    rng = np.random.default_rng(3)
    g = PointerGrid(5, 1.0)
    sig = SpaceSignature.of(A=2, B=2, y=5)
    H = von_neumann_coupling(pauli("x"), g, CouplingConfig(0.7), sig)
    hb = embed(random_hermitian(2, rng, "B"), sig)
    assert np.max(np.abs(comm(H.entries, hb.entries))) < 1e-13


@pytest.mark.parametrize("phase_sign", [1, -1])
def test_von_neumann_pointer_shift(phase_sign):
    n, dy, lam, t = 96, 1.0, 0.8, 1e-3
    g = PointerGrid(n, dy)
    sig = SpaceSignature.of(A=2, y=n)
    spin = np.array([np.cos(0.4), np.sin(0.4)])
    psi = Ket(np.kron(spin, gaussian_pointer(g, width=6 * dy)), sig)
    H = von_neumann_coupling(pauli("z"), g, CouplingConfig(lam), sig)
    Y = embed(Operator(np.diag(g.coords), sig.restrict(["y"]), hermitian=True), sig)
    shift = expectation(Y, evolve(H, psi, t, phase_sign)) - expectation(Y, psi)
    o_mean = np.cos(0.8)  # <sigma_z> for the spin above
    # i[p, y] for the central difference is the nearest-neighbour average, close to 1 for a smooth pointer
    average = embed(Operator(0.5 * (np.eye(n, k=1) + np.eye(n, k=-1)), sig.restrict(["y"]), hermitian=True), sig)
    exact_rate = -phase_sign * lam * expectation(embed(pauli("z", "A"), sig) @ average, psi)
    assert shift / t == pytest.approx(exact_rate, rel=1e-5)
    assert shift == pytest.approx(-phase_sign * lam * t * o_mean, rel=1e-2)


def test_von_neumann_pointer_size_mismatch():
    with pytest.raises(SignatureError):
        von_neumann_coupling(pauli("z"), PointerGrid(4, 1.0), CouplingConfig(1.0), SpaceSignature.of(A=2, y=5))


def test_coupling_config_rejects_strings():
    with pytest.raises(TypeError):
        CouplingConfig("1.0")


# -- symmetrized coupling -------------------------------------------------------

def test_symmetrized_swap_symmetry():
    g = PointerGrid(8, 1.0)
    sig = SpaceSignature.of(A=2, B=2, y=8)
    H = symmetrized_coupling(pauli("z"), pauli("z"), g, CouplingConfig(1.0), sig)
    S = swap_operator(sig, ("A", "B")).entries
    np.testing.assert_allclose(S @ H.entries @ S, H.entries, atol=1e-15)


def test_symmetrized_zero_lambda():
    g = PointerGrid(8, 1.0)
    sig = SpaceSignature.of(A=2, B=2, y=8)
    assert not np.any(symmetrized_coupling(pauli("z"), pauli("x"), g, CouplingConfig(0), sig).entries)


@pytest.mark.parametrize("boundary", ["periodic", "hard_wall"])
def test_symmetrized_matches_kron_chain(boundary):
    rng = np.random.default_rng(4)
    g = PointerGrid(5, 0.3)
    sig = SpaceSignature.of(A=2, B=2, y=5)
    oa, ob = random_hermitian(2, rng), random_hermitian(2, rng)
    lam = 0.9
    p = pointer_momentum(g, boundary=boundary).entries
    oracle = lam * (np.kron(np.kron(oa.entries, np.eye(2)), p) + np.kron(np.kron(np.eye(2), ob.entries), p))
    H = symmetrized_coupling(oa, ob, g, CouplingConfig(lam), sig, boundary=boundary)
    np.testing.assert_allclose(H.entries, oracle, atol=1e-14)
    assert H.hermitian


def test_raw_derivative_is_not_exponentiable():
    g = PointerGrid(8, 1.0)
    sig = SpaceSignature.of(A=2, B=2, y=8)
    H = symmetrized_coupling(pauli("z"), pauli("z"), g, CouplingConfig(1.0, "raw_derivative"), sig)
    assert not H.hermitian
    with pytest.raises(HermiticityError):
        expm_hermitian(H, 1.0)


# -- 1D Schrodinger operator ----------------------------------------------------------

def test_constant_potential_shift():
    g = PointerGrid.box(1.0, 40)
    base = np.linalg.eigvalsh(bohm_hamiltonian_1d(g, np.zeros(40)).entries)
    shifted = np.linalg.eigvalsh(bohm_hamiltonian_1d(g, np.full(40, 2.5)).entries)
    assert shifted[0] - base[0] == pytest.approx(2.5, abs=1e-12)


@pytest.mark.parametrize("n", [31, 63, 127])
def test_box_ground_state_energy(n):
    L, consts = 2.0, PhysicalConstants(hbar=1.3, m=0.7)
    g = PointerGrid.box(L, n)
    e0 = np.linalg.eigvalsh(bohm_hamiltonian_1d(g, np.zeros(n), consts).entries)[0]
    exact = consts.hbar**2 * np.pi**2 / (2 * consts.m * L**2)
    # leading discretization error of the three-point stencil is (pi dx / L)^2 / 12
    err = (e0 - exact) / exact
    bound = (np.pi * g.spacing / L) ** 2 / 12
    assert -1.01 * bound < err < -0.99 * bound


@pytest.mark.parametrize("m", [0, 1, 3, 7])
def test_periodic_dispersion(m):
    n, dx = 32, 0.25
    consts = PhysicalConstants(hbar=0.9, m=1.6)
    g = PointerGrid(n, dx)
    k = 2 * np.pi * m / (n * dx)
    v = np.exp(1j * k * g.coords)
    H = bohm_hamiltonian_1d(g, np.zeros(n), consts, boundary="periodic")
    energy = consts.hbar**2 / (2 * consts.m) * (2 / dx**2) * (1 - np.cos(k * dx))
    np.testing.assert_allclose(H.entries @ v, energy * v, atol=1e-11)


def test_bohm_hamiltonian_rejects_bad_potential():
    g = PointerGrid(8, 1.0)
    with pytest.raises(SignatureError):
        bohm_hamiltonian_1d(g, np.zeros(7))
    with pytest.raises(ValueError):
        bohm_hamiltonian_1d(g, np.r_[np.zeros(7), np.inf])


# -- pointer momentum --------------------------------------------------------------

def test_momentum_annihilates_constants_and_is_hermitian():
    g = PointerGrid(16, 0.4)
    p = pointer_momentum(g).entries
    assert np.max(np.abs(p @ np.ones(16))) < 1e-14
    assert np.max(np.abs(p - p.conj().T)) < 1e-14
    assert np.allclose(derivative_matrix(g), -derivative_matrix(g).T)


def test_momentum_spectrum():
    n, dx = 20, 0.35
    p = pointer_momentum(PointerGrid(n, dx)).entries
    oracle = np.sort(np.sin(2 * np.pi * np.arange(n) / n) / dx)
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(p)), oracle, atol=1e-12)
