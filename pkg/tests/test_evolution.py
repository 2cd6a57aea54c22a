import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from signal_lab.errors import LocalityError, SignatureError
from signal_lab.evolution import evolve, generator_locality_defect, verify_factorization
from signal_lab.hamiltonians import CouplingConfig, local_sum, symmetrized_coupling
from signal_lab.scenarios import random_hermitian
from signal_lab.states import SIGMA_X, SIGMA_Z, PointerGrid, pauli
from signal_lab.tensor import Ket, Operator, SpaceSignature, expm_hermitian, permute_matrix


def projection_oracle(H, da, db):
    """Least-squares fit of H by X (x) 1 + 1 (x) Y over a full matrix-unit basis."""
    cols = []
    for i in range(da * da):
        e = np.zeros(da * da)
        e[i] = 1
        cols.append(np.kron(e.reshape(da, da), np.eye(db)).ravel())
    for i in range(db * db):
        e = np.zeros(db * db)
        e[i] = 1
        cols.append(np.kron(np.eye(da), e.reshape(db, db)).ravel())
    basis = np.array(cols).T.astype(complex)
    coef, *_ = np.linalg.lstsq(basis, H.ravel(), rcond=None)
    return float(np.linalg.norm(H.ravel() - basis @ coef))


# -- evolve ---------------------------------------------------------------------

def test_evolve_trivial_cases():
    sig = SpaceSignature.of(A=2)
    psi = Ket([0.6, 0.8j], sig)
    np.testing.assert_array_equal(evolve(pauli("x", "A"), psi, 0.0).amplitudes, psi.amplitudes)
    zero = Operator(np.zeros((2, 2)), sig, hermitian=True)
    np.testing.assert_allclose(evolve(zero, psi, 3.7).amplitudes, psi.amplitudes, atol=1e-15)


@pytest.mark.parametrize("t", [0.1, 0.7, 2.0, 5.3])
def test_rabi_survival(t):
    sig = SpaceSignature.of(A=2)
    out = evolve(pauli("x", "A"), Ket([1, 0], sig), t)
    assert abs(out.amplitudes[0]) ** 2 == pytest.approx(np.cos(t) ** 2, abs=1e-14)


def test_evolve_signature_mismatch():
    with pytest.raises(SignatureError):
        evolve(pauli("x", "A"), Ket([1, 0], SpaceSignature.of(B=2)), 1.0)


# -- factorization --------------------------------------------------------------

def test_factorization_at_zero():
    assert verify_factorization(pauli("z", "A"), pauli("x", "B"), 0.0) == 0.0


def test_factorization_pauli_closed_form():
    t = np.pi
    assert verify_factorization(pauli("z", "A"), pauli("x", "B"), t) < 1e-10
    # exp(i t sigma) = cos t + i sin t sigma, for the joint operator
    closed = np.kron(np.cos(t) * np.eye(2) + 1j * np.sin(t) * SIGMA_Z,
                     np.cos(t) * np.eye(2) + 1j * np.sin(t) * SIGMA_X)
    sig = SpaceSignature.of(A=2, B=2)
    U = expm_hermitian(local_sum(pauli("z", "A"), pauli("x", "B"), sig), t)
    np.testing.assert_allclose(U.entries, closed, atol=1e-12)


def test_factorization_overlap_rejected():
    with pytest.raises(LocalityError):
        verify_factorization(pauli("z", "A"), pauli("x", "A"), 1.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-10, 10), st.sampled_from([1, -1]))
def test_factorization_random(seed, t, sign):
    rng = np.random.default_rng(seed)
    ha, hb = random_hermitian(int(rng.integers(1, 4)), rng, "A"), random_hermitian(int(rng.integers(1, 5)), rng, "B")
    assert verify_factorization(ha, hb, t, sign) < 1e-9


# -- locality defect ---------------------------------------------------------------

def test_defect_of_local_sum():
    sig = SpaceSignature.of(A=2, B=2)
    d, _ = generator_locality_defect(local_sum(pauli("z", "A"), pauli("x", "B"), sig), (["A"], ["B"]))
    assert d < 1e-12


def test_defect_of_zz():
    sig = SpaceSignature.of(A=2, B=2)
    H = Operator(np.kron(SIGMA_Z, SIGMA_Z), sig, hermitian=True)
    d, local = generator_locality_defect(H, (["A"], ["B"]))
    assert d == pytest.approx(2.0, abs=1e-14)
    assert not np.any(np.abs(local.entries) > 1e-15)


def test_defect_of_symmetrized_coupling():
    g = PointerGrid(8, 1.0)
    sig = SpaceSignature.of(A=2, B=2, y=8)
    H = symmetrized_coupling(pauli("z"), pauli("z"), g, CouplingConfig(1.0), sig)
    d, _ = generator_locality_defect(H, (["A"], ["B", "y"]))
    assert d > 0
    assert d == pytest.approx(projection_oracle(H.entries, 2, 16), abs=1e-10)


def test_defect_partition_in_any_order():
    rng = np.random.default_rng(5)
    sig = SpaceSignature.of(B=2, A=3, y=2)
    H = Operator(random_hermitian(sig.dim, rng).entries, sig, hermitian=True)
    d, local = generator_locality_defect(H, (["A"], ["y", "B"]))
    reordered = permute_matrix(H.entries, sig.dims, [1, 2, 0])  # (A, y, B)
    assert d == pytest.approx(projection_oracle(reordered, 3, 4), abs=1e-10)
    d2, _ = generator_locality_defect(local, (["A"], ["y", "B"]))
    assert d2 < 1e-12


def test_defect_bad_partition():
    sig = SpaceSignature.of(A=2, B=2, y=2)
    H = Operator(np.eye(8), sig, hermitian=True)
    with pytest.raises(SignatureError):
        generator_locality_defect(H, (["A"], ["B"]))
    with pytest.raises(SignatureError):
        generator_locality_defect(H, (["A", "B"], ["B", "y"]))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_defect_ignores_local_additions(seed):
    rng = np.random.default_rng(seed)
    sig = SpaceSignature.of(A=2, B=3)
    H = Operator(random_hermitian(6, rng).entries, sig, hermitian=True)
    d0, _ = generator_locality_defect(H, (["A"], ["B"]))
    extra = local_sum(random_hermitian(2, rng, "A"), random_hermitian(3, rng, "B"), sig)
    d1, _ = generator_locality_defect(H + extra, (["A"], ["B"]))
    assert abs(d0 - d1) < 1e-10
    assert d0 == pytest.approx(projection_oracle(H.entries, 2, 3), abs=1e-10)
