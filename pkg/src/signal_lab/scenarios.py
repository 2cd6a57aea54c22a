"""Ready-made instances used by the CLI and the acceptance suite."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonians import CouplingConfig, symmetrized_coupling
from .states import PointerGrid, gaussian_pointer, pauli, schmidt_state, spin_basis
from .tensor import DensityOp, Ket, Operator, SpaceSignature


def random_hermitian(dim: int, rng: np.random.Generator, label: str = "q") -> Operator:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return Operator(0.5 * (a + a.conj().T), SpaceSignature(((label, dim),)), hermitian=True)


def random_hermitian_on(signature: SpaceSignature, rng: np.random.Generator) -> Operator:
    a = rng.normal(size=(signature.dim,) * 2) + 1j * rng.normal(size=(signature.dim,) * 2)
    return Operator(0.5 * (a + a.conj().T), signature, hermitian=True)


def random_density(signature: SpaceSignature, rng: np.random.Generator, rank: int | None = None):
    rank = signature.dim if rank is None else rank
    a = rng.normal(size=(signature.dim, rank)) + 1j * rng.normal(size=(signature.dim, rank))
    rho = a @ a.conj().T
    return DensityOp(rho / np.trace(rho).real, signature)


@dataclass(frozen=True, eq=False)
class ShimonyInstance:
    H_A: Operator
    H_DB_settings: list[Operator]
    psi0: Ket
    G: Operator


def shimony_instance(seed: int, apparatus_dim: int = 2, n_settings: int = 2,
                     coeffs=(2**-0.5, -(2**-0.5))) -> ShimonyInstance:
    """Random H_A, apparatus Hamiltonians on (D, B) and observable G, with a Schmidt state on ((D, B), A)."""
    rng = np.random.default_rng(seed)
    sig = SpaceSignature((("D", apparatus_dim), ("B", 2), ("A", 2)))
    b_side = sig.restrict(["D", "B"])
    H_A = random_hermitian(2, rng, "A")
    settings = [random_hermitian_on(b_side, rng) for _ in range(n_settings)]
    G = random_hermitian(2, rng, "A")
    psi0 = schmidt_state(coeffs, sig, (["D", "B"], ["A"]))
    return ShimonyInstance(H_A, settings, psi0, G)


def symmetrized_signature(points: int) -> SpaceSignature:
    return SpaceSignature((("A", 2), ("B", 2), ("y", points)))


def entangled_pointer_state(grid: PointerGrid, chi: float = np.pi / 6, a_theta: float = np.pi / 2,
                            b_theta: float = 0.0, pointer_width: float | None = None) -> Ket:
    """cos(chi)|+_a,+_b> + sin(chi)|-_a,-_b> for the spins, times a Gaussian pointer; order (A, B, y).

    A's basis defaults to x and B's to z, so the pair is entangled and A keeps
    coherence in the z basis that a sigma_z-coupled pointer can disturb.
    """
    width = grid.spacing if pointer_width is None else pointer_width
    ba, bb = spin_basis(a_theta), spin_basis(b_theta)
    pair = np.cos(chi) * np.kron(ba.plus, bb.plus) + np.sin(chi) * np.kron(ba.minus, bb.minus)
    return Ket(np.kron(pair, gaussian_pointer(grid, width=width)), symmetrized_signature(grid.points))


def symmetrized_builder(grid: PointerGrid, observable: str = "z", hermitization: str = "momentum_form"):
    """Setting -> symmetrized coupling with that coupling strength."""
    sig = symmetrized_signature(grid.points)
    o = pauli(observable)

    def build(lam: float) -> Operator:
        return symmetrized_coupling(o, o, grid, CouplingConfig(lam, hermitization), sig)

    return build
