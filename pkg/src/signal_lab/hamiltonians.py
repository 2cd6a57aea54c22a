"""Hamiltonian builders: local sums, von Neumann pointer couplings, the
symmetrized two-wing coupling, and a finite-difference Schrodinger operator.

Units: hbar = m = 1 unless a ``PhysicalConstants`` says otherwise.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import HermiticityError, LocalityError, SignatureError
from .states import PointerGrid
from .tensor import Operator, SpaceSignature, embed, embed_product

BOUNDARIES = ("periodic", "hard_wall")


class Hermitization(str, enum.Enum):
    MOMENTUM_FORM = "momentum_form"
    RAW_DERIVATIVE = "raw_derivative"


@dataclass(frozen=True)
class CouplingConfig:
    """Coupling strength and how d/dy is turned into a matrix.

    ``momentum_form`` uses the Hermitian momentum -i d/dy; ``raw_derivative``
    keeps the bare (anti-Hermitian) derivative so the printed form can be
    inspected, but such operators are never flagged Hermitian and cannot be
    exponentiated.
    """

    lam: float = 1.0
    hermitization: Hermitization = Hermitization.MOMENTUM_FORM

    def __post_init__(self):
        if isinstance(self.lam, bool) or not isinstance(self.lam, (int, float, np.floating, np.integer)):
            raise TypeError(f"coupling strength must be a real number, got {self.lam!r}")
        if not math.isfinite(self.lam):
            raise ValueError("coupling strength must be finite")
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "hermitization", Hermitization(self.hermitization))


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.0
    m: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.m > 0):
            raise ValueError("hbar and m must be positive")


def _check_boundary(boundary: str):
    if boundary not in BOUNDARIES:
        raise ValueError(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")


def derivative_matrix(grid: PointerGrid, boundary: str = "periodic") -> np.ndarray:
    """Central-difference d/dy; antisymmetric for both boundary kinds."""
    _check_boundary(boundary)
    n = grid.points
    if n < 3:
        raise ValueError("derivative stencil needs at least 3 grid points")
    d = (np.eye(n, k=1) - np.eye(n, k=-1)) / (2.0 * grid.spacing)
    if boundary == "periodic":
        d[n - 1, 0] += 1.0 / (2.0 * grid.spacing)
        d[0, n - 1] -= 1.0 / (2.0 * grid.spacing)
    return d


def laplacian_matrix(grid: PointerGrid, boundary: str = "hard_wall") -> np.ndarray:
    """Three-point second difference. ``hard_wall`` means zero amplitude one spacing beyond each end."""
    _check_boundary(boundary)
    n = grid.points
    if n < 3:
        raise ValueError("Laplacian stencil needs at least 3 grid points")
    lap = (np.eye(n, k=1) + np.eye(n, k=-1) - 2.0 * np.eye(n)) / grid.spacing**2
    if boundary == "periodic":
        lap[n - 1, 0] += 1.0 / grid.spacing**2
        lap[0, n - 1] += 1.0 / grid.spacing**2
    return lap


def pointer_momentum(grid: PointerGrid, label: str = "y", boundary: str = "periodic") -> Operator:
    """-i times the central difference; spectrum sin(k dy)/dy on a periodic grid."""
    p = -1j * derivative_matrix(grid, boundary)
    return Operator(p, SpaceSignature(((label, grid.points),)), hermitian=True)


def _pointer_factor(grid: PointerGrid, cfg: CouplingConfig, boundary: str) -> tuple[np.ndarray, bool]:
    if cfg.hermitization is Hermitization.MOMENTUM_FORM:
        return -1j * derivative_matrix(grid, boundary), True
    return derivative_matrix(grid, boundary).astype(complex), False


def _require_hermitian(op: Operator, name: str):
    if not op.hermitian:
        raise HermiticityError(f"{name} must be a Hermitian operator")


def _check_pointer(signature: SpaceSignature, grid: PointerGrid, pointer_label: str):
    if signature.dim_of(pointer_label) != grid.points:
        raise SignatureError(f"pointer {pointer_label!r} has dimension {signature.dim_of(pointer_label)}, "
                             f"grid has {grid.points} points")


def local_sum(H_A: Operator, H_DB: Operator, signature: SpaceSignature) -> Operator:
    """H_A (x) 1 + 1 (x) H_DB with each term placed by its own labels."""
    _require_hermitian(H_A, "H_A")
    _require_hermitian(H_DB, "H_DB")
    overlap = set(H_A.signature.labels) & set(H_DB.signature.labels)
    if overlap:
        raise LocalityError(f"local terms overlap on {sorted(overlap)}")
    return embed(H_A, signature) + embed(H_DB, signature)


def von_neumann_coupling(O_A: Operator, grid: PointerGrid, cfg: CouplingConfig, signature: SpaceSignature,
                         target_label: str = "A", pointer_label: str = "y",
                         boundary: str = "periodic") -> Operator:
    """lam * O (x) p_y on one wing, identity on every other subsystem."""
    _require_hermitian(O_A, "O_A")
    _check_pointer(signature, grid, pointer_label)
    p, herm = _pointer_factor(grid, cfg, boundary)
    op = embed_product(signature, {target_label: O_A.entries, pointer_label: p})
    return Operator(cfg.lam * op.entries, signature, hermitian=herm)


def symmetrized_coupling(O_A: Operator, O_B: Operator, grid: PointerGrid, cfg: CouplingConfig,
                         signature: SpaceSignature, a_label: str = "A", b_label: str = "B",
                         pointer_label: str = "y", boundary: str = "periodic") -> Operator:
    """lam * (O_A (x) 1 + 1 (x) O_B) (x) p_y: one pointer coupled to both wings."""
    _require_hermitian(O_A, "O_A")
    _require_hermitian(O_B, "O_B")
    if O_A.dim != O_B.dim:
        raise SignatureError("O_A and O_B must have equal dimension")
    _check_pointer(signature, grid, pointer_label)
    p, herm = _pointer_factor(grid, cfg, boundary)
    term_a = embed_product(signature, {a_label: O_A.entries, pointer_label: p})
    term_b = embed_product(signature, {b_label: O_B.entries, pointer_label: p})
    return Operator(cfg.lam * (term_a.entries + term_b.entries), signature, hermitian=herm)


def bohm_hamiltonian_1d(grid: PointerGrid, V, consts: PhysicalConstants = PhysicalConstants(),
                        boundary: str = "hard_wall", label: str = "x") -> Operator:
    """-(hbar^2 / 2m) * Laplacian + diag(V)."""
    v = np.asarray(V, dtype=float)
    if v.shape != (grid.points,):
        raise SignatureError(f"potential has shape {v.shape}, grid has {grid.points} points")
    if not np.all(np.isfinite(v)):
        raise ValueError("potential must be finite everywhere")
    kinetic = -(consts.hbar**2 / (2.0 * consts.m)) * laplacian_matrix(grid, boundary)
    return Operator(kinetic + np.diag(v), SpaceSignature(((label, grid.points),)), hermitian=True)
