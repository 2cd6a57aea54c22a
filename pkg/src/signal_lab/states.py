"""State constructors: the singlet with a pointer, Schmidt-form states, spin bases, (anti)symmetrization."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateProjectionError, PhysicalityError, SignatureError
from .tensor import NORM_TOL, Ket, Operator, SpaceSignature

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


def pauli(name: str, label: str = "q") -> Operator:
    mats = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z, "i": IDENTITY_2}
    return Operator(mats[name.lower()], SpaceSignature(((label, 2),)), hermitian=True, unitary=True)


def spin_operator(theta: float, label: str = "q") -> Operator:
    """Spin along angle ``theta`` in the z-x plane: cos(theta) sz + sin(theta) sx."""
    m = np.cos(theta) * SIGMA_Z + np.sin(theta) * SIGMA_X
    return Operator(m, SpaceSignature(((label, 2),)), hermitian=True, unitary=True)


@dataclass(frozen=True)
class PointerGrid:
    """Uniform 1D grid for an apparatus (or particle) coordinate."""

    points: int
    spacing: float
    origin: float = 0.0

    def __post_init__(self):
        if int(self.points) < 2:
            raise ValueError(f"grid needs at least 2 points, got {self.points}")
        if not self.spacing > 0:
            raise ValueError(f"grid spacing must be positive, got {self.spacing}")
        object.__setattr__(self, "points", int(self.points))
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "origin", float(self.origin))

    @property
    def coords(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.points)

    @property
    def center(self) -> float:
        return self.origin + 0.5 * self.spacing * (self.points - 1)

    @property
    def period(self) -> float:
        return self.points * self.spacing

    @classmethod
    def box(cls, length: float, points: int) -> "PointerGrid":
        """Interior points of a hard-wall box [0, length]; walls sit one spacing outside the grid."""
        dx = length / (points + 1)
        return cls(points, dx, dx)


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    # first non-negligible component real and positive
    idx = int(np.argmax(np.abs(vec) > 1e-15))
    c = vec[idx]
    return vec * (abs(c) / c)


@dataclass(frozen=True, eq=False)
class SpinBasis:
    theta: float
    plus: np.ndarray = field(repr=False)
    minus: np.ndarray = field(repr=False)

    @property
    def sigma(self) -> np.ndarray:
        return np.cos(self.theta) * SIGMA_Z + np.sin(self.theta) * SIGMA_X

    def ket(self, sign: int) -> np.ndarray:
        return self.plus if sign > 0 else self.minus

    def matrix(self) -> np.ndarray:
        """Columns are |+_theta>, |-_theta>."""
        return np.column_stack([self.plus, self.minus])


def spin_basis(theta: float) -> SpinBasis:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    plus = _fix_phase(np.array([c, s], dtype=complex))
    minus = _fix_phase(np.array([s, -c], dtype=complex))
    plus.setflags(write=False)
    minus.setflags(write=False)
    return SpinBasis(float(theta), plus, minus)


def gaussian_pointer(grid: PointerGrid, center: float | None = None, width: float | None = None) -> np.ndarray:
    """Discrete Gaussian amplitude, unit Euclidean norm. Defaults: mid-grid, width 8 spacings."""
    x0 = grid.center if center is None else center
    w = 8.0 * grid.spacing if width is None else width
    phi = np.exp(-((grid.coords - x0) ** 2) / (4.0 * w**2)).astype(complex)
    return phi / np.linalg.norm(phi)


def singlet_with_apparatus(pointer_wave: np.ndarray, alpha: float, beta: float,
                           labels: tuple[str, str, str] = ("y", "A", "B")) -> Ket:
    """Pointer wave times (|+a,-b> - |-a,+b>)/sqrt(2), ordered (pointer, A, B)."""
    phi = np.asarray(pointer_wave, dtype=complex).ravel()
    if abs(np.linalg.norm(phi) - 1.0) > NORM_TOL:
        raise PhysicalityError(f"pointer wave has norm {np.linalg.norm(phi)!r}")
    ba, bb = spin_basis(alpha), spin_basis(beta)
    pair = (np.kron(ba.plus, bb.minus) - np.kron(ba.minus, bb.plus)) / np.sqrt(2.0)
    y, a, b = labels
    sig = SpaceSignature(((y, phi.size), (a, 2), (b, 2)))
    return Ket(np.kron(phi, pair), sig)


def schmidt_state(coeffs: Sequence[complex], signature: SpaceSignature,
                  partition: tuple[Sequence[str], Sequence[str]],
                  b_basis: np.ndarray | None = None, a_basis: np.ndarray | None = None) -> Ket:
    """sum_i c_i |b'_i>|a_i> with b' spanning ``partition[0]`` and a spanning ``partition[1]``.

    The bases default to the computational ones of each side (composite index
    order follows the label order given in the partition); pass unitary
    matrices whose columns are the basis kets to use others.
    """
    c = np.asarray(coeffs, dtype=complex).ravel()
    b_labels, a_labels = tuple(partition[0]), tuple(partition[1])
    if sorted(b_labels + a_labels) != sorted(signature.labels):
        raise SignatureError(f"partition {partition} does not cover {signature.labels}")
    db = signature.restrict(b_labels).dim
    da = signature.restrict(a_labels).dim
    if c.size > min(db, da):
        raise SignatureError(f"{c.size} Schmidt coefficients exceed min dimension {min(db, da)}")
    if abs(np.sum(np.abs(c) ** 2) - 1.0) > NORM_TOL:
        raise PhysicalityError("Schmidt coefficients are not normalized")
    bb = np.eye(db, dtype=complex) if b_basis is None else np.asarray(b_basis, dtype=complex)
    ab = np.eye(da, dtype=complex) if a_basis is None else np.asarray(a_basis, dtype=complex)
    k = c.size
    m = (bb[:, :k] * c) @ ab[:, :k].T
    order = b_labels + a_labels
    t = m.reshape([signature.dim_of(label) for label in order])
    t = t.transpose([order.index(label) for label in signature.labels])
    return Ket(t.ravel(), signature)


def swap_operator(signature: SpaceSignature, pair: tuple[str, str]) -> Operator:
    i, j = signature.index(pair[0]), signature.index(pair[1])
    if signature.dims[i] != signature.dims[j]:
        raise SignatureError(f"cannot swap {pair}: dimensions {signature.dims[i]} and {signature.dims[j]}")
    n = len(signature.dims)
    axes = list(range(2 * n))
    axes[i], axes[j] = axes[j], axes[i]
    eye = np.eye(signature.dim).reshape(signature.dims * 2).transpose(axes)
    return Operator(eye.reshape(signature.dim, signature.dim), signature, hermitian=True, unitary=True)


def _swap_amplitudes(ket: Ket, pair: tuple[str, str]) -> np.ndarray:
    sig = ket.signature
    i, j = sig.index(pair[0]), sig.index(pair[1])
    if sig.dims[i] != sig.dims[j]:
        raise SignatureError(f"cannot swap {pair}: dimensions {sig.dims[i]} and {sig.dims[j]}")
    return np.swapaxes(ket.tensor(), i, j).ravel()


def _project(ket: Ket, pair: tuple[str, str], sign: int) -> Ket:
    v = 0.5 * (ket.amplitudes + sign * _swap_amplitudes(ket, pair))
    norm = np.linalg.norm(v)
    if norm < 1e-12:
        kind = "symmetric" if sign > 0 else "antisymmetric"
        raise DegenerateProjectionError(f"{kind} projection on {pair} annihilates the state")
    return Ket(v / norm, ket.signature)


def symmetrize(ket: Ket, labels: tuple[str, str]) -> Ket:
    return _project(ket, labels, +1)


def antisymmetrize(ket: Ket, labels: tuple[str, str]) -> Ket:
    return _project(ket, labels, -1)
