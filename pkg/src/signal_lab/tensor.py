"""Dense complex linear algebra over labeled composite Hilbert spaces.

Composite indices are row-major with the first declared subsystem varying
slowest, so ``kron(A, B)[i*K + k, j*K + l] == A[i, j] * B[k, l]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import HermiticityError, PhysicalityError, SignatureError

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
NORM_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10


def _frozen(array, dtype=complex) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SpaceSignature:
    """Ordered labeled subsystem dimensions, e.g. ``(("A", 2), ("B", 2))``."""

    subsystems: tuple[tuple[str, int], ...]

    def __post_init__(self):
        subs = tuple((str(label), int(dim)) for label, dim in self.subsystems)
        object.__setattr__(self, "subsystems", subs)
        labels = [label for label, _ in subs]
        if len(set(labels)) != len(labels):
            raise SignatureError(f"duplicate subsystem labels in {labels}")
        for label, dim in subs:
            if dim < 1:
                raise SignatureError(f"subsystem {label!r} has dimension {dim}")

    @classmethod
    def of(cls, **dims: int) -> "SpaceSignature":
        return cls(tuple(dims.items()))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.subsystems)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.subsystems else 1

    def dim_of(self, label: str) -> int:
        return self.dims[self.index(label)]

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise SignatureError(f"unknown subsystem label {label!r}; have {self.labels}") from None

    def restrict(self, labels: Sequence[str]) -> "SpaceSignature":
        """Sub-signature over ``labels``, in the order given."""
        return SpaceSignature(tuple((label, self.dim_of(label)) for label in labels))

    def __add__(self, other: "SpaceSignature") -> "SpaceSignature":
        return SpaceSignature(self.subsystems + other.subsystems)

    def __str__(self):
        return ",".join(f"{label}:{dim}" for label, dim in self.subsystems)


@dataclass(frozen=True, eq=False)
class Ket:
    amplitudes: np.ndarray
    signature: SpaceSignature
    normalized: bool = True

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        object.__setattr__(self, "amplitudes", amps)
        if amps.size != self.signature.dim:
            raise SignatureError(f"ket of length {amps.size} does not match signature {self.signature}")
        if self.normalized and abs(np.linalg.norm(amps) - 1.0) > NORM_TOL:
            raise PhysicalityError(f"ket norm {np.linalg.norm(amps)!r} differs from 1")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "Ket") -> complex:
        _require_same(self.signature, other.signature)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def density(self) -> "DensityOp":
        return DensityOp(np.outer(self.amplitudes, self.amplitudes.conj()), self.signature)

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per subsystem."""
        return self.amplitudes.reshape(self.signature.dims)


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense square matrix on a signature.

    ``hermitian`` and ``unitary`` are claims checked at construction; leave
    them False when the property is not needed or does not hold.
    """

    entries: np.ndarray
    signature: SpaceSignature
    hermitian: bool = False
    unitary: bool = False

    def __post_init__(self):
        mat = _frozen(self.entries)
        object.__setattr__(self, "entries", mat)
        n = self.signature.dim
        if mat.shape != (n, n):
            raise SignatureError(f"operator shape {mat.shape} does not match signature {self.signature}")
        if self.hermitian:
            defect = hermiticity_defect(mat)
            if defect >= HERMITIAN_TOL:
                raise HermiticityError(f"hermitian flag set but |M - M^dag|_max = {defect:.3e}")
        if self.unitary:
            defect = np.max(np.abs(mat.conj().T @ mat - np.eye(n))) if n else 0.0
            if defect >= UNITARY_TOL:
                raise PhysicalityError(f"unitary flag set but |U^dag U - I|_max = {defect:.3e}")

    @property
    def dim(self) -> int:
        return self.signature.dim

    @property
    def dag(self) -> "Operator":
        return Operator(self.entries.conj().T, self.signature, self.hermitian, self.unitary)

    def __add__(self, other: "Operator") -> "Operator":
        _require_same(self.signature, other.signature)
        return Operator(self.entries + other.entries, self.signature, self.hermitian and other.hermitian)

    def __sub__(self, other: "Operator") -> "Operator":
        _require_same(self.signature, other.signature)
        return Operator(self.entries - other.entries, self.signature, self.hermitian and other.hermitian)

    def __neg__(self) -> "Operator":
        return Operator(-self.entries, self.signature, self.hermitian)

    def __mul__(self, scalar) -> "Operator":
        scalar = complex(scalar)
        real = scalar.imag == 0.0
        return Operator(scalar * self.entries, self.signature, self.hermitian and real,
                        self.unitary and abs(scalar) == 1.0)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Ket):
            _require_same(self.signature, other.signature)
            return Ket(self.entries @ other.amplitudes, self.signature, normalized=self.unitary and other.normalized)
        _require_same(self.signature, other.signature)
        return Operator(self.entries @ other.entries, self.signature, unitary=self.unitary and other.unitary)

    def commutator(self, other: "Operator") -> np.ndarray:
        _require_same(self.signature, other.signature)
        return self.entries @ other.entries - other.entries @ self.entries

    def relabel(self, signature: SpaceSignature) -> "Operator":
        return Operator(self.entries, signature, self.hermitian, self.unitary)


@dataclass(frozen=True, eq=False)
class DensityOp:
    entries: np.ndarray
    signature: SpaceSignature

    def __post_init__(self):
        mat = _frozen(self.entries)
        object.__setattr__(self, "entries", mat)
        n = self.signature.dim
        if mat.shape != (n, n):
            raise SignatureError(f"density shape {mat.shape} does not match signature {self.signature}")
        if hermiticity_defect(mat) >= HERMITIAN_TOL:
            raise PhysicalityError("density operator is not Hermitian")
        tr = np.trace(mat)
        if abs(tr - 1.0) > TRACE_TOL:
            raise PhysicalityError(f"density operator trace {tr!r} differs from 1")
        lowest = np.linalg.eigvalsh(mat)[0]
        if lowest < -POSITIVITY_TOL:
            raise PhysicalityError(f"density operator has eigenvalue {lowest:.3e}")


def hermiticity_defect(mat: np.ndarray) -> float:
    mat = np.asarray(mat)
    if mat.size == 0:
        return 0.0
    return float(np.max(np.abs(mat - mat.conj().T)))


def _require_same(a: SpaceSignature, b: SpaceSignature):
    if a != b:
        raise SignatureError(f"signature mismatch: {a} vs {b}")


def identity(signature: SpaceSignature) -> Operator:
    return Operator(np.eye(signature.dim), signature, hermitian=True, unitary=True)


def kron(factors: Sequence[Operator]) -> Operator:
    """Tensor product of operators, signatures concatenated left to right."""
    factors = list(factors)
    if not factors:
        raise ValueError("kron needs at least one factor")
    signature = reduce(lambda s, t: s + t, (f.signature for f in factors))
    entries = reduce(np.kron, (f.entries for f in factors))
    return Operator(entries, signature,
                    hermitian=all(f.hermitian for f in factors),
                    unitary=all(f.unitary for f in factors))


def permute_matrix(mat: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder subsystems of a square matrix: new subsystem k is old ``order[k]``."""
    n = len(dims)
    total = int(np.prod(dims))
    t = np.asarray(mat).reshape(tuple(dims) * 2)
    t = t.transpose(list(order) + [n + k for k in order])
    return t.reshape(total, total)


def _as_labels(target) -> tuple[str, ...]:
    if isinstance(target, str):
        return (target,)
    return tuple(target)


def embed(op: Operator, signature: SpaceSignature, target: str | Iterable[str] | None = None) -> Operator:
    """Extend ``op`` by identities to the whole of ``signature``.

    ``target`` names the subsystems ``op`` acts on, in ``op``'s own factor
    order; by default these are the labels of ``op.signature``.
    """
    targets = op.signature.labels if target is None else _as_labels(target)
    for label in targets:
        signature.index(label)
    if len(set(targets)) != len(targets):
        raise SignatureError(f"repeated target labels {targets}")
    expected = int(np.prod([signature.dim_of(label) for label in targets]))
    if expected != op.dim:
        raise SignatureError(f"operator of dimension {op.dim} cannot act on {targets} (dimension {expected})")
    rest = [label for label in signature.labels if label not in targets]
    rest_dim = int(np.prod([signature.dim_of(label) for label in rest])) if rest else 1
    full = np.kron(op.entries, np.eye(rest_dim))
    order = list(targets) + rest
    dims = [signature.dim_of(label) for label in order]
    perm = [order.index(label) for label in signature.labels]
    return Operator(permute_matrix(full, dims, perm), signature, op.hermitian, op.unitary)


def embed_product(signature: SpaceSignature, factors: dict[str, Operator | np.ndarray]) -> Operator:
    """Tensor product over ``signature`` with the given per-label factors and identity elsewhere."""
    for label in factors:
        signature.index(label)
    mats = []
    hermitian = True
    for label, dim in signature.subsystems:
        f = factors.get(label)
        if f is None:
            mats.append(np.eye(dim))
            continue
        m = f.entries if isinstance(f, Operator) else np.asarray(f, dtype=complex)
        if m.shape != (dim, dim):
            raise SignatureError(f"factor on {label!r} has shape {m.shape}, expected {(dim, dim)}")
        hermitian = hermitian and hermiticity_defect(m) < HERMITIAN_TOL
        mats.append(m)
    return Operator(reduce(np.kron, mats), signature, hermitian=hermitian)


def partial_trace(rho: DensityOp, keep_labels: Sequence[str]) -> DensityOp:
    """Trace out everything except ``keep_labels`` (result ordered as given)."""
    keep = _as_labels(keep_labels)
    if not keep:
        raise SignatureError("partial trace needs at least one kept subsystem")
    return DensityOp(_reduce_matrix(rho.entries, rho.signature, keep), rho.signature.restrict(keep))


def _reduce_matrix(mat: np.ndarray, signature: SpaceSignature, keep: Sequence[str]) -> np.ndarray:
    for label in keep:
        signature.index(label)
    if len(set(keep)) != len(keep):
        raise SignatureError(f"repeated labels {keep}")
    rest = [label for label in signature.labels if label not in keep]
    order = [signature.index(label) for label in list(keep) + rest]
    dk = int(np.prod([signature.dim_of(label) for label in keep]))
    dr = signature.dim // dk
    t = permute_matrix(mat, signature.dims, order).reshape(dk, dr, dk, dr)
    return np.einsum("ijkj->ik", t)


def reduced_state(psi: Ket, keep_labels: Sequence[str]) -> DensityOp:
    """Marginal of a pure state without forming the full projector."""
    keep = _as_labels(keep_labels)
    if not keep:
        raise SignatureError("partial trace needs at least one kept subsystem")
    sig = psi.signature
    rest = [label for label in sig.labels if label not in keep]
    order = [sig.index(label) for label in list(keep) + rest]
    dk = int(np.prod([sig.dim_of(label) for label in keep]))
    m = psi.tensor().transpose(order).reshape(dk, -1)
    return DensityOp(m @ m.conj().T, sig.restrict(keep))


def expm_hermitian(H: Operator, t: float, phase_sign: int = 1) -> Operator:
    """``exp(phase_sign * i * H * t)`` by Hermitian eigendecomposition.

    The default ``phase_sign=+1`` is the ``e^{iHt}`` convention; pass -1 for
    the usual Schrodinger propagator. Expectation-value invariance results do
    not depend on the choice.
    """
    if phase_sign not in (1, -1):
        raise ValueError("phase_sign must be +1 or -1")
    if not H.hermitian:
        raise HermiticityError("expm_hermitian requires an operator flagged Hermitian")
    if t == 0:
        return identity(H.signature)
    w, v = np.linalg.eigh(H.entries)
    phases = np.exp(1j * phase_sign * t * w)
    return Operator((v * phases) @ v.conj().T, H.signature, unitary=True)


def trace_distance(a: DensityOp, b: DensityOp) -> float:
    _require_same(a.signature, b.signature)
    w = np.linalg.eigvalsh(a.entries - b.entries)
    return float(0.5 * np.sum(np.abs(w)))


def expectation(op: Operator, state: Ket | DensityOp) -> float:
    """Real part of <op>; imaginary part is noise for Hermitian ``op``."""
    _require_same(op.signature, state.signature)
    if isinstance(state, Ket):
        value = np.vdot(state.amplitudes, op.entries @ state.amplitudes)
    else:
        value = np.trace(op.entries @ state.entries)
    return float(np.real(value))


def frobenius(mat: np.ndarray | Operator) -> float:
    if isinstance(mat, Operator):
        mat = mat.entries
    return float(np.linalg.norm(mat))
