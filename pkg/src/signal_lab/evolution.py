"""Unitary evolution and checks on the locality of generators."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import LocalityError, SignatureError
from .hamiltonians import local_sum
from .tensor import Ket, Operator, SpaceSignature, expm_hermitian, kron, permute_matrix


def evolve(H: Operator, psi0: Ket, t: float, phase_sign: int = 1) -> Ket:
    if H.signature != psi0.signature:
        raise SignatureError(f"Hamiltonian on {H.signature} cannot evolve a state on {psi0.signature}")
    U = expm_hermitian(H, t, phase_sign)
    return Ket(U.entries @ psi0.amplitudes, psi0.signature)


def verify_factorization(H_A: Operator, H_B: Operator, t: float, phase_sign: int = 1) -> float:
    """Max-entry distance between exp(i(H_A + H_B)t) and exp(iH_A t) (x) exp(iH_B t).

    Zero up to rounding whenever the two terms act on disjoint subsystems.
    """
    overlap = set(H_A.signature.labels) & set(H_B.signature.labels)
    if overlap:
        raise LocalityError(f"supports overlap on {sorted(overlap)}")
    signature = H_A.signature + H_B.signature
    joint = expm_hermitian(local_sum(H_A, H_B, signature), t, phase_sign)
    split = kron([expm_hermitian(H_A, t, phase_sign), expm_hermitian(H_B, t, phase_sign)])
    return float(np.max(np.abs(joint.entries - split.entries)))


def _bipartition(signature: SpaceSignature, partition) -> tuple[tuple[str, ...], tuple[str, ...]]:
    left, right = (tuple([p] if isinstance(p, str) else p) for p in partition)
    if not left or not right or set(left) & set(right) or sorted(left + right) != sorted(signature.labels):
        raise SignatureError(f"{partition} is not a bipartition of {signature.labels}")
    return left, right


def generator_locality_defect(H: Operator, partition: Sequence[Sequence[str]]) -> tuple[float, Operator]:
    """Distance of ``H`` from the span of {X (x) 1, 1 (x) Y}.

    Returns the Frobenius norm of the interaction part together with the
    local part ``X (x) 1 + 1 (x) Y`` (in ``H``'s own subsystem order). The
    identity component is shared equally between X and Y.
    """
    sig = H.signature
    left, right = _bipartition(sig, partition)
    order = [sig.index(label) for label in left + right]
    da = sig.restrict(left).dim
    db = sig.restrict(right).dim
    m = permute_matrix(H.entries, sig.dims, order).reshape(da, db, da, db)
    tr_b = np.einsum("ijkj->ik", m) / db
    tr_a = np.einsum("ijil->jl", m) / da
    c = np.trace(H.entries) / (da * db)
    x = tr_b - 0.5 * c * np.eye(da)
    y = tr_a - 0.5 * c * np.eye(db)
    local = np.kron(x, np.eye(db)) + np.kron(np.eye(da), y)
    inverse = list(np.argsort(order))
    dims_perm = [sig.dims[k] for k in order]
    local = permute_matrix(local, dims_perm, inverse)
    defect = float(np.linalg.norm(H.entries - local))
    return defect, Operator(local, sig, hermitian=H.hermitian)
