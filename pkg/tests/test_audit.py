import json

import jsonschema
import numpy as np
import pytest

from signal_lab.audit import AuditReport, bohm_hiley_scenario, marginal_audit, measurement_unitary, shimony_scenario
from signal_lab.config import AUDIT_REPORT_SCHEMA
from signal_lab.errors import LocalityError
from signal_lab.evolution import evolve
from signal_lab.hamiltonians import local_sum
from signal_lab.scenarios import (entangled_pointer_state, random_hermitian, random_hermitian_on, shimony_instance,
                                  symmetrized_builder)
from signal_lab.states import PointerGrid, gaussian_pointer, singlet_with_apparatus, spin_basis
from signal_lab.tensor import DensityOp, Ket, Operator, SpaceSignature, embed

# frozen from the first verified run: symmetrized coupling, lambda in {0, 1}, remote A, t = 1,
# default entangled pointer state on an 8-point unit grid
EQ17_TRACE_DISTANCE_T1 = 0.0810203460197752

GRID8 = PointerGrid(8, 1.0)


def partial_trace_oracle(psi: Ket, keep_index: int):
    """Reduced state of one subsystem by summing over explicit basis vectors of the rest."""
    dims = psi.signature.dims
    t = psi.tensor()
    d = dims[keep_index]
    rho = np.zeros((d, d), dtype=complex)
    for rest in np.ndindex(*[n for i, n in enumerate(dims) if i != keep_index]):
        idx = list(rest)
        vec = np.empty(d, dtype=complex)
        for k in range(d):
            full = idx[:keep_index] + [k] + idx[keep_index:]
            vec[k] = t[tuple(full)]
        rho += np.outer(vec, vec.conj())
    return rho


# -- Bohm-Hiley --------------------------------------------------------------------

@pytest.mark.parametrize("beta", [0.0, 0.4, 1.3, np.pi, 5.0])
def test_bohm_hiley_invariance(beta):
    r = bohm_hiley_scenario(0.0, np.pi / 3, beta, GRID8)
    assert r.max_expectation_delta < 1e-12
    assert all(abs(e) < 1e-12 for e in r.expectations)
    assert r.invariant


def test_measurement_unitary_identity_when_no_rotation():
    U = measurement_unitary(GRID8, 0.7, 0.7)
    np.testing.assert_allclose(U.entries, np.eye(16), atol=1e-14)
    psi = singlet_with_apparatus(gaussian_pointer(GRID8), 0.7, 0.2)
    np.testing.assert_allclose((embed(U, psi.signature) @ psi).amplitudes, psi.amplitudes, atol=1e-14)


def test_measurement_unitary_rotates_and_kicks():
    alpha, alpha_p = 0.2, 1.1
    U = measurement_unitary(GRID8, alpha, alpha_p)
    assert np.max(np.abs(U.entries.conj().T @ U.entries - np.eye(16))) < 1e-12
    phi = gaussian_pointer(GRID8, width=1.5)
    out = U.entries @ np.kron(phi, spin_basis(alpha).plus)
    spin_part = out.reshape(8, 2) @ spin_basis(alpha_p).plus.conj()
    assert np.linalg.norm(spin_part) == pytest.approx(1.0, abs=1e-12)
    # the pointer moved: it is no longer the initial wave
    assert abs(np.vdot(phi, spin_part)) < 1 - 1e-3


def test_bohm_hiley_report_json():
    r = bohm_hiley_scenario(0.0, 0.5, 0.3, GRID8)
    doc = json.loads(r.to_json())
    jsonschema.validate(doc, AUDIT_REPORT_SCHEMA)
    assert doc["verdict"] == "invariant"
    assert len(doc["marginals"]) == 2 and doc["marginals"][0]["labels"] == ["B"]


# -- Shimony ---------------------------------------------------------------------------

def test_shimony_two_random_settings():
    inst = shimony_instance(1)
    r = shimony_scenario(inst.H_A, inst.H_DB_settings, inst.psi0, inst.G, 1.3)
    assert r.max_expectation_delta < 1e-10
    assert r.max_trace_distance < 1e-9
    assert r.invariant


def test_shimony_single_setting():
    inst = shimony_instance(2, n_settings=1)
    r = shimony_scenario(inst.H_A, inst.H_DB_settings, inst.psi0, inst.G, 0.8)
    assert r.max_expectation_delta == 0.0 and r.max_trace_distance == 0.0


@pytest.mark.parametrize("seed", range(3))
def test_shimony_expectation_matches_partial_trace(seed):
    inst = shimony_instance(seed, apparatus_dim=3, n_settings=2)
    t = 0.9
    r = shimony_scenario(inst.H_A, inst.H_DB_settings, inst.psi0, inst.G, t)
    sig = inst.psi0.signature
    for H_DB, value in zip(inst.H_DB_settings, r.expectations):
        psi_t = evolve(local_sum(inst.H_A.relabel(sig.restrict(["A"])), H_DB, sig), inst.psi0, t)
        rho_a = partial_trace_oracle(psi_t, sig.index("A"))
        assert value == pytest.approx(np.trace(inst.G.entries @ rho_a).real, abs=1e-12)


def test_shimony_rejects_setting_acting_on_a():
    inst = shimony_instance(3)
    rng = np.random.default_rng(0)
    bad = random_hermitian_on(inst.psi0.signature.restrict(["B", "A"]), rng)
    with pytest.raises(LocalityError):
        shimony_scenario(inst.H_A, [inst.H_DB_settings[0], bad], inst.psi0, inst.G, 1.0)


def test_shimony_accepts_identity_on_a():
    # a setting written on (B, A) that is trivial on A is still local
    inst = shimony_instance(4, apparatus_dim=1)
    rng = np.random.default_rng(1)
    hb = random_hermitian(2, rng, "B").entries
    sig = SpaceSignature.of(B=2, A=2)
    padded = Operator(np.kron(hb, np.eye(2)), sig, hermitian=True)
    r = shimony_scenario(inst.H_A, [padded, inst.H_DB_settings[0]], inst.psi0, inst.G, 1.0)
    assert r.invariant


# -- marginal audit ---------------------------------------------------------------------

def test_marginal_audit_local_family_is_invariant():
    inst = shimony_instance(5, apparatus_dim=2, n_settings=4)
    sig = inst.psi0.signature
    H_A = inst.H_A.relabel(sig.restrict(["A"]))
    r = marginal_audit(lambda H: local_sum(H_A, H, sig), inst.psi0, "A", inst.H_DB_settings, 2.0)
    assert r.max_trace_distance < 1e-9 and r.invariant


def test_marginal_audit_symmetrized_varies():
    psi = entangled_pointer_state(GRID8)
    r = marginal_audit(symmetrized_builder(GRID8), psi, "A", [0.0, 1.0], 1.0)
    assert r.verdict == "varies"
    assert r.max_trace_distance == pytest.approx(EQ17_TRACE_DISTANCE_T1, rel=1e-9)


def test_marginal_audit_zero_time_is_invariant():
    psi = entangled_pointer_state(GRID8)
    r = marginal_audit(symmetrized_builder(GRID8), psi, "A", [0.0, 1.0, 2.5], 0.0)
    assert r.max_trace_distance == 0.0 and r.invariant


def test_marginal_audit_threaded_matches_serial():
    psi = entangled_pointer_state(GRID8)
    settings = [0.0, 0.5, 1.0, 1.5]
    serial = marginal_audit(symmetrized_builder(GRID8), psi, "A", settings, 1.0)
    threaded = marginal_audit(symmetrized_builder(GRID8), psi, "A", settings, 1.0, workers=4)
    assert serial.to_json() == threaded.to_json()


def test_report_verdict_follows_tolerance():
    sig = SpaceSignature.of(A=2)
    rho1 = DensityOp(np.diag([0.5, 0.5]), sig)
    rho2 = DensityOp(np.diag([0.5 + 1e-6, 0.5 - 1e-6]), sig)
    loose = AuditReport.build("x", [0, 1], [0.0, 0.0], [rho1, rho2], tolerance=1e-3)
    tight = AuditReport.build("x", [0, 1], [0.0, 0.0], [rho1, rho2], tolerance=1e-9)
    assert loose.invariant and not tight.invariant
