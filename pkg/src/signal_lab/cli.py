"""Command-line harness.

Exit codes: 0 success, 2 configuration error, 3 a physics check failed.
"""
from __future__ import annotations

import argparse
import copy
import io
import json
import math
import sys
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import config as cfgmod
from .audit import bohm_hiley_scenario, marginal_audit, shimony_scenario
from .bohm import (box_mode, decompose, entangled_two_gaussian, gaussian_1d, normalized_on_grid,
                   quantum_potential, quantum_potential_2particle, write_field_csv)
from .epr import (DetectorSettings, chsh, chsh_exact, chsh_schedule, correlation, distribution,
                  eavesdrop_policy, qkd_sift_and_test, sample_setting, sample_trials)
from .errors import ConfigError
from .evolution import generator_locality_defect, verify_factorization
from .hamiltonians import (CouplingConfig, PhysicalConstants, local_sum, pointer_momentum, symmetrized_coupling,
                           von_neumann_coupling)
from .scenarios import entangled_pointer_state, random_hermitian, shimony_instance, symmetrized_signature
from .states import PointerGrid, pauli
from .tensor import Operator, SpaceSignature, embed_product, frobenius, trace_distance

TSIRELSON = 2.0 * math.sqrt(2.0)


@dataclass
class Outcome:
    kind: str
    doc: dict
    summary: str
    csv: Callable[[io.TextIOBase], None] | None = None
    checks: list[dict] | None = None

    def __post_init__(self):
        if self.checks is None:
            self.checks = self.doc.get("checks", [])

    @property
    def failed(self) -> list[str]:
        return [c["name"] for c in self.checks if not c["passed"]]


def _check(name: str, passed: bool, value=None, tolerance=None) -> dict:
    out = {"name": name, "passed": bool(passed)}
    if value is not None:
        out["value"] = float(value)
    if tolerance is not None:
        out["tolerance"] = float(tolerance)
    return out


def _eve(scn: dict):
    spec = scn.get("eavesdropper")
    if not spec:
        return None
    return eavesdrop_policy(basis_rule=spec.get("basis_rule", "uniform_random"),
                            theta_e=spec.get("theta_e", 0.0), fraction=spec.get("fraction", 1.0))


def _eve_doc(scn: dict):
    spec = scn.get("eavesdropper")
    return None if not spec else dict(spec)


def _grid(cfg: dict, default_points: int = 8) -> PointerGrid:
    g = cfg.get("grid", {})
    return PointerGrid(g.get("points", default_points), g.get("spacing", 1.0), g.get("origin", 0.0))


def _matrix(spec, label: str) -> Operator:
    if isinstance(spec, str):
        return pauli(spec, label)
    real = np.asarray(spec["real"], dtype=float)
    imag = np.asarray(spec.get("imag", np.zeros_like(real)), dtype=float)
    m = real + 1j * imag
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigError(f"matrix for {label} must be square")
    if np.max(np.abs(m - m.conj().T)) >= 1e-12:
        raise ConfigError(f"matrix for {label} is not Hermitian")
    return Operator(m, SpaceSignature(((label, m.shape[0]),)), hermitian=True)


def _sigma_floor(e: float, n: int) -> float:
    return math.sqrt(max(1.0 - e * e, 1.0 / n) / n)


# -- subcommands ---------------------------------------------------------------

def run_epr_correlate(cfg: dict, tol: dict, exact_only: bool) -> Outcome:
    scn = cfg["scenario"]
    theta_a = scn.get("theta_a", 0.0)
    if "angles" in scn:
        rel = np.asarray(scn["angles"], dtype=float)
    else:
        sw = scn["sweep"]
        rel = np.linspace(sw["start"], sw["stop"], sw["count"])
    n, seed = cfg["sampling"]["n"], cfg["sampling"]["seed"]
    eve = _eve(scn)
    rows = []
    worst_exact = 0.0
    stat_ok = True
    for j, theta_ab in enumerate(rel):
        s = DetectorSettings(theta_a, theta_a - theta_ab)
        e_exact = correlation(distribution(s, eve))
        row = {"theta_ab": float(theta_ab), "e_exact": e_exact, "minus_cos": -math.cos(theta_ab),
               "e_empirical": None}
        if eve is None:
            worst_exact = max(worst_exact, abs(e_exact + math.cos(theta_ab)))
        if not exact_only:
            trials = sample_setting(s, np.arange(j * n, (j + 1) * n), seed, eve)
            e_emp = float(np.mean(trials.outcome_a * trials.outcome_b))
            row["e_empirical"] = e_emp
            stat_ok &= abs(e_emp - e_exact) <= tol["sigmas"] * _sigma_floor(e_exact, n)
        rows.append(row)
    checks = []
    if eve is None:
        checks.append(_check("exact_matches_minus_cos", worst_exact <= tol["exact"], worst_exact, tol["exact"]))
    if not exact_only:
        checks.append(_check("empirical_within_sigmas", stat_ok, tolerance=tol["sigmas"]))
    doc = {"theta_a": float(theta_a), "n": n, "seed": seed, "eavesdropper": _eve_doc(scn), "rows": rows,
           "checks": checks}

    def write_csv(fh):
        fh.write("theta_ab,e_exact,e_empirical,minus_cos,n\n")
        for r in rows:
            emp = "" if r["e_empirical"] is None else f"{r['e_empirical']:.12g}"
            fh.write(f"{r['theta_ab']:.9f},{r['e_exact']:.12g},{emp},{r['minus_cos']:.12g},{n}\n")

    return Outcome("epr-correlate", doc, f"{len(rows)} angles, max |E_exact + cos| = {worst_exact:.3e}", write_csv)


def run_chsh(cfg: dict, tol: dict, exact_only: bool) -> Outcome:
    scn = cfg["scenario"]
    angles = [float(a) for a in scn["angles"]]
    eve = _eve(scn)
    s_exact = chsh_exact(angles, eve)
    n, seed = cfg["sampling"]["n"], cfg["sampling"]["seed"]
    checks = [_check("tsirelson_bound", s_exact <= TSIRELSON + 1e-12, s_exact, TSIRELSON)]
    s_emp = None
    pairs = [(s.theta_a, s.theta_b) for s in chsh_schedule(angles)]
    e_emp = [None] * 4
    if not exact_only:
        trials = sample_trials(chsh_schedule(angles), n, seed, eve)
        s_emp = chsh(trials, angles)
        e_emp = [float(np.mean(trials.select(a, b).outcome_a * trials.select(a, b).outcome_b)) for a, b in pairs]
        sigma = math.sqrt(sum(_sigma_floor(e, n) ** 2 for e in e_emp))
        checks.append(_check("empirical_within_sigmas", abs(s_emp - s_exact) <= tol["sigmas"] * sigma,
                             abs(s_emp - s_exact), tol["sigmas"] * sigma))
    doc = {"angles": angles, "s_exact": s_exact, "s_empirical": s_emp, "n": None if exact_only else n,
           "seed": None if exact_only else seed, "eavesdropper": _eve_doc(scn), "checks": checks}

    def write_csv(fh):
        fh.write("theta_a,theta_b,e_exact,e_empirical\n")
        for (a, b), e in zip(pairs, e_emp):
            emp = "" if e is None else f"{e:.12g}"
            fh.write(f"{a:.9f},{b:.9f},{correlation(distribution(DetectorSettings(a, b), eve)):.12g},{emp}\n")

    summary = f"S = {s_exact:.12g}" + ("" if s_emp is None else f" (Monte Carlo {s_emp:.6f}, n = {n})")
    return Outcome("chsh", doc, summary, write_csv)


def run_qkd(cfg: dict, tol: dict, exact_only: bool) -> Outcome:
    scn = cfg["scenario"]
    key = tuple(float(a) for a in scn["key_settings"])
    angles = [float(a) for a in scn["angles"]]
    eve = _eve(scn)
    n, seed = cfg["sampling"]["n"], cfg["sampling"]["seed"]
    schedule = [DetectorSettings(*key)] + chsh_schedule(angles)
    trials = sample_trials(schedule, n, seed, eve)
    res = qkd_sift_and_test(trials, key, angles, scn.get("alarm_threshold", 2.0))
    checks = []
    if eve is None:
        checks.append(_check("keys_match_without_eavesdropper", res.keys_match))
        checks.append(_check("alarm_silent_without_eavesdropper", not res.alarm, res.s_estimate))
    doc = {"key_length": int(res.key_a.size), "keys_match": res.keys_match, "error_rate": res.error_rate,
           "s_estimate": res.s_estimate, "alarm": res.alarm, "eavesdropper": _eve_doc(scn),
           "key_a_prefix": "".join(map(str, res.key_a[:64])), "key_b_prefix": "".join(map(str, res.key_b[:64])),
           "checks": checks}
    return Outcome("qkd", doc, f"S = {res.s_estimate:.4f}, alarm = {res.alarm}, key error rate = {res.error_rate:.4f}",
                   lambda fh: trials.to_csv(fh))


def _audit_csv(report):
    def write_csv(fh):
        fh.write("setting,expectation,trace_distance_to_first\n")
        for s, e, rho in zip(report.settings, report.expectations, report.marginals):
            fh.write(f"{json.dumps(s, sort_keys=True).replace(',', ';')},{e:.12g},"
                     f"{trace_distance(rho, report.marginals[0]):.12g}\n")
    return write_csv


def _audit_outcome(report, expect: str | None, tol: dict, extra_checks=()) -> Outcome:
    doc = report.to_dict()
    checks = []
    if expect is not None:
        checks.append(_check(f"verdict_{expect}", report.verdict == expect, report.max_trace_distance,
                             report.tolerance))
    checks += list(extra_checks)
    # checks stay out of the report document, which has a fixed field set
    return Outcome("audit", doc, f"verdict = {report.verdict}, max trace distance = {report.max_trace_distance:.3e}, "
                   f"max expectation delta = {report.max_expectation_delta:.3e}", _audit_csv(report), checks)


def run_bohm_hiley(cfg: dict, tol: dict, exact_only: bool) -> Outcome:
    scn = cfg["scenario"]
    grid = _grid(cfg)
    report = bohm_hiley_scenario(scn["alpha"], scn["alpha_prime"], scn["beta"], grid, kick=scn.get("kick"),
                                 tolerance=tol["invariance"])
    zero = max(abs(e) for e in report.expectations)
    return _audit_outcome(report, scn.get("expect_verdict", "invariant"), tol,
                          [_check("sigma_beta_is_zero", zero <= tol["exact"], zero, tol["exact"])])


def run_shimony(cfg: dict, tol: dict, exact_only: bool) -> Outcome:
    scn = cfg["scenario"]
    coeffs = cfg.get("state", {}).get("coeffs", [2**-0.5, -(2**-0.5)])
    inst = shimony_instance(scn.get("instance_seed", 0), scn.get("apparatus_dim", 2), scn.get("n_settings", 2),
                            coeffs)
    report = shimony_scenario(inst.H_A, inst.H_DB_settings, inst.psi0, inst.G, scn.get("t", 1.0),
                              tolerance=tol["invariance"])
    return _audit_outcome(report, scn.get("expect_verdict", "invariant"), tol)


def _pointer_setup(cfg: dict):
    grid = _grid(cfg)
    st = cfg.get("state", {"kind": "entangled_pointer"})
    if st["kind"] != "entangled_pointer":
        raise ConfigError(f"state kind {st['kind']!r} is not supported for the marginal audit")
    psi = entangled_pointer_state(grid, chi=st.get("chi", math.pi / 6), pointer_width=st.get("pointer_width"))
    return grid, psi


def _setting_builder(cfg: dict, grid: PointerGrid):
    ham = cfg["hamiltonian"]
    sig = symmetrized_signature(grid.points)
    boundary = cfg.get("grid", {}).get("boundary", "periodic")
    herm = ham.get("hermitization", "momentum_form")
    kind = ham["type"]
    o_a = _matrix(ham.get("observable_a", "z"), "A")
    o_b = _matrix(ham.get("observable_b", "z"), "B")
    if kind == "symmetrized":
        return lambda lam: symmetrized_coupling(o_a, o_b, grid, CouplingConfig(lam, herm), sig, boundary=boundary)
    if kind == "von_neumann":
        return lambda lam: von_neumann_coupling(o_a, grid, CouplingConfig(lam, herm), sig, boundary=boundary)
    if kind == "local_sum":
        h_a = _matrix(ham.get("h_a", "z"), "A")
        h_b = _matrix(ham.get("h_b", "x"), "B")
        p = pointer_momentum(grid, "y", boundary)
        bside = SpaceSignature((("B", 2), ("y", grid.points)))

        def build(s):
            h_db = Operator(s * embed_product(bside, {"B": h_b, "y": p}).entries, bside, hermitian=True)
            return local_sum(h_a, h_db, sig)
        return build
    raise ConfigError(f"hamiltonian type {kind!r} cannot drive a marginal audit")


def run_audit(cfg: dict, tol: dict, exact_only: bool) -> Outcome:
    scn = cfg["scenario"]
    grid, psi = _pointer_setup(cfg)
    builder = _setting_builder(cfg, grid)
    report = marginal_audit(builder, psi, scn.get("remote", "A"), scn["settings"], scn.get("t", 1.0),
                            tolerance=tol["invariance"], scenario=scn.get("name", "marginal-audit"))
    default = "invariant" if cfg["hamiltonian"]["type"] == "local_sum" else None
    return _audit_outcome(report, scn.get("expect_verdict", default), tol)


def run_factorize(cfg: dict, tol: dict, exact_only: bool) -> Outcome:
    scn = cfg["scenario"]
    ham = cfg["hamiltonian"]
    t = scn.get("t", 1.0)
    kind = ham["type"]
    checks = []
    residual = None
    if kind == "local_sum":
        if "random_dims" in ham:
            rng = np.random.default_rng(ham.get("random_seed", 0))
            da, db = ham["random_dims"]
            h_a, h_b = random_hermitian(da, rng, "A"), random_hermitian(db, rng, "B")
        else:
            h_a, h_b = _matrix(ham.get("h_a", "z"), "A"), _matrix(ham.get("h_b", "x"), "B")
        sig = h_a.signature + h_b.signature
        H = local_sum(h_a, h_b, sig)
        partition = scn.get("partition", [["A"], ["B"]])
        residual = verify_factorization(h_a, h_b, t)
        checks.append(_check("factorization_residual", residual < tol["factorization"], residual,
                             tol["factorization"]))
    elif kind in ("symmetrized", "von_neumann"):
        grid = _grid(cfg)
        H = _setting_builder(cfg, grid)(ham.get("lambda", 1.0))
        partition = scn.get("partition", [["A"], ["B", "y"]])
        if partition == [["A"], ["B"]]:
            partition = [["A"], ["B", "y"]]
    else:
        raise ConfigError(f"factorize does not handle hamiltonian type {kind!r}")
    defect, _ = generator_locality_defect(H, partition)
    norm = frobenius(H)
    if kind == "local_sum":
        checks.append(_check("locality_defect_zero", defect < tol["locality"] * max(1.0, norm), defect,
                             tol["locality"]))
    doc = {"hamiltonian": kind, "partition": partition, "t": t, "locality_defect": defect, "frobenius_norm": norm,
           "relative_defect": defect / norm if norm else 0.0, "factorization_residual": residual, "checks": checks}

    def write_csv(fh):
        fh.write("quantity,value\n")
        for k in ("locality_defect", "frobenius_norm", "relative_defect", "factorization_residual"):
            v = doc[k]
            fh.write(f"{k},{'' if v is None else format(v, '.12g')}\n")

    return Outcome("factorize", doc, f"locality defect = {defect:.6e} (|H|_F = {norm:.6f})"
                   + ("" if residual is None else f", factorization residual = {residual:.3e}"), write_csv)


def run_qpotential(cfg: dict, tol: dict, exact_only: bool) -> Outcome:
    scn = cfg["scenario"]
    st = cfg["state"]
    g = cfg.get("grid", {})
    kind = st["kind"]
    sign = scn.get("sign", "paper")
    consts = PhysicalConstants()
    s = 1.0 if sign == "paper" else -1.0
    checks = []
    defect = None
    points = g.get("points", 256)
    if kind in ("two_gaussian", "product_gaussian"):
        grid = PointerGrid(points, g.get("spacing", 12.0 / (points - 1)), g.get("origin", -6.0))
        boundary = g.get("boundary", "hard_wall")
        if kind == "two_gaussian":
            psi = entangled_two_gaussian((grid, grid), st.get("separation", 2.0), st.get("sigma", 1.0))
        else:
            psi = np.outer(gaussian_1d(grid, st.get("center", 0.0), st.get("sigma", 1.0)),
                           gaussian_1d(grid, -st.get("center", 0.0), st.get("sigma", 1.0)))
        res = quantum_potential_2particle(psi, (grid, grid), consts, sign, boundary)
        field_, q = res.field, res.Q_total
        defect = res.additivity_defect
    else:
        if kind == "box":
            length = st.get("length", 1.0)
            grid = PointerGrid.box(length, points)
            psi = box_mode(grid, length)
            boundary = "hard_wall"
        elif kind == "plane_wave":
            grid = PointerGrid(points, g.get("spacing", 1.0 / points), g.get("origin", 0.0))
            psi = normalized_on_grid(np.exp(1j * st.get("k", 2 * np.pi) * grid.coords), grid)
            boundary = "periodic"
        elif kind == "gaussian":
            grid = PointerGrid(points, g.get("spacing", 12.0 / (points - 1)), g.get("origin", -6.0))
            psi = gaussian_1d(grid, st.get("center", 0.0), st.get("sigma", 1.0), st.get("k", 0.0))
            boundary = g.get("boundary", "hard_wall")
        else:
            raise ConfigError(f"state kind {kind!r} has no quantum potential run")
        field_ = decompose(psi, grid, consts.hbar)
        q = quantum_potential(field_, consts, sign, boundary)
        if kind == "box":
            # R''/R = -(pi/L)^2, so sign="paper" gives a negative constant
            target = -s * consts.hbar**2 * math.pi**2 / (2 * consts.m * st.get("length", 1.0) ** 2)
            err = float(np.max(np.abs(q.compressed() - target)) / abs(target))
            checks.append(_check("box_mode_closed_form", err <= tol["relative"], err, tol["relative"]))
        if kind == "plane_wave":
            worst = float(np.max(np.abs(q.compressed())))
            checks.append(_check("plane_wave_zero", worst <= 1e-10, worst, 1e-10))
    live = q.compressed()
    doc = {"dimension": field_.ndim, "sign": sign, "state": kind, "q_min": float(live.min()),
           "q_max": float(live.max()), "masked_points": int(field_.node_mask.sum()),
           "additivity_defect": defect, "checks": checks}
    summary = f"Q in [{doc['q_min']:.6g}, {doc['q_max']:.6g}]" + (
        "" if defect is None else f", additivity defect = {defect:.6f}")
    return Outcome("qpotential", doc, summary, lambda fh: write_field_csv(fh, field_, q))


RUNNERS: dict[str, Callable] = {
    "epr-correlate": run_epr_correlate,
    "chsh": run_chsh,
    "qkd": run_qkd,
    "nosignal bohm-hiley": run_bohm_hiley,
    "nosignal shimony": run_shimony,
    "nosignal audit": run_audit,
    "factorize": run_factorize,
    "qpotential": run_qpotential,
}


# -- argument handling ---------------------------------------------------------

def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated radians, got {text!r}") from None


def _u64(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario JSON; merged over the bundled default")
    common.add_argument("--seed", type=_u64)
    common.add_argument("--out", help="artifact path (stdout when omitted)")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--angles", type=_float_list, help="comma-separated angles in radians")
    common.add_argument("--lambda", dest="lam", type=float, help="coupling strength")
    common.add_argument("--time", type=float, help="evolution time")
    common.add_argument("--exact", action="store_true", help="skip Monte Carlo sampling")

    parser = argparse.ArgumentParser(prog="signal-lab", description="EPR statistics and no-signalling audits")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [("epr-correlate", "sweep detector angle, compare E with -cos"),
                        ("chsh", "exact and Monte Carlo CHSH value"),
                        ("qkd", "sift a key and test for an eavesdropper"),
                        ("factorize", "locality defect and factorization residual"),
                        ("qpotential", "quantum potential on 1D/2D grids")]:
        sub.add_parser(name, parents=[common], help=help_)
    ns = sub.add_parser("nosignal", help="no-signalling audits")
    ns_sub = ns.add_subparsers(dest="scenario", required=True)
    for name in ("bohm-hiley", "shimony", "audit"):
        ns_sub.add_parser(name, parents=[common])
    return parser


def _apply_overrides(cfg: dict, command: str, args) -> dict:
    cfg = copy.deepcopy(cfg)
    scn = cfg.setdefault("scenario", {"name": command})
    if args.seed is not None:
        cfg.setdefault("sampling", {})["seed"] = args.seed
    if args.format is not None:
        cfg.setdefault("output", {})["format"] = args.format
    if args.out is not None:
        cfg.setdefault("output", {})["path"] = args.out
    if args.time is not None:
        scn["t"] = args.time
    if args.angles is not None:
        if command == "nosignal bohm-hiley":
            if len(args.angles) != 3:
                raise ConfigError("--angles for bohm-hiley takes alpha,alpha_prime,beta")
            scn["alpha"], scn["alpha_prime"], scn["beta"] = args.angles
        elif command in ("chsh", "qkd"):
            if len(args.angles) != 4:
                raise ConfigError("--angles takes four values a,a',b,b'")
            scn["angles"] = args.angles
        elif command == "epr-correlate":
            scn["angles"] = args.angles
        else:
            raise ConfigError(f"--angles does not apply to {command}")
    if args.lam is not None:
        if command == "nosignal audit":
            scn["settings"] = [0.0, args.lam]
        else:
            cfg.setdefault("hamiltonian", {"type": "symmetrized"})["lambda"] = args.lam
    cfgmod.validate(cfg, source="<command line>")
    return cfg


def _emit(outcome: Outcome, cfg: dict):
    fmt = cfg.get("output", {}).get("format", "json")
    path = cfg.get("output", {}).get("path")
    if fmt == "json":
        cfgmod.check_output(outcome.kind, outcome.doc)
        text = json.dumps(outcome.doc, indent=2) + "\n"
    else:
        buf = io.StringIO()
        outcome.csv(buf)
        text = buf.getvalue()
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command if args.command != "nosignal" else f"nosignal {args.scenario}"
    try:
        cfg = cfgmod.load(command.replace(" ", "-"), args.config)
        cfg = _apply_overrides(cfg, command, args)
        tol = cfgmod.tolerances(cfg)
        outcome = RUNNERS[command](cfg, tol, args.exact)
    except ConfigError as exc:
        print(f"signal-lab: config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError) as exc:
        print(f"signal-lab: invalid scenario: {exc}", file=sys.stderr)
        return 2
    _emit(outcome, cfg)
    print(outcome.summary, file=sys.stderr)
    for c in outcome.checks:
        print(f"  [{'PASS' if c['passed'] else 'FAIL'}] {c['name']}", file=sys.stderr)
    return 3 if outcome.failed else 0


if __name__ == "__main__":
    sys.exit(main())
