"""EPR statistics for a spin singlet: correlations, CHSH, sampling, intercept-resend, key sifting.

Outcomes are +1 (up) / -1 (down); probability tables are 2x2 arrays indexed
``[i_a, i_b]`` with index 0 for +1 and 1 for -1.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import InsufficientDataError
from .rng import counter_uniform

OUTCOMES = np.array([1, -1])
_SIGNS = np.outer(OUTCOMES, OUTCOMES)
CSV_HEADER = ("trial", "theta_a", "theta_b", "outcome_a", "outcome_b", "eavesdropped")
STANDARD_CHSH_ANGLES = (0.0, np.pi / 2, np.pi / 4, 3 * np.pi / 4)


@dataclass(frozen=True)
class DetectorSettings:
    theta_a: float
    theta_b: float

    @property
    def relative(self) -> float:
        return self.theta_a - self.theta_b


@dataclass(frozen=True)
class TrialRecord:
    settings: DetectorSettings
    outcome_a: int
    outcome_b: int
    eavesdropped: bool
    seed_index: int


def joint_distribution(settings: DetectorSettings) -> np.ndarray:
    """Born-rule singlet table P(a, b) = (1 - a b cos(theta_AB)) / 4."""
    return 0.25 * (1.0 - _SIGNS * np.cos(settings.relative))


def correlation(table: np.ndarray) -> float:
    return float(np.sum(_SIGNS * table))


def _intercept_table(theta_a: float, theta_b: float, theta_e) -> np.ndarray:
    """Eve measures B's particle along theta_e and resends the eigenstate she found.

    P(a, b) = sum_e P_singlet(a, e) * P(b | spin e along theta_e), averaged over
    the entries of ``theta_e``.
    """
    te = np.atleast_1d(np.asarray(theta_e, dtype=float))
    ca = np.cos(theta_a - te)
    cb = np.cos(te - theta_b)
    table = np.zeros((2, 2))
    for e in OUTCOMES:
        first = 0.25 * (1.0 - OUTCOMES[:, None] * e * ca[None, :])   # (a, theta_e)
        second = 0.5 * (1.0 + e * OUTCOMES[:, None] * cb[None, :])   # (b, theta_e)
        table += first @ second.T / te.size
    return table


@dataclass(frozen=True)
class EavesdropPolicy:
    """Intercept-resend on B's particle.

    ``basis_rule`` is ``"fixed"`` (always ``theta_e``) or ``"uniform_random"``
    (basis drawn uniformly on the circle, averaged by ``quadrature_points``-point
    periodic quadrature). ``fraction`` is the share of rounds Eve touches.
    """

    kind: str = "intercept_resend"
    basis_rule: str = "uniform_random"
    theta_e: float = 0.0
    fraction: float = 1.0
    quadrature_points: int = 512

    def __post_init__(self):
        if self.kind != "intercept_resend":
            raise ValueError(f"unsupported eavesdropping kind {self.kind!r}")
        if self.basis_rule not in ("fixed", "uniform_random"):
            raise ValueError(f"unknown basis rule {self.basis_rule!r}")
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError("fraction must lie in [0, 1]")

    def table(self, settings: DetectorSettings) -> np.ndarray:
        if self.basis_rule == "fixed":
            return _intercept_table(settings.theta_a, settings.theta_b, self.theta_e)
        grid = 2.0 * np.pi * np.arange(self.quadrature_points) / self.quadrature_points
        return _intercept_table(settings.theta_a, settings.theta_b, grid)


def eavesdrop_policy(kind: str = "intercept_resend", basis_rule: str = "uniform_random",
                     theta_e: float = 0.0, fraction: float = 1.0) -> EavesdropPolicy:
    return EavesdropPolicy(kind, basis_rule, float(theta_e), float(fraction))


def distribution(settings: DetectorSettings, eavesdropper: EavesdropPolicy | None = None) -> np.ndarray:
    """Per-round table, mixing touched and untouched rounds by Eve's ``fraction``."""
    clean = joint_distribution(settings)
    if eavesdropper is None:
        return clean
    f = eavesdropper.fraction
    return f * eavesdropper.table(settings) + (1.0 - f) * clean


@dataclass(frozen=True, eq=False)
class TrialTable:
    """Columnar batch of trials; iterating yields ``TrialRecord`` objects."""

    trial: np.ndarray
    theta_a: np.ndarray
    theta_b: np.ndarray
    outcome_a: np.ndarray
    outcome_b: np.ndarray
    eavesdropped: np.ndarray

    def __len__(self):
        return int(self.trial.size)

    def __iter__(self) -> Iterator[TrialRecord]:
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, i: int) -> TrialRecord:
        return TrialRecord(DetectorSettings(float(self.theta_a[i]), float(self.theta_b[i])),
                           int(self.outcome_a[i]), int(self.outcome_b[i]),
                           bool(self.eavesdropped[i]), int(self.trial[i]))

    def __eq__(self, other):
        if not isinstance(other, TrialTable):
            return NotImplemented
        return all(np.array_equal(getattr(self, f), getattr(other, f)) for f in CSV_HEADER)

    def records(self) -> list[TrialRecord]:
        return list(self)

    def _take(self, rows) -> "TrialTable":
        return TrialTable(*(getattr(self, f)[rows] for f in CSV_HEADER))

    def select(self, theta_a: float, theta_b: float, atol: float = 1e-12) -> "TrialTable":
        mask = (np.abs(self.theta_a - theta_a) <= atol) & (np.abs(self.theta_b - theta_b) <= atol)
        return self._take(mask)

    def by_setting(self) -> dict[DetectorSettings, "TrialTable"]:
        """Split into one table per distinct (theta_a, theta_b), in a single pass."""
        # rows arrive in runs of one setting, so work run by run rather than sorting
        n = len(self)
        if n == 0:
            return {}
        change = np.flatnonzero((np.diff(self.theta_a) != 0) | (np.diff(self.theta_b) != 0)) + 1
        starts = np.concatenate([[0], change])
        stops = np.concatenate([change, [n]])
        runs: dict[DetectorSettings, list[np.ndarray]] = {}
        for lo, hi in zip(starts, stops):
            key = DetectorSettings(float(self.theta_a[lo]), float(self.theta_b[lo]))
            runs.setdefault(key, []).append(np.arange(lo, hi))
        return {key: self._take(np.concatenate(parts)) for key, parts in runs.items()}

    @classmethod
    def concat(cls, parts: Sequence["TrialTable"]) -> "TrialTable":
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in CSV_HEADER))

    def to_csv(self, fh=None) -> str | None:
        """Write the documented CSV; returns the text when no file handle is given."""
        out = io.StringIO() if fh is None else fh
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in zip(self.trial, self.theta_a, self.theta_b, self.outcome_a, self.outcome_b, self.eavesdropped):
            writer.writerow([int(row[0]), f"{row[1]:.9f}", f"{row[2]:.9f}",
                             f"{int(row[3]):+d}", f"{int(row[4]):+d}", int(bool(row[5]))])
        return out.getvalue() if fh is None else None


def sample_setting(settings: DetectorSettings, trial_indices: np.ndarray, seed: int,
                   eavesdropper: EavesdropPolicy | None = None) -> TrialTable:
    """Draw the given trials for one setting. Each trial depends only on (seed, trial index)."""
    idx = np.asarray(trial_indices, dtype=np.int64)
    u_outcome = counter_uniform(seed, idx, stream=0)
    clean = joint_distribution(settings).ravel()
    if eavesdropper is None:
        touched = np.zeros(idx.size, dtype=bool)
    else:
        touched = counter_uniform(seed, idx, stream=1) < eavesdropper.fraction
    cells = np.empty(idx.size, dtype=np.int64)
    for mask, table in ((~touched, clean),
                        (touched, None if eavesdropper is None else eavesdropper.table(settings).ravel())):
        if not mask.any():
            continue
        cdf = np.cumsum(table)
        cdf[-1] = 1.0
        cells[mask] = np.minimum(np.searchsorted(cdf, u_outcome[mask], side="right"), 3)
    n = idx.size
    return TrialTable(idx, np.full(n, float(settings.theta_a)), np.full(n, float(settings.theta_b)),
                      OUTCOMES[cells // 2], OUTCOMES[cells % 2], touched)


def sample_trials(schedule: Sequence[DetectorSettings], n_per_setting: int, seed: int,
                  eavesdropper: EavesdropPolicy | None = None) -> TrialTable:
    """Inverse-CDF sampling, ``n_per_setting`` rounds per setting; trial k of setting j has index j*n + k."""
    if n_per_setting < 1:
        raise ValueError("n_per_setting must be at least 1")
    parts = []
    for j, settings in enumerate(schedule):
        if not isinstance(settings, DetectorSettings):
            settings = DetectorSettings(*settings)
        idx = np.arange(j * n_per_setting, (j + 1) * n_per_setting)
        parts.append(sample_setting(settings, idx, seed, eavesdropper))
    return TrialTable.concat(parts)


def empirical_correlation(trials: TrialTable) -> float:
    if len(trials) == 0:
        raise InsufficientDataError("no trials for this setting")
    return float(np.mean(trials.outcome_a * trials.outcome_b))


def chsh_value(e_ab: float, e_abp: float, e_apb: float, e_apbp: float) -> float:
    """S = |E(a,b) - E(a,b') + E(a',b) + E(a',b')|.

    With this sign placement the singlet reaches 2*sqrt(2) at
    (a, a', b, b') = (0, pi/2, pi/4, 3*pi/4).
    """
    return abs(e_ab - e_abp + e_apb + e_apbp)


def _pairs(angles: Sequence[float]):
    a, ap, b, bp = angles
    return [(a, b), (a, bp), (ap, b), (ap, bp)]


def chsh_exact(angles: Sequence[float] = STANDARD_CHSH_ANGLES, eavesdropper: EavesdropPolicy | None = None) -> float:
    es = []
    for ta, tb in _pairs(angles):
        es.append(correlation(distribution(DetectorSettings(ta, tb), eavesdropper)))
    return chsh_value(*es)


def chsh(trials: TrialTable, angles: Sequence[float], min_rounds: int = 1) -> float:
    """Empirical S from the rounds at the four setting pairs of ``angles`` = (a, a', b, b')."""
    es = []
    for ta, tb in _pairs(angles):
        sub = trials.select(ta, tb)
        if len(sub) < min_rounds:
            raise InsufficientDataError(f"setting pair ({ta}, {tb}) has {len(sub)} rounds, need {min_rounds}")
        es.append(empirical_correlation(sub))
    return chsh_value(*es)


def chsh_schedule(angles: Sequence[float] = STANDARD_CHSH_ANGLES) -> list[DetectorSettings]:
    return [DetectorSettings(ta, tb) for ta, tb in _pairs(angles)]


@dataclass
class KeyResult:
    key_a: np.ndarray
    key_b: np.ndarray
    s_estimate: float
    alarm: bool

    @property
    def error_rate(self) -> float:
        if self.key_a.size == 0:
            return 0.0
        return float(np.mean(self.key_a != self.key_b))

    @property
    def keys_match(self) -> bool:
        return bool(np.array_equal(self.key_a, self.key_b))


def qkd_sift_and_test(trials: TrialTable, key_settings: tuple[float, float], test_settings: Sequence[float],
                      alarm_threshold: float = 2.0, min_test_rounds: int = 100) -> KeyResult:
    """Sift a key from the aligned rounds and estimate S from the test rounds.

    Bit = 1 for an up result on A; B's bit is flipped since the singlet
    anticorrelates. The alarm fires when S does not exceed ``alarm_threshold``.
    """
    key_rounds = trials.select(*key_settings)
    key_a = (key_rounds.outcome_a == 1).astype(np.uint8)
    key_b = (key_rounds.outcome_b == -1).astype(np.uint8)
    s = chsh(trials, test_settings, min_rounds=min_test_rounds)
    return KeyResult(key_a, key_b, s, bool(s <= alarm_threshold))
