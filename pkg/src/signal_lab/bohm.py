"""Quantum potential on grids from the polar form psi = R exp(iS/hbar).

``sign="paper"`` evaluates +(hbar^2/2m) lap(R)/R; ``sign="standard"`` is the
conventional -(hbar^2/2m) lap(R)/R. The two differ only by an overall sign.
Points where R falls below ``node_threshold * max(R)`` are masked.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NodeError, PhysicalityError
from .hamiltonians import PhysicalConstants
from .states import PointerGrid

NODE_THRESHOLD = 1e-8
NORM_TOL = 1e-8
SIGNS = {"paper": 1.0, "standard": -1.0}
_DEFECT_FLOOR = float(np.sqrt(np.finfo(float).eps))


@dataclass(frozen=True, eq=False)
class WaveField:
    """Amplitude/phase samples. ``S`` is None for 2D (magnitude-only) fields."""

    grids: tuple[PointerGrid, ...]
    R: np.ndarray
    S: np.ndarray | None
    node_mask: np.ndarray
    hbar: float = 1.0
    phase_offset: float = 0.0

    @property
    def ndim(self) -> int:
        return len(self.grids)

    @property
    def cell_volume(self) -> float:
        return float(np.prod([g.spacing for g in self.grids]))

    def reconstruct(self) -> np.ndarray:
        if self.S is None:
            return self.R.astype(complex)
        phase = np.where(self.node_mask, 0.0, self.S / self.hbar + self.phase_offset)
        return self.R * np.exp(1j * phase)


def _as_grids(grid) -> tuple[PointerGrid, ...]:
    return (grid,) if isinstance(grid, PointerGrid) else tuple(grid)


def decompose(psi, grid: PointerGrid | Sequence[PointerGrid], hbar: float = 1.0,
              node_threshold: float = NODE_THRESHOLD) -> WaveField:
    """Split grid samples into R = |psi| and an unwrapped action S (1D only).

    S is anchored to zero at the first non-node point; the removed constant is
    kept as ``phase_offset`` so ``reconstruct`` returns ``psi``.
    """
    grids = _as_grids(grid)
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != tuple(g.points for g in grids):
        raise ValueError(f"samples of shape {psi.shape} do not match the grid")
    R = np.abs(psi)
    peak = R.max()
    if peak == 0.0:
        raise NodeError("wavefunction vanishes everywhere")
    norm = float(np.sum(R**2) * np.prod([g.spacing for g in grids]))
    if abs(norm - 1.0) > NORM_TOL:
        raise PhysicalityError(f"wavefunction is not normalized on the grid (integral {norm!r})")
    mask = R < node_threshold * peak
    S = None
    offset = 0.0
    if len(grids) == 1:
        phase = np.full(R.shape, np.nan)
        live = np.flatnonzero(~mask)
        unwrapped = np.unwrap(np.angle(psi[live]))
        offset = float(unwrapped[0])
        phase[live] = unwrapped - offset
        S = hbar * phase
    return WaveField(grids, R, S, mask, hbar, offset)


def laplacian(values: np.ndarray, spacings: Sequence[float], boundary: str = "hard_wall") -> np.ndarray:
    """Three-point Laplacian along every axis; ``hard_wall`` pads with zeros."""
    out = np.zeros_like(values, dtype=float)
    for axis, h in enumerate(spacings):
        if boundary == "periodic":
            fwd = np.roll(values, -1, axis)
            back = np.roll(values, 1, axis)
        elif boundary == "hard_wall":
            pad = [(0, 0)] * values.ndim
            pad[axis] = (1, 1)
            padded = np.pad(values, pad)
            n = values.shape[axis]
            fwd = np.take(padded, np.arange(2, n + 2), axis)
            back = np.take(padded, np.arange(0, n), axis)
        else:
            raise ValueError(f"unknown boundary {boundary!r}")
        out += (fwd - 2.0 * values + back) / h**2
    return out


def quantum_potential(field: WaveField, consts: PhysicalConstants = PhysicalConstants(),
                      sign: str = "paper", boundary: str = "hard_wall") -> np.ma.MaskedArray:
    try:
        s = SIGNS[sign]
    except KeyError:
        raise ValueError(f"sign must be one of {sorted(SIGNS)}") from None
    for g in field.grids:
        if g.points < 3:
            raise ValueError("quantum potential needs at least 3 points per axis")
    lap = laplacian(field.R, [g.spacing for g in field.grids], boundary)
    safe = np.where(field.node_mask, 1.0, field.R)
    q = s * consts.hbar**2 / (2.0 * consts.m) * lap / safe
    return np.ma.masked_array(q, mask=field.node_mask.copy())


def quantum_potential_at(field: WaveField, index, consts: PhysicalConstants = PhysicalConstants(),
                         sign: str = "paper", boundary: str = "hard_wall") -> float:
    if field.node_mask[index]:
        raise NodeError(f"amplitude vanishes at grid index {index}")
    return float(quantum_potential(field, consts, sign, boundary).data[index])


@dataclass(frozen=True, eq=False)
class TwoParticlePotential:
    field: WaveField
    Q_total: np.ma.MaskedArray
    Q1: np.ma.MaskedArray
    Q2: np.ma.MaskedArray
    additivity_defect: float

    @property
    def Q_sum(self) -> np.ma.MaskedArray:
        return self.Q1[:, None] + self.Q2[None, :]


def quantum_potential_2particle(psi, grids: tuple[PointerGrid, PointerGrid],
                                consts: PhysicalConstants = PhysicalConstants(), sign: str = "paper",
                                boundary: str = "hard_wall") -> TwoParticlePotential:
    """Joint quantum potential compared against the sum of single-particle ones.

    The single-particle potentials come from the marginal amplitudes
    sqrt(int |psi|^2 dx_other). The defect is the probability-weighted L2
    distance between Q_total and Q1 + Q2 over points unmasked in every field,
    divided by the sum of their weighted L2 norms; it lies in [0, 1] and is 0
    exactly when the two agree. The denominator is floored at sqrt(eps) times
    the stencil scale (hbar^2/2m) * sum(1/dx^2), so two potentials that are
    both rounding noise (plane waves) give a defect near 0, not noise/noise.
    """
    g1, g2 = grids
    if g1.points < 3 or g2.points < 3:
        raise ValueError("two-particle grid needs at least 3 points per axis")
    field = decompose(psi, (g1, g2), consts.hbar)
    density = field.R**2
    marg1 = np.sqrt(np.sum(density, axis=1) * g2.spacing).astype(complex)
    marg2 = np.sqrt(np.sum(density, axis=0) * g1.spacing).astype(complex)
    f1 = decompose(marg1, g1, consts.hbar)
    f2 = decompose(marg2, g2, consts.hbar)
    q_tot = quantum_potential(field, consts, sign, boundary)
    q1 = quantum_potential(f1, consts, sign, boundary)
    q2 = quantum_potential(f2, consts, sign, boundary)
    live = ~(field.node_mask | f1.node_mask[:, None] | f2.node_mask[None, :])
    w = density[live] * field.cell_volume
    qt = q_tot.data[live]
    qs = (q1.data[:, None] + q2.data[None, :])[live]
    num = np.sqrt(np.sum(w * (qt - qs) ** 2))
    den = np.sqrt(np.sum(w * qt**2)) + np.sqrt(np.sum(w * qs**2))
    scale = consts.hbar**2 / (2.0 * consts.m) * (1.0 / g1.spacing**2 + 1.0 / g2.spacing**2)
    defect = float(num / max(den, _DEFECT_FLOOR * scale))
    return TwoParticlePotential(field, q_tot, q1, q2, defect)


def normalized_on_grid(values, grids) -> np.ndarray:
    grids = _as_grids(grids)
    v = np.asarray(values, dtype=complex)
    cell = np.prod([g.spacing for g in grids])
    return v / np.sqrt(np.sum(np.abs(v) ** 2) * cell)


def gaussian_1d(grid: PointerGrid, center: float = 0.0, sigma: float = 1.0, k: float = 0.0) -> np.ndarray:
    """Grid-normalized R proportional to exp(-(x - c)^2 / 4 sigma^2), times exp(ikx)."""
    x = grid.coords
    return normalized_on_grid(np.exp(-((x - center) ** 2) / (4 * sigma**2) + 1j * k * x), grid)


def box_mode(grid: PointerGrid, length: float, mode: int = 1) -> np.ndarray:
    return normalized_on_grid(np.sin(mode * np.pi * grid.coords / length), grid)


def entangled_two_gaussian(grids: tuple[PointerGrid, PointerGrid], separation: float = 2.0,
                           sigma: float = 1.0) -> np.ndarray:
    """Symmetric superposition g(x1 - d) g(x2 + d) + g(x1 + d) g(x2 - d), grid-normalized."""
    x1 = grids[0].coords[:, None]
    x2 = grids[1].coords[None, :]

    def g(x, c):
        return np.exp(-((x - c) ** 2) / (4 * sigma**2))

    d = separation / 2.0
    psi = g(x1, d) * g(x2, -d) + g(x1, -d) * g(x2, d)
    return normalized_on_grid(psi, grids)


def write_field_csv(fh, field: WaveField, Q: np.ma.MaskedArray):
    """1D: ``x,R,S,Q,masked``; 2D: ``x1,x2,R,Q,masked``. 12 significant digits, masked values as nan."""
    w = csv.writer(fh, lineterminator="\n")
    fmt = "{:.12g}".format
    qv = Q.filled(np.nan)
    if field.ndim == 1:
        w.writerow(["x", "R", "S", "Q", "masked"])
        for x, r, s, q, m in zip(field.grids[0].coords, field.R, field.S, qv, field.node_mask):
            w.writerow([fmt(x), fmt(r), fmt(s), fmt(q), int(m)])
    else:
        w.writerow(["x1", "x2", "R", "Q", "masked"])
        x1, x2 = field.grids[0].coords, field.grids[1].coords
        for i, a in enumerate(x1):
            for j, b in enumerate(x2):
                w.writerow([fmt(a), fmt(b), fmt(field.R[i, j]), fmt(qv[i, j]), int(field.node_mask[i, j])])
