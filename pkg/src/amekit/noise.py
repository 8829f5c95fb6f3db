"""Depolarizing-noise analysis: negativity decay, teleportation fidelity and
noise budgets.

The noisy state is ``(1 - gamma) |psi><psi| + gamma I / D``. Its partial
transpose has the spectrum of the pure state's partial transpose, rescaled and
shifted, and the pure spectrum follows from the Schmidt coefficients, so no
``D x D`` matrix is needed for the sweeps.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import bisect

from .linalg import (
    DimensionError,
    StateVector,
    hermitian_eigenvalues,
    partial_transpose,
    schmidt_spectrum,
)

CLASSICAL_TELEPORT_FIDELITY = 2.0 / 3.0
CSV_HEADER = ("label", "gamma", "negativity_sum", "fidelity", "teleport_fidelity")


@dataclass(frozen=True)
class NoiseParams:
    gamma: float

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")


def _gamma(gamma: float) -> float:
    return NoiseParams(float(gamma)).gamma


def negativity(rho: np.ndarray, radices: Sequence[int], cut) -> float:
    """Sum of the moduli of the negative eigenvalues of ``rho`` transposed across ``cut``."""
    ev = hermitian_eigenvalues(partial_transpose(rho, radices, cut))
    return float(-np.sum(ev[ev < 0]))


def depolarize(rho: np.ndarray, gamma: float) -> np.ndarray:
    gamma = _gamma(gamma)
    n = rho.shape[0]
    return (1 - gamma) * np.asarray(rho) + gamma * np.eye(n) / n


def four_party_cuts() -> list[tuple[int, int]]:
    """The three balanced bipartitions 12|34, 13|24, 14|23, labelled by the side with party 1."""
    return [(0, 1), (0, 2), (0, 3)]


def _four_parties(v: StateVector, groups) -> StateVector:
    w = v.group(groups) if groups is not None else v
    if w.n_wires != 4 or len(set(w.radices)) != 1:
        raise DimensionError(f"expected four parties of equal dimension, got {w.radices}")
    return w


@dataclass(frozen=True)
class _CutSpectrum:
    """Positive part ``lambda_i^2`` and cross terms ``lambda_i lambda_j`` (i < j) of one cut."""

    squares: np.ndarray
    cross: np.ndarray


def _cut_spectra(v: StateVector, groups=None) -> tuple[list[_CutSpectrum], int]:
    w = _four_parties(v, groups)
    out = []
    for cut in four_party_cuts():
        lam = schmidt_spectrum(w, cut).coefficients
        i, j = np.triu_indices(lam.size, k=1)
        out.append(_CutSpectrum(lam**2, lam[i] * lam[j]))
    return out, w.dim


def pure_transpose_spectrum(coefficients: Sequence[float], dim: int) -> np.ndarray:
    """Eigenvalues of ``(|psi><psi|)^Gamma`` from Schmidt coefficients, padded with zeros to ``dim``."""
    lam = np.asarray(coefficients, dtype=float)
    i, j = np.triu_indices(lam.size, k=1)
    cross = lam[i] * lam[j]
    ev = np.concatenate([lam**2, cross, -cross])
    if ev.size > dim:
        raise DimensionError("more eigenvalues than the dimension allows")
    return np.sort(np.concatenate([ev, np.zeros(dim - ev.size)]))[::-1]


def _noisy_sum(spectra: list[_CutSpectrum], dim: int, gamma: float) -> float:
    total = 0.0
    for s in spectra:
        shifted = -(1 - gamma) * s.cross + gamma / dim
        total += float(-np.sum(shifted[shifted < 0]))
    # only the -lambda_i lambda_j branch can turn negative; the rest is >= gamma/D
    return total


def negativity_sum_noisy(v: StateVector, gamma: float, groups=None) -> float:
    """Negativity summed over the three balanced cuts of the depolarized four-party state."""
    gamma = _gamma(gamma)
    spectra, dim = _cut_spectra(v, groups)
    return _noisy_sum(spectra, dim, gamma)


def negativity_sum_dense(v: StateVector, gamma: float, groups=None) -> float:
    """Same quantity as :func:`negativity_sum_noisy` by explicit diagonalization (small states only)."""
    w = _four_parties(v, groups)
    rho = depolarize(np.outer(w.amplitudes, np.conj(w.amplitudes)), gamma)
    return sum(negativity(rho, w.radices, cut) for cut in four_party_cuts())


def noisy_fidelity(dim: int, gamma: float) -> float:
    """Fidelity of the depolarized state with the pure state, ``(1 - gamma) + gamma / D``."""
    gamma = _gamma(gamma)
    return (1 - gamma) + gamma / dim


def teleportation_fidelity(d_pair: int, gamma: float) -> float:
    """Average teleportation fidelity through a depolarized maximally entangled resource.

    ``d_pair`` is the dimension of the teleported system.
    """
    if d_pair < 2:
        raise ValueError("d_pair must be at least 2")
    gamma = _gamma(gamma)
    d = float(d_pair)
    return (2 / (d + 1)) * (1 - ((d - 1) / (2 * d)) * gamma) + ((d - 1) / (d + 1)) * (1 - gamma)


def teleportation_threshold(d_pair: int) -> float:
    """Noise level at which the teleportation fidelity drops to the classical 2/3."""
    if d_pair < 2:
        raise ValueError("d_pair must be at least 2")
    return bisect(
        lambda g: teleportation_fidelity(d_pair, g) - CLASSICAL_TELEPORT_FIDELITY,
        0.0,
        1.0,
        xtol=1e-13,
        rtol=4 * np.finfo(float).eps,
        maxiter=200,
    )


def teleportation_threshold_closed_form(d_pair: int) -> float:
    return d_pair / (3 * (d_pair - 1))


def gate_noise_budget(total_gamma: float, gate_count: int) -> float:
    """Per-gate noise level when noise adds up over ``gate_count`` gates."""
    if total_gamma <= 0 or gate_count <= 0:
        raise ValueError("inputs must be positive")
    return total_gamma / gate_count


def vanishing_gamma(v: StateVector, groups=None) -> float:
    """Smallest noise level at which every balanced-cut negativity is zero.

    A cross term ``c = lambda_i lambda_j`` stops contributing once
    ``(1 - gamma) c <= gamma / D``, i.e. at ``gamma = c D / (1 + c D)``.
    """
    spectra, dim = _cut_spectra(v, groups)
    c = max((float(np.max(s.cross)) if s.cross.size else 0.0) for s in spectra)
    return c * dim / (1 + c * dim)


def crossing_gamma(v: StateVector, level: float, groups=None) -> float:
    """Smallest noise level at which the negativity sum of ``v`` falls to ``level``."""
    if level <= 0:
        return vanishing_gamma(v, groups)
    spectra, dim = _cut_spectra(v, groups)
    f = lambda g: _noisy_sum(spectra, dim, g) - level  # noqa: E731
    if f(0.0) < 0:
        raise ValueError("level exceeds the noiseless negativity sum")
    return bisect(f, 0.0, 1.0, xtol=1e-13, maxiter=200)


@dataclass(frozen=True)
class SweepRecord:
    label: str
    gamma: float
    negativity_sum: float
    fidelity: float
    teleport_fidelity: float
    negativity_std: float | None = None


def gamma_grid(start: float, stop: float, step: float) -> np.ndarray:
    """Uniform grid ``start, start + step, ...`` including ``stop`` when it lies on the grid within ``1e-12``."""
    if step <= 0 or stop < start:
        raise ValueError("need step > 0 and stop >= start")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    grid = np.round(start + step * np.arange(n), 12)
    if abs(grid[-1] - stop) <= 1e-12:
        grid[-1] = stop
    return grid


def sweep(
    states: Iterable[tuple[str, StateVector | Sequence[StateVector]]], gammas: Sequence[float]
) -> list[SweepRecord]:
    """Noise sweep for labelled four-party states.

    A label may carry a list of states (an ensemble); its negativity is then the
    ensemble mean with the sample standard deviation attached. Records are
    ordered by label (input order) and then by ``gamma``.
    """
    gammas = [_gamma(g) for g in gammas]
    records = []
    for label, item in states:
        ensemble = [item] if isinstance(item, StateVector) else list(item)
        prepared = [_cut_spectra(v) for v in ensemble]
        dim = prepared[0][1]
        party = int(round(dim ** 0.25))
        for g in gammas:
            values = np.array([_noisy_sum(s, n, g) for s, n in prepared])
            std = float(np.std(values, ddof=1)) if len(values) > 1 else None
            records.append(
                SweepRecord(
                    label,
                    g,
                    float(np.mean(values)),
                    noisy_fidelity(dim, g),
                    teleportation_fidelity(party * party, g),
                    std,
                )
            )
    return records


def records_to_csv(records: Sequence[SweepRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow(
            [r.label] + [f"{x:.12g}" for x in (r.gamma, r.negativity_sum, r.fidelity, r.teleport_fidelity)]
        )
    return buf.getvalue()
