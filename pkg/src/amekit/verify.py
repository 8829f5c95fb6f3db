"""Certification tools: uniformity and AME checks, 2-unitarity, LU invariants and
fidelity thresholds for genuine multipartite entanglement."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .biunimodular import rearrangement_residuals
from .linalg import (
    UNITARY_TOL,
    DimensionError,
    StateVector,
    dagger,
    fidelity_with_pure,
    partial_trace,
    schmidt_spectrum,
    von_neumann_entropy,
)

AME_TOL = 1e-9


def _parties(v: StateVector, groups: Sequence[Sequence[int]] | None) -> StateVector:
    w = v.group(groups) if groups is not None else v
    if len(set(w.radices)) != 1:
        raise DimensionError(f"parties have unequal dimensions {w.radices}; group the wires first")
    return w


def reduction_distance(v: StateVector, keep: Sequence[int]) -> float:
    """Frobenius distance of the reduction on ``keep`` from the maximally mixed state."""
    rho = partial_trace(v, None, keep)
    return float(np.linalg.norm(rho - np.eye(rho.shape[0]) / rho.shape[0]))


def is_k_uniform(v: StateVector, k: int, groups=None, tol: float = AME_TOL) -> bool:
    """Every ``k``-party reduction is maximally mixed within ``tol``."""
    w = _parties(v, groups)
    if k < 0 or k > w.n_wires // 2:
        return k == 0
    if k == 0:
        return True
    return all(reduction_distance(w, s) < tol for s in itertools.combinations(range(w.n_wires), k))


def uniformity(v: StateVector, groups=None, tol: float = AME_TOL) -> int:
    """Largest ``k`` for which the state is ``k``-uniform."""
    w = _parties(v, groups)
    k = 0
    while k < w.n_wires // 2 and is_k_uniform(w, k + 1, tol=tol):
        k += 1
    return k


def balanced_cuts(n: int) -> list[tuple[int, ...]]:
    """Subsets of size ``n // 2``, one per bipartition (for even ``n`` those containing party 0)."""
    cuts = list(itertools.combinations(range(n), n // 2))
    if n % 2 == 0:
        cuts = [c for c in cuts if 0 in c]
    return cuts


@dataclass(frozen=True)
class AmeReport:
    """Entropies (in units of log d) and mixedness distances per balanced cut."""

    d: int
    n_parties: int
    entropies: dict = field(default_factory=dict)
    distances: dict = field(default_factory=dict)
    verdict: bool = False
    tol: float = AME_TOL

    def to_dict(self) -> dict:
        key = lambda c: "".join(str(p + 1) for p in c)  # noqa: E731
        return {
            "d": self.d,
            "n_parties": self.n_parties,
            "entropies": {key(c): s for c, s in self.entropies.items()},
            "distances": {key(c): x for c, x in self.distances.items()},
            "ame": self.verdict,
            "tol": self.tol,
        }


def is_ame(v: StateVector, groups=None, tol: float = AME_TOL) -> AmeReport:
    """Check every balanced cut for a maximally mixed reduction."""
    w = _parties(v, groups)
    d = w.radices[0]
    entropies, distances = {}, {}
    for cut in balanced_cuts(w.n_wires):
        distances[cut] = reduction_distance(w, cut)
        entropies[cut] = von_neumann_entropy(schmidt_spectrum(w, cut), base=d)
    verdict = all(x < tol for x in distances.values())
    return AmeReport(d, w.n_wires, entropies, distances, verdict, tol)


def is_2unitary(u: np.ndarray, d: int, tol: float = UNITARY_TOL) -> tuple[bool, tuple[float, float, float]]:
    """Unitarity of ``U``, its reshuffling and its partial transpose."""
    u = np.asarray(u)
    if u.shape != (d * d, d * d):
        raise DimensionError(f"expected a {d * d}x{d * d} matrix, got {u.shape}")
    r = rearrangement_residuals(u, d)
    res = (r["U"], r["R"], r["Gamma"])
    return all(x < tol for x in res), res


# LU invariants

def _apply_pair(u: np.ndarray, x: np.ndarray, slots: tuple[int, int], d: int) -> np.ndarray:
    y = np.moveaxis(x, slots, (0, 1))
    shape = y.shape
    y = (u @ y.reshape(d * d, -1)).reshape(shape)
    return np.moveaxis(y, (0, 1), slots)


def _apply_invariant(u: np.ndarray, ud: np.ndarray, x: np.ndarray, d: int) -> np.ndarray:
    """``I(U) = S (U^dag (x) U^dag) S (U (x) U)`` on a batch ``x`` of shape ``(d, d, d, d, B)``.

    Slots 0, 1 carry the first copy of U and slots 2, 3 the second; ``S`` swaps
    slots 1 and 3 (the second and fourth tensor factors).
    """
    x = _apply_pair(u, x, (0, 1), d)
    x = _apply_pair(u, x, (2, 3), d)
    x = x.swapaxes(1, 3)
    x = _apply_pair(ud, x, (0, 1), d)
    x = _apply_pair(ud, x, (2, 3), d)
    return x.swapaxes(1, 3)


def invariant_operator(u: np.ndarray, d: int) -> np.ndarray:
    """Dense ``I(U)``; only sensible for small ``d`` (its size is ``d^4``)."""
    u = np.asarray(u, dtype=complex)
    n = d**4
    x = np.eye(n, dtype=complex).reshape(d, d, d, d, n)
    return _apply_invariant(u, dagger(u), x, d).reshape(n, n)


def lu_invariant_moment(u: np.ndarray, d: int, k: int = 2, block: int = 512) -> complex:
    """``Tr[I(U)^k]`` evaluated without storing the ``d^4 x d^4`` operator.

    Basis vectors are pushed through ``I(U)`` ``k`` times in blocks; the
    diagonal entries are summed in a fixed order.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (d * d, d * d):
        raise DimensionError(f"expected a {d * d}x{d * d} matrix, got {u.shape}")
    if k < 1:
        raise ValueError("moment order must be positive")
    n = d**4
    ud = dagger(u)
    total = 0j
    for start in range(0, n, block):
        idx = np.arange(start, min(n, start + block))
        x = np.zeros((n, idx.size), dtype=complex)
        x[idx, np.arange(idx.size)] = 1.0
        x = x.reshape(d, d, d, d, idx.size)
        for _ in range(k):
            x = _apply_invariant(u, ud, x, d)
        total += complex(np.sum(x.reshape(n, idx.size)[idx, np.arange(idx.size)]))
    return total


def lu_distinguish(u1: np.ndarray, u2: np.ndarray, d: int, tol: float = 1e-6) -> str:
    """``"distinct"`` if a moment of ``I(U)`` differs, otherwise ``"inconclusive"``.

    Equal moments never prove LU equivalence, so no stronger verdict is given.
    """
    if np.shape(u1) != np.shape(u2):
        raise DimensionError("gates must have the same shape")
    for k in (2, 4):
        if abs(lu_invariant_moment(u1, d, k) - lu_invariant_moment(u2, d, k)) > tol:
            return "distinct"
    return "inconclusive"


# fidelity bounds for genuine multipartite entanglement

def f_max_bounded_pattern(v: StateVector, pattern: Sequence[int], groups=None) -> float:
    """Largest overlap with ``v`` over pure states whose party ranks obey ``pattern``.

    For each placement of the caps on the parties, every capped party ``p``
    bounds the overlap by the sum of its ``cap`` largest Schmidt weights across
    the cut ``p | rest``; the placement bound is the smallest of these, and the
    result is the largest placement bound. Uncapped patterns give 1.
    """
    w = _parties(v, groups)
    pattern = tuple(int(c) for c in pattern)
    if len(pattern) != w.n_wires:
        raise DimensionError(f"pattern of length {len(pattern)} for {w.n_wires} parties")
    if any(c < 1 for c in pattern):
        raise ValueError("rank caps must be at least 1")
    weights = [schmidt_spectrum(w, [p]).weights for p in range(w.n_wires)]
    best = 0.0
    for placement in sorted(set(itertools.permutations(pattern))):
        bounds = [
            float(np.sum(weights[p][:cap]))
            for p, cap in enumerate(placement)
            if cap < w.radices[p]
        ]
        best = max(best, min(bounds) if bounds else 1.0)
    return min(best, 1.0)


@lru_cache(maxsize=None)
def ideal_ame_state(d: int) -> StateVector:
    """A four-party AME state of local dimension ``d`` (4, 6, 8 or odd ``d >= 3``)."""
    from .circuits import minimal_support_unitary, named_state, operator_state

    named = {4: "ame44_qubit", 6: "ame46_mixed", 8: "ame48_qubit"}
    if d in named:
        return named_state(named[d])
    if d >= 3 and d % 2:
        i, j = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
        return operator_state(minimal_support_unitary((i + j) % d, (i + 2 * j) % d), d)
    raise ValueError(f"no AME(4,{d}) construction available")


def gme_fidelity_threshold(d: int) -> float:
    """Fidelity above which a state near AME(4, d) is genuinely multipartite entangled.

    Evaluated as the bounded-pattern maximum ``(d, d, d, d - 1)`` on an ideal
    AME state.
    """
    if d < 3:
        raise ValueError("the threshold needs d >= 3 (no AME(4,2) state exists)")
    return f_max_bounded_pattern(ideal_ame_state(d), (d, d, d, d - 1))


@dataclass(frozen=True)
class FidelityReport:
    f_exp: float
    f_max: float
    certified: bool

    def to_dict(self) -> dict:
        return {"f_exp": self.f_exp, "f_max": self.f_max, "certified": self.certified}


def certify_gme(rho_or_fidelity, ideal: StateVector, d: int) -> FidelityReport:
    """Compare the fidelity with ``ideal`` against the GME threshold for ``d``."""
    if ideal.dim != d**4:
        raise DimensionError(f"ideal state of dimension {ideal.dim} is not four parties of dimension {d}")
    if np.isscalar(rho_or_fidelity):
        f_exp = float(rho_or_fidelity)
        if not 0.0 <= f_exp <= 1.0 + 1e-12:
            raise ValueError(f"fidelity {f_exp} outside [0, 1]")
    else:
        f_exp = fidelity_with_pure(rho_or_fidelity, ideal)
    f_max = gme_fidelity_threshold(d)
    return FidelityReport(f_exp, f_max, f_exp > f_max)


def certification_boundary(d: int) -> float:
    """Depolarizing weight at which the fidelity of a noisy AME state meets the threshold."""
    return (1.0 / d) / (1.0 - d**-4.0)
