"""Dense complex linear algebra on mixed-radix qudit registers.

Conventions used throughout the package:

* Amplitudes are flattened most-significant wire first, so wire 0 is the
  slowest-varying digit of the basis index.
* Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import prod
from typing import Iterable, Sequence

import numpy as np

UNITARY_TOL = 1e-9
HERMITIAN_TOL = 1e-8


class DimensionError(ValueError):
    """Raised when operand shapes do not match the register they act on."""


@dataclass(frozen=True)
class StateVector:
    """Pure state on a register of qudits with local dimensions ``radices``."""

    radices: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        radices = tuple(int(r) for r in self.radices)
        if not radices or any(r < 2 for r in radices):
            raise DimensionError(f"radices must be nonempty and >= 2, got {radices}")
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != prod(radices):
            raise DimensionError(
                f"{amps.size} amplitudes do not fit radices {radices} (need {prod(radices)})"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "radices", radices)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, radices: Sequence[int], digits: Sequence[int] | None = None) -> "StateVector":
        radices = tuple(radices)
        amps = np.zeros(prod(radices), dtype=complex)
        index = 0 if digits is None else int(np.ravel_multi_index(tuple(digits), radices))
        amps[index] = 1.0
        return cls(radices, amps)

    @property
    def n_wires(self) -> int:
        return len(self.radices)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.radices)

    def index_of(self, digits: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(digits), self.radices))

    def digits_of(self, index: int) -> tuple[int, ...]:
        return tuple(int(x) for x in np.unravel_index(index, self.radices))

    def group(self, parties: Sequence[Sequence[int]]) -> "StateVector":
        """View the register as parties, each a list of wires fused into one qudit.

        Wires inside a party keep their relative order (most significant first),
        parties are laid out in the order given.
        """
        order = [w for party in parties for w in party]
        if sorted(order) != list(range(self.n_wires)):
            raise DimensionError(f"parties {parties} do not partition {self.n_wires} wires")
        t = np.transpose(self.tensor(), order)
        radices = [prod(self.radices[w] for w in party) for party in parties]
        return StateVector(tuple(radices), t.reshape(-1))


@dataclass(frozen=True)
class Bipartition:
    """A cut of ``n_wires`` wires into ``keep`` and its complement."""

    keep: frozenset[int]
    n_wires: int

    def __init__(self, keep: Iterable[int], n_wires: int):
        keep = frozenset(int(k) for k in keep)
        if not keep or len(keep) >= n_wires or min(keep) < 0 or max(keep) >= n_wires:
            raise DimensionError(f"invalid bipartition {sorted(keep)} of {n_wires} wires")
        object.__setattr__(self, "keep", keep)
        object.__setattr__(self, "n_wires", int(n_wires))

    @property
    def kept(self) -> list[int]:
        return sorted(self.keep)

    @property
    def traced(self) -> list[int]:
        return [w for w in range(self.n_wires) if w not in self.keep]

    def complement(self) -> "Bipartition":
        return Bipartition(self.traced, self.n_wires)


@dataclass(frozen=True)
class SchmidtSpectrum:
    """Schmidt coefficients (square roots of the reduced-state weights), nonincreasing."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.sort(np.clip(np.asarray(self.coefficients, dtype=float), 0.0, None))[::-1]
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def weights(self) -> np.ndarray:
        return self.coefficients**2

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.coefficients > 1e-12))


def _as_cut(cut, n_wires: int) -> Bipartition:
    if isinstance(cut, Bipartition):
        if cut.n_wires != n_wires:
            raise DimensionError(f"cut is over {cut.n_wires} wires, register has {n_wires}")
        return cut
    return Bipartition(cut, n_wires)


def kron(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of any number of matrices (left factor most significant)."""
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, np.asarray(op))
    return out


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(m)).T


def unitarity_residual(m: np.ndarray) -> float:
    """Frobenius norm of ``M M^dagger - I``."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return float("inf")
    return float(np.linalg.norm(m @ dagger(m) - np.eye(m.shape[0])))


def is_unitary(m: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    return unitarity_residual(m) < tol


def apply_to_axes(op: np.ndarray, tensor: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Apply ``op`` to the given axes of ``tensor``; trailing axes are untouched.

    ``tensor`` may carry extra axes (for example a batch axis at the end), which
    lets callers push many vectors through the same gate at once.
    """
    axes = list(axes)
    moved = np.moveaxis(tensor, axes, range(len(axes)))
    shape = moved.shape
    k = prod(shape[: len(axes)])
    if op.shape != (k, k):
        raise DimensionError(f"operator of shape {op.shape} cannot act on axes of size {k}")
    out = (op @ moved.reshape(k, -1)).reshape(shape)
    return np.moveaxis(out, range(len(axes)), axes)


def apply_factor(m: np.ndarray, v: StateVector, targets: Sequence[int]) -> StateVector:
    """Act with ``m`` on wires ``targets`` of ``v`` (identity elsewhere)."""
    targets = list(targets)
    if len(set(targets)) != len(targets) or any(t < 0 or t >= v.n_wires for t in targets):
        raise DimensionError(f"bad target wires {targets} for {v.n_wires}-wire register")
    m = np.asarray(m, dtype=complex)
    dim = prod(v.radices[t] for t in targets)
    if m.shape != (dim, dim):
        raise DimensionError(f"gate of shape {m.shape} does not match target dimension {dim}")
    out = apply_to_axes(m, v.tensor(), targets)
    return StateVector(v.radices, out.reshape(-1))


def density_matrix(v: StateVector) -> np.ndarray:
    return np.outer(v.amplitudes, np.conj(v.amplitudes))


def partial_trace(state: StateVector | np.ndarray, radices: Sequence[int] | None, keep) -> np.ndarray:
    """Reduced density matrix on the wires in ``keep`` (kept in ascending order).

    ``state`` is either a :class:`StateVector` (``radices`` may then be None) or
    a density matrix over ``radices``.
    """
    if isinstance(state, StateVector):
        radices = state.radices if radices is None else tuple(radices)
        if tuple(radices) != state.radices:
            raise DimensionError("radices disagree with the state vector")
        cut = _as_cut(keep, len(radices))
        t = np.transpose(state.tensor(), cut.kept + cut.traced)
        dk = prod(radices[w] for w in cut.kept)
        a = t.reshape(dk, -1)
        return a @ dagger(a)

    rho = np.asarray(state, dtype=complex)
    radices = tuple(radices)
    n = len(radices)
    d = prod(radices)
    if rho.shape != (d, d):
        raise DimensionError(f"density matrix of shape {rho.shape} does not match radices {radices}")
    cut = _as_cut(keep, n)
    t = rho.reshape(radices + radices)
    kept = cut.kept
    # trace from the highest wire down so remaining axis numbers stay valid
    n_cur = n
    for w in sorted(cut.traced, reverse=True):
        t = np.trace(t, axis1=w, axis2=w + n_cur)
        n_cur -= 1
    dk = prod(radices[w] for w in kept)
    return t.reshape(dk, dk)


def _square_factor(m: np.ndarray, d: int) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape != (d * d, d * d):
        raise DimensionError(f"expected a {d * d}x{d * d} matrix, got shape {m.shape}")
    return m.reshape(d, d, d, d)


def reshuffle(m: np.ndarray, d: int) -> np.ndarray:
    """Realignment: ``<k l| M^R |i j> = <k i| M |l j>``."""
    t = _square_factor(m, d)
    return t.transpose(0, 2, 1, 3).reshape(d * d, d * d)


def partial_transpose(m: np.ndarray, radices: Sequence[int], cut) -> np.ndarray:
    """Transpose the wires outside ``cut.keep`` (the second factor of the cut).

    For a bipartite operator on ``[d, d]`` with ``keep={0}`` this is
    ``<k l| M^G |i j> = <k j| M |i l>``.
    """
    radices = tuple(radices)
    n = len(radices)
    d = prod(radices)
    m = np.asarray(m)
    if m.shape != (d, d):
        raise DimensionError(f"matrix of shape {m.shape} does not match radices {radices}")
    cut = _as_cut(cut, n)
    t = m.reshape(radices + radices)
    axes = list(range(2 * n))
    for w in cut.traced:
        axes[w], axes[w + n] = axes[w + n], axes[w]
    return t.transpose(axes).reshape(d, d)


@lru_cache(maxsize=64)
def _round_robin(n: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """Disjoint index pairs covering all of ``n choose 2`` in ``n - 1`` rounds."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a >= 0 and b >= 0]
        p = np.array([a for a, _ in pairs], dtype=int)
        q = np.array([b for _, b in pairs], dtype=int)
        rounds.append((p, q))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return tuple(rounds)


def hermitian_eigh(m: np.ndarray, tol: float = 1e-12, max_sweeps: int = 60, vectors: bool = True):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Each sweep visits every off-diagonal pair once, in round-robin order so that
    the ``n/2`` rotations of a round touch disjoint rows and can be applied
    together. Iteration stops when the off-diagonal Frobenius norm drops below
    ``tol * ||M||_F``.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues descending and the
    eigenvectors as columns (``None`` when ``vectors`` is false).
    """
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if np.linalg.norm(a - dagger(a)) >= HERMITIAN_TOL:
        raise ValueError("matrix is not Hermitian")
    a = 0.5 * (a + dagger(a))
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = np.linalg.norm(a)
    if n == 1 or scale == 0.0:
        return np.real(np.diag(a)).copy(), (v if vectors else None)

    rounds = _round_robin(n)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off < tol * scale:
            break
        # threshold strategy: pairs far below the typical off-diagonal size are
        # left for later sweeps, which keeps degenerate clusters from stalling
        threshold = max(1e-2 * off / n, 1e-300)
        for p, q in rounds:
            b = a[p, q]
            mag = np.abs(b)
            active = mag > threshold
            if not active.any():
                continue
            phase = np.where(active, b / np.where(active, mag, 1.0), 1.0)
            # smallest rotation that zeroes the pair, |theta| <= pi/4
            diff = a[p, p].real - a[q, q].real
            sign = np.where(diff < 0, -1.0, 1.0)
            theta = np.where(active, 0.5 * np.arctan2(2.0 * mag * sign, np.abs(diff)), 0.0)
            c, s = np.cos(theta), np.sin(theta)
            ps, pc = np.conj(phase) * s, np.conj(phase) * c

            cp, cq = a[:, p], a[:, q]
            a[:, p] = cp * c + cq * ps
            a[:, q] = -cp * s + cq * pc
            rp, rq = a[p, :], a[q, :]
            a[p, :] = c[:, None] * rp + (phase * s)[:, None] * rq
            a[q, :] = -s[:, None] * rp + (phase * c)[:, None] * rq
            if vectors:
                vp, vq = v[:, p], v[:, q]
                v[:, p] = vp * c + vq * ps
                v[:, q] = -vp * s + vq * pc
    else:
        raise RuntimeError("Jacobi iteration did not converge")

    w = np.real(np.diag(a))
    order = np.argsort(-w, kind="stable")
    return w[order], (v[:, order] if vectors else None)


def hermitian_eigenvalues(m: np.ndarray) -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix, in descending order."""
    return hermitian_eigh(m, vectors=False)[0]


def schmidt_spectrum(v: StateVector, cut) -> SchmidtSpectrum:
    """Schmidt coefficients of ``v`` across ``cut``.

    The smaller side of the cut is diagonalised; both sides share the nonzero
    spectrum.
    """
    cut = _as_cut(cut, v.n_wires)
    dk = prod(v.radices[w] for w in cut.kept)
    dt = prod(v.radices[w] for w in cut.traced)
    side = cut if dk <= dt else cut.complement()
    rho = partial_trace(v, None, side)
    w = np.clip(hermitian_eigenvalues(rho), 0.0, None)
    return SchmidtSpectrum(np.sqrt(w))


def von_neumann_entropy(s: SchmidtSpectrum, base: float = 2) -> float:
    """Entanglement entropy ``-sum p log_base p`` over the Schmidt weights."""
    p = s.weights
    p = p[p > 1e-300]
    return float(-np.sum(p * np.log(p)) / np.log(base)) + 0.0


def fidelity_with_pure(rho: np.ndarray, psi: StateVector) -> float:
    """``<psi| rho |psi>`` for a density matrix ``rho``."""
    rho = np.asarray(rho)
    if rho.shape != (psi.dim, psi.dim):
        raise DimensionError(f"density matrix of shape {rho.shape} vs state of dim {psi.dim}")
    a = psi.amplitudes
    return float(np.real(np.conj(a) @ rho @ a))
