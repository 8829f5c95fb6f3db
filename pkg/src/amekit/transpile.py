"""Compile qudit circuits to qubit circuits over {H, S, CNOT, CZ, CS, CCZ, Rz}.

Each qudit of radix ``r`` is stored in ``ceil(log2 r)`` consecutive qubits by
binary counting (most significant bit first); bit strings beyond ``r - 1`` are
unused and every synthesized gate acts as the identity on them.

Diagonal gates become phase polynomials: the Walsh coefficients of the phase
angles give one Rz per parity term, placed between CNOT ladders that compute
the parity. Any other gate is reduced to two-level rotations between
neighbouring Gray-code states, each built from H, S and controlled diagonals.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from math import ceil, log2, prod
from typing import Sequence

import numpy as np

from . import gates
from .circuits import Circuit, Instruction, circuit_unitary, simulate
from .linalg import DimensionError, StateVector

QUBIT_KINDS = {"h": "hadamard", "s": "phase_s", "cx": "cnot", "cz": "cz", "cs": "cs", "ccz": "ccz", "rz": "rz"}
ARITY = {"h": 1, "s": 1, "rz": 1, "cx": 2, "cz": 2, "cs": 2, "ccz": 3}
MAX_RADIX = 8


@dataclass(frozen=True)
class EmbeddingMap:
    """Binary-counting embedding of a ``d``-level qudit into ``n_qubits`` qubits."""

    d: int
    n_qubits: int
    table: tuple[str, ...]
    unused: tuple[str, ...]

    def index(self, level: int) -> int:
        return int(self.table[level], 2)


def embed(d: int, n_qubits: int | None = None) -> EmbeddingMap:
    """Level ``j`` maps to the ``n_qubits``-bit binary representation of ``j``."""
    if d < 2:
        raise DimensionError("qudit dimension must be >= 2")
    if n_qubits is None:
        n_qubits = max(1, ceil(log2(d)))
    if 2**n_qubits < d:
        raise DimensionError(f"{n_qubits} qubits cannot hold {d} levels")
    codes = [format(j, f"0{n_qubits}b") for j in range(2**n_qubits)]
    return EmbeddingMap(d, n_qubits, tuple(codes[:d]), tuple(codes[d:]))


def embedded_indices(maps: Sequence[EmbeddingMap]) -> np.ndarray:
    """Qubit-register index of every qudit basis state (qudit order, first factor most significant)."""
    idx = np.zeros(1, dtype=int)
    for m in maps:
        levels = np.array([m.index(j) for j in range(m.d)])
        idx = (idx[:, None] * 2**m.n_qubits + levels[None, :]).reshape(-1)
    return idx


def embed_diagonal(phases: Sequence[complex], maps: Sequence[EmbeddingMap]) -> np.ndarray:
    """Diagonal on the qubit register: source phases on embedded strings, 1 elsewhere."""
    phases = np.asarray(phases, dtype=complex).reshape(-1)
    if phases.size != prod(m.d for m in maps):
        raise DimensionError(f"{phases.size} phases do not match qudit dimensions {[m.d for m in maps]}")
    out = np.ones(2 ** sum(m.n_qubits for m in maps), dtype=complex)
    out[embedded_indices(maps)] = phases
    return out


def embed_unitary(u: np.ndarray, maps: Sequence[EmbeddingMap]) -> np.ndarray:
    """Qubit-register matrix acting as ``u`` on embedded strings and as identity elsewhere."""
    u = np.asarray(u, dtype=complex)
    idx = embedded_indices(maps)
    if u.shape != (idx.size, idx.size):
        raise DimensionError(f"matrix of shape {u.shape} does not match qudit dimensions")
    n = 2 ** sum(m.n_qubits for m in maps)
    out = np.eye(n, dtype=complex)
    out[np.ix_(idx, idx)] = u
    return out


@dataclass(frozen=True)
class QubitCircuit:
    """Qubit gate list with an explicit global phase ``exp(i global_phase)``."""

    n_qubits: int
    instructions: tuple[Instruction, ...] = ()
    global_phase: float = 0.0

    def __post_init__(self):
        instrs = tuple(self.instructions)
        for ins in instrs:
            if ins.gate not in ARITY:
                raise ValueError(f"unsupported qubit gate {ins.gate!r}")
            if len(ins.wires) != ARITY[ins.gate] or len(set(ins.wires)) != len(ins.wires) \
                    or any(not 0 <= w < self.n_qubits for w in ins.wires):
                raise DimensionError(f"bad wires {ins.wires} for gate {ins.gate!r}")
            if ins.gate == "rz" and "angle" not in ins.params:
                raise ValueError("rz needs an angle")
        object.__setattr__(self, "instructions", instrs)
        object.__setattr__(self, "global_phase", float(self.global_phase))

    def to_circuit(self) -> Circuit:
        return Circuit(
            (2,) * self.n_qubits,
            tuple(Instruction(QUBIT_KINDS[i.gate], i.wires, i.params) for i in self.instructions),
        )

    def unitary(self) -> np.ndarray:
        return np.exp(1j * self.global_phase) * circuit_unitary(self.to_circuit())

    def simulate(self, initial: StateVector | None = None) -> StateVector:
        v = simulate(self.to_circuit(), initial)
        return StateVector(v.radices, np.exp(1j * self.global_phase) * v.amplitudes)

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for i in self.instructions:
            out[i.gate] = out.get(i.gate, 0) + 1
        return out

    def rz_angles(self) -> list[float]:
        return [float(i.params["angle"]) for i in self.instructions if i.gate == "rz"]

    def to_dict(self) -> dict:
        d = self.to_circuit().to_dict()
        d["instructions"] = [i.to_dict() for i in self.instructions]
        d["global_phase"] = self.global_phase
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


class _Emitter:
    """Collects qubit instructions and the accumulated global phase."""

    def __init__(self, n_qubits: int):
        self.n = n_qubits
        self.ops: list[Instruction] = []
        self.phase = 0.0

    def add(self, gate: str, *wires: int, **params) -> None:
        if "angle" in params:
            params["angle"] = snap_angle(params["angle"])
        self.ops.append(Instruction(gate, wires, params))

    def extend(self, qc: QubitCircuit, qubits: Sequence[int]) -> None:
        for i in qc.instructions:
            self.add(i.gate, *(qubits[w] for w in i.wires), **dict(i.params))
        self.phase += qc.global_phase

    def build(self) -> QubitCircuit:
        return QubitCircuit(self.n, tuple(self.ops), snap_angle(float(np.angle(np.exp(1j * self.phase)))))


def _reduce_angle(theta: float) -> tuple[float, int]:
    """Map ``theta`` into ``(-pi, pi]``; returns the angle and the number of 2*pi shifts."""
    k = int(np.round(theta / (2 * np.pi)))
    t = theta - 2 * np.pi * k
    if t <= -np.pi:
        t += 2 * np.pi
        k -= 1
    return t, k


def walsh_coefficients(angles: Sequence[float]) -> np.ndarray:
    """``a_s = 2^-n sum_x (-1)^{s.x} phi_x``, so that ``phi_x = sum_s a_s (-1)^{s.x}``."""
    a = np.array(angles, dtype=float)
    n = a.size
    h = 1
    while h < n:
        a = a.reshape(-1, 2, h)
        a = np.stack([a[:, 0] + a[:, 1], a[:, 0] - a[:, 1]], axis=1).reshape(-1)
        h *= 2
    return a / n


def synthesize_diagonal(phases: Sequence[complex], tol: float = 1e-12) -> QubitCircuit:
    """CNOT + Rz circuit equal to ``diag(phases)`` (global phase tracked exactly).

    Qubit 0 is the most significant bit of the diagonal index. For every parity
    mask ``s`` with a nonzero Walsh coefficient, CNOTs fold the parity of the
    qubits in ``s`` onto its last qubit, ``Rz(-2 a_s)`` is applied there and the
    CNOTs are undone.
    """
    phases = np.asarray(phases, dtype=complex).reshape(-1)
    size = phases.size
    n = int(round(log2(size))) if size else -1
    if size < 2 or 2**n != size:
        raise DimensionError(f"diagonal length {size} is not a power of two >= 2")
    if np.max(np.abs(np.abs(phases) - 1)) > 1e-9:
        raise ValueError("diagonal entries must have modulus one")
    coeffs = walsh_coefficients(np.angle(phases))
    em = _Emitter(n)
    em.phase = float(coeffs[0])
    for s in range(1, size):
        a = coeffs[s]
        if abs(a) < tol:
            continue
        theta, wraps = _reduce_angle(-2.0 * a)
        if wraps % 2:
            em.phase += np.pi
        if abs(theta) < tol:
            continue
        qubits = [q for q in range(n) if (s >> (n - 1 - q)) & 1]
        target = qubits[-1]
        for c in qubits[:-1]:
            em.add("cx", c, target)
        em.add("rz", target, angle=float(theta))
        for c in reversed(qubits[:-1]):
            em.add("cx", c, target)
    return em.build()


# general unitaries

def _zyz(v: np.ndarray) -> tuple[float, float, float, float]:
    """``V = e^{i alpha} Rz(beta) Ry(gamma) Rz(delta)``."""
    alpha = 0.5 * np.angle(np.linalg.det(v))
    w = v * np.exp(-1j * alpha)
    c, s = abs(w[0, 0]), abs(w[1, 0])
    gamma = 2 * np.arctan2(s, c)
    if s < 1e-14:
        plus, minus = 2 * np.angle(w[1, 1]), 0.0
    elif c < 1e-14:
        plus, minus = 0.0, 2 * np.angle(w[1, 0])
    else:
        plus, minus = 2 * np.angle(w[1, 1]), 2 * np.angle(w[1, 0])
    beta, delta = 0.5 * (plus + minus), 0.5 * (plus - minus)
    return float(alpha), float(beta), float(gamma), float(delta)


def _rz_matrix(theta: float) -> np.ndarray:
    return gates.rz(theta)


def _ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _gray(n: int) -> np.ndarray:
    k = np.arange(2**n)
    return k ^ (k >> 1)


def _controlled_diag(m: int, target: int, pattern: int, pair: tuple[complex, complex]) -> np.ndarray:
    """Diagonal that multiplies ``|pattern with target=0>`` and ``|... target=1>`` by ``pair``."""
    out = np.ones(2**m, dtype=complex)
    bit = 1 << (m - 1 - target)
    base = pattern & ~bit
    out[base] = pair[0]
    out[base | bit] = pair[1]
    return out


def _emit_two_level(em: _Emitter, m: int, block: np.ndarray, lo: int, hi: int) -> None:
    """Emit the unitary acting as ``block`` on basis states ``lo, hi`` (one bit apart)."""
    diff = lo ^ hi
    target = m - 1 - diff.bit_length() + 1
    if lo & diff:  # lo carries target bit 1: reorder to (bit 0, bit 1)
        block = block[::-1, ::-1]
    alpha, beta, gamma, delta = _zyz(block)
    pattern = lo & ~diff

    def diag(pair):
        em.extend(synthesize_diagonal(_controlled_diag(m, target, pattern, pair)), range(m))

    rz_d = np.diag(_rz_matrix(delta))
    diag((rz_d[0], rz_d[1]))
    if abs(gamma) > 1e-14:
        # Ry = S H Rz H S^dag on the target; S^dag = S^3
        for _ in range(3):
            em.add("s", target)
        em.add("h", target)
        rz_g = np.diag(_rz_matrix(gamma))
        diag((rz_g[0], rz_g[1]))
        em.add("h", target)
        em.add("s", target)
    rz_b = np.exp(1j * alpha) * np.diag(_rz_matrix(beta))
    diag((rz_b[0], rz_b[1]))


def synthesize_unitary(u: np.ndarray, tol: float = 1e-12) -> QubitCircuit:
    """Qubit circuit for an arbitrary ``2^m x 2^m`` unitary (global phase tracked).

    Givens rotations between Gray-code neighbours reduce ``u`` to a diagonal;
    the circuit applies that diagonal and then the inverse rotations.
    """
    u = np.asarray(u, dtype=complex)
    size = u.shape[0]
    m = int(round(log2(size))) if size else -1
    if u.shape != (size, size) or 2**m != size or m < 1:
        raise DimensionError(f"expected a 2^m x 2^m matrix, got {u.shape}")
    if np.linalg.norm(u @ u.conj().T - np.eye(size)) > 1e-9:
        raise ValueError("matrix is not unitary")
    if np.max(np.abs(u - np.diag(np.diag(u)))) < tol:
        return synthesize_diagonal(np.diag(u))
    g = _gray(m)
    work = u[np.ix_(g, g)].copy()
    rotations = []
    for j in range(size - 1):
        for i in range(size - 1, j, -1):
            b = work[i, j]
            if abs(b) < tol:
                continue
            a = work[i - 1, j]
            r = np.hypot(abs(a), abs(b))
            rot = np.array([[np.conj(a), np.conj(b)], [-b, a]]) / r
            work[[i - 1, i], :] = rot @ work[[i - 1, i], :]
            rotations.append((i - 1, i, rot))
    em = _Emitter(m)
    final = np.ones(size, dtype=complex)
    final[g] = np.diag(work)
    em.extend(synthesize_diagonal(final / np.abs(final)), range(m))
    for lo, hi, rot in reversed(rotations):
        _emit_two_level(em, m, rot.conj().T, int(g[lo]), int(g[hi]))
    return em.build()


# whole circuits

@dataclass(frozen=True)
class Transpiled:
    """A transpiled circuit with the qubits that carry each source wire."""

    qubits: QubitCircuit
    wire_qubits: tuple[tuple[int, ...], ...]
    maps: tuple[EmbeddingMap, ...]
    parties: tuple[tuple[int, ...], ...] | None = None

    def embedded_indices(self) -> np.ndarray:
        """Qubit-register index of every source basis state (source wire order)."""
        n = self.qubits.n_qubits
        digits = np.indices([m.d for m in self.maps]).reshape(len(self.maps), -1)
        idx = np.zeros(digits.shape[1], dtype=int)
        for w, (qs, m) in enumerate(zip(self.wire_qubits, self.maps)):
            codes = np.array([m.index(j) for j in range(m.d)])[digits[w]]
            for k, q in enumerate(qs):
                bit = (codes >> (m.n_qubits - 1 - k)) & 1
                idx |= bit << (n - 1 - q)
        return idx

    def restrict(self, state: StateVector) -> tuple[StateVector, float]:
        """Source-register state read off the qubit state, and the weight left on unused strings."""
        idx = self.embedded_indices()
        amps = state.amplitudes
        mask = np.ones(amps.size, dtype=bool)
        mask[idx] = False
        leak = float(np.linalg.norm(amps[mask]))
        return StateVector(tuple(m.d for m in self.maps), amps[idx]), leak


def _is_diagonal(m: np.ndarray, tol: float = 1e-14) -> bool:
    return bool(np.max(np.abs(m - np.diag(np.diag(m)))) < tol)


_PASS_THROUGH = {"hadamard": "h", "phase_s": "s", "cnot": "cx", "cz": "cz", "cs": "cs", "ccz": "ccz", "rz": "rz"}


def transpile_circuit(c: Circuit, fresh_inputs: bool = False) -> Transpiled:
    """Compile a mixed-radix circuit (radices up to 8) to qubits.

    Qubit-native gates pass through, diagonal gates are embedded and
    synthesized as phase polynomials, everything else is embedded (identity on
    unused levels) and decomposed into two-level rotations.

    With ``fresh_inputs`` the circuit is assumed to start in ``|0...0>`` and two
    state-level shortcuts apply to wires that no gate has touched yet: a
    Fourier gate of radix ``2^k`` becomes ``k`` Hadamards, and a generalized
    CNOT of radix ``2^k`` whose target is untouched becomes ``k`` transversal
    CNOTs. The result then matches the source on that input only.
    """
    if any(r > MAX_RADIX for r in c.radices):
        raise DimensionError(f"radices above {MAX_RADIX} are not supported: {c.radices}")
    maps, wire_qubits, start = [], [], 0
    for r in c.radices:
        m = embed(r)
        maps.append(m)
        wire_qubits.append(tuple(range(start, start + m.n_qubits)))
        start += m.n_qubits
    em = _Emitter(start)
    touched = [False] * c.n_wires

    for ins in c.instructions:
        radices = [c.radices[w] for w in ins.wires]
        qubits = [q for w in ins.wires for q in wire_qubits[w]]
        power_of_two = all(r & (r - 1) == 0 for r in radices)
        if ins.gate in _PASS_THROUGH and all(r == 2 for r in radices):
            em.add(_PASS_THROUGH[ins.gate], *qubits, **dict(ins.params))
        elif fresh_inputs and power_of_two and ins.gate == "fourier" and not touched[ins.wires[0]] \
                and not ins.params.get("inverse", False):
            for q in qubits:
                em.add("h", q)
        elif fresh_inputs and power_of_two and ins.gate == "cx_d" and not touched[ins.wires[1]] \
                and int(ins.params.get("power", 1)) == 1:
            a, b = wire_qubits[ins.wires[0]], wire_qubits[ins.wires[1]]
            for qa, qb in zip(a, b):
                em.add("cx", qa, qb)
        else:
            mat = ins.matrix(c.radices)
            sub = [maps[w] for w in ins.wires]
            if _is_diagonal(mat):
                qc = synthesize_diagonal(embed_diagonal(np.diag(mat), sub))
            else:
                qc = synthesize_unitary(embed_unitary(mat, sub))
            em.extend(qc, qubits)
        for w in ins.wires:
            touched[w] = True

    return Transpiled(em.build(), tuple(wire_qubits), tuple(maps), c.parties)


# text format

def format_angle(theta: float, max_den: int = 64, tol: float = 1e-12) -> str:
    """``k*pi/m`` when ``theta`` is within ``tol`` of such a value with ``m <= max_den``."""
    for m in range(1, max_den + 1):
        k = round(theta * m / np.pi)
        if abs(theta - k * np.pi / m) < tol:
            return f"{k}*pi/{m}"
    return f"{theta:.15g}"


def snap_angle(theta: float, max_den: int = 64, tol: float = 1e-12) -> float:
    """Replace ``theta`` by the float ``k*pi/m`` it is within ``tol`` of, so text export round-trips exactly."""
    text = format_angle(float(theta), max_den, tol)
    return _parse_angle(text) if "pi" in text else float(theta)


def _parse_angle(text: str) -> float:
    text = text.strip()
    match = re.fullmatch(r"(-?\d+)\*pi/(\d+)", text)
    if match:
        return int(match.group(1)) * np.pi / int(match.group(2))
    return float(text)


def export_text(qc: QubitCircuit) -> str:
    """One instruction per line, e.g. ``cx q[0],q[3];`` or ``rz(5*pi/24) q[3];``."""
    lines = [f"qreg q[{qc.n_qubits}];"]
    if qc.global_phase != 0.0:
        lines.append(f"// global_phase: {format_angle(qc.global_phase)}")
    for i in qc.instructions:
        args = ",".join(f"q[{w}]" for w in i.wires)
        if i.gate == "rz":
            lines.append(f"rz({format_angle(float(i.params['angle']))}) {args};")
        else:
            lines.append(f"{i.gate} {args};")
    return "\n".join(lines) + "\n"


_LINE = re.compile(r"(\w+)(?:\(([^)]*)\))?\s+(q\[\d+\](?:\s*,\s*q\[\d+\])*)\s*;")


def parse_text(text: str) -> QubitCircuit:
    """Inverse of :func:`export_text`."""
    n_qubits = None
    phase = 0.0
    ops = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("//"):
            if line.startswith("// global_phase:"):
                phase = _parse_angle(line.split(":", 1)[1])
            continue
        reg = re.fullmatch(r"qreg\s+q\[(\d+)\];", line)
        if reg:
            n_qubits = int(reg.group(1))
            continue
        match = _LINE.fullmatch(line)
        if not match:
            raise ValueError(f"cannot parse line {raw!r}")
        gate, arg, wires = match.groups()
        qubits = tuple(int(x) for x in re.findall(r"q\[(\d+)\]", wires))
        params = {"angle": _parse_angle(arg)} if gate == "rz" else {}
        if gate != "rz" and arg is not None:
            raise ValueError(f"gate {gate!r} takes no argument")
        ops.append(Instruction(gate, qubits, params))
    if n_qubits is None:
        raise ValueError("missing qreg declaration")
    return QubitCircuit(n_qubits, tuple(ops), phase)
