"""Circuit representation, statevector simulation and AME state builders."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import prod
from typing import Any, Mapping, Sequence

import numpy as np

from . import gates
from .linalg import DimensionError, StateVector, apply_to_axes, is_unitary


def _plain(value):
    """JSON-friendly copy of a parameter value (complex numbers become ``[re, im]``)."""
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (complex, np.complexfloating)):
        return gates.encode_complex(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


@dataclass(frozen=True)
class Instruction:
    """One gate application: gate kind, target wires and gate parameters."""

    gate: str
    wires: tuple[int, ...]
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))
        object.__setattr__(self, "params", dict(self.params))

    def matrix(self, radices: Sequence[int]) -> np.ndarray:
        try:
            return gates.gate_matrix(self.gate, self.params, [radices[w] for w in self.wires])
        except KeyError as exc:
            raise ValueError(f"gate {self.gate!r} is missing parameter {exc}") from None

    def to_dict(self) -> dict:
        out = {"gate": self.gate, "wires": list(self.wires)}
        if self.params:
            out["params"] = {k: _plain(v) for k, v in self.params.items()}
        return out


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list on a register of qudits.

    ``parties`` optionally groups wires into the logical parties used for
    entanglement checks (for example the two qubits that encode one ququart).
    """

    radices: tuple[int, ...]
    instructions: tuple[Instruction, ...] = ()
    parties: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        radices = tuple(int(r) for r in self.radices)
        if not radices or any(r < 2 for r in radices):
            raise DimensionError(f"radices must be nonempty and >= 2, got {radices}")
        object.__setattr__(self, "radices", radices)
        instrs = tuple(self.instructions)
        for ins in instrs:
            if len(set(ins.wires)) != len(ins.wires) or any(w < 0 or w >= len(radices) for w in ins.wires):
                raise DimensionError(f"instruction {ins.gate!r} has bad wires {ins.wires}")
        object.__setattr__(self, "instructions", instrs)
        if self.parties is not None:
            parties = tuple(tuple(int(w) for w in p) for p in self.parties)
            flat = sorted(w for p in parties for w in p)
            if flat != list(range(len(radices))):
                raise DimensionError(f"parties {parties} do not partition {len(radices)} wires")
            object.__setattr__(self, "parties", parties)

    @property
    def n_wires(self) -> int:
        return len(self.radices)

    @property
    def party_dims(self) -> list[int]:
        parties = self.parties or tuple((w,) for w in range(self.n_wires))
        return [prod(self.radices[w] for w in p) for p in parties]

    def then(self, gate: str, wires: Sequence[int], **params) -> "Circuit":
        """A new circuit with one more instruction appended."""
        return Circuit(self.radices, self.instructions + (Instruction(gate, tuple(wires), params),), self.parties)

    def extend(self, other: Sequence[Instruction]) -> "Circuit":
        return Circuit(self.radices, self.instructions + tuple(other), self.parties)

    def to_dict(self) -> dict:
        out = {"radices": list(self.radices), "instructions": [i.to_dict() for i in self.instructions]}
        if self.parties is not None:
            out["parties"] = [list(p) for p in self.parties]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Circuit":
        try:
            instrs = [
                Instruction(str(i["gate"]), tuple(i["wires"]), dict(i.get("params", {})))
                for i in data["instructions"]
            ]
            return cls(tuple(data["radices"]), tuple(instrs), data.get("parties"))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed circuit description: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return cls.from_dict(json.loads(text))


class _Builder:
    """Mutable instruction list used while assembling a circuit."""

    def __init__(self, radices, parties=None):
        self.radices = tuple(radices)
        self.parties = parties
        self.ops: list[Instruction] = []

    def add(self, gate: str, *wires: int, **params) -> "_Builder":
        self.ops.append(Instruction(gate, wires, params))
        return self

    def build(self) -> Circuit:
        return Circuit(self.radices, tuple(self.ops), self.parties)


def simulate(c: Circuit, initial: StateVector | np.ndarray | None = None) -> StateVector:
    """Apply every instruction of ``c`` to ``initial`` (default ``|0...0>``).

    ``initial`` may also be a batch: an array of shape ``(dim, B)`` whose columns
    are evolved together; a plain array is returned in that case.
    """
    batched = isinstance(initial, np.ndarray) and initial.ndim == 2
    if initial is None:
        psi = StateVector.basis(c.radices).tensor()
    elif isinstance(initial, StateVector):
        if initial.radices != c.radices:
            raise DimensionError(f"initial state radices {initial.radices} differ from circuit {c.radices}")
        psi = initial.tensor()
    else:
        arr = np.asarray(initial, dtype=complex)
        psi = arr.reshape(c.radices + arr.shape[1:]) if batched else arr.reshape(c.radices)
    for ins in c.instructions:
        psi = apply_to_axes(ins.matrix(c.radices), psi, ins.wires)
    if batched:
        return psi.reshape(prod(c.radices), -1)
    return StateVector(c.radices, psi.reshape(-1))


def circuit_unitary(c: Circuit, max_dim: int = 1024) -> np.ndarray:
    """Dense unitary of a small circuit (columns are images of basis states)."""
    dim = prod(c.radices)
    if dim > max_dim:
        raise DimensionError(f"register dimension {dim} exceeds the dense limit {max_dim}")
    return simulate(c, np.eye(dim, dtype=complex))


def operator_state(u: np.ndarray, d: int) -> StateVector:
    """Four-qudit state ``(U (x) I)|Phi>_{13}|Phi>_{24}``.

    Amplitude ``<a b c e|U> = <a b|U|c e> / d``.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (d * d, d * d):
        raise DimensionError(f"expected a {d * d}x{d * d} operator, got {u.shape}")
    return StateVector((d,) * 4, u.reshape(-1) / d)


# named constructions

def _bell_prep(b: _Builder, first: Sequence[int], second: Sequence[int]) -> None:
    """Maximally entangle wire ``first[i]`` with ``second[i]`` for each i."""
    for w in first:
        b.add("hadamard" if b.radices[w] == 2 else "fourier", w)
    for a, c in zip(first, second):
        b.add("cnot" if b.radices[a] == 2 else "cx_d", a, c)


def bell_prep_circuit(d: int) -> Circuit:
    """Two generalized Bell pairs on four qudits, joining wires (0, 2) and (1, 3)."""
    b = _Builder((d,) * 4)
    _bell_prep(b, [0, 1], [2, 3])
    return b.build()


def _fourier_layer(b: _Builder, wires: Sequence[int], inverse: bool = False) -> None:
    for w in wires:
        if b.radices[w] == 2:
            b.add("hadamard", w)
        elif inverse:
            b.add("fourier", w, inverse=True)
        else:
            b.add("fourier", w)


def _transversal_cz(b: _Builder, left: Sequence[int], right: Sequence[int]) -> None:
    for a, c in zip(left, right):
        b.add("cz" if b.radices[a] == 2 else "cz_d", a, c)


def _append_unitary(b: _Builder, lam, ansatz: str, left: Sequence[int], right: Sequence[int]) -> None:
    """Append ``U[Lambda]`` acting on registers ``left`` and ``right`` as primitive gates.

    For ``mixed_radix`` each register is a list of wires whose radices are the
    factor radices of ``Lambda``; for the other ansatze each side is one wire.
    """
    phases, _ = gates._lambda_parts(lam)
    wires = list(left) + list(right)
    if ansatz == "fourier_d":
        (a,), (c,) = left, right
        d = b.radices[a]
        b.add("cx_d", a, c, power=d - 1)
        b.add("fourier", a, inverse=True)
        b.add("diagonal", *wires, phases=phases)
        b.add("fourier", a)
        b.add("cx_d", a, c)
    elif ansatz == "fourier_cz":
        (a,), (c,) = left, right
        b.add("cz_d", a, c)
        b.add("fourier", a, inverse=True)
        b.add("fourier", c, inverse=True)
        b.add("diagonal", *wires, phases=phases)
        b.add("fourier", a)
        b.add("fourier", c)
        b.add("cz_d", a, c)
    elif ansatz == "mixed_radix":
        _transversal_cz(b, left, right)
        _fourier_layer(b, wires)
        b.add("diagonal", *wires, phases=phases)
        _fourier_layer(b, wires)
        _transversal_cz(b, left, right)
    else:
        raise ValueError(f"unknown ansatz {ansatz!r}; expected one of {gates.ANSATZE}")


def build_ame_circuit(d: int, lam=None, ansatz: str = "fourier_d", unitary: np.ndarray | None = None) -> Circuit:
    """Four-qudit circuit: two generalized Bell pairs, then ``U`` on wires 0 and 1.

    Bell pairs join wires (0, 2) and (1, 3). ``U`` is ``U[lam]`` expanded into
    Fourier, diagonal and controlled gates, or an explicit ``unitary``.
    """
    if (lam is None) == (unitary is None):
        raise ValueError("pass exactly one of lam or unitary")
    b = _Builder((d,) * 4)
    _bell_prep(b, [0, 1], [2, 3])
    if unitary is not None:
        u = np.asarray(unitary, dtype=complex)
        if u.shape != (d * d, d * d) or not is_unitary(u):
            raise DimensionError(f"expected a {d * d}x{d * d} unitary")
        b.add("custom", 0, 1, matrix=u)
    else:
        phases, radices = gates._lambda_parts(lam)
        if int(np.prod(radices)) != d:
            raise DimensionError(f"vector of joint radix {int(np.prod(radices))} does not fit d={d}")
        if ansatz == "mixed_radix" and len(radices) > 1:
            raise ValueError("mixed_radix over several factors needs a register per factor; use build_named")
        _append_unitary(b, phases, ansatz, [0], [1])
    return b.build()


def _qubit_encoded(lam_name: str, radices_per_party: Sequence[int]) -> Circuit:
    """Four parties, each a block of consecutive wires with the given radices."""
    from .biunimodular import fixture

    k = len(radices_per_party)
    radices = tuple(radices_per_party) * 4
    parties = tuple(tuple(range(p * k, (p + 1) * k)) for p in range(4))
    b = _Builder(radices, parties)
    first = list(parties[0] + parties[1])
    second = list(parties[2] + parties[3])
    _bell_prep(b, first, second)
    _append_unitary(b, fixture(lam_name), "mixed_radix", parties[0], parties[1])
    return b.build()


def _vectorized_ame44() -> Circuit:
    """``(CZ_{2,2} (x) CZ_{2,2}) H^{(x)8} |D[Lambda_{2,2}]>`` on eight qubits."""
    from .biunimodular import fixture

    parties = ((0, 1), (2, 3), (4, 5), (6, 7))
    b = _Builder((2,) * 8, parties)
    _bell_prep(b, [0, 1, 2, 3], [4, 5, 6, 7])
    b.add("diagonal", 0, 1, 2, 3, phases=np.asarray(fixture("lambda_22").phases))
    _fourier_layer(b, range(8))
    _transversal_cz(b, [0, 1], [2, 3])
    _transversal_cz(b, [4, 5], [6, 7])
    return b.build()


NAMED = ("ame44_qubit", "ame46_mixed", "ame48_qubit", "ame44_f4", "ame44_vectorized")


def build_named(name: str) -> Circuit:
    """Circuits for the four-party AME states of local dimension 4, 6 and 8."""
    if name == "ame44_qubit":
        return _qubit_encoded("lambda_22", (2, 2))
    if name == "ame46_mixed":
        return _qubit_encoded("lambda_23", (2, 3))
    if name == "ame48_qubit":
        return _qubit_encoded("lambda_222", (2, 2, 2))
    if name == "ame44_f4":
        from .biunimodular import fixture

        return build_ame_circuit(4, fixture("lambda_4"), ansatz="fourier_cz")
    if name == "ame44_vectorized":
        return _vectorized_ame44()
    raise ValueError(f"unknown circuit name {name!r}; expected one of {NAMED}")


def named_state(name: str) -> StateVector:
    """Simulated output of a named circuit, grouped into its four parties."""
    c = build_named(name)
    v = simulate(c)
    return v.group(c.parties) if c.parties is not None else v


# graph states

@dataclass(frozen=True)
class Graph:
    """Weighted simple graph; an edge ``(j, k, w)`` means ``CZ_d^w`` between j and k."""

    n_nodes: int
    edges: tuple[tuple[int, int, int], ...] = ()

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError("graph needs at least one node")
        edges = []
        seen = set()
        for e in self.edges:
            j, k, *rest = e
            w = int(rest[0]) if rest else 1
            j, k = int(j), int(k)
            if j == k:
                raise ValueError(f"self-loop at node {j}")
            if not (0 <= j < self.n_nodes and 0 <= k < self.n_nodes):
                raise ValueError(f"edge ({j}, {k}) outside {self.n_nodes} nodes")
            j, k = min(j, k), max(j, k)
            if (j, k) in seen:
                raise ValueError(f"duplicate edge ({j}, {k})")
            if w < 1:
                raise ValueError(f"edge weight must be >= 1, got {w}")
            seen.add((j, k))
            edges.append((j, k, w))
        object.__setattr__(self, "edges", tuple(edges))


def graph_circuit(g: Graph, d: int) -> Circuit:
    for j, k, w in g.edges:
        if w > d - 1:
            raise ValueError(f"edge weight {w} out of range 1..{d - 1}")
    b = _Builder((d,) * g.n_nodes)
    _fourier_layer(b, range(g.n_nodes))
    for j, k, w in g.edges:
        b.add("cz_d", j, k, power=w)
    return b.build()


def graph_state(g: Graph, d: int) -> StateVector:
    """``prod (CZ_d^{jk})^w |+>^n`` for the weighted edges of ``g``."""
    return simulate(graph_circuit(g, d))


# minimal-support and reference states

def is_latin_square(square) -> bool:
    sq = np.asarray(square)
    if sq.ndim != 2 or sq.shape[0] != sq.shape[1]:
        return False
    d = sq.shape[0]
    target = np.arange(d)
    return all(np.array_equal(np.sort(sq[i]), target) for i in range(d)) and all(
        np.array_equal(np.sort(sq[:, j]), target) for j in range(d)
    )


def are_orthogonal(l1, l2) -> bool:
    """Orthogonal Latin squares: every ordered symbol pair occurs exactly once."""
    l1, l2 = np.asarray(l1), np.asarray(l2)
    d = l1.shape[0]
    return len(set(zip(l1.reshape(-1).tolist(), l2.reshape(-1).tolist()))) == d * d


def minimal_support_unitary(l1, l2) -> np.ndarray:
    """0/1 matrix ``|i, j> -> |L1(i, j), L2(i, j)>`` on two qudits.

    It is a permutation (hence unitary) exactly when the squares are orthogonal.
    """
    l1, l2 = np.asarray(l1, dtype=int), np.asarray(l2, dtype=int)
    if not (is_latin_square(l1) and is_latin_square(l2)) or l1.shape != l2.shape:
        raise ValueError("inputs must be Latin squares of the same order")
    d = l1.shape[0]
    u = np.zeros((d * d, d * d), dtype=complex)
    i, j = np.divmod(np.arange(d * d), d)
    u[l1[i, j] * d + l2[i, j], i * d + j] = 1.0
    return u


_GF_POLY = {4: 0b111, 8: 0b1011}


def gf_mul(a: int, b: int, q: int) -> int:
    """Multiplication in GF(q) for q prime, 4 or 8."""
    if q in _GF_POLY:
        n = q.bit_length() - 1
        out = 0
        while b:
            if b & 1:
                out ^= a
            b >>= 1
            a <<= 1
            if a >> n:
                a ^= _GF_POLY[q]
        return out
    if q >= 2 and all(q % p for p in range(2, int(q**0.5) + 1)):
        return (a * b) % q
    raise ValueError(f"GF({q}) is not supported")


def gf_add(a: int, b: int, q: int) -> int:
    return a ^ b if q in _GF_POLY else (a + b) % q


def gf_latin_square(q: int, a: int) -> np.ndarray:
    """Latin square ``L_a(i, j) = a*i + j`` over GF(q), ``a != 0``."""
    if not 0 < a < q:
        raise ValueError(f"multiplier must be a nonzero field element, got {a}")
    return np.array([[gf_add(gf_mul(a, i, q), j, q) for j in range(q)] for i in range(q)])


def ghz(n: int, d: int) -> StateVector:
    """``(1/sqrt d) sum_j |j>^n``."""
    if n < 2 or d < 2:
        raise ValueError("ghz needs n >= 2 and d >= 2")
    amps = np.zeros(d**n, dtype=complex)
    step = sum(d**k for k in range(n))
    amps[np.arange(d) * step] = 1 / np.sqrt(d)
    return StateVector((d,) * n, amps)


def haar_random(radices: Sequence[int], seed: int = 0) -> StateVector:
    """Random pure state from normalized complex Gaussians (unitarily invariant)."""
    rng = np.random.default_rng(seed)
    dim = prod(radices)
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return StateVector(tuple(radices), z / np.linalg.norm(z))
