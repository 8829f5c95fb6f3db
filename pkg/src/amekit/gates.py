"""Gate constructors for qudit and qubit circuits.

All constructors return dense ``complex128`` matrices. Multi-wire gates use the
package-wide ordering: the first wire is the most significant index.
"""

from __future__ import annotations

from math import prod
from typing import Any, Mapping, Sequence

import numpy as np

from .linalg import DimensionError, dagger, kron

ANSATZE = ("fourier_d", "fourier_cz", "mixed_radix")


def omega(d: int) -> complex:
    return np.exp(2j * np.pi / d)


def _check_dim(d: int) -> int:
    d = int(d)
    if d < 2:
        raise DimensionError(f"local dimension must be >= 2, got {d}")
    return d


def _check_radices(radices: Sequence[int]) -> tuple[int, ...]:
    radices = tuple(int(r) for r in radices)
    if not radices or any(r < 2 for r in radices):
        raise DimensionError(f"radices must be nonempty and >= 2, got {radices}")
    return radices


def fourier(d: int, inverse: bool = False) -> np.ndarray:
    """Discrete Fourier gate ``(F_d)_{kl} = omega_d^{kl} / sqrt(d)``."""
    d = _check_dim(d)
    k = np.arange(d)
    f = np.exp(2j * np.pi * np.outer(k, k) / d) / np.sqrt(d)
    return f.conj() if inverse else f


def fourier_radices(radices: Sequence[int], inverse: bool = False) -> np.ndarray:
    """Tensor product of Fourier gates, one per radix."""
    return kron(*[fourier(r, inverse) for r in _check_radices(radices)])


def shift(d: int, power: int = 1) -> np.ndarray:
    """Cyclic shift ``X_d^power |j> = |j + power mod d>``."""
    d = _check_dim(d)
    return np.roll(np.eye(d, dtype=complex), int(power), axis=0)


def cx_d(d: int, power: int = 1) -> np.ndarray:
    """Generalized CNOT ``sum_j |j><j| (x) X_d^(power*j)``; ``power=d-1`` gives the inverse."""
    d = _check_dim(d)
    out = np.zeros((d * d, d * d), dtype=complex)
    for j in range(d):
        out[j * d : (j + 1) * d, j * d : (j + 1) * d] = shift(d, power * j)
    return out


def cz_d(d: int, power: int = 1) -> np.ndarray:
    """Generalized controlled-Z ``|l, m> -> omega_d^(power*l*m) |l, m>``."""
    d = _check_dim(d)
    k = np.arange(d)
    return np.diag(np.exp(2j * np.pi * power * np.outer(k, k).reshape(-1) / d))


def cz_mixed(radices: Sequence[int]) -> np.ndarray:
    """Controlled-Z on two registers with factor radices ``radices``.

    The diagonal entry at ``|k, l>`` is ``sqrt(d) <l| F |k>`` with ``F`` the
    tensor product of the factor Fourier gates and ``d`` their joint dimension.
    For a single radix this is :func:`cz_d`.
    """
    f = fourier_radices(radices)
    d = f.shape[0]
    return np.diag(np.sqrt(d) * f.T.reshape(-1))


def _lambda_parts(lam, radices=None) -> tuple[np.ndarray, tuple[int, ...]]:
    """Split a unimodular vector (or plain array plus radices) into phases and radices."""
    if hasattr(lam, "phases") and hasattr(lam, "radices"):
        phases = np.asarray(lam.phases, dtype=complex)
        radices = tuple(lam.radices) if radices is None else tuple(radices)
    else:
        phases = np.asarray(lam, dtype=complex).reshape(-1)
        if radices is None:
            d = int(round(np.sqrt(phases.size)))
            radices = (d,)
    radices = _check_radices(radices)
    d = prod(radices)
    if phases.size != d * d:
        raise DimensionError(f"vector of length {phases.size} does not match joint radix {d} (need {d * d})")
    return phases, radices


def diag_from_lambda(lam, radices=None) -> np.ndarray:
    """Diagonal gate ``D[Lambda] = sum lambda_{ij} |ij><ij|``."""
    phases, _ = _lambda_parts(lam, radices)
    return np.diag(phases)


def controlled_phase_ladder(angles: Sequence[float], d: int) -> list[np.ndarray]:
    """Split ``diag(exp(i x))`` on two qudits into ``d`` controlled-phase factors.

    Factor ``l`` applies ``diag(exp(i x_l))`` to the target only when the control
    is ``|l>``; the product of all factors (in any order, they commute) is the
    full diagonal.
    """
    d = _check_dim(d)
    x = np.asarray(angles, dtype=float).reshape(-1)
    if x.size != d * d:
        raise DimensionError(f"expected {d * d} angles, got {x.size}")
    factors = []
    for l in range(d):
        diag = np.ones(d * d, dtype=complex)
        diag[l * d : (l + 1) * d] = np.exp(1j * x[l * d : (l + 1) * d])
        factors.append(np.diag(diag))
    return factors


def multiunitary_from_lambda(lam, ansatz: str = "mixed_radix", radices=None) -> np.ndarray:
    """Assemble the bipartite gate ``U[Lambda]`` from a phase vector.

    ``fourier_d``
        ``CX_d (F_d (x) I) D (F_d^dag (x) I) CX_d^T`` on joint dimension ``d``.
    ``fourier_cz``
        ``CZ_d (F_d (x) F_d) D (F_d^dag (x) F_d^dag) CZ_d``.
    ``mixed_radix``
        ``CZ_r W D W CZ_r`` with ``W`` the Fourier tensor over the radices ``r``
        on both registers.

    The result is always unitary; whether it is 2-unitary depends on ``Lambda``.
    """
    phases, radices = _lambda_parts(lam, radices)
    d = prod(radices)
    diag = np.diag(phases)
    if ansatz == "fourier_d":
        f = fourier(d)
        cx = cx_d(d)
        eye = np.eye(d)
        return cx @ np.kron(f, eye) @ diag @ np.kron(dagger(f), eye) @ cx.T
    if ansatz == "fourier_cz":
        f = np.kron(fourier(d), fourier(d))
        cz = cz_d(d)
        return cz @ f @ diag @ dagger(f) @ cz
    if ansatz == "mixed_radix":
        f = fourier_radices(radices)
        w = np.kron(f, f)
        cz = cz_mixed(radices)
        return cz @ w @ diag @ w @ cz
    raise ValueError(f"unknown ansatz {ansatz!r}; expected one of {ANSATZE}")


# qubit gates

def hadamard() -> np.ndarray:
    return fourier(2)


def phase_s() -> np.ndarray:
    return np.diag([1, 1j])


def rz(angle: float) -> np.ndarray:
    """``Rz(theta) = diag(exp(-i theta/2), exp(i theta/2))``."""
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def cnot() -> np.ndarray:
    return cx_d(2)


def cz() -> np.ndarray:
    return cz_d(2)


def cs() -> np.ndarray:
    return np.diag([1, 1, 1, 1j])


def ccz() -> np.ndarray:
    return np.diag([1, 1, 1, 1, 1, 1, 1, -1]).astype(complex)


QUBIT_GATES = {
    "hadamard": (1, hadamard),
    "phase_s": (1, phase_s),
    "cnot": (2, cnot),
    "cz": (2, cz),
    "cs": (2, cs),
    "ccz": (3, ccz),
}


def decode_complex(value) -> complex:
    """Accept a complex number or a ``[re, im]`` pair."""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex value must be [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    return complex(value)


def encode_complex(value: complex) -> list[float]:
    value = complex(value)
    return [float(value.real), float(value.imag)]


def _decode_array(values, shape: tuple[int, ...]) -> np.ndarray:
    """Complex array of ``shape`` from complex numbers or ``[re, im]`` pairs."""
    if isinstance(values, np.ndarray) and np.iscomplexobj(values):
        return values.astype(complex).reshape(shape)
    try:
        a = np.asarray(values, dtype=float)
    except TypeError:
        a = None
    if a is not None and a.shape == shape + (2,):
        return a[..., 0] + 1j * a[..., 1]
    out = np.asarray(values, dtype=complex)
    if out.shape != shape:
        raise DimensionError(f"expected complex data of shape {shape}, got {np.shape(values)}")
    return out


def gate_matrix(kind: str, params: Mapping[str, Any] | None, radices: Sequence[int]) -> np.ndarray:
    """Materialize the gate ``kind`` acting on wires with local dims ``radices``."""
    params = dict(params or {})
    radices = tuple(int(r) for r in radices)
    dim = prod(radices) if radices else 1

    def need(n_wires: int, equal: bool = True):
        if len(radices) != n_wires:
            raise DimensionError(f"gate {kind!r} acts on {n_wires} wires, got {len(radices)}")
        if equal and len(set(radices)) != 1:
            raise DimensionError(f"gate {kind!r} needs equal radices, got {radices}")

    if kind in QUBIT_GATES:
        n, ctor = QUBIT_GATES[kind]
        need(n)
        if radices[0] != 2:
            raise DimensionError(f"gate {kind!r} is a qubit gate, got radices {radices}")
        return ctor()
    if kind == "rz":
        need(1)
        if radices[0] != 2:
            raise DimensionError("rz is a qubit gate")
        return rz(float(params["angle"]))
    if kind == "fourier":
        need(1)
        return fourier(radices[0], bool(params.get("inverse", False)))
    if kind == "shift":
        need(1)
        return shift(radices[0], int(params.get("power", 1)))
    if kind == "cx_d":
        need(2)
        return cx_d(radices[0], int(params.get("power", 1)))
    if kind == "cz_d":
        need(2)
        return cz_d(radices[0], int(params.get("power", 1)))
    if kind == "cz_mixed":
        half = len(radices) // 2
        if len(radices) % 2 or radices[:half] != radices[half:]:
            raise DimensionError(f"cz_mixed needs two identical registers, got {radices}")
        return cz_mixed(radices[:half])
    if kind == "diagonal":
        return np.diag(_decode_array(params["phases"], (dim,)))
    if kind == "custom":
        return _decode_array(params["matrix"], (dim, dim))
    raise ValueError(f"unknown gate kind {kind!r}")
