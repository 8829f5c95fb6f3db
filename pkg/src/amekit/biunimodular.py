"""Unimodular and biunimodular phase vectors: fixtures, checks and searches.

A phase vector ``Lambda`` of length ``d^2`` indexes pairs ``(k, l)`` of
elements of the group ``Z_{r_1} x ... x Z_{r_m}`` with ``d = r_1 ... r_m``.
It is biunimodular when its image under the two-register Fourier tensor is
again phase valued.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import prod
from typing import Sequence

import numpy as np

from . import gates
from .linalg import DimensionError, partial_transpose, reshuffle, unitarity_residual

UNIMODULAR_TOL = 1e-12
FIXTURE_TOL = 1e-9


@dataclass(frozen=True)
class UnimodularVector:
    """Phase vector over a product group; every entry has modulus one."""

    radices: tuple[int, ...]
    phases: np.ndarray

    def __post_init__(self):
        radices = tuple(int(r) for r in self.radices)
        if not radices or any(r < 2 for r in radices):
            raise DimensionError(f"radices must be nonempty and >= 2, got {radices}")
        phases = np.array(self.phases, dtype=complex).reshape(-1)
        d = prod(radices)
        if phases.size != d * d:
            raise DimensionError(f"{phases.size} phases for joint radix {d} (need {d * d})")
        if np.max(np.abs(np.abs(phases) - 1)) >= UNIMODULAR_TOL:
            raise ValueError("entries must have modulus one")
        phases.setflags(write=False)
        object.__setattr__(self, "radices", radices)
        object.__setattr__(self, "phases", phases)

    @property
    def d(self) -> int:
        return prod(self.radices)

    def matrix(self) -> np.ndarray:
        """Entries arranged as ``lambda[k, l]``."""
        return self.phases.reshape(self.d, self.d)

    def distinct_values(self, tol: float = 1e-9) -> list[complex]:
        out: list[complex] = []
        for z in self.phases:
            if all(abs(z - w) > tol for w in out):
                out.append(complex(z))
        return out

    def to_dict(self) -> dict:
        return {"radices": list(self.radices), "phases": [gates.encode_complex(z) for z in self.phases]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data) -> "UnimodularVector":
        try:
            phases = [gates.decode_complex(z) for z in data["phases"]]
            return cls(tuple(data["radices"]), np.array(phases))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed vector description: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "UnimodularVector":
        return cls.from_dict(json.loads(text))


def _tokens(text: str) -> np.ndarray:
    table = {"+": 1, "-": -1, "i": 1j, "-i": -1j}
    return np.array([table[t.strip()] for t in text.split(",")], dtype=complex)


_W3 = np.exp(2j * np.pi / 3)
_W3B = np.conj(_W3)

_FIXTURES = {
    "lambda_22": (
        (2, 2),
        "mixed_radix",
        _tokens("+, +, -i, i, i, i, +, -, i, -, +, i, i, -, -, -i"),
    ),
    "lambda_23": (
        (2, 3),
        "mixed_radix",
        np.array(
            [1, _W3B, _W3B, _W3B, _W3B, 1, 1, 1, _W3, 1, _W3, 1,
             1, _W3, 1, _W3, 1, 1, 1, _W3, 1, _W3B, _W3, _W3B,
             _W3B, _W3, _W3, _W3B, 1, 1, _W3, _W3, _W3B, 1, 1, _W3B]
        ),
    ),
    "lambda_222": (
        (2, 2, 2),
        "mixed_radix",
        _tokens(
            "+, +, i, +, -i, -, i, +, -i, -, -, -, i, -i, +, -, i, i, -i, -i, +, -i, -i, i, -i, +, -, i,"
            " -, +, i, -, -, +, -, i, -, +, i, -i, +, +, -i, -, -, +, i, -i, -, -, -, -, -, +, -i, +, -,"
            " -, -, -, i, i, -i, -"
        ),
    ),
    "lambda_4": ((4,), "fourier_cz", _tokens("+, +, +, -, +, -, -, -, +, +, +, -, -, +, +, +")),
}

FIXTURES = tuple(_FIXTURES)


def fixture_ansatz(name: str) -> str:
    """The gate ansatz under which the fixture is known to be 2-unitary."""
    if name not in _FIXTURES:
        raise ValueError(f"unknown fixture {name!r}; expected one of {FIXTURES}")
    return _FIXTURES[name][1]


def rearrangement_residuals(u: np.ndarray, d: int) -> dict[str, float]:
    """Unitarity residuals of ``U``, its reshuffling and its partial transpose."""
    return {
        "U": unitarity_residual(u),
        "R": unitarity_residual(reshuffle(u, d)),
        "Gamma": unitarity_residual(partial_transpose(u, (d, d), [0])),
    }


def fixture(name: str, validate: bool = True) -> UnimodularVector:
    """Known biunimodular vectors of joint radix 4, 6, 8 (product groups) and 4.

    With ``validate`` the assembled gate is checked for 2-unitarity and a
    ``ValueError`` names every rearrangement that fails.
    """
    if name not in _FIXTURES:
        raise ValueError(f"unknown fixture {name!r}; expected one of {FIXTURES}")
    radices, ansatz, phases = _FIXTURES[name]
    vec = UnimodularVector(radices, phases)
    if validate:
        res = rearrangement_residuals(gates.multiunitary_from_lambda(vec, ansatz), vec.d)
        bad = {k: v for k, v in res.items() if v >= FIXTURE_TOL}
        if bad:
            raise ValueError(f"fixture {name} is not 2-unitary; failing rearrangements: {bad}")
    return vec


def fourier_tensor(radices: Sequence[int]) -> np.ndarray:
    """``W = (F_{r_1} (x) ... (x) F_{r_m})`` on both registers."""
    f = gates.fourier_radices(radices)
    return np.kron(f, f)


def twisted_fourier_tensor(radices: Sequence[int]) -> np.ndarray:
    """``W CZ_r W``; for qubit factors its image being unimodular is Gamma-unitarity."""
    w = fourier_tensor(radices)
    return w @ gates.cz_mixed(radices) @ w


def _phases_of(lam) -> np.ndarray:
    return np.asarray(lam.phases if hasattr(lam, "phases") else lam, dtype=complex).reshape(-1)


def is_biunimodular(lam, f: np.ndarray | None = None, tol: float = FIXTURE_TOL) -> tuple[bool, float]:
    """Whether ``Lambda`` and ``F Lambda`` are both phase valued.

    ``f`` defaults to the Fourier tensor of the vector's radices. The residual is
    the largest deviation of any modulus from one over both vectors.
    """
    x = _phases_of(lam)
    if f is None:
        if not hasattr(lam, "radices"):
            raise ValueError("pass f explicitly for a plain array")
        f = fourier_tensor(lam.radices)
    f = np.asarray(f)
    if f.shape != (x.size, x.size):
        raise DimensionError(f"transform of shape {f.shape} for a vector of length {x.size}")
    res = max(np.max(np.abs(np.abs(x) - 1)), np.max(np.abs(np.abs(f @ x) - 1)))
    return bool(res < tol), float(res)


def _group_tensor(lam) -> np.ndarray:
    radices = tuple(lam.radices) if hasattr(lam, "radices") else None
    x = _phases_of(lam)
    if radices is None:
        d = int(round(np.sqrt(x.size)))
        radices = (d,)
    return x.reshape(radices + radices)


def autocorrelation(lam) -> np.ndarray:
    """Periodic autocorrelation ``C(s) = sum_x lambda_x conj(lambda_{x+s})`` over the group.

    Returned as a tensor indexed by the componentwise shift ``s``.
    """
    t = _group_tensor(lam)
    power = np.fft.fftn(t)
    return np.conj(np.fft.ifftn(np.abs(power) ** 2))


def autocorrelation_residual(lam) -> float:
    """Largest periodic autocorrelation modulus over nonzero shifts."""
    c = np.abs(autocorrelation(lam)).reshape(-1)
    return float(np.max(c[1:]))


def gamma_correlation(lam) -> np.ndarray:
    """``G(i, j) = sum_{k,l} omega^{il - jk} lambda_{k,l} conj(lambda_{k+i, l+j})`` for one radix."""
    if hasattr(lam, "radices") and len(lam.radices) != 1:
        raise ValueError(
            "the phase-weighted correlation is defined for a single radix; "
            "for product radices check Gamma-unitarity of the assembled gate instead"
        )
    m = _group_tensor(lam)
    d = m.shape[0]
    k = np.arange(d)
    out = np.zeros((d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            shifted = np.roll(np.roll(m, -i, axis=0), -j, axis=1)
            kernel = np.exp(2j * np.pi * (i * k[None, :] - j * k[:, None]) / d)
            out[i, j] = np.sum(kernel * m * np.conj(shifted))
    return out


def gamma_residual(lam) -> float:
    """Largest modulus of :func:`gamma_correlation` over nonzero shifts."""
    g = np.abs(gamma_correlation(lam)).reshape(-1)
    return float(np.max(g[1:]))


@dataclass(frozen=True)
class SearchConfig:
    """Budgets and options shared by the searches.

    ``group_order`` is the number of roots of unity entries are drawn from in
    the discrete search. ``enforce_gamma`` adds the twisted projection to the
    iterative search (qubit radices only); ``None`` turns it on whenever
    2-unitarity is required and every radix is 2.
    """

    seed: int = 0
    max_trials: int = 10**6
    max_iterations: int = 20000
    max_restarts: int = 20
    patience: int = 500
    tol: float = 1e-9
    group_order: int = 4
    ansatz: str = "mixed_radix"
    require_2unitary: bool = True
    enforce_gamma: bool | None = None
    batch_size: int = 4096

    def __post_init__(self):
        for name in ("max_trials", "max_iterations", "max_restarts", "patience", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.group_order < 2:
            raise ValueError("group_order must be at least 2")
        if self.ansatz not in gates.ANSATZE:
            raise ValueError(f"unknown ansatz {self.ansatz!r}")


def _gate_factors(radices: Sequence[int], ansatz: str) -> tuple[np.ndarray, np.ndarray]:
    """``(A, B)`` with ``U[Lambda] = A diag(Lambda) B``."""
    d = prod(radices)
    if ansatz == "mixed_radix":
        w = fourier_tensor(radices)
        c = gates.cz_mixed(radices)
        return c @ w, w @ c
    if ansatz == "fourier_cz":
        f = np.kron(gates.fourier(d), gates.fourier(d))
        c = gates.cz_d(d)
        return c @ f, f.conj().T @ c
    f = gates.fourier(d)
    cx = gates.cx_d(d)
    eye = np.eye(d)
    return cx @ np.kron(f, eye), np.kron(f.conj().T, eye) @ cx.T


def _batched_2unitary_residual(a: np.ndarray, b: np.ndarray, lams: np.ndarray, d: int) -> np.ndarray:
    """Largest rearrangement residual of ``A diag(lam) B`` for each row of ``lams``."""
    u = (a[None, :, :] * lams[:, None, :]) @ b
    n = d * d
    t = u.reshape(-1, d, d, d, d)
    eye = np.eye(n)
    out = np.zeros(len(lams))
    for m in (u, t.transpose(0, 1, 3, 2, 4).reshape(-1, n, n), t.transpose(0, 1, 4, 3, 2).reshape(-1, n, n)):
        r = np.linalg.norm(m @ np.conj(np.swapaxes(m, 1, 2)) - eye, axis=(1, 2))
        out = np.maximum(out, r)
    return out


def random_discrete_search(cfg: SearchConfig, radices: Sequence[int], info: dict | None = None):
    """Sample vectors with entries among the ``cfg.group_order``-th roots of unity.

    Returns the first sample (in draw order) whose gate under ``cfg.ansatz`` is
    2-unitary within ``1e-9``, or ``None`` once ``cfg.max_trials`` are used up.
    """
    radices = tuple(int(r) for r in radices)
    d = prod(radices)
    n = d * d
    a, b = _gate_factors(radices, cfg.ansatz)
    roots = np.exp(2j * np.pi * np.arange(cfg.group_order) / cfg.group_order)
    rng = np.random.default_rng(cfg.seed)
    done = 0
    while done < cfg.max_trials:
        size = min(cfg.batch_size, cfg.max_trials - done)
        lams = roots[rng.integers(0, cfg.group_order, size=(size, n))]
        hits = np.nonzero(_batched_2unitary_residual(a, b, lams, d) < FIXTURE_TOL)[0]
        if hits.size:
            if info is not None:
                info["trials"] = done + int(hits[0]) + 1
            return UnimodularVector(radices, lams[hits[0]])
        done += size
    if info is not None:
        info["trials"] = done
    return None


def _phase(x: np.ndarray) -> np.ndarray:
    mag = np.abs(x)
    return np.where(mag > 1e-300, x / np.where(mag > 1e-300, mag, 1.0), 1.0)


def iterative_search(
    cfg: SearchConfig,
    radices: Sequence[int],
    start=None,
    trace: list | None = None,
    info: dict | None = None,
):
    """Alternating phase projection towards a biunimodular vector.

    Each step maps ``Lambda -> phase(W^dag phase(W Lambda))`` with ``W`` the
    Fourier tensor, and (when Gamma is enforced) follows with the same step for
    the twisted tensor ``W CZ W``. An iterate is accepted when its projection gap
    does not exceed that of the last accepted one, and a run converges when an
    accepted iterate has every modulus within ``cfg.tol`` of one (and, if
    required, a 2-unitary gate). A run restarts from a fresh random vector after
    ``cfg.patience`` iterations without an accepted iterate, or when an exactly
    biunimodular vector still fails the 2-unitarity filter. ``trace`` (if
    given) receives the accepted gaps of the last run, which are nonincreasing
    by construction.
    """
    radices = tuple(int(r) for r in radices)
    w = fourier_tensor(radices)
    transforms = [w]
    enforce = cfg.enforce_gamma
    if enforce is None:
        enforce = cfg.require_2unitary and all(r == 2 for r in radices)
    if enforce:
        if any(r != 2 for r in radices):
            raise ValueError("the twisted projection is only valid for qubit radices")
        transforms.append(twisted_fourier_tensor(radices))
    d = prod(radices)
    n = d * d
    rng = np.random.default_rng(cfg.seed)
    a, b = _gate_factors(radices, cfg.ansatz)

    def residual(x):
        return max(float(np.max(np.abs(np.abs(t @ x) - 1))) for t in transforms)

    def gap(x):
        return float(sum(np.linalg.norm(np.abs(t @ x) - 1) for t in transforms))

    def status(x):
        """``True`` when finished, ``False`` when the run is a dead end, else ``None``."""
        res = residual(x)
        if res >= cfg.tol:
            return None
        if not cfg.require_2unitary:
            return True
        if _batched_2unitary_residual(a, b, x[None, :], d)[0] < FIXTURE_TOL:
            return True
        # a converged vector that is still not 2-unitary is refined further
        # until it is exactly biunimodular, then abandoned
        return False if res < 1e-13 else None

    iterations = 0
    for attempt in range(cfg.max_restarts):
        if attempt == 0 and start is not None:
            x = _phase(_phases_of(start))
        else:
            x = _phase(rng.standard_normal(n) + 1j * rng.standard_normal(n))
        history = [gap(x)]
        state = status(x)
        stalled = 0
        for _ in range(cfg.max_iterations):
            if state is not None or stalled >= cfg.patience:
                break
            for t in transforms:
                x = _phase(t.conj().T @ _phase(t @ x))
            iterations += 1
            g = gap(x)
            if g <= history[-1]:
                history.append(g)
                stalled = 0
                state = status(x)
            else:
                stalled += 1
        if trace is not None:
            trace[:] = history
        if state:
            if info is not None:
                info.update(restarts=attempt, iterations=iterations, residual=residual(x))
            return UnimodularVector(radices, x)
    if info is not None:
        info.update(restarts=cfg.max_restarts, iterations=iterations)
    return None
