"""Command-line interface: ``amekit <command> ...``.

Exit codes: 0 success, 2 usage or parse error, 3 verification failed
(``verify --expect-ame``).
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import biunimodular, circuits, gates, noise, transpile, verify
from .linalg import StateVector

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 2, 3
DEFAULT_GAMMAS = "0:1:0.01"
INVARIANT_TABLE = ("identity4", "lambda_22", "gf4", "lambda_23", "lambda_222", "gf8")


class UsageError(Exception):
    """Bad arguments or unreadable input (exit code 2)."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    target: tuple[str, ...] = ()
    gammas: str = DEFAULT_GAMMAS
    seed: int = 0
    out: str | None = None
    tol: float | None = None
    fmt: str | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.seed < 0:
            raise UsageError("--seed must be non-negative")
        if self.tol is not None and self.tol <= 0:
            raise UsageError("--tol must be positive")


def _write(text: str, out: str | None) -> None:
    """Print to stdout, or write ``out`` atomically."""
    if out is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".amekit-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(data) -> str:
    return json.dumps(data, indent=1, sort_keys=True) + "\n"


def parse_gammas(text: str) -> np.ndarray:
    """``start:stop:step`` grid (inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            return noise.gamma_grid(start, stop, step)
        return np.array([float(x) for x in text.split(",")])
    except ValueError as exc:
        raise UsageError(f"bad gamma grid {text!r}: {exc}") from None


def amplitude_dump(v: StateVector) -> str:
    lines = [f"# radices {','.join(str(r) for r in v.radices)}"]
    lines += [f"{i} {z.real:.17g} {z.imag:.17g}" for i, z in enumerate(v.amplitudes)]
    return "\n".join(lines) + "\n"


def _parse_dump(text: str) -> StateVector:
    match = re.match(r"#\s*radices\s+([\d,]+)", text)
    if not match:
        raise UsageError("amplitude dump lacks a '# radices' header")
    radices = tuple(int(r) for r in match.group(1).split(","))
    rows = [line.split() for line in text.splitlines()[1:] if line.strip()]
    amps = np.zeros(int(np.prod(radices)), dtype=complex)
    for row in rows:
        amps[int(row[0])] = float(row[1]) + 1j * float(row[2])
    return StateVector(radices, amps)


def _load_state(target: Sequence[str], seed: int) -> tuple[StateVector, list | None, str]:
    """State, party grouping and a label from a name, a generator description or a file."""
    head, rest = target[0], list(target[1:])
    if head in circuits.NAMED and not rest:
        c = circuits.build_named(head)
        return circuits.simulate(c), c.parties, head
    if head in ("ghz", "zero", "haar"):
        if len(rest) != 2:
            raise UsageError(f"{head} needs two integers: number of parties and local dimension")
        n, d = (int(x) for x in rest)
        if head == "ghz":
            return circuits.ghz(n, d), None, f"ghz {n} {d}"
        if head == "zero":
            return StateVector.basis((d,) * n), None, f"zero {n} {d}"
        return circuits.haar_random((d,) * n, seed), None, f"haar {n} {d}"
    if rest:
        raise UsageError(f"unexpected arguments {rest}")
    if not os.path.isfile(head):
        raise UsageError(f"{head!r} is neither a known name nor a file")
    with open(head) as fh:
        text = fh.read()
    if text.lstrip().startswith("#"):
        return _parse_dump(text), None, head
    data = json.loads(text)
    if "instructions" in data:
        c = circuits.Circuit.from_dict(data)
        return circuits.simulate(c), c.parties, head
    amps = [gates.decode_complex(z) for z in data["amplitudes"]]
    return StateVector(tuple(data["radices"]), np.array(amps)), data.get("parties"), head


def _load_circuit(target: str) -> circuits.Circuit:
    if target in circuits.NAMED:
        return circuits.build_named(target)
    if not os.path.isfile(target):
        raise UsageError(f"{target!r} is neither a known circuit name nor a file")
    with open(target) as fh:
        return circuits.Circuit.from_json(fh.read())


def _gate(name: str) -> tuple[np.ndarray, int]:
    """Two-qudit gate and its local dimension for the invariant command."""
    if name in biunimodular.FIXTURES:
        lam = biunimodular.fixture(name)
        u = gates.multiunitary_from_lambda(lam, ansatz=biunimodular.fixture_ansatz(name))
        return u, lam.d
    match = re.fullmatch(r"gf(\d+)", name)
    if match:
        q = int(match.group(1))
        u = circuits.minimal_support_unitary(circuits.gf_latin_square(q, 1), circuits.gf_latin_square(q, 2))
        return u, q
    match = re.fullmatch(r"identity(\d+)", name)
    if match:
        d = int(match.group(1))
        return np.eye(d * d, dtype=complex), d
    raise UsageError(f"unknown gate {name!r}")


def _sweep_states(label: str, seed: int):
    match = re.fullmatch(r"(ame|ghz|haar)4(\d+)(?:x(\d+))?", label)
    if not match or (match.group(3) and match.group(1) != "haar"):
        raise UsageError(f"bad sweep label {label!r}; use ame4D, ghz4D or haar4DxN")
    kind, d = match.group(1), int(match.group(2))
    if kind == "ame":
        try:
            return verify.ideal_ame_state(d)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if kind == "ghz":
        return circuits.ghz(4, d)
    count = int(match.group(3) or 1)
    return [circuits.haar_random((d,) * 4, seed + k) for k in range(count)]


# commands

def cmd_build(cfg: RunConfig) -> int:
    name = cfg.target[0]
    if name not in circuits.NAMED:
        raise UsageError(f"unknown circuit {name!r}; expected one of {', '.join(circuits.NAMED)}")
    c = circuits.build_named(name)
    v = circuits.simulate(c)
    if cfg.out is not None:
        _write(c.to_json() + "\n", cfg.out)
        _write(amplitude_dump(v), cfg.out + ".amps")
    summary = {"name": name, "radices": list(c.radices), "n_wires": c.n_wires, "dim": v.dim,
               "norm": v.norm(), "n_instructions": len(c.instructions)}
    if cfg.out is None:
        summary["circuit"] = c.to_dict()
    if cfg.fmt == "text":
        sys.stdout.write(amplitude_dump(v))
    else:
        sys.stdout.write(_json(summary))
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    v, parties, label = _load_state(cfg.target, cfg.seed)
    tol = cfg.tol if cfg.tol is not None else verify.AME_TOL
    w = v.group(parties) if parties is not None else v
    report = verify.is_ame(w, tol=tol)
    n = w.n_wires
    data = {"state": label, **report.to_dict(),
            "k_uniform": {str(k): verify.is_k_uniform(w, k, tol=tol) for k in range(1, n // 2 + 1)},
            "uniformity": verify.uniformity(w, tol=tol)}
    _write(_json(data), cfg.out)
    if cfg.options.get("expect_ame") and not report.verdict:
        return EXIT_FAILED
    return EXIT_OK


def cmd_invariant(cfg: RunConfig) -> int:
    k = int(cfg.options.get("k", 2))
    names = INVARIANT_TABLE if cfg.target == ("table",) else cfg.target[:1]
    rows = []
    for name in names:
        u, d = _gate(name)
        m = verify.lu_invariant_moment(u, d, k)
        rows.append({"gate": name, "d": d, "k": k, "real": round(m.real, 9), "imag": round(m.imag, 9)})
    if cfg.fmt == "json":
        text = _json(rows if len(rows) > 1 else rows[0])
    elif cfg.fmt == "csv":
        body = "".join(f"{r['gate']},{r['d']},{k},{r['real']:.9f},{r['imag']:.9f}\n" for r in rows)
        text = "gate,d,k,real,imag\n" + body
    elif len(rows) == 1:
        text = f"{rows[0]['real']:.6f}\n"
    else:
        text = "".join(f"{r['gate']:<12}{r['d']:>3}{r['real']:>16.6f}\n" for r in rows)
    _write(text, cfg.out)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    gammas = parse_gammas(cfg.gammas)
    states = [(label, _sweep_states(label, cfg.seed)) for label in cfg.target]
    records = noise.sweep(states, gammas)
    if cfg.fmt == "json":
        text = _json([r.__dict__ for r in records])
    else:
        text = noise.records_to_csv(records)
    _write(text, cfg.out)
    return EXIT_OK


def cmd_teleport(cfg: RunConfig) -> int:
    d = int(cfg.target[0])
    if d < 2:
        raise UsageError("dimension must be at least 2")
    data = {"d": d, "threshold": noise.teleportation_threshold(d),
            "closed_form": noise.teleportation_threshold_closed_form(d),
            "fidelity_at_zero": noise.teleportation_fidelity(d, 0.0)}
    if cfg.fmt == "json":
        text = _json(data)
    else:
        text = f"{data['threshold']:.12f}\n"
    _write(text, cfg.out)
    return EXIT_OK


def cmd_search(cfg: RunConfig) -> int:
    try:
        radices = tuple(int(r) for r in cfg.target[0].split(","))
    except ValueError:
        raise UsageError(f"bad radices {cfg.target[0]!r}; use e.g. 2,3") from None
    opts = cfg.options
    kwargs = {"seed": cfg.seed}
    if opts.get("max_trials"):
        kwargs["max_trials"] = opts["max_trials"]
    if opts.get("max_iterations"):
        kwargs["max_iterations"] = opts["max_iterations"]
    if cfg.tol is not None:
        kwargs["tol"] = cfg.tol
    if opts.get("convergence_only"):
        kwargs["require_2unitary"] = False
    search_cfg = biunimodular.SearchConfig(**kwargs)
    info: dict = {}
    if opts.get("method", "random") == "random":
        found = biunimodular.random_discrete_search(search_cfg, radices, info=info)
    else:
        found = biunimodular.iterative_search(search_cfg, radices, info=info)
    data = {"radices": list(radices), "method": opts.get("method", "random"), "seed": cfg.seed,
            "found": found is not None, "info": {k: v for k, v in info.items() if np.isscalar(v)}}
    if found is not None:
        data["vector"] = found.to_dict()
        data["biunimodular_residual"] = biunimodular.is_biunimodular(found)[1]
    _write(_json(data), cfg.out)
    return EXIT_OK


def cmd_transpile(cfg: RunConfig) -> int:
    c = _load_circuit(cfg.target[0])
    tr = transpile.transpile_circuit(c, fresh_inputs=bool(cfg.options.get("fresh_inputs")))
    if cfg.fmt == "json":
        text = tr.qubits.to_json() + "\n"
    else:
        text = transpile.export_text(tr.qubits)
    _write(text, cfg.out)
    return EXIT_OK


def cmd_fixture(cfg: RunConfig) -> int:
    name = cfg.target[0]
    if name not in biunimodular.FIXTURES:
        raise UsageError(f"unknown fixture {name!r}; expected one of {', '.join(biunimodular.FIXTURES)}")
    _write(biunimodular.fixture(name).to_json() + "\n", cfg.out)
    return EXIT_OK


COMMANDS = {
    "build": cmd_build,
    "verify": cmd_verify,
    "invariant": cmd_invariant,
    "sweep": cmd_sweep,
    "teleport": cmd_teleport,
    "search": cmd_search,
    "transpile": cmd_transpile,
    "fixture": cmd_fixture,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="amekit", description="AME state construction and verification toolkit.",
                     formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, formats=("json", "csv", "text"), default_format=None):
        p.add_argument("--out", default=None, help="output file (stdout if omitted)")
        p.add_argument("--seed", type=int, default=0, help="random seed")
        p.add_argument("--tol", type=float, default=None, help="tolerance override")
        p.add_argument("--format", dest="fmt", choices=formats, default=default_format, help="output format")
        return p

    p = common(sub.add_parser("build", help="build a named circuit and simulate it", formatter_class=fmt),
               ("json", "text"), "json")
    p.add_argument("target", nargs=1, metavar="NAME", help=f"one of {', '.join(circuits.NAMED)}")

    p = common(sub.add_parser("verify", help="AME and k-uniformity report", formatter_class=fmt), ("json",), "json")
    p.add_argument("target", nargs="+", metavar="STATE",
                   help="circuit name, 'ghz N D', 'zero N D', 'haar N D', or a circuit/state/amplitude file")
    p.add_argument("--expect-ame", action="store_true", help="exit with code 3 unless the state is AME")

    p = common(sub.add_parser("invariant", help="LU invariant moments Tr[I(U)^k]", formatter_class=fmt),
               default_format="text")
    p.add_argument("target", nargs=1, metavar="GATE",
                   help="fixture name, gfQ, identityD, or 'table'")
    p.add_argument("k", nargs="?", type=int, default=2, help="moment order")

    p = common(sub.add_parser("sweep", help="noise sweep as CSV", formatter_class=fmt), ("csv", "json"), "csv")
    p.add_argument("target", nargs="+", metavar="LABEL", help="ame4D, ghz4D or haar4DxN labels")
    p.add_argument("--gammas", default=DEFAULT_GAMMAS, help="start:stop:step grid or comma list")

    p = common(sub.add_parser("teleport", help="teleportation noise threshold", formatter_class=fmt),
               ("json", "text"), "text")
    p.add_argument("target", nargs=1, metavar="D", help="dimension of the teleported system")

    p = common(sub.add_parser("search", help="search for biunimodular vectors", formatter_class=fmt), ("json",), "json")
    p.add_argument("target", nargs=1, metavar="RADICES", help="comma-separated radices, e.g. 2,2")
    p.add_argument("--method", choices=("random", "iterative"), default="random", help="search method")
    p.add_argument("--max-trials", type=int, default=None, help="random-search budget (library default if omitted)")
    p.add_argument("--max-iterations", type=int, default=None, help="iterative-search budget per restart")
    p.add_argument("--convergence-only", action="store_true",
                   help="iterative search: stop at biunimodularity without requiring 2-unitarity")

    p = common(sub.add_parser("transpile", help="compile a circuit to qubits", formatter_class=fmt),
               ("text", "json"), "text")
    p.add_argument("target", nargs=1, metavar="CIRCUIT", help="circuit name or circuit JSON file")
    p.add_argument("--fresh-inputs", action="store_true",
                   help="assume the all-zero input and use state-level shortcuts on untouched wires")

    p = common(sub.add_parser("fixture", help="print a stored vector", formatter_class=fmt), ("json",), "json")
    p.add_argument("target", nargs=1, metavar="NAME", help=f"one of {', '.join(biunimodular.FIXTURES)}")
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    options = {key: getattr(args, key) for key in
               ("expect_ame", "k", "method", "max_trials", "max_iterations", "convergence_only", "fresh_inputs")
               if hasattr(args, key)}
    return RunConfig(args.command, tuple(args.target), getattr(args, "gammas", DEFAULT_GAMMAS),
                     args.seed, args.out, args.tol, args.fmt, options)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _config(args)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"amekit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, json.JSONDecodeError, OSError) as exc:
        print(f"amekit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
