"""``oneway`` command line.

Subcommands: ``build``, ``run``, ``branches``, ``equiv``, ``entropy`` and
``selftest``.  Reports are JSON (or CSV where a table makes sense), echo
the tool version and full configuration, and depend only on the inputs and
the seed.

Exit codes: 0 success, 1 verification failure, 2 parse error, 3 invalid
input, 4 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .checks import SUITES, run_all
from .compiler import (
    Circuit,
    CircuitError,
    RegisterCapError,
    StitchedGraph,
    _permute,
    adapt,
    desired_unitary_state,
    execute,
    fidelity,
    ims_branches,
    stitch,
    verify_final,
)
from .equivalence import (
    certify_pair,
    entanglement_report,
    equivalence_from_byproducts,
    flip_matrix,
    verify_output_equivalence,
)
from .measurement import DEFAULT_BRANCH_CAP, Branch, BranchCapError, OutcomeRecord
from .statevector import MAX_QUBITS, StateVector, apply_pauli

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_INVALID, EXIT_CAP = 0, 1, 2, 3, 4
COMPLETENESS_TOL = 1e-10


class ParseError(Exception):
    pass


class InvalidInput(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    circuit: str | None
    input: str
    measure: tuple[int, ...] | None
    outcomes: str | None
    seed: int
    tol: float
    max_qubits: int
    bipartitions: tuple[tuple[int, ...], ...] | None
    format: str
    out: str | None
    cap: int
    pair_sample: int
    pair_threshold: int
    suites: tuple[str, ...] | None

    def to_json(self) -> dict:
        data = asdict(self)
        for key in ("measure", "suites"):
            if data[key] is not None:
                data[key] = list(data[key])
        if data["bipartitions"] is not None:
            data["bipartitions"] = [list(p) for p in data["bipartitions"]]
        return data


# ----------------------------------------------------------------------------
# parsing


def _load_json(path: str) -> object:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidInput(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def _vertex_list(text: str) -> tuple[int, ...]:
    out = []
    for token in text.replace(" ", "").split(","):
        if not token:
            continue
        if "-" in token:
            lo, hi = token.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(token))
    return tuple(out)


def parse_vertices(text: str) -> tuple[int, ...]:
    """``"1,2,5-7"`` -> ``(1, 2, 5, 6, 7)``."""
    try:
        return _vertex_list(text)
    except ValueError:
        raise ParseError(f"bad vertex list {text!r}") from None


def parse_bipartitions(text: str) -> tuple[tuple[int, ...], ...]:
    """Semicolon-separated parts, e.g. ``"1-11;11;19"``."""
    return tuple(parse_vertices(part) for part in text.split(";") if part.strip())


def parse_input(spec: str, wires: int, seed: int) -> StateVector:
    """``random``, a letter string over ``0 1 + -``, or a JSON amplitude list (inline or file).

    Amplitudes are numbers or ``[re, im]`` pairs; the list is normalized.
    """
    if spec == "random":
        return StateVector.random(wires, np.random.default_rng(seed))
    if set(spec) <= set("01+-"):
        if len(spec) != wires:
            raise InvalidInput(f"input {spec!r} has {len(spec)} letters for {wires} wires")
        return StateVector.basis(spec)
    if spec.lstrip().startswith("["):
        try:
            data = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise ParseError(f"--input:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    else:
        data = _load_json(spec)
    try:
        amps = np.array([complex(a[0], a[1]) if isinstance(a, list) else complex(a) for a in data])
    except (TypeError, ValueError, IndexError):
        raise InvalidInput("amplitudes must be numbers or [re, im] pairs") from None
    if amps.size != 1 << wires:
        raise InvalidInput(f"{amps.size} amplitudes given for {wires} wires")
    norm = np.linalg.norm(amps)
    if norm == 0:
        raise InvalidInput("input state is zero")
    return StateVector(wires, amps / norm)


def load_circuit(path: str | None) -> StitchedGraph:
    if path is None:
        raise InvalidInput("--circuit is required")
    data = _load_json(path)
    try:
        return stitch(Circuit.from_json(data))
    except CircuitError as exc:
        raise InvalidInput(f"{path}: {exc}") from None
    except (AttributeError, TypeError) as exc:
        raise InvalidInput(f"{path}: bad circuit description: {exc}") from None


def load_outcomes(path: str) -> OutcomeRecord:
    data = _load_json(path)
    try:
        return OutcomeRecord.from_json(data)
    except (TypeError, ValueError, AttributeError) as exc:
        raise InvalidInput(f"{path}: {exc}") from None


# ----------------------------------------------------------------------------
# helpers


def _state_json(s: StateVector) -> list[list[float]]:
    return [[float(a.real), float(a.imag)] for a in s.amps]


def _branch_id(b: Branch | OutcomeRecord, order: Sequence[int]) -> str:
    record = b.record if isinstance(b, Branch) else b
    return "".join("+" if record[v] == 1 else "-" for v in order)


def _order(sg: StitchedGraph, cfg: RunConfig) -> list[int]:
    return list(sg.measurable if cfg.measure is None else cfg.measure)


def _check_register(sg: StitchedGraph, cfg: RunConfig) -> None:
    if sg.n > cfg.max_qubits:
        raise RegisterCapError(f"stitched graph has {sg.n} qubits, cap is {cfg.max_qubits}")


def _is_full(sg: StitchedGraph, order: Sequence[int]) -> bool:
    return set(order) == set(sg.measurable)


def _output_state(sg: StitchedGraph, b: Branch) -> StateVector:
    wires = sg.circuit.wires
    return _permute(b.residual, list(b.remaining), [sg.steps[-1].outputs[w] for w in range(wires)])


def _branches(sg: StitchedGraph, psi: StateVector, cfg: RunConfig, order: Sequence[int]):
    _check_register(sg, cfg)
    try:
        return ims_branches(sg, psi, order, cfg.cap)
    except ValueError as exc:
        if isinstance(exc, BranchCapError):
            raise
        raise InvalidInput(str(exc)) from None


def _header(cfg: RunConfig) -> dict:
    return {"tool": "oneway", "version": __version__, "config": cfg.to_json()}


def _csv(rows: list[list]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _fmt(x: float) -> str:
    return f"{x:.12g}"


# ----------------------------------------------------------------------------
# commands


def cmd_build(cfg: RunConfig) -> tuple[int, str]:
    sg = load_circuit(cfg.circuit)
    data = {"tool": "oneway", "version": __version__, **sg.to_json()}
    return EXIT_OK, json.dumps(data, indent=2)


def cmd_run(cfg: RunConfig) -> tuple[int, str]:
    sg = load_circuit(cfg.circuit)
    psi = parse_input(cfg.input, sg.circuit.wires, cfg.seed)
    forced = load_outcomes(cfg.outcomes) if cfg.outcomes else None
    rng = np.random.default_rng(cfg.seed)
    if cfg.measure is not None:
        _check_register(sg, cfg)
    try:
        res = execute(sg, psi, outcomes=forced, rng=rng, measure=cfg.measure, tol=cfg.tol, max_qubits=cfg.max_qubits)
    except KeyError as exc:
        raise InvalidInput(f"outcome record lacks qubit {exc.args[0]}") from None
    except ValueError as exc:
        if isinstance(exc, BranchCapError):
            raise
        raise InvalidInput(str(exc)) from None
    report = _header(cfg)
    report["record"] = res.record.to_json()
    report["probability"] = res.probability
    report["T_final"] = str(res.T_final)
    report["adaptation"] = [
        {"step": a.step, "T": str(a.T), "W": str(a.W), "euler_signs": list(a.signs), "R": str(a.R), "T_next": str(a.T_next)}
        for a in res.adaptation
    ]
    passed = True
    if res.output is not None:
        report["steps"] = [s.to_json() for s in res.steps]
        report["output"] = _state_json(res.output)
        if res.is_zero:
            report["fidelity"] = None
        else:
            f = verify_final(sg.circuit, psi, res.output, res.T_final)
            report["fidelity"] = f
            passed = f >= 1 - cfg.tol
    else:
        report["ims_qubits"] = res.ims.residual.n + len(res.ims.measured)
        report["ims_unmeasured"] = list(res.ims.remaining)
    report["passed"] = passed
    return (EXIT_OK if passed else EXIT_FAIL), json.dumps(report, indent=2)


def cmd_branches(cfg: RunConfig) -> tuple[int, str]:
    sg = load_circuit(cfg.circuit)
    psi = parse_input(cfg.input, sg.circuit.wires, cfg.seed)
    order = _order(sg, cfg)
    full = _is_full(sg, order)
    target = desired_unitary_state(sg.circuit, psi) if full else None
    rows = []
    total = 0.0
    worst = 0.0
    for b in _branches(sg, psi, cfg, order):
        total += b.probability
        row = {"branch": _branch_id(b, order), "probability": b.probability}
        if full and not b.is_zero:
            t = adapt(sg, b.record)[-1].T_next
            f = fidelity(_output_state(sg, b), apply_pauli(t, target))
            row["fidelity"] = f
            row["T_final"] = str(t)
            worst = max(worst, 1 - f)
        rows.append(row)
    gap = abs(total - 1)
    passed = gap <= COMPLETENESS_TOL and (not full or worst <= cfg.tol)
    if cfg.format == "csv":
        cols = ["branch", "probability"] + (["fidelity", "T_final"] if full else [])
        table = [cols] + [[r["branch"], _fmt(r["probability"])] + ([_fmt(r.get("fidelity", 0.0)), r.get("T_final", "")] if full else []) for r in rows]
        return (EXIT_OK if passed else EXIT_FAIL), _csv(table)
    report = _header(cfg)
    report.update(
        {
            "measured": order,
            "count": len(rows),
            "probability_sum": total,
            "completeness_gap": gap,
            "worst_infidelity": worst if full else None,
            "branches": rows,
            "passed": passed,
        }
    )
    return (EXIT_OK if passed else EXIT_FAIL), json.dumps(report, indent=2)


def _pairs(count: int, cfg: RunConfig) -> tuple[list[tuple[int, int]], bool]:
    if count <= cfg.pair_threshold:
        return list(itertools.combinations(range(count), 2)), False
    rng = np.random.default_rng(cfg.seed)
    total = count * (count - 1) // 2
    want = min(cfg.pair_sample, total)
    chosen: set[tuple[int, int]] = set()
    picked = []
    while len(picked) < want:
        i, j = sorted(int(k) for k in rng.choice(count, size=2, replace=False))
        if (i, j) not in chosen:
            chosen.add((i, j))
            picked.append((i, j))
    return picked, True


def cmd_equiv(cfg: RunConfig) -> tuple[int, str]:
    sg = load_circuit(cfg.circuit)
    psi = parse_input(cfg.input, sg.circuit.wires, cfg.seed)
    order = _order(sg, cfg)
    full = _is_full(sg, order)
    branches = list(_branches(sg, psi, cfg, order))
    schedule = sg.schedule_for(order)
    matrix = flip_matrix(sg, schedule)
    pairs, sampled = _pairs(len(branches), cfg)
    cache: dict[int, StateVector] = {}

    def state(k: int) -> StateVector:
        if sampled:
            return branches[k].state
        if k not in cache:
            cache[k] = branches[k].state
        return cache[k]

    rows = []
    passed = True
    for i, j in pairs:
        a, b = branches[i], branches[j]
        cert = certify_pair(sg, schedule, a, b, cfg.tol, matrix, (state(i), state(j)))
        row = {"a": _branch_id(a, order), "b": _branch_id(b, order), **cert.to_json()}
        ok = bool(cert.verdict)
        if full and not (a.is_zero or b.is_zero):
            op = equivalence_from_byproducts(sg, a.record, b.record)
            out = verify_output_equivalence(op, _output_state(sg, a), _output_state(sg, b), cfg.tol)
            row["byproduct_operator"] = str(op)
            row["byproduct_verdict"] = out.verdict
            ok = ok and out.verdict
        passed = passed and ok
        rows.append(row)
    if cfg.format == "csv":
        cols = ["a", "b", "generators", "operator", "method", "verdict", "deviation"]
        table = [cols] + [
            [r["a"], r["b"], " ".join(r["generators"]), r["operator"], r["method"], r["verdict"], _fmt(r["deviation"])]
            for r in rows
        ]
        return (EXIT_OK if passed else EXIT_FAIL), _csv(table)
    report = _header(cfg)
    report.update(
        {
            "measured": order,
            "branches": len(branches),
            "pairs": len(rows),
            "sampled": sampled,
            "flip_matrix_rank": matrix.rank,
            "generators": len(matrix.generators),
            "max_deviation": max((r["deviation"] for r in rows), default=0.0),
            "methods": sorted({r["method"] for r in rows}),
            "certificates": rows,
            "passed": passed,
        }
    )
    return (EXIT_OK if passed else EXIT_FAIL), json.dumps(report, indent=2)


def _default_bipartitions(sg: StitchedGraph, order: Sequence[int]) -> tuple[tuple[int, ...], ...]:
    parts = [(v,) for v in sg.graph.outputs]
    half = tuple(range(1, sg.n // 2 + 1))
    if half not in parts:
        parts.append(half)
    return tuple(parts)


def cmd_entropy(cfg: RunConfig) -> tuple[int, str]:
    sg = load_circuit(cfg.circuit)
    psi = parse_input(cfg.input, sg.circuit.wires, cfg.seed)
    order = _order(sg, cfg)
    parts = cfg.bipartitions or _default_bipartitions(sg, order)
    for part in parts:
        if not part or any(not 1 <= v <= sg.n for v in part) or len(set(part)) >= sg.n:
            raise InvalidInput(f"bipartition {list(part)} is not a proper subset of 1..{sg.n}")
    branches = list(_branches(sg, psi, cfg, order))
    names = [_branch_id(b, order) for b in branches]
    try:
        table = entanglement_report(branches, parts, names)
    except ValueError as exc:
        raise RegisterCapError(str(exc)) from None
    spread = table.spread
    passed = bool(np.all(spread <= cfg.tol))
    if cfg.format == "csv":
        return (EXIT_OK if passed else EXIT_FAIL), table.to_csv()
    report = _header(cfg)
    report.update(
        {
            "measured": order,
            "bipartitions": [list(p) for p in table.bipartitions],
            "spread": [float(x) for x in spread],
            "entropies": {name: [float(x) for x in table.values[r]] for r, name in enumerate(table.branches)},
            "passed": passed,
        }
    )
    return (EXIT_OK if passed else EXIT_FAIL), json.dumps(report, indent=2)


def cmd_selftest(cfg: RunConfig) -> tuple[int, str]:
    results = run_all(cfg.seed, list(cfg.suites) if cfg.suites else None)
    passed = all(r.passed for r in results)
    if cfg.format == "csv":
        table = [["suite", "check", "passed", "value", "tol"]]
        table += [[r.suite, r.name, r.passed, _fmt(r.value), _fmt(r.tol)] for r in results]
        return (EXIT_OK if passed else EXIT_FAIL), _csv(table)
    report = _header(cfg)
    report["checks"] = [r.to_json() for r in results]
    report["passed"] = passed
    return (EXIT_OK if passed else EXIT_FAIL), json.dumps(report, indent=2)


COMMANDS = {
    "build": cmd_build,
    "run": cmd_run,
    "branches": cmd_branches,
    "equiv": cmd_equiv,
    "entropy": cmd_entropy,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--circuit", help="circuit JSON file")
    common.add_argument("--input", default="random", help="random | letters over 0 1 + - | JSON amplitude list or file")
    common.add_argument("--measure", help="ordered vertex list to measure, e.g. 1,2,3,5,6 (default: every measurable qubit)")
    common.add_argument("--outcomes", help="JSON file with forced outcomes (run only)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--max-qubits", type=int, default=MAX_QUBITS)
    common.add_argument("--bipartitions", help="parts separated by ';', e.g. '1-11;11;19'")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", help="write the report here instead of standard output")
    common.add_argument("--cap", type=int, default=DEFAULT_BRANCH_CAP, help="maximum number of measured qubits to enumerate")
    common.add_argument("--pair-sample", type=int, default=512, help="pairs checked when sampling")
    common.add_argument("--pair-threshold", type=int, default=128, help="sample pairs above this many branches")
    common.add_argument("--suites", help=f"comma-separated subset of {','.join(SUITES)} (selftest only)")

    parser = argparse.ArgumentParser(prog="oneway", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"oneway {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "build": "print the stitched graph of a circuit",
        "run": "execute a circuit with sampled or forced outcomes",
        "branches": "enumerate every outcome branch",
        "equiv": "certify local-unitary equivalence between branches",
        "entropy": "entanglement entropy per branch and bipartition",
        "selftest": "run the built-in invariant checks",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def make_config(args: argparse.Namespace) -> RunConfig:
    if not args.tol > 0:
        raise InvalidInput("--tol must be positive")
    if not 1 <= args.max_qubits <= MAX_QUBITS:
        raise InvalidInput(f"--max-qubits must lie in 1..{MAX_QUBITS}")
    if args.cap < 0 or args.pair_sample < 1 or args.pair_threshold < 1:
        raise InvalidInput("--cap, --pair-sample and --pair-threshold must be positive")
    if args.format == "csv" and args.command in ("build", "run"):
        raise InvalidInput(f"{args.command} only writes JSON")
    suites = None
    if args.suites:
        suites = tuple(s.strip() for s in args.suites.split(",") if s.strip())
        unknown = sorted(set(suites) - set(SUITES))
        if unknown:
            raise InvalidInput(f"unknown suites {unknown}")
    return RunConfig(
        command=args.command,
        circuit=args.circuit,
        input=args.input,
        measure=parse_vertices(args.measure) if args.measure else None,
        outcomes=args.outcomes,
        seed=args.seed,
        tol=args.tol,
        max_qubits=args.max_qubits,
        bipartitions=parse_bipartitions(args.bipartitions) if args.bipartitions else None,
        format=args.format,
        out=args.out,
        cap=args.cap,
        pair_sample=args.pair_sample,
        pair_threshold=args.pair_threshold,
        suites=suites,
    )


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = make_config(args)
        code, text = COMMANDS[cfg.command](cfg)
    except ParseError as exc:
        print(f"oneway: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InvalidInput as exc:
        print(f"oneway: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (RegisterCapError, BranchCapError) as exc:
        print(f"oneway: resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    if not text.endswith("\n"):
        text += "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            sys.stdout = None
    if code == EXIT_FAIL:
        print("oneway: verification failed", file=sys.stderr)
    return code
