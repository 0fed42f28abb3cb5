"""``photonsim`` command line.

Subcommands::

    photonsim run CIRCUIT.json [--shots N] [--seed S] [--out samples.csv]
    photonsim probs CIRCUIT.json [--max-total N] [--out probs.csv]
    photonsim bench --kernel hafnian --sizes 2..12 [--reps K] [--runs R] [--impl compiled|python] [--out bench.csv]
    photonsim validate CIRCUIT.json

Exit codes: 0 success, 2 unreadable or schema-invalid input, 3 program
validation failure, 4 numerical failure.  ``run`` and ``probs`` write a
``<out>.meta.json`` sidecar (seed, generator, diagnostics) next to file
outputs.  ``PHOTONSIM_NUM_THREADS`` caps kernel worker threads and
``PHOTONSIM_KERNELS=python`` forces the pure-Python kernels.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import jsonschema
import numpy as np

from . import bench as _bench
from . import kernels
from .program import (
    PARAMS,
    SIMULATORS,
    CircuitProgram,
    ExecutionConfig,
    Instruction,
    NumericalError,
    ValidationError,
    exact_probabilities,
    execute,
    validate,
)

EXIT_OK, EXIT_INPUT, EXIT_VALIDATION, EXIT_NUMERIC = 0, 2, 3, 4
SCHEMA_VERSION = "1.0"

_NUMBER = {"type": "number"}
_PAIR = {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2}
_PARAM_SCHEMA = {
    "angle": {"type": "number", "minimum": 0},
    "nonneg": {"type": "number", "minimum": 0},
    "real": _NUMBER,
    "unit": {"type": "number", "minimum": 0, "maximum": 1},
    "complex": {"oneOf": [_NUMBER, _PAIR]},
    "occupation": {"type": "array", "items": {"type": "integer", "minimum": 0}},
    "matrix": {"type": "array", "items": {"type": "array", "items": {"oneOf": [_NUMBER, _PAIR]}}},
}


def circuit_schema() -> dict:
    """JSON schema of circuit documents (version 1.0)."""
    branches = []
    for name, spec in PARAMS.items():
        branches.append(
            {
                "if": {"properties": {"name": {"const": name}}},
                "then": {
                    "properties": {
                        "params": {
                            "type": "object",
                            "additionalProperties": False,
                            "properties": {p: _PARAM_SCHEMA[kind] for p, (kind, _) in spec.items()},
                            "required": [p for p, (_, req) in spec.items() if req],
                        }
                    }
                },
            }
        )
    instruction = {
        "type": "object",
        "additionalProperties": False,
        "required": ["name"],
        "properties": {
            "name": {"enum": list(PARAMS)},
            "modes": {"type": "array", "items": {"type": "integer", "minimum": 0}},
            "params": {"type": "object"},
        },
        "allOf": branches,
    }
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "photonsim circuit",
        "type": "object",
        "additionalProperties": False,
        "required": ["version", "simulator", "modes", "instructions"],
        "properties": {
            "version": {"const": SCHEMA_VERSION},
            "simulator": {"enum": list(SIMULATORS)},
            "modes": {"type": "integer", "minimum": 1},
            "config": {
                "type": "object",
                "additionalProperties": False,
                "properties": {
                    "cutoff": {"type": "integer", "minimum": 1},
                    "hbar": {"type": "number", "exclusiveMinimum": 0},
                    "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                    "shots": {"type": "integer", "minimum": 1},
                },
            },
            "instructions": {"type": "array", "items": instruction},
        },
    }


class InputError(Exception):
    """Unreadable, malformed or schema-invalid circuit document."""


def load_document(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(doc, circuit_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "(root)"
        raise InputError(f"{path}: schema violation at {where}: {exc.message}") from exc
    return doc


def program_from_document(doc: dict, shots: Optional[int] = None, seed: Optional[int] = None) -> CircuitProgram:
    cfg = dict(doc.get("config", {}))
    if shots is not None:
        cfg["shots"] = shots
    if seed is not None:
        cfg["seed"] = seed
    instructions = tuple(Instruction(i["name"], tuple(i.get("modes", ())), i.get("params", {})) for i in doc["instructions"])
    return CircuitProgram(doc["modes"], doc["simulator"], instructions, ExecutionConfig(**cfg))


def _report_violations(violations) -> int:
    for v in violations:
        print(f"error: {v}", file=sys.stderr)
    return EXIT_VALIDATION


@contextmanager
def _output(path: Optional[str]):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _write_sidecar(out: Optional[str], meta: dict) -> None:
    if out is None or out == "-":
        return
    Path(out + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj)}")


def samples_csv(batch, d: int) -> str:
    """CSV text for a sample batch; repeatable byte for byte."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if batch is None:
        writer.writerow([f"mode_{m}" for m in range(d)])
        return buf.getvalue()
    data = batch.samples
    if np.iscomplexobj(data):
        writer.writerow([f"mode_{m}_{part}" for m in batch.modes for part in ("re", "im")])
        for row in data:
            writer.writerow([repr(float(v)) for z in row for v in (z.real, z.imag)])
    elif np.issubdtype(data.dtype, np.floating):
        writer.writerow([f"mode_{m}" for m in batch.modes])
        for row in data:
            writer.writerow([repr(float(v)) for v in row])
    else:
        writer.writerow([f"mode_{m}" for m in batch.modes])
        writer.writerows(row.tolist() for row in data)
    return buf.getvalue()


# -- subcommands --------------------------------------------------------------


def cmd_run(args) -> int:
    doc = load_document(args.circuit)
    program = program_from_document(doc, args.shots, args.seed)
    violations = validate(program)
    if violations:
        return _report_violations(violations)
    program = replace(program, config=program.config.with_seed())
    try:
        result = execute(program)
    except NumericalError as exc:
        print(f"error: numerical failure at {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    with _output(args.out) as fh:
        fh.write(samples_csv(result.samples, program.d))
    meta = {
        "version": SCHEMA_VERSION,
        "circuit": str(args.circuit),
        "simulator": program.simulator,
        "seed": program.config.seed,
        "shots": program.config.shots if result.samples is not None else 0,
        "cutoff": program.config.cutoff,
        "hbar": program.config.hbar,
        "kernels": kernels.BACKEND,
        "diagnostics": result.diagnostics,
    }
    _write_sidecar(args.out, meta)
    if args.out not in (None, "-"):
        print(f"wrote {result.samples.shots if result.samples is not None else 0} shots to {args.out} (seed {program.config.seed})", file=sys.stderr)
    return EXIT_OK


def cmd_probs(args) -> int:
    doc = load_document(args.circuit)
    program = program_from_document(doc)
    violations = validate(program)
    if violations:
        return _report_violations(violations)
    try:
        rows, tail = exact_probabilities(program, args.max_total)
    except NumericalError as exc:
        print(f"error: numerical failure at {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    width = len(rows[0][0]) if rows else program.d
    with _output(args.out) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"mode_{m}" for m in range(width)] + ["probability"])
        for pattern, p in rows:
            writer.writerow(list(pattern) + [repr(float(p))])
    _write_sidecar(args.out, {"version": SCHEMA_VERSION, "circuit": str(args.circuit), "max_total": args.max_total, "tail_mass": tail, "rows": len(rows)})
    print(f"tail mass beyond {args.max_total} photons: {tail:.3e}", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        sizes = _bench.parse_sizes(args.sizes, args.kernel)
        for n in sizes:
            _bench.check_size(args.kernel, n, args.reps)
        if args.impl is not None and args.impl not in kernels.available_impls():
            raise ValueError(f"kernel implementation {args.impl!r} is not available")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    records = _bench.run_bench(args.kernel, sizes, args.reps, args.runs, args.impl, args.seed)
    with _output(args.out) as fh:
        _bench.write_csv(records, fh)
    return EXIT_OK


def cmd_validate(args) -> int:
    doc = load_document(args.circuit)
    violations = validate(program_from_document(doc))
    if violations:
        for v in violations:
            print(str(v))
        return EXIT_VALIDATION
    print("ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="photonsim", description="Photonic circuit simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a circuit and write samples as CSV")
    p.add_argument("circuit")
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="-", help="CSV path ('-' for stdout)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("probs", help="exact outcome probabilities up to a total photon number")
    p.add_argument("circuit")
    p.add_argument("--max-total", type=int, default=8)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_probs)

    p = sub.add_parser("bench", help="time a kernel over a range of sizes")
    p.add_argument("--kernel", required=True, choices=_bench.KERNELS)
    p.add_argument("--sizes", required=True, help="a..b or a..b:step")
    p.add_argument("--reps", type=int, default=1, help="repetition count applied to every row/column")
    p.add_argument("--runs", type=int, default=100, help="runs averaged when one run is under 1 s")
    p.add_argument("--impl", choices=("compiled", "python"))
    p.add_argument("--seed", type=int, default=_bench.DEFAULT_SEED)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("validate", help="check a circuit document")
    p.add_argument("circuit")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValidationError as exc:
        return _report_violations(exc.violations)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
