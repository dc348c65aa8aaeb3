"""Command-line front end.

Exit codes: 0 success/valid, 1 verification failure, 2 malformed input, 3 config error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__, designs
from .experiments import FIG2_M, FIG2_SIGMAS, run_custom, run_fig1, run_fig2, run_weak_faulty
from .pauli_frame import parse_grid
from .sequence_synth import (
    CouplingModel,
    FrameMatrix,
    diagonal_decoupling,
    general_decoupling,
    metrics,
    nested_decoupling,
    nn_coloring,
    verify_first_order,
    zeeman_free,
)
from .simulator import ConfigError

EXIT_OK, EXIT_FAIL, EXIT_MALFORMED, EXIT_CONFIG = 0, 1, 2, 3
OUT_DIR_ENV = "SPINDECOUPLE_OUT_DIR"


def _default_out() -> Path:
    return Path(os.environ.get(OUT_DIR_ENV, "spindecouple_out"))


def _bound_check(model: str, f: FrameMatrix) -> str:
    n, slots = f.n_qubits, f.n_slots
    if model == "general" and n >= 3:
        return f"slots <= 6N-2: {slots <= 6 * n - 2}"
    if model == "diagonal" and n >= 3:
        return f"slots < 2N: {slots < 2 * n}"
    return "no bound"


def cmd_synth(args: argparse.Namespace) -> int:
    n = args.n
    try:
        if args.zeeman_free:
            if args.model not in ("general", "diagonal"):
                raise ValueError("--zeeman-free supports the general and diagonal models")
            f = zeeman_free(n, args.model, args.tau)
        elif args.model == "general":
            f = general_decoupling(n, args.tau)
        elif args.model == "diagonal":
            f = diagonal_decoupling(n, args.tau)
        elif args.model == "nested":
            f = nested_decoupling(n, args.tau, args.max_slots)
        else:
            f = nn_coloring(n, args.nn_base, args.tau)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    met = metrics(f)
    print(f.grid())
    print(
        f"qubits={f.n_qubits} slots={met.n_slots} pulses={met.pulse_count} closing={met.closing_pulses} "
        f"duration={met.duration:g}s z_pulses={met.z_pulses} {_bound_check(args.model, f)}"
    )
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(f.to_json())
        out.with_suffix(".txt").write_text(f.grid() + "\n")
    return EXIT_OK


def _load_frames(path: Path) -> FrameMatrix:
    text = path.read_text()
    if text.lstrip().startswith("{"):
        return FrameMatrix.from_json(text)
    return FrameMatrix(parse_grid(text))


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        f = _load_frames(Path(args.file))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    model = CouplingModel.chain(f.n_qubits, args.model) if args.topology == "chain" else CouplingModel(args.model)
    report = verify_first_order(f, model, check_zeeman=bool(args.zeeman), zeeman_axes=args.zeeman or "xyz")
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_design(args: argparse.Namespace) -> int:
    if args.action == "verify":
        try:
            d = designs.design_from_json(Path(args.target).read_text())
            report = designs.verify_oa(d) if isinstance(d, designs.OrthogonalArray) else designs.verify_difference_scheme(d)
        except (OSError, ValueError) as exc:
            print(f"malformed input: {exc}", file=sys.stderr)
            return EXIT_MALFORMED
        print("valid" if report.valid else f"invalid: {len(report.violations)} violations")
        for v in report.violations[:20]:
            print(f"  rows {v.rows} symbols {v.symbols}: {v.count} (expected {v.expected})")
        return EXIT_OK if report.valid else EXIT_FAIL
    try:
        kind, _, arg = args.target.partition(":")
        if kind == "bose-bush":
            d = designs.bose_bush_oa(int(arg))
        elif kind == "hadamard":
            d = designs.hadamard_power_of_two(int(arg))
        else:
            d = designs.builtin(args.target)
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = designs.design_to_json(d)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return EXIT_OK


def _write_manifest(out_dir: Path, command: str, config: dict[str, Any], seed: int, outputs: list[Path]) -> Path:
    blob = json.dumps(config, sort_keys=True).encode()
    manifest = {
        "command": command,
        "config": config,
        "config_hash": hashlib.sha256(blob).hexdigest(),
        "seed": seed,
        "tool_version": __version__,
        "outputs": sorted(p.name for p in outputs),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def cmd_experiment(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir) if args.out_dir else _default_out()
    name = args.name
    config: dict[str, Any] = {"experiment": name}
    try:
        if name == "fig1":
            curves = run_fig1()
        elif name == "fig2":
            sigmas = args.sigma or list(FIG2_SIGMAS)
            m_grid = args.m or list(FIG2_M)
            config |= {"sigmas": sigmas, "m": m_grid, "realizations": args.realizations}
            curves = run_fig2(sigmas, m_grid, args.realizations, args.seed, args.workers)
        elif name == "weak_faulty":
            sigmas = args.sigma or [0.02, 0.05, 0.1]
            m_grid = args.m or [1, 10, 40]
            config |= {"sigmas": sigmas, "m": m_grid, "realizations": args.realizations}
            curves = [run_weak_faulty(s, m_grid, args.realizations, args.seed, args.workers) for s in sigmas]
        else:
            if not args.config:
                raise ConfigError(["custom experiment needs --config FILE"])
            try:
                data = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError([f"cannot read config: {exc}"]) from None
            config |= {"custom": data}
            curves = [run_custom(data, args.seed, args.workers)]
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outputs: list[Path] = []
    for c in curves:
        outputs.extend(c.write(out_dir))
    command = f"experiment {name} --seed {args.seed}"
    if name == "custom":
        command += f" --config {args.config}"
    elif name != "fig1":
        command += f" --realizations {args.realizations}"
        command += "".join(f" --sigma {s}" for s in config["sigmas"]) + "".join(f" --m {m}" for m in config["m"])
    manifest = _write_manifest(out_dir, command, config, args.seed, outputs)
    for c in curves:
        best = int(np.argmax(c.values))
        print(f"{c.label}: {len(c.values)} points, max {c.values[best]:.6f} at {c.abscissa_name}={c.abscissa[best]:g}")
    print(f"wrote {len(outputs)} files and {manifest}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spindecouple", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="synthesize a decoupling frame matrix")
    s.add_argument("--n", type=int, required=True, help="number of qubits")
    s.add_argument("--model", choices=["general", "diagonal", "nested", "nn"], default="general")
    s.add_argument("--nn-base", choices=["general", "diagonal"], default="diagonal", help="coupling kind for --model nn")
    s.add_argument("--zeeman-free", action="store_true")
    s.add_argument("--tau", type=float, default=1.0, help="slot length in seconds")
    s.add_argument("--max-slots", type=int, default=4**6)
    s.add_argument("--out", help="write FrameMatrix JSON here (plus a .txt grid)")
    s.set_defaults(func=cmd_synth)

    v = sub.add_parser("verify", help="check first-order decoupling of a frame matrix file")
    v.add_argument("file")
    v.add_argument("--model", choices=["general", "diagonal"], default="general")
    v.add_argument("--topology", choices=["all", "chain"], default="all")
    v.add_argument(
        "--zeeman", nargs="?", const="xyz", default=None, metavar="AXES",
        help="also require vanishing Zeeman averages (optionally only some axes, e.g. --zeeman z)",
    )
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("design", help="build or verify orthogonal arrays / difference schemes")
    d.add_argument("action", choices=["build", "verify"])
    d.add_argument("target", help="build: M4 | M8 | OA16_5 | bose-bush:U | hadamard:U; verify: JSON file")
    d.add_argument("--out")
    d.set_defaults(func=cmd_design)

    e = sub.add_parser("experiment", help="run a fidelity experiment and write CSV + manifest")
    e.add_argument("name", choices=["fig1", "fig2", "weak_faulty", "custom"])
    e.add_argument("--config", help="JSON config for the custom experiment")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--realizations", type=int, default=1000)
    e.add_argument("--sigma", type=float, action="append", help="repeatable; overrides the default sigma list")
    e.add_argument("--m", type=int, action="append", help="repeatable; overrides the default m grid")
    e.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV} or ./spindecouple_out)")
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
