"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 validation/parse error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .circuit import Layout, circuit_from_text, circuit_to_text, count_two_qubit_gates, depth
from .device import resolve_device, serialize_device, validate_executable
from .errors import CompilerError, ParseError, ValidationError
from .experiment import ExperimentConfig, run_experiment, run_training
from .fom import KINDS, FigureOfMeritSpec
from .passes import FIXED_LAYOUT
from .search import PassAction, run_baseline, run_sequence

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def parse_pass_list(text: str) -> list[PassAction]:
    """Comma-separated pass names; ``layout_random:SEED`` and ``layout_fixed:P0:P1:...``."""
    actions = []
    for item in filter(None, (t.strip() for t in text.split(","))):
        name, *args = item.split(":")
        try:
            if name == "layout_random":
                actions.append(PassAction(name, seed=int(args[0]) if args else 0))
            elif name == FIXED_LAYOUT:
                actions.append(PassAction(name, layout=Layout(tuple(int(a) for a in args))))
            else:
                if args:
                    raise ValidationError(f"{name} takes no arguments", "passes")
                actions.append(PassAction(name))
        except ValueError as exc:
            raise ValidationError(f"bad pass spec {item!r}: {exc}", "passes") from exc
    return actions


def cmd_compile(args) -> int:
    try:
        text = Path(args.circuit).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read circuit file {args.circuit}: {exc}") from exc
    circuit = circuit_from_text(text)
    device = resolve_device(args.device)
    if args.passes:
        actions = parse_pass_list(args.passes)
        state = run_sequence(circuit, device, actions)
        # a routed circuit is finalised into native gates (SWAPs become CX triples)
        if state.routed and not validate_executable(state.circuit, device).ok:
            state = run_sequence(circuit, device, actions + [PassAction("translate")])
    else:
        result = run_baseline(args.preset or "o1", circuit, device, FigureOfMeritSpec("two_qubit_count"),
                              args.seed)
        state = result.state
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "compiled.txt").write_text(circuit_to_text(state.circuit))
    report = validate_executable(state.circuit, device)
    summary = {
        "device": device.name,
        "passes": list(state.history),
        "instructions": len(state.circuit),
        "two_qubit_gates": count_two_qubit_gates(state.circuit),
        "depth": depth(state.circuit),
        "swaps": state.swaps,
        "executable": report.ok,
        "final_layout": list(state.final_layout.physical) if state.final_layout else None,
    }
    (out / "report.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ParseError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"{args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ParseError("config must be a JSON object")
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out is not None:
        data["output"] = args.out
    if getattr(args, "fom", None):
        data.setdefault("fom", {})["kind"] = args.fom
    if getattr(args, "preset", None):
        data.setdefault("baseline", {})["preset"] = args.preset
    return ExperimentConfig.from_dict(data)


def cmd_train(args) -> int:
    summary = run_training(_config(args))
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = _config(args)
    manifest = run_experiment(cfg)
    print(json.dumps({"output": cfg.raw["output"], "complete": manifest["complete"],
                      "search_min_kl": manifest["search"]["min_kl"]}, sort_keys=True))
    return EXIT_OK


def cmd_device_show(args) -> int:
    sys.stdout.write(serialize_device(resolve_device(args.device)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="appcomp", description="Application-aware quantum circuit compilation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("compile", help="compile a circuit file for a device")
    c.add_argument("circuit")
    c.add_argument("--device", default="quito", help="mock device name or device file")
    g = c.add_mutually_exclusive_group()
    g.add_argument("--preset", choices=["o1", "o3"])
    g.add_argument("--passes", help="comma-separated pass list, e.g. translate,layout_fixed:3:2:4:1,route")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", default="compiled")
    c.set_defaults(func=cmd_compile)

    for name, func, helptext in (("train", cmd_train, "train the QCBM on one compiled circuit"),
                                 ("experiment", cmd_experiment, "baselines vs pass-sequence search")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config")
        s.add_argument("--seed", type=int)
        s.add_argument("--out")
        s.add_argument("--preset", choices=["o1", "o3"])
        s.add_argument("--fom", choices=list(KINDS))
        s.set_defaults(func=func)

    d = sub.add_parser("device", help="device utilities")
    dsub = d.add_subparsers(dest="device_command", required=True, parser_class=_Parser)
    show = dsub.add_parser("show", help="print a device file")
    show.add_argument("device")
    show.set_defaults(func=cmd_device_show)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ParseError, ValidationError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CompilerError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
