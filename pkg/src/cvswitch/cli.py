"""Command-line front end.

Exit codes: 0 success, 1 Monte-Carlo check failed, 2 usage or parse error.
The default output format comes from ``CVSWITCH_FORMAT`` (``csv`` or
``json``) and falls back to ``json``.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import itertools
import json
import math
import os
import sys
import warnings
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from . import circuit, montecarlo, protocol
from .algebra import variance
from .protocol import SwitchParams

FORMAT_ENV = "CVSWITCH_FORMAT"
FORMATS = ("csv", "json")

#: Sweepable flags in row-major axis order.
SWEEP_AXES = ("ra", "rb", "g1", "g2", "alpha_re", "alpha_im")

MC_FIELDS = ("quantity", "mc", "analytic", "se", "z", "flagged")
RUN_FIELDS = ("output", "mean_x", "mean_y", "var_x", "var_y", "fidelity")


class UsageError(Exception):
    pass


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(out, fields: Sequence[str], rows: Iterable[Dict[str, object]]) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(fields)
    for row in rows:
        w.writerow([_fmt(row.get(f)) for f in fields])


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def write_json(out, payload) -> None:
    json.dump(_json_safe(payload), out, indent=2)
    out.write("\n")


@contextlib.contextmanager
def _open_output(path: Optional[str]):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _default_format() -> str:
    fmt = os.environ.get(FORMAT_ENV, "json").strip().lower() or "json"
    if fmt not in FORMATS:
        raise UsageError(f"{FORMAT_ENV} must be one of {FORMATS}, got {fmt!r}")
    return fmt


class Axis(list):
    """Grid values of one sweep flag; ``swept`` is set when range syntax was used."""

    def __init__(self, values, swept=False):
        super().__init__(values)
        self.swept = swept


def parse_axis(text: str) -> Axis:
    """``"1.5"`` -> ``[1.5]``; ``"start:stop:count"`` -> ``count`` evenly spaced points."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return Axis([float(parts[0])])
        if len(parts) == 3:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1:
                raise ValueError
            return Axis([float(v) for v in np.linspace(start, stop, count)], swept=True)
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"malformed range {text!r}; expected start:stop:count")


def _add_param_flags(p: argparse.ArgumentParser, type_=float, defaults=True) -> None:
    d = (lambda v: v) if defaults else (lambda v: None)
    p.add_argument("--ra", type=type_, default=d(0.0), help="EPR1 correlation parameter r_a")
    p.add_argument("--rb", type=type_, default=d(0.0), help="EPR2 correlation parameter r_b")
    p.add_argument("--g1", type=type_, default=d(1.0), help="feedforward gain to Bob1")
    p.add_argument("--g2", type=type_, default=d(1.0), help="feedforward gain to Bob2")
    p.add_argument("--alpha-re", dest="alpha_re", type=type_, default=d(0.0), help="Re of the input amplitude")
    p.add_argument("--alpha-im", dest="alpha_im", type=type_, default=d(0.0), help="Im of the input amplitude")


def _add_output_flags(p: argparse.ArgumentParser, with_format=True) -> None:
    if with_format:
        p.add_argument("--format", choices=FORMATS, default=None,
                       help=f"output format (default: ${FORMAT_ENV} or json)")
    p.add_argument("-o", "--output", default=None, help="output path (default: stdout)")


def _params(args) -> SwitchParams:
    return SwitchParams(args.ra, args.rb, args.g1, args.g2, complex(args.alpha_re, args.alpha_im))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvswitch", description="Continuous-variable teleportation switch simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fidelity", help="analytic variances, fidelities, witnesses and route")
    _add_param_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("sweep", help="CSV grid over up to two parameter ranges")
    _add_param_flags(p, type_=parse_axis)
    _add_output_flags(p, with_format=False)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mc", help="Monte-Carlo estimates checked against the analytic values")
    _add_param_flags(p)
    p.add_argument("--shots", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    _add_output_flags(p)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("run", help="elaborate a .cvc circuit file")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("circuit", nargs="?", help="path to a .cvc file")
    src.add_argument("--preset", help="bundled circuit name, e.g. 'switch'")
    _add_param_flags(p, defaults=False)
    p.add_argument("--set", dest="assign", action="append", default=[], metavar="NAME=VALUE",
                   help="placeholder value (repeatable)")
    p.add_argument("--input", dest="input_mode", help="INPUT mode to compare outputs against for fidelity")
    p.add_argument("--gain", action="append", default=[], metavar="OUTPUT=G",
                   help="gain used in the fidelity of OUTPUT (default: its single FEEDFORWARD gain)")
    _add_output_flags(p)
    p.set_defaults(func=cmd_run)
    return parser


def cmd_fidelity(args) -> int:
    rep = protocol.report(_params(args))
    fmt = args.format or _default_format()
    with _open_output(args.output) as out:
        if fmt == "json":
            write_json(out, rep.as_row())
        else:
            write_csv(out, protocol.REPORT_FIELDS, [rep.as_row()])
    return 0


def sweep_rows(axes: Dict[str, List[float]]) -> Iterable[Dict[str, object]]:
    """Row-major grid over ``SWEEP_AXES`` order; last axis varies fastest."""
    for point in itertools.product(*(axes[n] for n in SWEEP_AXES)):
        v = dict(zip(SWEEP_AXES, point))
        p = SwitchParams(v["ra"], v["rb"], v["g1"], v["g2"], complex(v["alpha_re"], v["alpha_im"]))
        yield protocol.report(p).as_row()


def cmd_sweep(args) -> int:
    axes = {flag: getattr(args, flag) for flag in SWEEP_AXES}
    swept = [f for f, v in axes.items() if isinstance(v, Axis) and v.swept]
    if len(swept) > 2:
        raise UsageError(f"at most 2 swept axes, got {len(swept)}: {', '.join(swept)}")
    axes = {f: (v if isinstance(v, Axis) else [float(v)]) for f, v in axes.items()}
    with _open_output(args.output) as out:
        write_csv(out, protocol.REPORT_FIELDS, sweep_rows(axes))
    return 0


def cmd_mc(args) -> int:
    p = _params(args)
    try:
        cfg = montecarlo.ShotConfig(args.shots, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.shots < 2:
        print("warning: single shot, variance standard errors are undefined", file=sys.stderr)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        cmp = montecarlo.compare_to_analytic(p, cfg, workers=max(1, args.workers))

    rows = [{"quantity": r.name, "mc": r.mc, "analytic": r.analytic, "se": r.se, "z": r.z,
             "flagged": r.flagged} for r in cmp.rows]
    fmt = args.format or _default_format()
    with _open_output(args.output) as out:
        if fmt == "json":
            write_json(out, {
                "params": protocol.params_dict(p),
                "shots": cfg.n_shots,
                "seed": cfg.seed,
                "ok": cmp.ok,
                "quantities": rows,
                "fidelity": {bob: {"mc": cmp.fidelity_mc[bob], "analytic": cmp.fidelity_analytic[bob]}
                             for bob in cmp.fidelity_mc},
            })
        else:
            fid_rows = [{"quantity": f"{bob}.fidelity", "mc": cmp.fidelity_mc[bob],
                         "analytic": cmp.fidelity_analytic[bob]} for bob in cmp.fidelity_mc]
            write_csv(out, MC_FIELDS, rows + fid_rows)
    for r in cmp.flagged:
        print(f"flagged: {r.name} z={r.z:.3g}", file=sys.stderr)
    return 0 if cmp.ok else 1


def _assignments(args) -> Dict[str, object]:
    values: Dict[str, object] = {}
    for flag in SWEEP_AXES:
        v = getattr(args, flag)
        if v is not None:
            values[flag] = v
    for item in args.assign:
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise UsageError(f"--set expects NAME=VALUE, got {item!r}")
        values[name.strip()] = value.strip()
    return values


def cmd_run(args) -> int:
    if args.preset:
        try:
            source = circuit.preset_source(args.preset)
        except FileNotFoundError:
            raise UsageError(f"unknown preset {args.preset!r}") from None
        where = f"{args.preset}.cvc"
    else:
        try:
            with open(args.circuit, encoding="utf-8") as fh:
                source = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read {args.circuit}: {exc.strerror}") from None
        where = args.circuit
    try:
        ast = circuit.parse(circuit.substitute(source, _assignments(args)))
    except circuit.PlaceholderError as exc:
        raise UsageError(f"{where}: {exc}") from None
    except circuit.ParseError as exc:
        raise UsageError(f"{where}:{exc}") from None

    elab = circuit.elaborate(ast)
    gains = _gains(args, ast)
    alpha = None
    if args.input_mode is not None:
        if args.input_mode not in elab.inputs:
            raise UsageError(f"--input {args.input_mode!r} is not an INPUT mode of {where}")
        alpha = elab.inputs[args.input_mode]

    rows = []
    for name, mode in elab.outputs.items():
        vx, vy = variance(mode.x), variance(mode.y)
        fid = None
        if alpha is not None and name in gains:
            fid = protocol.fidelity_from_variances(vx, vy, gains[name], alpha)
        rows.append({"output": name, "mean_x": mode.x.mean, "mean_y": mode.y.mean,
                     "var_x": vx, "var_y": vy, "fidelity": fid})

    fmt = args.format or _default_format()
    with _open_output(args.output) as out:
        if fmt == "json":
            write_json(out, {"outputs": rows})
        else:
            write_csv(out, RUN_FIELDS, rows)
    return 0


def _gains(args, ast: circuit.CircuitAst) -> Dict[str, float]:
    per_target: Dict[str, List[float]] = {}
    for s in ast.statements:
        if isinstance(s, circuit.Feedforward):
            per_target.setdefault(s.target, []).append(s.gain)
    gains = {t: g[0] for t, g in per_target.items() if len(g) == 1}
    for item in args.gain:
        name, sep, value = item.partition("=")
        try:
            gains[name.strip()] = float(value)
        except ValueError:
            raise UsageError(f"--gain expects OUTPUT=G, got {item!r}") from None
        if not sep:
            raise UsageError(f"--gain expects OUTPUT=G, got {item!r}")
    return gains


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(_glue_negative_values(sys.argv[1:] if argv is None else argv))
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"cvswitch {args.command}: error: {exc}", file=sys.stderr)
        return 2


_NUMERIC_FLAGS = {"--ra", "--rb", "--g1", "--g2", "--alpha-re", "--alpha-im"}


def _glue_negative_values(argv: Sequence[str]) -> List[str]:
    """Attach values like ``-3:3:61`` to their flag; argparse would read them as options."""
    out: List[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if tok in _NUMERIC_FLAGS and nxt is not None and nxt.startswith("-") and ":" in nxt:
            out.append(f"{tok}={nxt}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


if __name__ == "__main__":
    sys.exit(main())
