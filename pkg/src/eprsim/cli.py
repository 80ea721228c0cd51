"""Command-line front end.

Exit codes: 0 success, 1 failed verification check, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .circuit import GhzCircuitLayout, analyze_output, canonical_layout, run_ghz_circuit
from .elements import DetectorModel
from .fock import FockError, trace_distance
from .fusion import fit_id_ghz, fuse_id_ghz, id_ghz, outcome_probabilities, success_state
from .serialize import to_json
from .sources import BellForm, CavityPair, HeraldedEpr, PerfectEpr, SpdcEpr, source_to_dict
from .threshold import Axis, SweepSpec, rows_to_csv, sweep
from .verify import SUITES, run_suite

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2

GHZ_CSV_HEADER = (
    "eta_s", "eta_d", "x", "p0", "p1", "p2", "p3",
    "probability", "ghz_fidelity", "fitted_f", "residual",
)


class UsageError(Exception):
    pass


def _add_source_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--source", choices=["perfect-epr", "heralded-epr", "spdc", "cavity"],
                   default="perfect-epr")
    p.add_argument("--eta-s", type=float, default=1.0)
    p.add_argument("--x", type=float, default=1.0)
    p.add_argument("--double-pair", choices=["distinguishable", "bosonic"], default="distinguishable")
    for name in ("p0", "p1", "p2", "p3"):
        p.add_argument(f"--{name}", type=float, default=0.0)
    p.add_argument("--bell-form", choices=[b.value for b in BellForm], default="phi_plus")


def _add_detector_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eta-d", type=float, default=1.0)
    p.add_argument("--number-resolving", action="store_true")


def _add_output_flags(p: argparse.ArgumentParser, default_format: str = "json") -> None:
    p.add_argument("--format", choices=["json", "csv"], default=default_format)
    p.add_argument("--out", type=Path, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eprsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    ghz = sub.add_parser("ghz", help="run the three-pair GHZ construction")
    _add_source_flags(ghz)
    _add_detector_flags(ghz)
    _add_output_flags(ghz)
    ghz.add_argument("--layout", type=Path, default=None, help="circuit layout JSON")
    ghz.add_argument("--dump-layout", type=Path, default=None, help="write the layout used")

    ver = sub.add_parser("verify", help="run a verification suite")
    ver.add_argument("which", choices=[*SUITES, "all"])

    fus = sub.add_parser("fusion", help="type-II fusion of two ID-GHZ states")
    fus.add_argument("--f", type=float, default=0.0)
    fus.add_argument("--n-a", type=int, default=3)
    fus.add_argument("--n-b", type=int, default=3)
    _add_detector_flags(fus)
    _add_output_flags(fus)

    sw = sub.add_parser("sweep", help="tabulate threshold formulas over a grid")
    sw.add_argument("--scheme", choices=["epr", "single_photon", "cavity"], default="epr")
    sw.add_argument("--grid", action="append", default=None, metavar="NAME:MIN:MAX:STEPS")
    sw.add_argument("--eta-s", type=float, default=None)
    sw.add_argument("--eta-d", type=float, default=None)
    sw.add_argument("--p2", type=float, default=None)
    sw.add_argument("--p3", type=float, default=None)
    _add_output_flags(sw, default_format="csv")

    dump = sub.add_parser("dump-config", help="print the config file equivalent to a command line")
    dump.add_argument("args", nargs=argparse.REMAINDER)

    for p in (ghz, ver, fus, sw):
        p.add_argument("--config", type=Path, default=None, help="JSON config mirroring the flags")
    return parser


# --- config files ---------------------------------------------------------

_NOT_CONFIG = {"config", "command", "func"}


def namespace_to_config(ns: argparse.Namespace) -> dict:
    cfg = {"command": ns.command}
    for key, value in sorted(vars(ns).items()):
        if key in _NOT_CONFIG:
            continue
        cfg[key] = str(value) if isinstance(value, Path) else value
    return cfg


def _parse(parser: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    ns = parser.parse_args(argv)
    path = getattr(ns, "config", None)
    if path is None:
        return ns
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if cfg.get("command", ns.command) != ns.command:
        raise UsageError(f"config {path} is for command {cfg['command']!r}, not {ns.command!r}")
    # flags given on the command line win over the file
    given = _explicit(_subparser(parser, ns.command), argv[list(argv).index(ns.command) + 1:])
    for key, value in cfg.items():
        if key in _NOT_CONFIG:
            continue
        if not hasattr(ns, key):
            raise UsageError(f"config {path}: unknown key {key!r}")
        if key not in given:
            if key in ("out", "layout", "dump_layout") and value is not None:
                value = Path(value)
            setattr(ns, key, value)
    return ns


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _explicit(sub: argparse.ArgumentParser, args: Sequence[str]) -> set[str]:
    """Names of the options actually present in ``args``."""
    saved = [(a, a.default) for a in sub._actions]
    for a, _ in saved:
        a.default = argparse.SUPPRESS
    try:
        return set(vars(sub.parse_args(args)))
    finally:
        for a, default in saved:
            a.default = default


# --- commands ---------------------------------------------------------------


def source_from_args(ns: argparse.Namespace):
    if ns.source == "perfect-epr":
        return PerfectEpr()
    if ns.source == "heralded-epr":
        return HeraldedEpr(ns.eta_s)
    if ns.source == "spdc":
        return SpdcEpr(ns.eta_s, ns.x, ns.double_pair)
    return CavityPair(ns.p0, ns.p1, ns.p2, ns.p3, BellForm(ns.bell_form))


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    try:
        out.write_text(text if text.endswith("\n") else text + "\n")
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc.strerror}") from None


def cmd_ghz(ns: argparse.Namespace) -> int:
    spec = source_from_args(ns)
    det = DetectorModel(ns.eta_d, ns.number_resolving)
    layout = canonical_layout()
    if ns.layout is not None:
        try:
            layout = GhzCircuitLayout.from_dict(json.loads(Path(ns.layout).read_text()))
        except OSError as exc:
            raise UsageError(f"cannot read layout {ns.layout}: {exc.strerror}") from None
    if ns.dump_layout is not None:
        _emit(json.dumps(layout.to_dict(), indent=2), Path(ns.dump_layout))

    result = run_ghz_circuit([spec] * 3, det, layout)
    payload = {"source": source_to_dict(spec), "eta_d": ns.eta_d,
               "number_resolving": ns.number_resolving, "probability": result.probability}
    if result.succeeded:
        payload["report"] = analyze_output(result).to_dict()
    else:
        payload["report"] = None
        print("warning: zero success probability, no conditional state", file=sys.stderr)

    if ns.format == "json":
        _emit(to_json(payload), ns.out)
        return EXIT_OK
    rep = payload["report"] or {}
    row = {
        "eta_s": getattr(spec, "eta_s", None) if not isinstance(spec, CavityPair) else None,
        "eta_d": ns.eta_d,
        "x": spec.x if isinstance(spec, SpdcEpr) else None,
        **({f"p{i}": getattr(spec, f"p{i}") for i in range(4)} if isinstance(spec, CavityPair) else {}),
        "probability": result.probability,
        "ghz_fidelity": rep.get("ghz_fidelity"),
        "fitted_f": rep.get("fitted_f"),
        "residual": rep.get("fit_residual"),
    }
    _emit(_csv([row], GHZ_CSV_HEADER), ns.out)
    return EXIT_OK


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if row.get(k) is None else f"{row[k]:.12g}" if isinstance(row[k], float)
                    else row[k] for k in header])
    return buf.getvalue()


def cmd_verify(ns: argparse.Namespace) -> int:
    checks = run_suite(ns.which)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_CHECK_FAILED


def cmd_fusion(ns: argparse.Namespace) -> int:
    det = DetectorModel(ns.eta_d, ns.number_resolving)
    outcomes, modes = fuse_id_ghz(ns.n_a, ns.n_b, ns.f, det)
    p, state = success_state(outcomes)
    payload = {
        "f": ns.f, "n_a": ns.n_a, "n_b": ns.n_b, "eta_d": ns.eta_d,
        "totals": outcome_probabilities(outcomes),
        "outcomes": [
            {"label": o.label, "pattern": o.pattern_str(), "probability": o.probability,
             "corrected": o.corrected}
            for o in outcomes if o.probability > 0
        ],
        "fused_modes": list(modes),
    }
    if state is not None:
        f_hat, resid = fit_id_ghz(state, len(modes))
        payload.update(
            success_probability=p,
            trace_distance_to_id_ghz=trace_distance(state, id_ghz(len(modes), ns.f, modes)),
            fitted_f=f_hat,
            fit_residual=resid,
        )
    if ns.format == "json":
        _emit(to_json(payload), ns.out)
    else:
        rows = [{"label": o["label"], "pattern": o["pattern"], "probability": o["probability"]}
                for o in payload["outcomes"]]
        _emit(_csv(rows, ("label", "pattern", "probability")), ns.out)
    return EXIT_OK


def cmd_sweep(ns: argparse.Namespace) -> int:
    axes = tuple(Axis.parse(g) for g in (ns.grid or ["eta_s:0.01:1:100", "eta_d:0.01:1:100"]))
    fixed = {k: getattr(ns, k) for k in ("eta_s", "eta_d", "p2", "p3") if getattr(ns, k) is not None}
    rows = sweep(SweepSpec(ns.scheme, axes, fixed))
    if ns.format == "csv":
        _emit(rows_to_csv(rows), ns.out)
    else:
        _emit(to_json(rows), ns.out)
    return EXIT_OK


def cmd_dump_config(parser: argparse.ArgumentParser, args: Sequence[str]) -> int:
    if not args or args[0] == "dump-config":
        raise UsageError("dump-config needs a command to describe, e.g. 'dump-config ghz --eta-s 0.5'")
    ns = _parse(parser, list(args))
    print(json.dumps(namespace_to_config(ns), indent=2, sort_keys=True))
    return EXIT_OK


COMMANDS = {"ghz": cmd_ghz, "verify": cmd_verify, "fusion": cmd_fusion, "sweep": cmd_sweep}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if ns.command == "dump-config":
            return cmd_dump_config(parser, ns.args)
        ns = _parse(parser, argv)
        return COMMANDS[ns.command](ns)
    except (UsageError, FockError) as exc:
        print(f"eprsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
