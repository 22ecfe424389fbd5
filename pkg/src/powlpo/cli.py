"""Command-line interface.

Every command prints one ``key=value`` summary line on stdout. Exit codes:
0 success, 1 verification failure, 2 input or configuration error,
3 format error, 4 budget exhausted or verdict inconclusive.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .discovery import discover
from .errors import ConfigError, InputError, PowlError
from .events import EventLog, Granularity, abstract_timestamps, parse_csv, parse_xes
from .intervals import build_interval_log
from .oracle import DEFAULT_LIN_CAP, verify_perfect_fitness
from .petri import DEFAULT_SOUNDNESS_BUDGET, check_soundness, export_net_dot, export_pnml, to_workflow_net
from .pots import build_pot_multiset, export_pot_dot
from .powl import PowlModel, from_json, labels, size, to_json
from .semantics import DEFAULT_ACCEPT_BUDGET

log = logging.getLogger("powlpo")

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_FORMAT, EXIT_BUDGET = 0, 1, 2, 3, 4

CSV_FLAGS = {
    "csv_case": "case",
    "csv_activity": "activity",
    "csv_timestamp": "timestamp",
    "csv_start_timestamp": "start_timestamp",
    "csv_lifecycle": "lifecycle",
}


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _add_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="event log (.xes or .csv)")
    p.add_argument("--format", choices=("xes", "csv"), help="defaults to the input file extension")
    p.add_argument(
        "--granularity", choices=[g.value for g in Granularity], default="none", help="timestamp flooring"
    )
    p.add_argument("--csv-case", default="case_id")
    p.add_argument("--csv-activity", default="activity")
    p.add_argument("--csv-timestamp", default="timestamp")
    p.add_argument("--csv-start-timestamp", help="column holding start times; each row becomes one interval")
    p.add_argument("--csv-lifecycle", help="column holding start/complete tags")
    p.add_argument("--csv-timestamp-format", help="strptime pattern (default ISO-8601)")
    p.add_argument("--csv-delimiter", default=",")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="powlpo", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key=value file supplying defaults; command-line flags win")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discover", help="mine a model from an event log")
    _add_input(p)
    p.add_argument("--out-model", help="model JSON")
    p.add_argument("--out-dot", help="workflow net as Graphviz DOT")
    p.add_argument("--out-pnml", help="workflow net as PNML")

    p = sub.add_parser("check", help="verify that a model replays every trace of a log")
    p.add_argument("--model", required=True)
    _add_input(p)
    p.add_argument("--lin-cap", type=_positive, default=DEFAULT_LIN_CAP)
    p.add_argument("--accept-budget", type=_positive, default=DEFAULT_ACCEPT_BUDGET)
    p.add_argument("--out-report", help="fitness report JSON (default: stdout)")

    p = sub.add_parser("pots", help="write one DOT file per trace variant plus a frequency table")
    _add_input(p)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("convert", help="export a model JSON as a workflow net")
    p.add_argument("--model", required=True)
    p.add_argument("--out-dot")
    p.add_argument("--out-pnml")

    p = sub.add_parser("soundness", help="check soundness of a model's workflow net")
    p.add_argument("--model", required=True)
    p.add_argument("--soundness-budget", type=_positive, default=DEFAULT_SOUNDNESS_BUDGET)
    p.add_argument("--out-report", help="soundness report JSON (default: stdout)")
    return parser


# -- config -----------------------------------------------------------------


def read_config(path: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, surrounding quotes are dropped."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        out[key.replace("-", "_")] = value
    return out


def _config_argv(config: dict[str, str], sub: argparse.ArgumentParser) -> list[str]:
    options = {a.dest: a for a in sub._actions if a.option_strings}
    argv = []
    for key, value in config.items():
        action = options.get(key)
        if action is None:
            log.warning("config key %r does not apply to this command; ignored", key)
            continue
        argv += [action.option_strings[-1], value]
    return argv


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    pre.add_argument("-v", "--verbose", action="store_true")
    known, rest = pre.parse_known_args(argv)
    if known.config and rest and not rest[0].startswith("-"):
        subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        sub = subparsers.choices.get(rest[0])
        if sub is not None:
            # config values go first so explicit flags override them
            rest = [rest[0], *_config_argv(read_config(known.config), sub), *rest[1:]]
    front = ["--config", known.config] if known.config else []
    return parser.parse_args([*front, *(["-v"] if known.verbose else []), *rest])


# -- pipeline pieces --------------------------------------------------------


def load_log(args) -> EventLog:
    fmt = args.format
    if fmt is None:
        suffix = Path(args.input).suffix.lower()
        fmt = {".xes": "xes", ".xml": "xes", ".csv": "csv"}.get(suffix)
        if fmt is None:
            raise ConfigError(f"cannot infer the log format of {args.input}; pass --format")
    try:
        data = Path(args.input).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {args.input}: {exc.strerror or exc}") from None
    if fmt == "xes":
        event_log = parse_xes(data)
    else:
        mapping = {role: getattr(args, flag) for flag, role in CSV_FLAGS.items() if getattr(args, flag)}
        event_log = parse_csv(data, mapping, args.csv_timestamp_format, args.csv_delimiter)
    return abstract_timestamps(event_log, args.granularity)


def load_model(path: str) -> PowlModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read model {path}: {exc}") from None
    return from_json(text)


class Outputs:
    """Collects output files and writes them together; on failure any file
    already written is removed again."""

    def __init__(self):
        self.files: list[tuple[Path, str]] = []

    def add(self, path: str | Path | None, text: str) -> None:
        if path is not None:
            self.files.append((Path(path), text))

    def commit(self) -> None:
        written: list[Path] = []
        try:
            for path, text in self.files:
                path.parent.mkdir(parents=True, exist_ok=True)
                with open(path, "w", encoding="utf-8", newline="\n") as fh:
                    written.append(path)
                    fh.write(text)
        except OSError as exc:
            for path in written:
                path.unlink(missing_ok=True)
            raise InputError(f"cannot write {path}: {exc.strerror or exc}") from None


def summary(**fields) -> str:
    def fmt(v):
        if isinstance(v, float):
            return f"{v:.3f}"
        if isinstance(v, bool):
            return str(v).lower()
        return str(v)

    return " ".join(f"{k}={fmt(v)}" for k, v in fields.items())


# -- commands ---------------------------------------------------------------


def cmd_discover(args) -> int:
    if not (args.out_model or args.out_dot or args.out_pnml):
        raise ConfigError("discover needs at least one of --out-model, --out-dot, --out-pnml")
    started = time.perf_counter()
    event_log = load_log(args)
    interval_log = build_interval_log(event_log)
    pots = build_pot_multiset(interval_log)
    model = discover(pots)
    outputs = Outputs()
    outputs.add(args.out_model, to_json(model) + "\n")
    if args.out_dot or args.out_pnml:
        net = to_workflow_net(model)
        outputs.add(args.out_dot, export_net_dot(net))
        outputs.add(args.out_pnml, export_pnml(net))
    outputs.commit()
    shape = size(model)
    print(
        summary(
            command="discover",
            cases=len(interval_log.cases),
            variants=len(pots),
            labels=len(labels(model)),
            matched=interval_log.stats.matched,
            atomic=interval_log.stats.atomic,
            leaves=shape["leaves"],
            operators=shape["operators"],
            order_edges=shape["order_edges"],
            seconds=time.perf_counter() - started,
        )
    )
    return EXIT_OK


def cmd_check(args) -> int:
    model = load_model(args.model)
    pots = build_pot_multiset(build_interval_log(load_log(args)))
    report = verify_perfect_fitness(model, pots, args.lin_cap, args.accept_budget)
    text = json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n"
    if args.out_report:
        outputs = Outputs()
        outputs.add(args.out_report, text)
        outputs.commit()
    else:
        sys.stdout.write(text)
    print(
        summary(
            command="check",
            variants=report.variants_checked,
            linearizations=report.linearizations_checked,
            accepted=report.accepted,
            failures=report.failure_count,
            inconclusive=report.inconclusive,
            capped=report.capped,
        )
    )
    if report.failure_count:
        return EXIT_VERIFY
    return EXIT_BUDGET if report.inconclusive else EXIT_OK


def cmd_pots(args) -> int:
    pots = build_pot_multiset(build_interval_log(load_log(args)))
    out_dir = Path(args.out_dir)
    outputs = Outputs()
    rows = ["variant\tcanonical_key\tcount"]
    for k, (pot, count) in enumerate(pots.sorted_variants(), start=1):
        outputs.add(out_dir / f"variant_{k}.dot", export_pot_dot(pot, f"variant_{k}"))
        rows.append(f"{k}\t{pot.key()}\t{count}")
    outputs.add(out_dir / "variants.tsv", "\n".join(rows) + "\n")
    outputs.commit()
    print(summary(command="pots", cases=pots.total, variants=len(pots), out_dir=out_dir))
    return EXIT_OK


def cmd_convert(args) -> int:
    if not (args.out_dot or args.out_pnml):
        raise ConfigError("convert needs --out-dot and/or --out-pnml")
    net = to_workflow_net(load_model(args.model))
    outputs = Outputs()
    outputs.add(args.out_dot, export_net_dot(net))
    outputs.add(args.out_pnml, export_pnml(net))
    outputs.commit()
    print(summary(command="convert", places=len(net.places), transitions=len(net.transitions), arcs=len(net.arcs)))
    return EXIT_OK


def cmd_soundness(args) -> int:
    net = to_workflow_net(load_model(args.model))
    report = check_soundness(net, args.soundness_budget)
    text = json.dumps(report.to_dict(), indent=2) + "\n"
    if args.out_report:
        outputs = Outputs()
        outputs.add(args.out_report, text)
        outputs.commit()
    else:
        sys.stdout.write(text)
    print(summary(command="soundness", verdict=report.verdict, explored_states=report.explored_states))
    return {"sound": EXIT_OK, "unsound": EXIT_VERIFY}.get(report.verdict, EXIT_BUDGET)


COMMANDS = {
    "discover": cmd_discover,
    "check": cmd_check,
    "pots": cmd_pots,
    "convert": cmd_convert,
    "soundness": cmd_soundness,
}


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = parse_args(argv)
    except PowlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    if args.verbose:
        logging.getLogger().setLevel(logging.INFO)
    try:
        return COMMANDS[args.command](args)
    except PowlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
