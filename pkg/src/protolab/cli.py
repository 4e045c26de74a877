"""Command-line front end.

Commands:
  measure   compute the measure suite for a protocol and distribution
  audit     privacy audit against the protocol's function family
  compress  run the transcript-search compression and its theorem check
  demo      run the order-leak demonstration (relaxed scheduler)
  list      show the built-in protocol registry

Exit codes: 0 ok, 1 bad configuration, 2 enumeration budget exceeded,
3 model violation, 4 compression refused a non-oblivious protocol.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import compression, measures, treefile, zoo
from .errors import (
    BudgetExceededError,
    ConfigError,
    ModelViolationError,
    NotObliviousError,
)
from .model import DEFAULT_BUDGET, run_relaxed

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BUDGET = 2
EXIT_MODEL = 3
EXIT_NOT_OBLIVIOUS = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="protolab", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--protocol", required=True,
                        help="registry name or tree:PATH")
        sp.add_argument("--k", type=int, default=None)
        sp.add_argument("--n", type=int, default=None)
        sp.add_argument("--q", type=int, default=None)
        sp.add_argument("--mu", default="uniform",
                        help="uniform | file:PATH | grid:STEP")
        sp.add_argument("--tolerance", type=float, default=measures.TOLERANCE)
        sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
        sp.add_argument("--format", choices=("json", "csv", "text"),
                        default="json")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None)

    sp = sub.add_parser("measure", help="compute the measure suite")
    common(sp)

    sp = sub.add_parser("audit", help="privacy audit")
    common(sp)

    sp = sub.add_parser("compress", help="compression experiment")
    common(sp)
    sp.add_argument("--lcp", choices=("exact", "randomized"), default="exact")
    sp.add_argument("--eps", type=float, default=None,
                    help="per-call error rate for randomized lcp boxes")
    sp.add_argument("--delta", type=float, default=0.1,
                    help="error budget of the compression theorem")
    sp.add_argument("--trials", type=int, default=8)
    sp.add_argument("--obliviousize", type=str, default=None, metavar="EPS",
                    help="first rewrite the protocol through a coordinator")

    sp = sub.add_parser("demo", help="order-leak demonstration")
    common(sp)

    sp = sub.add_parser("list", help="list built-in protocols")
    sp.add_argument("--format", choices=("json", "csv", "text"),
                    default="json")
    sp.add_argument("--out", default=None)
    return parser


def _load_protocol(args):
    name = args.protocol
    if name.startswith("tree:"):
        p = treefile.load_protocol(name[len("tree:"):])
        return p, None, name
    entry = zoo.get_entry(name, k=args.k, n=args.n, q=args.q)
    return entry.protocol, entry.family, name


def _load_distribution(args, p):
    spec = args.mu
    if spec == "uniform":
        return measures.InputDistribution.uniform(p), None
    if spec.startswith("file:"):
        path = Path(spec[len("file:"):])
        try:
            entries = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read distribution {path}: {exc}")
        weights = {}
        try:
            for item in entries:
                key = tuple(item["inputs"])
                weights[key] = Fraction(item["num"], item["den"])
        except (KeyError, TypeError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad distribution entry in {path}: {exc}")
        try:
            mu = measures.InputDistribution.from_weights(
                f"file:{path.name}", weights
            )
        except ValueError as exc:
            raise ConfigError(str(exc))
        mu.validate_for(p)
        return mu, None
    if spec.startswith("grid:"):
        try:
            step = float(spec[len("grid:"):])
        except ValueError:
            raise ConfigError(f"bad grid step in {spec!r}")
        return None, step
    raise ConfigError(f"unknown distribution spec {spec!r}")


def _render(payload: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(payload, sort_keys=True, indent=2, default=str) + "\n"
    if fmt == "csv":
        flat = {
            k: (json.dumps(v) if isinstance(v, (list, dict)) else v)
            for k, v in payload.items()
        }
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=sorted(flat))
        writer.writeheader()
        writer.writerow(flat)
        return buf.getvalue()
    lines = [f"{key}: {payload[key]}" for key in sorted(payload)]
    return "\n".join(lines) + "\n"


def _emit(payload: dict, args) -> None:
    text = _render(payload, getattr(args, "format", "json"))
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_measure(args) -> int:
    p, family, _ = _load_protocol(args)
    if args.tolerance <= 0 or args.budget <= 0:
        raise ConfigError("tolerance and budget must be positive")
    mu, grid_step = _load_distribution(args, p)
    extras = {}
    if grid_step is not None:
        result = measures.sup_pic_grid(p, grid_step, args.budget)
        mu = result.mu
        extras = {
            "sup_pic_value": round(result.value, 9),
            "sup_alpha": str(result.alpha),
            "sup_beta": str(result.beta),
        }
    report = measures.measure_protocol(
        p, mu, family, tolerance=args.tolerance, budget=args.budget
    )
    payload = report.to_dict()
    payload.update(extras)
    _emit(payload, args)
    return EXIT_OK


def _cmd_audit(args) -> int:
    p, family, _ = _load_protocol(args)
    if family is None:
        raise ConfigError(
            "privacy audit needs a function family; tree protocols do not "
            "declare one"
        )
    mu, _grid = _load_distribution(args, p)
    if mu is None:
        raise ConfigError("privacy audit needs a concrete distribution")
    terms = measures.privacy_terms(p, mu, family, args.budget)
    per_player = [round(t, 9) for t in terms]
    leakage = sum(terms)
    payload = {
        "report": "audit",
        "protocol": p.name,
        "distribution": mu.name,
        "family": family.name,
        "tolerance": args.tolerance,
        "privacy_leakage": round(leakage, 9),
        "per_player": per_player,
        "verdict": "private" if leakage <= args.tolerance else "not-private",
    }
    _emit(payload, args)
    return EXIT_OK


def _cmd_compress(args) -> int:
    p, family, _ = _load_protocol(args)
    if family is None:
        raise ConfigError("compression check needs a function family")
    mu, grid_step = _load_distribution(args, p)
    if mu is None:
        raise ConfigError("compression needs a concrete distribution")
    if args.obliviousize is not None:
        p = compression.obliviousize(
            p, mu, Fraction(args.obliviousize), args.budget
        )
    p = measures.publicize(p)
    report = compression.compression_theorem_check(
        p, mu, args.delta, family,
        lcp_mode=args.lcp, seed=args.seed, trials=args.trials,
        budget=args.budget,
        eps_call=args.eps if args.lcp == "randomized" else None,
    )
    _emit(report.to_dict(), args)
    return EXIT_OK


def _cmd_demo(args) -> int:
    if args.protocol not in ("order-leak",):
        raise ConfigError("the demo command supports --protocol order-leak")
    entry = zoo.get_entry("order-leak")
    p = entry.protocol
    runs = []
    for x in ("0", "1"):
        e = run_relaxed(p, (x, "", "", ""))
        runs.append(
            {
                "input": x,
                "message_contents": [m.content for m in e.messages],
                "transcripts": {
                    str(i): e.received_transcript(i) for i in p.players
                },
                "outputs": list(e.outputs),
            }
        )
    identical = (
        runs[0]["message_contents"] == runs[1]["message_contents"]
        and runs[0]["transcripts"] == runs[1]["transcripts"]
    )
    payload = {
        "report": "demo",
        "protocol": p.name,
        "runs": runs,
        "content_transcripts_identical": identical,
        "second_player_outputs": [r["outputs"][1] for r in runs],
        "outputs_differ": runs[0]["outputs"][1] != runs[1]["outputs"][1],
    }
    _emit(payload, args)
    return EXIT_OK


def _cmd_list(args) -> int:
    protocols = [
        {
            "name": name,
            "parameters": list(meta["params"]),
            "defaults": meta["defaults"],
            "summary": meta["summary"],
        }
        for name, meta in sorted(zoo.REGISTRY.items())
    ]
    _emit({"report": "list", "protocols": protocols}, args)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {
            "measure": _cmd_measure,
            "audit": _cmd_audit,
            "compress": _cmd_compress,
            "demo": _cmd_demo,
            "list": _cmd_list,
        }[args.command]
        return handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except NotObliviousError as exc:
        print(
            f"error: {exc}\nhint: re-run with --obliviousize EPS",
            file=sys.stderr,
        )
        return EXIT_NOT_OBLIVIOUS
    except ModelViolationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
