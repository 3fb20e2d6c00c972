"""Command-line entry point: ``noisy-bai <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import yaml

from .channel import TransitionMatrix, channel_from_config
from .codes import code_from_independent_set, parity_schedule_c6, schedule_decode_luts, slope_code_c5
from .criteria import ACCEPTANCE_ORDER, CRITERIA, reproduce
from .errors import NoisyBAIError, UnknownCriterion
from .graphs import confusability_graph, independence_number, minimal_blocklength, strong_power
from .harness import ExperimentSpec, dumps_json, load_config, run_config, run_sweep


def _load_structured(text: str):
    p = Path(text)
    if p.suffix in (".json", ".yaml", ".yml") and p.exists():
        return yaml.safe_load(p.read_text())
    if text.lstrip().startswith(("{", "[")):
        return json.loads(text)
    return None


def parse_channel(text: str) -> dict:
    """``typewriter:K:EPS``, ``identity:K``, inline JSON or a JSON/YAML file."""
    cfg = _load_structured(text)
    if cfg is not None:
        return cfg
    parts = text.split(":")
    if parts[0] == "typewriter" and len(parts) == 3:
        return {"type": "typewriter", "k": int(parts[1]), "eps": float(parts[2])}
    if parts[0] == "identity" and len(parts) == 2:
        return {"type": "identity", "k": int(parts[1])}
    raise argparse.ArgumentTypeError(f"cannot parse channel {text!r}")


def parse_instance(text: str) -> dict:
    """Comma-separated means, inline JSON or a JSON/YAML file."""
    cfg = _load_structured(text)
    if cfg is not None:
        return {"mu": cfg} if isinstance(cfg, list) else cfg
    try:
        return {"mu": [float(v) for v in text.split(",")]}
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse instance {text!r}") from None


def _channel(text: str) -> TransitionMatrix:
    return channel_from_config(parse_channel(text))


def cmd_graph_alpha(args) -> int:
    g = confusability_graph(_channel(args.channel).support())
    t0 = time.perf_counter()
    gp = strong_power(g, args.power, cap=args.cap)
    res = independence_number(gp, cap=args.cap, allow_greedy=args.greedy)
    secs = time.perf_counter() - t0
    print(f"alpha {res.value}")
    print(f"exact {str(res.exact).lower()}")
    print("witness " + " ".join(str(tuple(w) if isinstance(w, tuple) else (w,)) for w in res.witness.labels()))
    print(f"seconds {secs:.4f}")
    return 0


def cmd_graph_nstar(args) -> int:
    g = confusability_graph(_channel(args.channel).support())
    res = minimal_blocklength(g, args.messages, n_max=args.n_max, cap=args.cap)
    if res.n is None:
        print(f"nstar none ({res.reason})")
        return 1
    print(f"nstar {res.n}")
    print(f"reason {res.reason}")
    return 0


def cmd_code_build(args) -> int:
    if args.scheme == "slope-c5":
        sys.stdout.write(slope_code_c5().dump())
    elif args.scheme == "parity-c6":
        sched = parity_schedule_c6()
        ch = channel_from_config({"type": "typewriter", "k": 6, "eps": 0.5})
        sys.stdout.write(sched.dump())
        luts = schedule_decode_luts(sched, ch.support())
        for i, row in enumerate(luts):
            sys.stdout.write(f"decode slot {i + 1}: " + " ".join(str(int(v)) for v in row) + "\n")
    else:
        if not args.channel:
            print("from-indset needs --channel", file=sys.stderr)
            return 2
        ch = _channel(args.channel)
        g = confusability_graph(ch.support())
        n = args.power
        if n is None:
            res = minimal_blocklength(g, args.messages or 2)
            if res.n is None:
                print(f"no code: {res.reason}", file=sys.stderr)
                return 1
            n = res.n
        best = independence_number(strong_power(g, n))
        members = best.witness.members[: args.messages] if args.messages else best.witness.members
        sys.stdout.write(code_from_independent_set(ch.support(), n, members, name=f"from-indset-n{n}").dump())
    return 0


def cmd_simulate(args) -> int:
    spec = ExperimentSpec(
        channel=parse_channel(args.channel),
        instance=parse_instance(args.instance),
        case=args.case,
        delta=args.delta,
        reps=args.reps,
        seed=args.seed,
        code=args.code,
        schedule=args.schedule,
        digit=args.digit,
    )
    report = run_sweep(spec, workers=args.workers, trace_dir=args.dump_trace)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "reps.csv").write_text(report.csv_text())
        (out / "summary.json").write_text(dumps_json(report.summary()))
    else:
        sys.stdout.write(report.csv_text())
        sys.stdout.write("\n")
        sys.stdout.write(dumps_json(report.summary()))
    return 0 if report.healthy() else 1


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    reports = run_config(cfg, out_dir=args.out, workers=args.workers)
    for r in reports:
        s = r.summary()
        print(f"{r.name}: reps={s['reps']} error_rate={s['error_rate']:.4f} "
              f"tau_mean={s['tau_mean']} ratio_mean={s['ratio_mean']} healthy={r.healthy()}")
    return 0 if all(r.healthy() for r in reports) else 1


def cmd_reproduce(args) -> int:
    ids = list(ACCEPTANCE_ORDER) if args.id == "all" else [args.id]
    ok = True
    for cid in ids:
        res = reproduce(cid, reps=args.reps)
        print(res.line())
        ok = ok and res.passed
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="noisy-bai", description="Zero-error command channels for best-arm identification.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("graph", help="confusability-graph queries").add_subparsers(dest="graph_cmd", required=True)
    a = g.add_parser("alpha", help="independence number of a strong power")
    a.add_argument("--channel", required=True)
    a.add_argument("--power", type=int, default=1)
    a.add_argument("--cap", type=int, default=4096)
    a.add_argument("--greedy", action="store_true", help="allow a greedy lower bound above the cap")
    a.set_defaults(func=cmd_graph_alpha)
    n = g.add_parser("nstar", help="minimal blocklength for a message count")
    n.add_argument("--channel", required=True)
    n.add_argument("--messages", type=int, required=True)
    n.add_argument("--n-max", type=int, default=8)
    n.add_argument("--cap", type=int, default=4096)
    n.set_defaults(func=cmd_graph_nstar)

    c = sub.add_parser("code", help="code construction").add_subparsers(dest="code_cmd", required=True)
    b = c.add_parser("build", help="dump a code or schedule")
    b.add_argument("--scheme", required=True, choices=("slope-c5", "parity-c6", "from-indset"))
    b.add_argument("--channel")
    b.add_argument("--power", type=int)
    b.add_argument("--messages", type=int)
    b.set_defaults(func=cmd_code_build)

    s = sub.add_parser("simulate", help="replicate one protocol")
    s.add_argument("--case", required=True, choices=("clean", "1", "2a", "2b", "3"))
    s.add_argument("--channel", required=True)
    s.add_argument("--instance", required=True)
    s.add_argument("--delta", type=float, default=0.1)
    s.add_argument("--reps", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--code", default="auto")
    s.add_argument("--schedule", default="auto")
    s.add_argument("--digit", default="auto")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", help="directory for reps.csv and summary.json")
    s.add_argument("--dump-trace", help="directory for one trace CSV per replication")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="run a YAML/JSON sweep config")
    w.add_argument("config")
    w.add_argument("--out")
    w.add_argument("--workers", type=int, default=1)
    w.set_defaults(func=cmd_sweep)

    r = sub.add_parser("reproduce", help="run an acceptance experiment")
    r.add_argument("id", help=f"one of {sorted(CRITERIA)} or 'all'")
    r.add_argument("--reps", type=int)
    r.set_defaults(func=cmd_reproduce)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UnknownCriterion as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 2
    except (NoisyBAIError, ValueError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
