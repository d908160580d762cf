"""Command-line entry point.

Exit codes: 0 success, 1 invalid input or usage, 2 a verified bound or
invariant failed, 3 file I/O error. Diagnostics go to stderr, data to
stdout or the named files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from . import analytics, files, harness, oracles
from .disciplines import DisciplineSpec
from .engine import DEFAULT_SEED, audit_trace, simulate
from .errors import SchedError, VerificationFailure
from .generators import gen_adversarial, gen_stochastic, spec_from_mapping
from .model import Fleet, Mode, derive_metrics

log = logging.getLogger("wcsched")

EXIT_OK, EXIT_DOMAIN, EXIT_VERIFY, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    """Usage errors exit 1 so that 2 stays reserved for failed verification."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_DOMAIN, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _config(args: argparse.Namespace, keys: Sequence[str]) -> dict[str, Any]:
    """Flat JSON config (if given) overridden by any flag the user set."""
    cfg: dict[str, Any] = {}
    if getattr(args, "config", None):
        loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if not isinstance(loaded, dict):
            raise SchedError("config file must hold a flat JSON object")
        cfg.update(loaded)
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _fleet(args: argparse.Namespace, mode: Mode) -> Fleet:
    if args.speeds:
        speeds = _floats(args.speeds)
        if args.m is not None and args.m != len(speeds):
            raise SchedError("--m disagrees with the number of --speeds")
        return Fleet.with_speeds(speeds, mode)
    return Fleet.identical(args.m or 1, mode)


def _emit(data: dict[str, Any], as_json: bool) -> None:
    if as_json:
        print(json.dumps(data, indent=2, sort_keys=True))
    else:
        for k, v in data.items():
            print(f"{k}={v}")


# -- subcommands -----------------------------------------------------------

GEN_KEYS = ("n", "seed", "arrival_rate", "workload_rate", "arrival_dist", "arrival_params",
            "workload_dist", "workload_params", "weight_dist", "weight_params", "ramp_start", "ramp_end")


def cmd_generate(args: argparse.Namespace) -> int:
    if args.adversarial:
        if args.B is None or args.n is None:
            raise SchedError("--adversarial needs --B and --n")
        inst = gen_adversarial(args.m or 1, args.B, args.n)
    else:
        inst = gen_stochastic(spec_from_mapping(_config(args, GEN_KEYS)))
    if args.out:
        files.write_instance(inst, args.out, args.format)
    else:
        sys.stdout.write(files.instance_text(inst, args.format or "csv"))
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    inst = files.read_instance(args.instance)
    spec = DisciplineSpec.parse(args.discipline, quantum=args.quantum)
    mode = Mode.parse(args.mode) if args.mode else spec.default_mode
    fleet = _fleet(args, mode)
    trace = simulate(inst, fleet, spec, args.seed)
    if args.trace_out:
        files.write_trace(trace, args.trace_out)
    metrics = derive_metrics(trace, inst)
    out = {"discipline": spec.label, "mode": mode.value, "m": fleet.m, "seed": args.seed, **metrics.as_dict()}
    if args.audit:
        report = audit_trace(trace, inst)
        out["audit_violations"] = len(report.violations)
        for v in report.violations[:20]:
            print(f"audit: {v}", file=sys.stderr)
    _emit(out, args.json)
    if args.audit and out["audit_violations"]:
        raise VerificationFailure("trace audit failed")
    return EXIT_OK


def cmd_bounds(args: argparse.Namespace) -> int:
    inst = files.read_instance(args.instance)
    fleet = _fleet(args, Mode.PREEMPTIVE)
    out = {"n": inst.n, "m": fleet.m, **analytics.lower_bounds(inst, fleet).as_dict()}
    if inst.n:
        out["size_ratio"] = analytics.size_ratio(inst)
    _emit(out, args.json)
    return EXIT_OK


def cmd_stability(args: argparse.Namespace) -> int:
    m = args.m or 1
    if args.instance:
        report = analytics.sample_stability(files.read_instance(args.instance), m)
    else:
        cfg = _config(args, GEN_KEYS)
        spec = spec_from_mapping(cfg)
        mu_p, mu_r = spec.declared_means()
        report = analytics.stability_stats(mu_p, mu_r, m, spec.n)
    _emit({"m": m, **report.as_dict()}, args.json)
    return EXIT_OK


VERIFY_KEYS = ("count", "n_max", "m_max", "p_max", "gap_max", "seed")


def _verify_rows(corpus: str, bound: str, cfg: dict[str, Any]) -> list[dict[str, Any]]:
    count = int(cfg.get("count", 100))
    seed = int(cfg.get("seed", DEFAULT_SEED))
    rows = []
    if corpus == "mm1":
        instances = [(inst, 1) for inst in oracles.mm1_corpus(count, seed=seed)]
    elif corpus == "m1":
        instances = oracles.integer_corpus(count, seed, n_max=int(cfg.get("n_max", 50)), m_max=1,
                                           p_max=int(cfg.get("p_max", 4)), gap_max=int(cfg.get("gap_max", 4)))
    else:
        instances = oracles.integer_corpus(count, seed, n_max=int(cfg.get("n_max", 8)),
                                           m_max=int(cfg.get("m_max", 3)), p_max=int(cfg.get("p_max", 4)),
                                           gap_max=int(cfg.get("gap_max", 2)))
    preemptive = corpus in ("m1", "mm1")
    for k, (inst, m) in enumerate(instances):
        if bound == "2B":
            fleet = Fleet.identical(m, Mode.PREEMPTIVE if preemptive else Mode.NONPREEMPTIVE)
            rep = oracles.verify_2B(inst, fleet, seed=seed)
            for r in rep.rows:
                rows.append({"instance": k, "check": f"2B:{r.discipline}", "value": r.ratio,
                             "limit": rep.bound, "ok": r.ok})
        elif bound == "jobcount":
            for d in ("fcfs", "lrpt"):
                rep = oracles.verify_jobcount_inequality(inst, d)
                rows.append({"instance": k, "check": f"jobcount:{d}", "value": len(rep.violations),
                             "limit": 0, "ok": rep.ok})
        elif bound == "lindley":
            chk = analytics.fcfs_cross_check(inst)
            rows.append({"instance": k, "check": "lindley", "value": chk.index if chk.index is not None else -1,
                         "limit": -1, "ok": chk.ok})
        elif bound == "audit":
            for d in ("fcfs", "spt", "srpt", "lrpt", "random"):
                spec = DisciplineSpec.parse(d)
                fleet = Fleet.identical(m, spec.default_mode)
                rep = audit_trace(simulate(inst, fleet, spec, seed), inst)
                rows.append({"instance": k, "check": f"audit:{d}", "value": len(rep.violations),
                             "limit": 0, "ok": rep.ok})
        else:
            raise SchedError(f"unknown bound {bound!r}")
    return rows


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = _config(args, VERIFY_KEYS)
    rows = _verify_rows(args.corpus, args.bound, cfg)
    failed = [r for r in rows if not r["ok"]]
    checks = sorted({r["check"] for r in rows})
    report = {"corpus": args.corpus, "bound": args.bound, "config": cfg, "checks": len(rows),
              "failures": len(failed), "rows": rows}
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"{'check':<16} {'runs':>6} {'failures':>9} {'max value':>12}")
    for c in checks:
        sel = [r for r in rows if r["check"] == c]
        worst = max(r["value"] for r in sel)
        print(f"{c:<16} {len(sel):>6} {sum(not r['ok'] for r in sel):>9} {worst:>12.6g}")
    if failed:
        raise VerificationFailure(f"{len(failed)} of {len(rows)} checks failed")
    return EXIT_OK


EXP_KEYS = ("m", "arrival_rate", "workload_rate", "disciplines", "grid", "replications", "seed",
            "denominator", "quantum", "adversarial_B", "mode", "speeds")


def cmd_experiment(args: argparse.Namespace) -> int:
    cfg = _config(args, EXP_KEYS)

    def listed(key, parse, default):
        value = cfg.get(key, default)
        return parse(value) if isinstance(value, str) else list(value)

    adversarial = cfg.get("adversarial_B")
    spec = harness.ExperimentSpec(
        m=int(cfg.get("m", 20)),
        disciplines=tuple(listed("disciplines", lambda s: [x.strip() for x in s.split(",")],
                                 harness.REFERENCE_DISCIPLINES)),
        n_grid=tuple(listed("grid", _ints, harness.REFERENCE_GRID)),
        replications=int(cfg.get("replications", 30)),
        seed=int(cfg.get("seed", DEFAULT_SEED)),
        denominator=str(cfg.get("denominator", "arrival-lb")),
        workload=None if adversarial is not None else spec_from_mapping({**cfg, "n": 1}),
        adversarial_B=None if adversarial is None else float(adversarial),
        speeds=None if cfg.get("speeds") is None else tuple(listed("speeds", _floats, [])),
        mode=None if cfg.get("mode") is None else Mode.parse(cfg["mode"]),
        quantum=float(cfg.get("quantum", 1.0)),
    )
    result = harness.run_experiment(spec, jobs=args.jobs)
    paths = harness.write_outputs(result, args.out)
    sys.stdout.write(paths["table.txt"].read_text(encoding="utf-8"))
    return EXIT_OK


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wcsched", description="Simulate and analyse work-conserving multi-machine schedulers.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def machines(sp, default_m=None):
        sp.add_argument("--m", type=int, default=default_m, help="number of identical machines (default 1)")
        sp.add_argument("--speeds", help="comma-separated machine speeds (overrides identical machines)")

    def gen_flags(sp):
        sp.add_argument("--config", help="flat JSON object of generator keys; flags override it")
        sp.add_argument("--n", type=int, help="number of jobs")
        sp.add_argument("--arrival-rate", dest="arrival_rate", type=float, help="Poisson arrival rate")
        sp.add_argument("--workload-rate", dest="workload_rate", type=float, help="exponential workload rate")
        for what in ("arrival", "workload", "weight"):
            sp.add_argument(f"--{what}-dist", dest=f"{what}_dist",
                            help=f"{what} distribution family (exponential, uniform, deterministic, "
                                 "lognormal, pareto, bounded_pareto)")
            sp.add_argument(f"--{what}-params", dest=f"{what}_params", type=_floats,
                            help=f"comma-separated {what} distribution parameters")
        sp.add_argument("--ramp-start", dest="ramp_start", type=float, help="first interarrival scale factor")
        sp.add_argument("--ramp-end", dest="ramp_end", type=float, help="last interarrival scale factor")

    g = sub.add_parser("generate", help="write a random or adversarial instance")
    gen_flags(g)
    g.add_argument("--seed", type=int, help=f"random seed (default {DEFAULT_SEED})")
    g.add_argument("--adversarial", action="store_true", help="build the LRPT-vs-SRPT adversary instead")
    g.add_argument("--m", type=int, help="machines for the adversary (default 1)")
    g.add_argument("--B", type=float, help="large-job size for the adversary")
    g.add_argument("--out", help="output file (default: stdout)")
    g.add_argument("--format", choices=("csv", "jsonl"), help="output format (default from suffix, else csv)")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("simulate", help="run one discipline over an instance file")
    s.add_argument("--instance", required=True, help="instance CSV or JSON-lines file")
    machines(s)
    s.add_argument("--discipline", required=True, choices=("fcfs", "spt", "srpt", "lrpt", "random"))
    s.add_argument("--mode", choices=("preemptive", "nonpreemptive"), help="default: the discipline's own")
    s.add_argument("--quantum", type=float, default=1e-3, help="LRPT minimum run before a same-value preemption")
    s.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed for RANDOM")
    s.add_argument("--trace-out", dest="trace_out", help="write the event trace (.csv or .jsonl)")
    s.add_argument("--audit", action="store_true", help="audit the trace; exit 2 on any violation")
    s.add_argument("--json", action="store_true", help="print metrics as JSON instead of key=value")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bounds", help="lower bounds on optimal total completion time")
    b.add_argument("--instance", required=True, help="instance CSV or JSON-lines file")
    machines(b)
    b.add_argument("--json", action="store_true", help="print JSON instead of key=value")
    b.set_defaults(func=cmd_bounds)

    st = sub.add_parser("stability", help="load statistic and instability sums")
    st.add_argument("--instance", help="use the sample means of this instance file")
    gen_flags(st)
    st.add_argument("--seed", type=int, help="unused; accepted for config symmetry")
    st.add_argument("--m", type=int, help="number of machines (default 1)")
    st.add_argument("--json", action="store_true", help="print JSON instead of key=value")
    st.set_defaults(func=cmd_stability)

    v = sub.add_parser("verify", help="check a bound over a seeded corpus; exit 2 on any violation")
    v.add_argument("--corpus", required=True, choices=("small", "m1", "mm1"),
                   help="small: n<=8, m<=3 integer; m1: one machine, n<=50 integer; mm1: M/M/1, n=50")
    v.add_argument("--bound", required=True, choices=("2B", "jobcount", "lindley", "audit"))
    v.add_argument("--config", help="flat JSON object with count, n_max, m_max, p_max, gap_max, seed")
    v.add_argument("--count", type=int, help="number of instances (default 100)")
    v.add_argument("--n-max", dest="n_max", type=int, help="largest instance size")
    v.add_argument("--m-max", dest="m_max", type=int, help="largest machine count")
    v.add_argument("--p-max", dest="p_max", type=int, help="largest integer workload")
    v.add_argument("--gap-max", dest="gap_max", type=int, help="largest integer interarrival gap")
    v.add_argument("--seed", type=int, help=f"corpus seed (default {DEFAULT_SEED})")
    v.add_argument("--out", help="write the full JSON report here")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("experiment", help="replicated ratio study; writes ratios.csv, ecdf.csv, table.txt")
    e.add_argument("--config", help="flat JSON object of experiment and generator keys; flags override it")
    e.add_argument("--m", type=int, help="number of machines (default 20)")
    e.add_argument("--speeds", help="comma-separated machine speeds")
    e.add_argument("--arrival-rate", dest="arrival_rate", type=float, help="Poisson arrival rate (default 0.45)")
    e.add_argument("--workload-rate", dest="workload_rate", type=float, help="exponential workload rate (default 1/40)")
    e.add_argument("--disciplines", help="comma-separated disciplines (default all five)")
    e.add_argument("--grid", help="comma-separated ascending n values")
    e.add_argument("--replications", type=int, help="replications per n (default 30)")
    e.add_argument("--denominator", choices=harness.DENOMINATORS, help="ratio denominator (default arrival-lb)")
    e.add_argument("--quantum", type=float, help="LRPT quantum (default 1.0)")
    e.add_argument("--adversarial-B", dest="adversarial_B", type=float,
                   help="use the LRPT-vs-SRPT adversary with this B instead of random instances")
    e.add_argument("--mode", choices=("preemptive", "nonpreemptive"),
                   help="force one mode for every discipline (default: each its own)")
    e.add_argument("--seed", type=int, help=f"base seed (default {DEFAULT_SEED})")
    e.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    e.add_argument("--out", required=True, help="output directory")
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except VerificationFailure as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SchedError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
