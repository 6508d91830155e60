"""Command-line front end.

Subcommands: simulate, train, detect, rca, evaluate, bench. Exit codes:
0 success, 1 usage error, 2 data error, 3 numerical failure. A default
config file can be pointed to by the STPNRCA_CONFIG environment variable;
explicit --config and --set overrides win. All outputs are written
atomically (temp file + rename), so failures leave no partial files.

Channel indices on the command line are 0-based column positions of the
input CSV; reports carry the channel names alongside.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import bench as bench_mod
from .errors import DataError, NumericalError, StpnRcaError, UsageError
from .pipeline import (
    RunConfig,
    evaluate_case,
    load_bundle,
    run_detect,
    run_rca,
    run_var_rca,
    save_bundle,
    train_bundle,
)
from .synth import (
    FaultSpec,
    builtin_modes,
    case_labels,
    inject_fault,
    pattern_fault_cases,
    random_graph,
    simulate_var,
)
from .timeseries import read_csv, read_tep_csv, write_csv

# Default root-cause variable lookup for the standard process-monitoring
# benchmark faults used in comparisons (editable; pass your own labels file
# to `evaluate` or `--true-node` to override). Variables are named per the
# 52-column convention of read_tep_csv.
TEP_FAULT_VARIABLES = {
    2: "xmv_06",
    4: "xmv_10",
    5: "xmv_11",
    6: "xmeas_01",
    11: "xmv_10",
    12: "xmv_11",
    14: "xmv_10",
    21: "xmv_04",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _write_json(doc: dict, path: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_fault(text: str) -> FaultSpec:
    parts = text.split(":")
    kind = parts[0].replace("_", "-")
    try:
        if kind == "node-delay":
            if len(parts) != 3:
                raise ValueError
            return FaultSpec(kind="node_delay", node=int(parts[1]), delay=int(parts[2]))
        if kind == "pattern-break":
            if len(parts) != 2:
                raise ValueError
            edges = []
            for chunk in parts[1].split(","):
                src, dst = chunk.split("-")
                edges.append((int(src), int(dst)))
            return FaultSpec(kind="pattern_break", edges=tuple(edges))
    except (ValueError, DataError) as exc:
        raise UsageError(f"bad fault spec {text!r}: {exc}") from None
    raise UsageError(
        f"bad fault spec {text!r}; use node-delay:NODE:DELAY or "
        "pattern-break:SRC-DST[,SRC-DST...]"
    )


def _config_from_args(args) -> RunConfig:
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    return RunConfig.from_sources(args.config, overrides)


def _load_series(path: str, fmt: str):
    return read_tep_csv(path) if fmt == "tep" else read_csv(path)


def cmd_simulate(args) -> int:
    config = _config_from_args(args)
    out = args.out
    os.makedirs(out, exist_ok=True)
    spec = _parse_fault(args.fault) if args.fault else None

    if args.nodes:
        graph = random_graph(args.nodes, seed=config.seed)
    else:
        modes = builtin_modes()
        graph = modes[args.mode]

    written = []
    if args.modes == "builtin" and not args.nodes:
        for i, mode in enumerate(builtin_modes()):
            ts = simulate_var(mode, args.samples, seed=config.seed + i)
            path = os.path.join(out, f"nominal_mode{i + 1}.csv")
            write_csv(ts, path)
            _write_json(
                case_labels(f"nominal_mode{i + 1}", i, None, ts.names, config.seed + i),
                path[:-4] + ".labels.json",
            )
            written.append(path)

    if args.cases:
        if args.nodes:
            raise UsageError("--cases applies to the builtin modes, not --nodes graphs")
        cases = pattern_fault_cases()
        if args.cases > len(cases):
            raise UsageError(f"at most {len(cases)} pattern-fault cases exist")
        for ci, case_edges in enumerate(cases[: args.cases]):
            case_spec = FaultSpec(kind="pattern_break", edges=tuple(case_edges))
            seed = config.seed + 9000 + ci
            base = simulate_var(graph, args.samples, seed=seed)
            ts = inject_fault(graph, base, case_spec, seed=seed)
            name = f"case{ci + 1:02d}"
            path = os.path.join(out, name + ".csv")
            write_csv(ts, path)
            _write_json(
                case_labels(name, args.mode, case_spec, ts.names, seed),
                path[:-4] + ".labels.json",
            )
            written.append(path)

    if spec is not None:
        seed = config.seed + 777
        base = simulate_var(graph, args.samples, seed=seed)
        ts = inject_fault(graph, base, spec, seed=seed)
        name = args.name or "fault"
        path = os.path.join(out, name + ".csv")
        write_csv(ts, path)
        _write_json(
            case_labels(name, args.mode, spec, ts.names, seed),
            path[:-4] + ".labels.json",
        )
        # a nominal companion for baseline fitting
        nom_path = os.path.join(out, name + "_nominal.csv")
        write_csv(simulate_var(graph, args.samples, seed=seed + 1), nom_path)
        written.append(path)

    if not written:
        raise UsageError("nothing to simulate: pass --modes builtin, --cases, or --fault")
    for path in written:
        print(path)
    return 0


def cmd_train(args) -> int:
    config = _config_from_args(args)
    series = [_load_series(p, args.format) for p in args.nominal]
    bundle = train_bundle(series, config, with_a3=args.a3)
    save_bundle(bundle, args.out)
    print(f"trained on {len(series)} series; bundle written to {args.out}")
    print(f"energy threshold {bundle.energy_threshold:.4f}")
    return 0


def cmd_detect(args) -> int:
    bundle = load_bundle(args.model)
    ts = _load_series(args.data, args.format)
    starts, energies, flags = run_detect(bundle, ts, stride=args.stride)
    for start, f, anomalous in zip(starts, energies, flags):
        verdict = "anomalous" if anomalous else "nominal"
        print(f"start={int(start)} free_energy={f:.4f} verdict={verdict}")
    print(f"# {int(np.sum(flags))}/{len(flags)} windows anomalous")
    return 0


def cmd_rca(args) -> int:
    config_path_marker = args.data
    if args.method == "var":
        if not args.nominal:
            raise UsageError("--method var needs --nominal CSV for baseline fitting")
        config = _config_from_args(args)
        nominal = _load_series(args.nominal, args.format)
        test = _load_series(args.data, args.format)
        report = run_var_rca(nominal, test, config, data_path=config_path_marker)
    else:
        bundle = load_bundle(args.model)
        ts = _load_series(args.data, args.format)
        report = run_rca(
            bundle,
            ts,
            method=args.method,
            force=args.force,
            stride=args.stride,
            data_path=config_path_marker,
        )
        if report["n_analyzed"] == 0:
            print("no window flagged anomalous; re-run with --force to analyze anyway")
    if args.out:
        _write_json(report, args.out)
        print(f"report written to {args.out}")
    else:
        json.dump(report, sys.stdout, indent=1, sort_keys=True)
        print()
    return 0


def _stem(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def cmd_evaluate(args) -> int:
    if len(args.reports) != len(args.labels):
        raise DataError(
            f"{len(args.reports)} reports vs {len(args.labels)} label files"
        )
    rows = []
    for rpath, lpath in zip(args.reports, args.labels):
        with open(rpath) as fh:
            report = json.load(fh)
        with open(lpath) as fh:
            labels = json.load(fh)
        case_id = labels.get("case_id", "")
        data_stem = _stem(report.get("data", ""))
        if case_id and data_stem and case_id != data_stem:
            raise DataError(
                f"case id mismatch: report {rpath} is for {data_stem!r}, "
                f"labels {lpath} for {case_id!r}"
            )
        rows.append(evaluate_case(report, labels))

    columns = ["case_id", "method", "alpha1", "recall", "precision", "f_measure",
               "error_ratio", "diagnosis_cost", "false_alarm_fraction"]

    def cell(row, col):
        value = row.get(col)
        if value is None:
            return "NA"
        if isinstance(value, float):
            return f"{value:.4f}"
        return str(value)

    table = [[cell(r, c) for c in columns] for r in rows]
    widths = [max(len(c), *(len(t[i]) for t in table)) for i, c in enumerate(columns)]
    header = "  ".join(c.ljust(w) for c, w in zip(columns, widths))
    print(header)
    print("-" * len(header))
    for t in table:
        print("  ".join(v.ljust(w) for v, w in zip(t, widths)))

    if args.out:
        directory = os.path.dirname(os.path.abspath(args.out))
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(",".join(columns) + "\n")
                for t in table:
                    fh.write(",".join(t) + "\n")
            os.replace(tmp, args.out)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        print(f"table written to {args.out}")
    return 0


def cmd_bench(args) -> int:
    result = bench_mod.run_suite(args.suite, data=args.data)
    print(result.report())
    return 0 if result.passed else 2


def build_parser() -> _Parser:
    parser = _Parser(prog="stpn-rca", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="config file (key = value lines)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key")
        p.add_argument("--format", choices=["csv", "tep"], default="csv")

    p = sub.add_parser("simulate", help="generate synthetic benchmark data")
    add_common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--modes", choices=["builtin"], help="emit the six nominal modes")
    p.add_argument("--cases", type=int, help="emit the first N pattern-fault cases")
    p.add_argument("--nodes", type=int, help="use a seeded random graph of N nodes")
    p.add_argument("--mode", type=int, default=0, help="builtin mode index (0-based)")
    p.add_argument("--fault", help="node-delay:NODE:DELAY or pattern-break:SRC-DST,...")
    p.add_argument("--samples", type=int, default=12000)
    p.add_argument("--name", help="basename for --fault output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train the pattern network and energy model")
    add_common(p)
    p.add_argument("--nominal", nargs="+", required=True, help="nominal CSV file(s)")
    p.add_argument("--out", required=True, help="bundle output directory")
    p.add_argument("--a3", action="store_true",
                   help="also train the anomaly-association classifier")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="window verdicts for a test series")
    add_common(p)
    p.add_argument("--model", required=True, help="bundle directory")
    p.add_argument("--data", required=True)
    p.add_argument("--stride", type=int)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("rca", help="root-cause analysis of a test series")
    add_common(p)
    p.add_argument("--model", help="bundle directory (s3/a3)")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=["s3", "a3", "var"], default="s3")
    p.add_argument("--nominal", help="nominal CSV (var baseline only)")
    p.add_argument("--force", action="store_true",
                   help="analyze all windows, not just detected ones")
    p.add_argument("--stride", type=int)
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_rca)

    p = sub.add_parser("evaluate", help="score RCA reports against label sidecars")
    add_common(p)
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--labels", nargs="+", required=True)
    p.add_argument("--out", help="write a CSV table here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="run a verification suite")
    p.add_argument("suite", help="suite name (see bench --help text)")
    p.add_argument("--data", help="process CSV for the tep suite")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "rca" and args.method in ("s3", "a3") and not args.model:
            raise UsageError("--model is required for methods s3 and a3")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except StpnRcaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
