"""``twinforge`` command-line entry point.

Exit codes: 0 success, 1 the model or diff has findings, 2 usage or I/O
error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import bench, bridge, diff as diffmod, fit as fitmod, render, sim
from .loader import LOAD_ERRORS, detect_kind, load_model
from .model import stats
from .netlist import IRKind, density, write_netlist
from .validate import diagnostics_json, diagnostics_table, has_errors, validate

OK, FINDINGS, USAGE, INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _load(path: str, strict: bool = True):
    text = _read(path)
    kind = detect_kind(text, None if path == "-" else path)
    name = "model" if path == "-" else Path(path).stem
    return load_model(text, kind, name=name, strict=strict), text, kind


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------- subcommands


def cmd_elaborate(a) -> int:
    try:
        graph, text, kind = _load(a.model)
    except LOAD_ERRORS as exc:
        _err(f"error: {exc}")
        return FINDINGS
    out = write_netlist(graph)
    rep = density(text, kind, graph)
    summary = (
        f"{graph.name}: {rep.flat_nodes} nodes, {rep.flat_edges} edges from "
        f"{rep.entry_count} {kind.value} entries (expansion x{rep.expansion_ratio:.1f})"
    )
    if a.output:
        _write(a.output, out)
        print(summary)
    else:
        sys.stdout.write(out)
        _err(summary)
    return OK


def cmd_validate(a) -> int:
    try:
        graph, _, _ = _load(a.model, strict=False)
    except LOAD_ERRORS as exc:
        _err(f"error: {exc}")
        return FINDINGS
    diags = validate(graph)
    report = diagnostics_json(diags) + "\n" if a.format == "json" else diagnostics_table(diags) + "\n"
    if a.forward:
        sys.stderr.write(report)
        sys.stdout.write(write_netlist(graph))
    elif a.output:
        _write(a.output, report)
    else:
        sys.stdout.write(report)
    return FINDINGS if has_errors(diags) else OK


def cmd_render(a) -> int:
    try:
        graph, _, _ = _load(a.model, strict=False)
    except LOAD_ERRORS as exc:
        _err(f"error: {exc}")
        return FINDINGS
    _write(a.output, render.to_dot(graph))
    return OK


def _seed_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part.strip()[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part.strip():
            out.append(int(part))
    return out


def cmd_simulate(a) -> int:
    try:
        graph, _, _ = _load(a.model)
    except LOAD_ERRORS as exc:
        _err(f"error: {exc}")
        return FINDINGS
    try:
        cfg = sim.SimConfig(a.horizon, a.warmup, a.seed, trace=bool(a.trace_out))
    except sim.ConfigError as exc:
        raise UsageError(str(exc)) from None
    try:
        if a.seeds:
            seeds = _seed_list(a.seeds)
            reports = sim.simulate_many(graph, cfg, seeds, workers=a.workers)
            doc = {"replications": [dict(r.to_dict(), seed=s) for s, r in zip(seeds, reports)]}
            thr = [r.total_throughput for r in reports]
            summary = f"{len(reports)} replications, mean throughput {sum(thr) / len(thr):.6g}"
        else:
            r = sim.simulate(graph, cfg)
            doc = dict(r.to_dict(), seed=a.seed)
            summary = (
                f"throughput {r.total_throughput:.6g}, cycle time {r.cycle_time_mean:.6g}, "
                f"WIP {r.wip:.6g}, completed {r.completed}"
            )
            if a.trace_out:
                fmt = a.trace_format or ("json" if a.trace_out.endswith(".json") else "csv")
                _write(a.trace_out, sim.trace_csv(r.trace) if fmt == "csv" else sim.trace_json(r.trace))
    except sim.PreconditionFailed as exc:
        _err(f"error: {exc}")
        return FINDINGS
    text = json.dumps(doc, indent=2) + "\n"
    if a.output:
        _write(a.output, text)
        print(summary)
    else:
        sys.stdout.write(text)
        _err(summary)
    return OK


def cmd_fit(a) -> int:
    samples = fitmod.read_samples(_read(a.samples), a.name)
    families = a.families.split(",") if a.families else list(fitmod.FAMILY_ORDER)
    fits = {}
    for src, ss in sorted(samples.items()):
        fits[src] = fitmod.select_fit(ss, families, a.criterion)
        r = fits[src]
        print(f"{src}: {r.family.value}{tuple(round(p, 6) for p in r.params)} aic={r.aic:.3f} ks={r.ks_stat:.4f}")
    if a.output:
        _write(a.output, fitmod.fits_json(fits) + "\n")
    return OK


def cmd_bind(a) -> int:
    try:
        graph, _, _ = _load(a.model)
    except LOAD_ERRORS as exc:
        _err(f"error: {exc}")
        return FINDINGS
    fits = fitmod.fits_from_json(_read(a.fits))
    overrides = {}
    for m in a.map or []:
        if "=" not in m:
            raise UsageError(f"--map expects source=id.param, got {m!r}")
        src, target = m.split("=", 1)
        overrides[src] = target
    bound, plan = fitmod.bind(graph, fits, overrides)
    _write(a.output, write_netlist(bound))
    _err(json.dumps(plan.to_dict(), indent=2))
    return OK


def _match_config(a) -> diffmod.MatchConfig:
    return diffmod.MatchConfig(
        normalize_case=not a.no_case,
        shift_detection=not a.no_shift,
        structural_match_threshold=a.threshold,
    )


def cmd_diff(a) -> int:
    truth, _, _ = _load(a.truth)
    cand_text = _read(a.candidate)
    kind = detect_kind(cand_text, None if a.candidate == "-" else a.candidate)
    report = diffmod.diff_text(truth, cand_text, kind, _match_config(a))
    report.description_mode = a.mode
    label = a.label or Path(a.candidate).stem
    csv_text = diffmod.report_csv([report], [label])
    if a.json:
        _write(a.json, report.to_json() + "\n")
    if a.csv:
        _write(a.csv, csv_text)
    sys.stdout.write(csv_text)
    if a.verbose:
        for r in report.records:
            print(f"  {r.subkind:<22} truth={r.truth_ref} cand={r.cand_ref} {r.detail}")
    return FINDINGS if report.total else OK


def cmd_bench_list(a) -> int:
    for spec in bench.catalog():
        bm = bench.generate(spec)
        st = bm.manifest["stats"]
        print(f"{spec.label:<5} {spec.family.value:<20} nodes={st['nodes']:<4} edges={st['edges']:<4} {json.dumps(spec.to_dict()['params'])}")
    return OK


def cmd_bench_gen(a) -> int:
    if a.suite:
        specs = bench.load_suite(_read(a.suite))
    elif a.label:
        specs = [bench.catalog_spec(lbl) for lbl in a.label]
    else:
        specs = bench.catalog()
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)

    def one(spec):
        bm = bench.generate(spec)
        stem = spec.label.replace("/", "_")
        (out / f"{stem}.fdl").write_text(bm.dsl_text)
        (out / f"{stem}.json").write_text(bm.netlist_text)
        (out / f"{stem}.manifest.json").write_text(json.dumps(bm.manifest, indent=2) + "\n")
        return spec.label, bm.manifest["stats"]

    with ThreadPoolExecutor(max_workers=max(1, a.workers)) as pool:
        for label, st in pool.map(one, specs):
            print(f"{label}: {st['nodes']} nodes, {st['edges']} edges")
    (out / "suite.json").write_text(bench.suite_json(specs) + "\n")
    return OK


def cmd_bench_inject(a) -> int:
    graph, _, _ = _load(a.model)
    if a.spec:
        spec = bench.InjectionSpec.from_dict(json.loads(_read(a.spec)))
        spec = bench.InjectionSpec(spec.items, a.seed)
    else:
        items = []
        for item in a.add or []:
            sub, _, count = item.partition("=")
            items.append(bench.Injection(sub, int(count or 1)))
        if not items:
            raise UsageError("bench inject needs --spec or at least one --add")
        spec = bench.InjectionSpec(tuple(items), a.seed)
    result = bench.inject(graph, spec)
    _write(a.output, result.netlist_text)
    manifest = json.dumps(result.manifest, indent=2) + "\n"
    if a.manifest:
        _write(a.manifest, manifest)
    counts = result.expected_counts
    print(" ".join(f"{k}={v}" for k, v in counts.items()) + f" total={result.manifest['expected_total']}",
          file=sys.stderr if a.output in (None, "-") else sys.stdout)
    return OK


def cmd_generate(a) -> int:
    description = a.description if a.description is not None else _read(a.description_file)
    transport = bridge.ReplayTransport(a.replay, strict=not a.lenient) if a.replay else bridge.from_env()
    client = bridge.Bridge(transport)
    state = bridge.run_session(client, bridge.SessionState(description.strip(), tuple(a.assume or ())))
    ir = state.last_ir
    print(f"assumptions ({len(state.assumptions)}):")
    for s in state.assumptions:
        print(f"  - {s}")
    if a.output:
        _write(a.output, ir.ir_text)
    doc: dict = {"assumptions": list(state.assumptions), "ir_kind": ir.ir_kind.value}
    findings = False
    try:
        graph = load_model(ir.ir_text, ir.ir_kind, strict=False)
    except LOAD_ERRORS as exc:
        graph = None
        doc["load_error"] = str(exc)
        findings = True
        print(f"IR does not load: {exc}")
    if graph is not None:
        diags = validate(graph)
        doc["diagnostics"] = [d.to_dict() for d in diags]
        st = stats(graph)
        print(f"model: {st.node_count} nodes, {st.edge_count} edges")
        print(diagnostics_table(diags))
        findings = findings or has_errors(diags)
    if a.truth:
        truth, _, _ = _load(a.truth)
        report = diffmod.diff_text(truth, ir.ir_text, ir.ir_kind)
        doc["diff"] = report.to_dict()
        sys.stdout.write(diffmod.report_csv([report], [a.label or "generated"]))
        findings = findings or report.total > 0
    if a.json:
        _write(a.json, json.dumps(doc, indent=2) + "\n")
    return FINDINGS if findings else OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="twinforge", description="Build, check, simulate and compare production-line models.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("elaborate", help="expand a .fdl program (or netlist) into a flat netlist")
    s.add_argument("model", help=".fdl or netlist JSON file, '-' for stdin")
    s.add_argument("-o", "--output", help="netlist output file (default stdout)")
    s.set_defaults(func=cmd_elaborate)

    s = sub.add_parser("validate", help="run every structural rule and list findings")
    s.add_argument("model", nargs="?", default="-")
    s.add_argument("--format", choices=("table", "json"), default="table")
    s.add_argument("--forward", action="store_true", help="report on stderr and pass the netlist to stdout")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("render", help="emit a DOT block diagram")
    s.add_argument("model", nargs="?", default="-")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_render)

    s = sub.add_parser("simulate", help="discrete-event run of a model")
    s.add_argument("model", nargs="?", default="-")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--horizon", type=float, default=10_000.0)
    s.add_argument("--warmup", type=float, default=0.0)
    s.add_argument("--seeds", help="replication seeds, e.g. 1,2,3 or 1-10 (run in parallel)")
    s.add_argument("--workers", type=int, default=4)
    s.add_argument("--trace-out", help="write the event trace here")
    s.add_argument("--trace-format", choices=("csv", "json"))
    s.add_argument("-o", "--output", help="report JSON file (default stdout)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("fit", help="fit distributions to observed samples")
    s.add_argument("samples", help="CSV of source_name,value[,time] rows")
    s.add_argument("--name", help="source name for single-column input")
    s.add_argument("--families", help="comma-separated candidate families")
    s.add_argument("--criterion", choices=("aic", "ks"), default="aic")
    s.add_argument("-o", "--output", help="fits JSON file")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("bind", help="write fitted distributions into model parameters")
    s.add_argument("model")
    s.add_argument("fits", help="fits JSON from 'fit'")
    s.add_argument("--map", action="append", help="explicit binding source=id.param (repeatable)")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_bind)

    s = sub.add_parser("diff", help="classify differences between ground truth and a candidate")
    s.add_argument("truth")
    s.add_argument("candidate", help="netlist JSON or .fdl")
    s.add_argument("--csv", help="also write the CSV row here")
    s.add_argument("--json", help="full report JSON file")
    s.add_argument("--label")
    s.add_argument("--mode", choices=("Coarse", "Detailed"), default="Detailed")
    s.add_argument("--no-shift", action="store_true", help="disable index-shift detection")
    s.add_argument("--no-case", action="store_true", help="compare ids case-sensitively")
    s.add_argument("--threshold", type=float, default=0.5, help="structural match threshold")
    s.add_argument("-v", "--verbose", action="store_true")
    s.set_defaults(func=cmd_diff)

    s = sub.add_parser("bench", help="benchmark catalog, generation and error injection")
    bsub = s.add_subparsers(dest="bench_command", required=True, parser_class=_Parser)
    b = bsub.add_parser("list")
    b.set_defaults(func=cmd_bench_list)
    b = bsub.add_parser("gen")
    b.add_argument("--suite", help="suite JSON (default: full catalog)")
    b.add_argument("--label", action="append", help="catalog label, e.g. S24 (repeatable)")
    b.add_argument("--out", required=True)
    b.add_argument("--workers", type=int, default=4)
    b.set_defaults(func=cmd_bench_gen)
    b = bsub.add_parser("inject")
    b.add_argument("model")
    b.add_argument("--seed", type=int, required=True)
    b.add_argument("--spec", help="injection spec JSON")
    b.add_argument("--add", action="append", help="subkind=count, e.g. T3.added=2 (repeatable)")
    b.add_argument("-o", "--output", help="mutated netlist (default stdout)")
    b.add_argument("--manifest", help="manifest JSON file")
    b.set_defaults(func=cmd_bench_inject)

    s = sub.add_parser("generate", help="description -> assumptions -> IR via the model endpoint")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--description")
    g.add_argument("description_file", nargs="?")
    s.add_argument("--replay", help="replay fixture directory (overrides FF_* settings)")
    s.add_argument("--lenient", action="store_true", help="skip fixture hash verification")
    s.add_argument("--assume", action="append", help="prior assumption (repeatable)")
    s.add_argument("--truth", help="ground truth to diff the generated IR against")
    s.add_argument("--label")
    s.add_argument("-o", "--output", help="write the generated IR here")
    s.add_argument("--json", help="pipeline report JSON")
    s.set_defaults(func=cmd_generate)
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        _err(str(exc))
        return USAGE
    except SystemExit as exc:  # --help
        return exc.code if isinstance(exc.code, int) else OK
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        _err(f"error: {exc}")
        return USAGE
    except (bench.SpecError, bench.Infeasible, fitmod.FitError, fitmod.BindConflict) as exc:
        _err(f"error: {exc}")
        return USAGE
    except bridge.BridgeError as exc:
        _err(f"error: {exc}")
        return USAGE
    except LOAD_ERRORS as exc:
        _err(f"error: {exc}")
        return FINDINGS
    except Exception as exc:  # noqa: BLE001
        _err(f"internal error: {type(exc).__name__}: {exc}")
        return INTERNAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
