"""Command-line front end: lower, stats, check, train, predict, eval, gen.

Exit codes: 0 ok, 1 usage error, 2 input error, 3 analysis error,
4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import timing as timing_mod
from .activity import ActivityError
from .equiv import EquivalenceCapError, check_equivalence
from .evaluation import emit_report, emit_scatter, format_report, parse_split, plot_scatter
from .labels import InsufficientDataError, LabelError, load_labels
from .mlcore import ModelFileError
from .netlist import NetlistError, flatten_with_provenance, load_netlist
from .pipeline import (TASKS, ModelBundle, StageTimer, analyze_design, build_sog, cross_validate, family_split,
                       predict_design, train_all, train_area, train_module_power, train_path,
                       train_power_calib, train_timing_calib)
from .rtlgen import GenConfig, GenError, design_json, design_seeds, generate_design, validate_design
from .saif import SaifError, load_saif, saif_seed
from .sog import SogError, load_sog, save_sog, sog_feature_vector
from .tech import TechError, load_tech

log = logging.getLogger("sogppa")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_ANALYSIS, EXIT_VERIFY = 0, 1, 2, 3, 4
DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")
DEFAULT_DESIGNS = os.path.join(DATA_DIR, "designs")
DEFAULT_LABELS = os.path.join(DATA_DIR, "labels.json")
TRAIN_TASKS = ("path-delay", "timing-calib", "power-module", "power-calib", "area", "layout", "all")
FEATURE_KEYS = ("and", "or", "xor", "not", "mux", "reg")

INPUT_ERRORS = (NetlistError, LabelError, TechError, SaifError, ModelFileError, OSError, json.JSONDecodeError)
ANALYSIS_ERRORS = (InsufficientDataError, SogError, ActivityError, GenError, EquivalenceCapError,
                   timing_mod.TimingError, ValueError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# helpers ---------------------------------------------------------------------------

def _load_design(path):
    """A word-level netlist (.json) or a lowered SOG (.sog) as (name, source)."""
    name = os.path.splitext(os.path.basename(path))[0]
    if path.endswith(".sog"):
        return name, load_sog(path)
    return name, load_netlist(path)


def _as_sog(src):
    return src if not hasattr(src, "modules") else build_sog(src)


def _analyze_one(job):
    name, path, tech_path = job
    _, src = _load_design(path)
    return analyze_design(name, src, load_tech(tech_path))


def _analyze_dir(directory, names, tech_path, jobs: int, timer: StageTimer):
    jobs_list = []
    for n in names:
        path = os.path.join(directory, f"{n}.json")
        if not os.path.exists(path):
            raise LabelError(f"labels name design {n!r} but {path} does not exist")
        jobs_list.append((n, path, tech_path))
    with timer("analysis"):
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                out = list(ex.map(_analyze_one, jobs_list))
        else:
            out = [_analyze_one(j) for j in jobs_list]
    return {a.name: a for a in out}


def _corpus(args, timer):
    labels = load_labels(args.labels)
    names = sorted(labels)
    if args.designs_only:
        keep = set(args.designs_only.split(","))
        names = [n for n in names if n in keep]
    return _analyze_dir(args.designs, names, args.tech, args.jobs, timer), labels


def _write_or_print(text: str, out) -> None:
    if out:
        d = os.path.dirname(os.path.abspath(out))
        if not os.path.isdir(d):
            raise OSError(f"cannot write {out}: directory does not exist")
        with open(out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _flatten_report(r: dict) -> dict:
    flat = {}
    for k, v in r.items():
        if isinstance(v, dict):
            for kk, vv in v.items():
                flat[f"{k}.{kk}"] = vv
        elif not isinstance(v, (list, np.ndarray)):
            flat[k] = v
    return flat


# commands --------------------------------------------------------------------------

def cmd_lower(args, timer) -> int:
    with timer("parse"):
        net = load_netlist(args.netlist)
    with timer("lower"):
        g = build_sog(net)
    out = args.output or os.path.splitext(args.netlist)[0] + ".sog"
    save_sog(g, out)
    print(f"wrote {out}: {len(g)} nodes, {sum(len(f) for f in g.fanins)} edges")
    return EXIT_OK


def cmd_stats(args, timer) -> int:
    _, src = _load_design(args.design)
    g = _as_sog(src)
    f = sog_feature_vector(g)
    stats = {"features": dict(zip(FEATURE_KEYS, (int(x) for x in f))),
             "nodes": len(g), "edges": int(sum(len(fi) for fi in g.fanins)),
             "inputs": len(g.inputs), "outputs": len(g.outputs), "registers": len(g.regs)}
    print("features (and, or, xor, not, mux, reg): " + " ".join(str(int(x)) for x in f))
    print(f"nodes {stats['nodes']}  edges {stats['edges']}  registers {stats['registers']}")
    if args.output:
        _write_or_print(json.dumps(stats, indent=2) + "\n", args.output)
    elif args.format == "json":
        print(json.dumps(stats, indent=2))
    return EXIT_OK


def cmd_check(args, timer) -> int:
    net = load_netlist(args.netlist)
    flat, prov = flatten_with_provenance(net)
    g = load_sog(args.sog) if args.sog else build_sog(net)
    mode = "exhaustive" if args.exhaustive else "sampled"
    with timer("equivalence"):
        r = check_equivalence(flat, g, mode=mode, samples=args.samples, seed=args.seed)
    if r:
        print(f"equivalent ({mode}, {r.vectors} vectors)")
        return EXIT_OK
    print(f"NOT equivalent ({mode}, {r.vectors} vectors)")
    print(json.dumps({"counterexample": r.counterexample}, indent=2))
    return EXIT_VERIFY


def cmd_train(args, timer) -> int:
    t = load_tech(args.tech)
    analyses, labels = _corpus(args, timer)
    task = args.task
    out = args.output or "models"
    try:
        b = ModelBundle.load(out) if os.path.isdir(out) else ModelBundle()
    except ModelFileError:
        b = ModelBundle()
    summary: dict = {"task": task, "designs": len(analyses), "seed": args.seed}
    with timer(f"train {task}"):
        if task == "all":
            b = train_all(analyses, labels, t, args.seed, TASKS, layout=True)
            summary.update(b.summary)
        if task in ("path-delay", "timing-calib") and (task == "path-delay" or b.path is None):
            b.path, ds = train_path(analyses, labels, t, args.seed)
            pred = b.path.predict(ds.X)
            from .evaluation import metric_r
            summary.update({"path_rows": len(ds), "path_skipped": ds.skipped, "oob_r": b.path.oob_r,
                            "train_r": metric_r(ds.y, pred)})
        if task == "timing-calib":
            b.tns, b.wns = train_timing_calib(analyses, labels, b.path, args.seed)
        if task in ("power-module", "power-calib") and (task == "power-module" or b.module_power is None):
            b.module_power = train_module_power(analyses, labels, args.seed)
        if task == "power-calib":
            b.power_calib = train_power_calib(analyses, labels, b.module_power, t, args.seed)
        if task == "area":
            b.area = train_area(analyses, labels, t, args.seed)
        if task == "layout":
            full = train_all(analyses, labels, t, args.seed, TASKS, layout=True)
            if not full.layout:
                raise LabelError("no placement labels available for layout training")
            b.layout = full.layout
            summary["layout_excluded"] = full.summary.get("layout_excluded", [])
    written = b.save(out)
    summary["files"] = [os.path.basename(p) for p in written]
    print(json.dumps(summary, indent=2, default=float))
    return EXIT_OK


def cmd_predict(args, timer) -> int:
    t = load_tech(args.tech)
    name, src = _load_design(args.design)
    b = ModelBundle.load(args.models)
    clock = args.clock
    if clock is None and args.labels and os.path.exists(args.labels):
        labs = load_labels(args.labels)
        if name in labs:
            clock = labs[name].clock
    if clock is None:
        clock = t.clock_period
    with timer("sog"):
        g = _as_sog(src)
    seed = None
    if args.saif:
        with timer("saif"):
            seed = saif_seed(load_saif(args.saif), g, t, clock)
    a = analyze_design(name, g, t, seed=seed, timer=timer)
    with timer("inference"):
        r = predict_design(a, b, t, clock, layout=args.layout)
    if args.format == "csv":
        text = format_report([_flatten_report(r)], "csv")
    else:
        text = json.dumps(_jsonable(r), indent=2, sort_keys=True) + "\n"
    _write_or_print(text, args.output)
    return EXIT_OK


def _jsonable(v):
    from .evaluation import _jsonable as j
    return j(v)


def cmd_eval(args, timer) -> int:
    t = load_tech(args.tech)
    analyses, labels = _corpus(args, timer)
    tasks = tuple(args.tasks.split(",")) if args.tasks else TASKS
    for task in tasks:
        if task not in TASKS:
            raise UsageError(f"unknown task {task!r}")
    with timer("evaluate"):
        if args.split:
            tr, te = parse_split(args.split)
            res = family_split(analyses, labels, t, tr, te, args.seed, tasks)
        else:
            res = cross_validate(analyses, labels, t, args.k, args.seed, tasks)
    rows = res.metric_rows()
    for r in rows:
        raw = res.raw[r["task"]]
        if np.all(np.isfinite(raw)) and len(raw) >= 2:
            from .evaluation import all_metrics
            r.update({f"raw_{k}": v for k, v in all_metrics(res.truth[r["task"]], raw).items() if k != "n"})
    fmt = args.format or "csv"
    sys.stdout.write(format_report(rows, fmt, None))
    if args.output:
        os.makedirs(args.output, exist_ok=True)
        emit_report(rows, os.path.join(args.output, f"metrics.{fmt}"), fmt)
        units = {"tns": "ns", "wns": "ns", "power": "uW", "area": "um2"}
        for task in tasks:
            if len(res.truth[task]) == 0:
                continue
            emit_scatter(res.names[task], res.truth[task], res.pred[task],
                         os.path.join(args.output, f"scatter_{task}.csv"))
            if not args.no_plots:
                plot_scatter(res.truth[task], res.pred[task], os.path.join(args.output, f"scatter_{task}.png"),
                             title=task.upper(), unit=units[task])
    return EXIT_OK


def cmd_gen(args, timer) -> int:
    cfg = GenConfig()
    if args.config:
        with open(args.config) as f:
            cfg = GenConfig.from_dict({**cfg.to_dict(), **json.load(f)})
    out = args.output or "generated"
    os.makedirs(out, exist_ok=True)
    manifest = {"master_seed": args.seed, "config": cfg.to_dict(), "designs": []}
    with timer("generate"):
        for i, s in enumerate(design_seeds(args.seed, args.n)):
            c = GenConfig.from_dict({**cfg.to_dict(), "seed": s})
            name = f"gen_{i:04d}"
            n = generate_design(c, name)
            bad = validate_design(n, c)
            if bad:
                raise GenError(f"{name}: generated design violates constraints: {bad[:3]}")
            fname = f"{name}.json"
            with open(os.path.join(out, fname), "w") as f:
                f.write(design_json(n))
            manifest["designs"].append({"name": name, "file": fname, "seed": s})
    with open(os.path.join(out, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"wrote {args.n} designs and manifest.json to {out}")
    return EXIT_OK


# parser ------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tech", default=None, help="technology file (default: $SOGPPA_TECH or the shipped one)")
    common.add_argument("--labels", default=DEFAULT_LABELS, help="label file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1, help="worker processes for per-design analysis")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="report format (predict defaults to json, eval to csv)")
    common.add_argument("-o", "--output", default=None)
    common.add_argument("--timing-budget", action="store_true", help="print wall-clock time per stage")
    common.add_argument("-v", "--verbose", action="store_true")

    corpus = argparse.ArgumentParser(add_help=False)
    corpus.add_argument("--designs", default=DEFAULT_DESIGNS, help="directory of <name>.json netlists")
    corpus.add_argument("--only", dest="designs_only", default=None, help="comma-separated design subset")

    p = _Parser(prog="sogppa", description="PPA prediction from a bit-level operator graph.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("lower", parents=[common], help="netlist JSON -> SOG file")
    s.add_argument("netlist")
    s.set_defaults(fn=cmd_lower)

    s = sub.add_parser("stats", parents=[common], help="SOG feature vector and sizes")
    s.add_argument("design", help=".sog file or netlist .json")
    s.set_defaults(fn=cmd_stats)

    s = sub.add_parser("check", parents=[common], help="equivalence of a netlist and its SOG")
    s.add_argument("netlist")
    s.add_argument("--sog", default=None, help="compare against this SOG instead of a fresh lowering")
    s.add_argument("--exhaustive", action="store_true")
    s.add_argument("--samples", type=int, default=4096)
    s.set_defaults(fn=cmd_check)

    s = sub.add_parser("train", parents=[common, corpus], help="train one model family")
    s.add_argument("task", choices=TRAIN_TASKS)
    s.set_defaults(fn=cmd_train)

    s = sub.add_parser("predict", parents=[common], help="PPA report for one design")
    s.add_argument("design", help="netlist .json or .sog")
    s.add_argument("--models", required=True, help="directory written by 'train'")
    s.add_argument("--clock", type=float, default=None, help="clock period in ns")
    s.add_argument("--saif", default=None)
    s.add_argument("--layout", action="store_true", help="add post-placement predictions")
    s.set_defaults(fn=cmd_predict)

    s = sub.add_parser("eval", parents=[common, corpus], help="cross-validation or family split")
    s.add_argument("-k", type=int, default=10)
    s.add_argument("--split", default=None, help="family:<tag> or <train filter>/<test filter>")
    s.add_argument("--tasks", default=None, help="comma-separated subset of tns,wns,power,area")
    s.add_argument("--no-plots", action="store_true")
    s.set_defaults(fn=cmd_eval)

    s = sub.add_parser("gen", parents=[common], help="generate random designs")
    s.add_argument("-n", type=int, default=10)
    s.add_argument("--config", default=None, help="JSON file with generator settings")
    s.set_defaults(fn=cmd_gen)
    return p


def main(argv=None) -> int:
    p = build_parser()
    try:
        args = p.parse_args(argv)
    except UsageError as e:
        print(f"sogppa: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    timer = StageTimer()
    try:
        code = args.fn(args, timer)
    except UsageError as e:
        print(f"sogppa: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except INPUT_ERRORS as e:
        print(f"sogppa: input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ANALYSIS_ERRORS as e:
        print(f"sogppa: analysis error: {e}", file=sys.stderr)
        return EXIT_ANALYSIS
    if args.timing_budget:
        for line in timer.lines():
            print(f"[time] {line}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
