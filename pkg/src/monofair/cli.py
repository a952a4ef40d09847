"""Command-line entry point: ``monofair <command> [options]``.

Exit codes: 0 ok, 3 io, 4 schema/config, 5 numeric, 6 theorem check failed.
Every output file carries the seed and a hash of the command's configuration
and input files; the default output directory comes from ``MONOFAIR_OUT``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import os
import sys
from pathlib import Path

import numpy as np

from monofair import bounds as bl
from monofair.data import Schema, SplitAssignment, load_csv, load_schema, split
from monofair.errors import (InputError, MonofairError, PreconditionError,
                             SchemaError, TheoremCheckFailure)
from monofair.calibrators import check_monotone
from monofair.gam import (TrainConfig, accuracy, auc, design_matrix, dumps_model,
                          load_model, predict_probas, train)
from monofair.isotonic import ScoreTable, project_table, read_grid, write_grid
from monofair import metrics

EXIT_IO, EXIT_NUMERIC = 3, 5
ENV_OUT = "MONOFAIR_OUT"


# --- helpers ------------------------------------------------------------------

def _file_digest(path) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except FileNotFoundError:
        raise InputError(f"file not found: {path}") from None


def config_hash(args) -> str:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    for key in ("data", "schema", "model", "grid", "case", "conditional", "split"):
        if cfg.get(key):
            cfg[key + "_sha256"] = _file_digest(cfg[key])
            cfg[key] = os.path.basename(str(cfg[key]))
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _run_meta(args) -> dict:
    return {"command": args.command, "seed": args.seed, "config_hash": config_hash(args)}


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(ENV_OUT) or "monofair_out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload: dict, run: dict) -> None:
    payload = dict(payload)
    payload["run"] = run
    path.write_text(json.dumps(payload, indent=1, sort_keys=True, default=_jsonable) + "\n",
                    encoding="utf-8")


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def _csv_comment(run: dict) -> str:
    return " ".join(f"{k}={v}" for k, v in sorted(run.items()))


def _write_csv(path: Path, header, rows, run: dict) -> None:
    buf = io.StringIO()
    buf.write(f"# {_csv_comment(run)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _load_dataset(args, need_protected=False):
    if not args.data or not args.schema:
        raise SchemaError("--data and --schema are required")
    schema = load_schema(args.schema)
    protected = getattr(args, "protected", None) or schema.protected
    if protected != schema.protected:
        schema = Schema(schema.columns, schema.label, protected)
    if need_protected and not protected:
        raise SchemaError("a protected column is required (--protected or schema)")
    return load_csv(args.data, schema, drop_missing=getattr(args, "drop_missing", False))


def _lr_grid(text):
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad learning-rate grid {text!r}") from None


def _floats(text):
    return [float(t) for t in text.split(",") if t.strip()]


def _split_for(args, dataset) -> SplitAssignment:
    if getattr(args, "split", None):
        with open(args.split, encoding="utf-8") as fh:
            return SplitAssignment.from_dict(json.load(fh))
    return split(dataset, args.seed)


# --- commands -------------------------------------------------------------------

def cmd_train(args) -> int:
    dataset = _load_dataset(args)
    parts = split(dataset, args.seed)
    config = TrainConfig(epochs=args.epochs, minibatch_size=args.batch_size,
                         learning_rates=args.lr_grid, seed=args.seed,
                         threshold=args.threshold)
    model, report = train(dataset, parts, config)
    run = _run_meta(args)
    model = type(model)(model.calibrators, model.bias, model.link, model.names, run)
    out = _out_dir(args)
    (out / "model.json").write_text(dumps_model(model), encoding="utf-8")

    summary = report.to_dict()
    scores = {}
    for name, idx in zip(("train", "validation", "test"), parts.parts()):
        if len(idx) == 0:
            continue
        scores[f"{name}_accuracy"] = accuracy(model, dataset, idx, args.threshold)
        labels = dataset.label[idx]
        if 0 < labels.sum() < labels.size:
            scores[f"{name}_auc"] = auc(model, dataset, idx)
    summary["metrics"] = scores
    summary["monotonicity_check"] = model.monotonicity_violations()
    summary["rows"] = dataset.rows
    summary["rows_dropped"] = dataset.n_dropped
    _write_json(out / "report.json", summary, run)
    _write_json(out / "split.json", parts.to_dict(), run)
    # Wall time varies run to run, so it lives outside the reproducible files.
    _write_json(out / "timing.json", {"wall_time_seconds": report.wall_time}, run)
    print(f"chosen learning rate {report.chosen_rate:g}"
          + (" (grid endpoint; consider extending the grid)"
             if report.grid_extension_warning else ""))
    for k, v in scores.items():
        print(f"{k}: {v:.4f}")
    return 0


def _audit_model(args) -> dict:
    model = load_model(args.model)
    dataset = _load_dataset(args, need_protected=True)
    parts = _split_for(args, dataset)
    descending = args.direction == "descending"
    reports = []
    for scope, idx in (("test", parts.test_indices), ("all", None)):
        preds = metrics.model_grouped_predictions(model, dataset, idx, args.threshold,
                                                  descending, soft=args.soft)
        reports.append(metrics.fairness_report(preds, scope))

    columns = args.columns.split(",") if args.columns else [
        n for n, c in zip(model.names, model.calibrators) if c.monotonicity != "none"]
    violations, summary = [], {}
    for name in columns:
        probes = metrics.default_probes(model, dataset, name, seed=args.seed)
        deltas = _floats(args.deltas) if args.deltas else metrics.default_deltas(model, name)
        found = metrics.audit_monotonicity(model, name, probes, deltas)
        cal = model.calibrator(name)
        summary[name] = {"monotonicity": cal.monotonicity,
                         "check_monotone": check_monotone(cal), "violations": len(found),
                         "max_magnitude": max((v.magnitude for v in found), default=0.0)}
        violations.extend(found)
    for rep in reports:
        rep.monotonicity = {k: v["violations"] for k, v in summary.items()}
    return {"reports": reports, "monotonicity": summary, "violations": violations}


def _audit_grid(args) -> dict:
    table = read_grid(args.grid)
    column = args.columns or table.z_name
    deltas = _floats(args.deltas) if args.deltas else [1.0]
    direction = "decreasing" if args.direction == "descending" else "increasing"
    found = []
    for name in column.split(","):
        found.extend(metrics.audit_monotonicity(table, name, None, deltas, direction))
    result = {"reports": [], "violations": found,
              "monotonicity": {"violations": len(found),
                               "max_magnitude": max((v.magnitude for v in found), default=0.0)}}
    if args.conditional:
        cond = read_grid(args.conditional).scores
        expect = metrics.conditional_expectations(table, cond)
        groups = table.z_support.tolist()
        if direction == "decreasing":
            expect, groups = expect[::-1], groups[::-1]
        pairs = metrics.pairwise_one_sided(expect, groups)
        result["table_metrics"] = {
            "parity_pairs": [{"j": j, "k": k, "violation": v} for j, k, v in pairs],
            "max_one_sided_parity": max(v for _, _, v in pairs),
            "average_violation": float((expect[0] - expect[-1]) / expect.size),
        }
    return result


def cmd_audit(args) -> int:
    if bool(args.model) == bool(args.grid):
        raise SchemaError("give exactly one of --model or --grid")
    out = _out_dir(args)
    run = _run_meta(args)
    result = _audit_model(args) if args.model else _audit_grid(args)
    payload = {"reports": [r.to_dict() for r in result["reports"]],
               "monotonicity": result["monotonicity"]}
    if "table_metrics" in result:
        payload["table_metrics"] = result["table_metrics"]
    _write_json(out / "fairness_report.json", payload, run)
    rows = []
    for rep in result["reports"]:
        rows.extend(rep.csv_rows())
    for name, value in result.get("table_metrics", {}).items():
        if not isinstance(value, list):
            rows.append(("grid", "-", name, value))
    _write_csv(out / "fairness_report.csv", ["scope", "pair", "metric", "value"], rows, run)
    _write_csv(out / "violations.csv", ["column", "probe", "at", "delta", "magnitude"],
               [(v.column, v.probe, v.at, v.delta, v.magnitude)
                for v in result["violations"]], run)
    for rep in result["reports"]:
        eo = rep.max_equal_opportunity
        print(f"[{rep.scope}] max one-sided parity {rep.max_parity:.5f}"
              + ("" if eo is None else f", max one-sided equal opportunity {eo:.5f}"))
    print(f"monotonicity violations: {len(result['violations'])}")
    return 0


def analyse_case(case: bl.DiscreteCase) -> dict:
    """Every applicable lemma on every ordered pair, plus parity and z-audits."""
    out = {"name": case.name, "pairs": []}
    for j, k in itertools.combinations(case.z_support.tolist(), 2):
        entry = {"j": j, "k": k}
        checks = (("lemma1", bl.verify_lemma1, case.score is not None),
                  ("lemma3", bl.lemma3_bound, case.decision is not None),
                  ("lemma4", bl.lemma4_bound,
                   case.decision is not None and case.label is not None))
        for name, fn, applicable in checks:
            if not applicable:
                continue
            try:
                entry[name] = fn(case, j, k).to_dict()
            except PreconditionError as exc:
                entry[name] = {"not_applicable": str(exc), "witness": exc.witness}
        out["pairs"].append(entry)
    for which in ("score", "decision"):
        m = getattr(case, which)
        if m is None:
            continue
        table = case.score_table(which)
        pairs = metrics.table_parity_pairs(table, case.conditional)
        audit = {}
        for direction in ("increasing", "decreasing"):
            found = metrics.audit_monotonicity(table, "z", None, [1.0], direction) \
                if np.all(np.diff(case.z_support) == 1.0) else \
                _adjacent_audit(table, direction)
            audit[direction] = [{"x": v.probe, "at": v.at, "magnitude": v.magnitude}
                                for v in found]
        out[which] = {
            "parity_pairs": [{"j": j, "k": k, "violation": v} for j, k, v in pairs],
            "max_one_sided_parity": max(v for _, _, v in pairs),
            "average_violation": metrics.average_violation_rf(table, case.conditional),
            "monotonicity_audit": audit,
        }
    return out


def _adjacent_audit(table: ScoreTable, direction: str) -> list:
    found = []
    steps = np.diff(table.scores, axis=1)
    if direction == "decreasing":
        steps = -steps
    for r, c in zip(*np.nonzero(steps < 0)):
        found.append(metrics.MonotonicityViolation(table.z_name, table.x_support[r],
                                                   float(table.z_support[c]),
                                                   float(table.z_support[c + 1] - table.z_support[c]),
                                                   float(-steps[r, c])))
    return found


def _failed(analysis: dict) -> list:
    bad = []
    for entry in analysis["pairs"]:
        for name in ("lemma1", "lemma3", "lemma4"):
            rep = entry.get(name)
            if rep and rep.get("satisfied") is False:
                bad.append((name, entry["j"], entry["k"]))
    return bad


def cmd_bounds(args) -> int:
    out = _out_dir(args)
    run = _run_meta(args)
    if args.random:
        results = bl.run_theorem_suite(args.random, args.seed)
        payload = {name: {"checks": r.checks, "failures": len(r.failures)}
                   for name, r in results.items()}
        _write_json(out / "theorem_suite.json", payload, run)
        for name, r in results.items():
            print(f"{name}: {r.checks} checks, {len(r.failures)} failures")
        if any(not r.ok for r in results.values()):
            raise TheoremCheckFailure("a lemma check failed on a random case")
        return 0
    if args.data:
        dataset = _load_dataset(args, need_protected=True)
        groups = dataset.groups
        j = args.j if args.j is not None else float(groups[0])
        k = args.k if args.k is not None else float(groups[-1])
        est = bl.estimate_c_empirical(dataset, args.bins, j, k, args.smoothing)
        payload = {"j": j, "k": k, "C": est.c, "smoothing": est.smoothing,
                   "cells": est.cells, "cell_ratios": {str(c): r for c, r in est.ratios.items()},
                   "absolute_continuity_warning": est.absolute_continuity_warning,
                   "note": "histogram estimate, not a certificate"}
        _write_json(out / "empirical_c.json", payload, run)
        print(f"estimated C({j:g}, {k:g}) = {est.c:.4f}"
              + (" [absolute-continuity warning]" if est.absolute_continuity_warning else ""))
        return 0
    if args.fixture:
        case, expected = bl.fixture(args.fixture)
    elif args.case:
        case, expected = bl.load_case(args.case)
    else:
        raise SchemaError("give --case, --fixture, --random or --data")
    analysis = analyse_case(case)
    analysis["expected"] = expected
    stem = case.name or "case"
    _write_json(out / f"bounds_{stem}.json", analysis, run)
    for which in ("score", "decision"):
        if which in analysis:
            info = analysis[which]
            print(f"{which}: max one-sided parity violation {info['max_one_sided_parity']:.6g}; "
                  f"monotonicity violations increasing={len(info['monotonicity_audit']['increasing'])} "
                  f"decreasing={len(info['monotonicity_audit']['decreasing'])}")
    bad = _failed(analysis)
    if bad:
        raise TheoremCheckFailure(f"bound check failed: {bad}")
    print("all applicable bounds satisfied")
    return 0


def cmd_project(args) -> int:
    if not args.grid:
        raise SchemaError("--grid is required")
    table = read_grid(args.grid)
    direction = "decreasing" if args.direction == "descending" else "increasing"
    projected = project_table(table, direction)
    out = _out_dir(args)
    run = _run_meta(args)
    write_grid(projected, out / "projected_grid.csv", _csv_comment(run))
    if args.conditional:
        cond = read_grid(args.conditional).scores
        payload = {
            "before": {"max_one_sided_parity": metrics.table_max_parity(table, cond),
                       "average_violation": metrics.average_violation_rf(table, cond)},
            "after": {"max_one_sided_parity": metrics.table_max_parity(projected, cond),
                      "average_violation": metrics.average_violation_rf(projected, cond)},
        }
        _write_json(out / "projection_report.json", payload, run)
        print(json.dumps(payload, indent=1))
    return 0


def cmd_export_plots(args) -> int:
    model = load_model(args.model)
    dataset = _load_dataset(args)
    if dataset.rows == 0:
        raise InputError("empty dataset")
    out = _out_dir(args)
    run = _run_meta(args)

    rows = []
    for name, cal in zip(model.names, model.calibrators):
        for key, value in zip(cal.keys, cal.values):
            rows.append((name, cal.monotonicity, float(key), float(value)))
    _write_csv(out / "calibrators.csv", ["column", "monotonicity", "key", "value"], rows, run)

    X = design_matrix(model, dataset)
    anchor = np.median(X, axis=0)
    features = args.features.split(",") if args.features else list(model.names[:2])
    if len(features) == 2:
        a, b = (model.index(f) for f in features)
        ka, kb = model.calibrators[a].keys, model.calibrators[b].keys
        grid = np.tile(anchor, (ka.size * kb.size, 1))
        grid[:, a] = np.repeat(ka, kb.size)
        grid[:, b] = np.tile(kb, ka.size)
        proba = predict_probas(model, grid).reshape(ka.size, kb.size)
        table = ScoreTable(tuple(float(v) for v in ka), kb, proba, features[0], features[1])
        write_grid(table, out / f"grid_{features[0]}_{features[1]}.csv", _csv_comment(run))

    parts = _split_for(args, dataset)
    idx = parts.train_indices
    y = dataset.label[idx].astype(float)
    rows = []
    for d, name in enumerate(model.names):
        col = X[idx, d]
        uniq = np.unique(col)
        if uniq.size <= args.bins:
            edges = np.append(uniq, uniq[-1])
            codes = np.searchsorted(uniq, col)
        else:
            edges = np.unique(np.quantile(col, np.linspace(0, 1, args.bins + 1)))
            codes = np.clip(np.searchsorted(edges, col, side="right") - 1, 0, edges.size - 2)
        for b in np.unique(codes):
            sel = y[codes == b]
            se = float(sel.std(ddof=1) / np.sqrt(sel.size)) if sel.size > 1 else float("nan")
            rows.append((name, int(b), float(edges[b]), float(edges[min(b + 1, edges.size - 1)]),
                         int(sel.size), float(sel.mean()), se))
    _write_csv(out / "label_means.csv",
               ["column", "bin", "low", "high", "count", "mean", "stderr"], rows, run)
    print(f"wrote plot data to {out}")
    return 0


def cmd_fixtures(args) -> int:
    out = _out_dir(args)
    run = _run_meta(args)
    for name in ("b1", "b2", "b3"):
        case, expected = bl.fixture(name)
        _write_json(out / f"{name}.json", bl.case_to_dict(case, expected), run)
        print(f"wrote {out / (name + '.json')}")
    return 0


# --- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="monofair", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        p.add_argument("--out", help=f"output directory (default ${ENV_OUT} or ./monofair_out)")
        p.add_argument("--seed", type=int, default=0)
        if data:
            p.add_argument("--data", help="CSV data file")
            p.add_argument("--schema", help="JSON schema file")
            p.add_argument("--protected", help="protected column (overrides schema)")
            p.add_argument("--drop-missing", action="store_true",
                           help="skip rows with missing cells instead of failing")

    p = sub.add_parser("train", help="fit a GAM with projected SGD")
    common(p)
    p.add_argument("--epochs", type=int, default=1000)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--lr-grid", type=_lr_grid, default=TrainConfig().learning_rates)
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("audit", help="fairness metrics and monotonicity audit")
    common(p)
    p.add_argument("--model")
    p.add_argument("--grid", help="imported prediction grid CSV")
    p.add_argument("--conditional", help="grid CSV of P(X=x|Z=z) matching --grid")
    p.add_argument("--split", help="split manifest from train (default: recompute from seed)")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--direction", choices=("ascending", "descending"), default="ascending")
    p.add_argument("--soft", action="store_true",
                   help="use mean predicted probability per group instead of thresholded decisions")
    p.add_argument("--columns", help="comma-separated columns to audit")
    p.add_argument("--deltas", help="comma-separated positive deltas")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("bounds", help="verify the parity bounds on discrete cases")
    common(p)
    p.add_argument("--case", help="DiscreteCase JSON file")
    p.add_argument("--fixture", choices=("b1", "b2", "b3"))
    p.add_argument("--random", type=int, help="run the random theorem suite on N cases")
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--smoothing", type=float, default=0.5)
    p.add_argument("--j", type=float)
    p.add_argument("--k", type=float)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("project", help="monotone projection of a score grid")
    common(p, data=False)
    p.add_argument("--grid", required=True)
    p.add_argument("--conditional")
    p.add_argument("--direction", choices=("ascending", "descending"), default="ascending")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("export-plots", help="CSV data for calibrator/grid/label plots")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--features", help="two comma-separated columns for the 2-d grid")
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--split")
    p.set_defaults(func=cmd_export_plots)

    p = sub.add_parser("fixtures", help="write the b1/b2/b3 counterexample cases")
    common(p, data=False)
    p.set_defaults(func=cmd_fixtures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MonofairError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error (io): {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error (numeric): {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
