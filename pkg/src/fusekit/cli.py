"""Command-line entry point: ``fusekit <subcommand>`` or ``python -m fusekit``.

Exit codes: 0 success, 1 validation error, 2 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import io as fio
from .core import FusekitError, thread_count
from .evaluation import count_improvements
from .fusion import METHODS
from .pipeline import model_effects, run_methods, tune_threshold
from .syngen import SynSpec, generate

log = logging.getLogger("fusekit")


def _load(path, workers):
    manifest = fio.load_manifest(path)
    return manifest, fio.load_predictions(manifest, workers=workers)


def _dev(args, workers):
    if getattr(args, "dev_manifest", None):
        return _load(args.dev_manifest, workers)[1]
    return None


def cmd_fuse(args, workers: int) -> None:
    manifest, ps = _load(args.manifest, workers)
    options = manifest.options
    if args.threshold is not None:
        options = fio.Options(**{**options.__dict__, "threshold": args.threshold})
    run = run_methods(ps, [args.method], options, _dev(args, workers), workers)
    fio.emit_report(args.out, manifest.task_name, ps, run.results, run.reports,
                    effects=run.effects, grid=run.grid, options=options)


def cmd_evaluate(args, workers: int) -> None:
    manifest, ps = _load(args.manifest, workers)
    if args.methods == "all":
        methods = list(METHODS)
    else:
        methods = [m.strip() for m in args.methods.split(",")]
        unknown = set(methods) - set(METHODS)
        if unknown:
            raise FusekitError(f"unknown methods: {sorted(unknown)}")
    run = run_methods(ps, methods, manifest.options, _dev(args, workers), workers)
    fio.emit_report(args.out, manifest.task_name, ps, run.results, run.reports,
                    singles=run.singles, effects=run.effects, grid=run.grid,
                    options=manifest.options)


def cmd_search_threshold(args, workers: int) -> None:
    manifest, ps = _load(args.manifest, workers)
    options = manifest.options
    if args.metric:
        options = fio.Options(**{**options.__dict__, "metric": args.metric.upper()})
    grid = tune_threshold(ps, options, _dev(args, workers), workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fio.write_json(out / "threshold_search.json", {
        "task_name": manifest.task_name,
        "best_threshold": grid.best_threshold,
        "best_score": grid.best_score,
        "optimized_metric": grid.optimized_metric,
        "scores": [{"threshold": t, "ua": ua, "wa": wa} for t, ua, wa in grid.scores],
    })
    print(f"best threshold {grid.best_threshold:.2f} "
          f"({grid.optimized_metric} {fio.pct(grid.best_score)})")


def cmd_effect(args, workers: int) -> None:
    manifest, ps = _load(args.manifest, workers)
    if args.model not in ps.names:
        raise FusekitError(f"unknown model {args.model!r}; have {ps.names}")
    eff = model_effects(ps)[args.model]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fio.write_json(out / "effect.json", {"model": args.model, **fio.effect_dict(eff)})
    fio.write_histograms(out / "histogram.csv", {args.model: eff})
    print(f"{args.model}: d = {eff.d} ({eff.category or eff.degenerate_reason})")


def cmd_count_improvements(args, workers: int) -> None:
    ensemble = fio.read_score_table(args.ensemble_table, ensemble=True)
    single = fio.read_score_table(args.single_table, ensemble=False)
    methods = [m for m in METHODS if any(k[2] == m for k in ensemble)]
    extra = [m for m in dict.fromkeys(k[2] for k in ensemble) if m not in methods]
    counts = count_improvements(ensemble, single, methods + extra)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fio.write_json(out / "improvements.json", {"comparison": "strict-greater-than-best-single",
                                              "counts": counts})
    for m, c in counts.items():
        print(f"{m}\t{c}")


def cmd_generate(args, workers: int) -> None:
    accs = tuple(float(a) for a in args.accs.split(","))
    if len(accs) == 1 and args.models > 1:
        accs = accs * args.models
    if len(accs) != args.models:
        raise FusekitError(f"--accs lists {len(accs)} values for --models {args.models}")
    try:
        spec = SynSpec(args.samples, args.classes, accs, args.informativeness, args.seed,
                       balanced=args.balanced, cover=args.cover)
    except ValueError as exc:
        raise FusekitError(str(exc)) from None
    path = fio.write_prediction_set(generate(spec), args.out, task_name=args.task_name)
    print(path)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fusekit", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fuse", help="fuse predictions with one method")
    f.add_argument("--manifest", required=True)
    f.add_argument("--method", required=True, choices=METHODS)
    f.add_argument("--threshold", type=float)
    f.add_argument("--dev-manifest", help="tune the ut threshold on this set instead")
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fuse)

    e = sub.add_parser("evaluate", help="run all methods and single-model baselines")
    e.add_argument("--manifest", required=True)
    e.add_argument("--methods", default="all", help="'all' or comma-separated list")
    e.add_argument("--dev-manifest", help="tune the ut threshold on this set instead")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("search-threshold", help="grid-search the ut threshold")
    s.add_argument("--manifest", required=True)
    s.add_argument("--metric", choices=["ua", "wa", "UA", "WA"])
    s.add_argument("--dev-manifest", help="search on this set instead")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_search_threshold)

    d = sub.add_parser("effect", help="Cohen's d of uncertainty vs. correctness")
    d.add_argument("--manifest", required=True)
    d.add_argument("--model", required=True)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_effect)

    c = sub.add_parser("count-improvements", help="count cells beating the best single model")
    c.add_argument("--ensemble-table", required=True)
    c.add_argument("--single-table", required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_count_improvements)

    g = sub.add_parser("generate", help="write a seeded synthetic ensemble")
    g.add_argument("--samples", type=int, required=True)
    g.add_argument("--classes", type=int, required=True)
    g.add_argument("--models", type=int, required=True)
    g.add_argument("--accs", required=True, help="comma-separated per-model accuracies")
    g.add_argument("--informativeness", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--balanced", action="store_true")
    g.add_argument("--cover", action="store_true",
                   help="every sample is predicted correctly by at least one model")
    g.add_argument("--task-name", default="synthetic")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        workers = thread_count()
        args.func(args, workers)
    except (FusekitError, ValueError) as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
