"""Run every fusion method plus single-model baselines on one prediction set."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .core import PredictionSet, argmax_label
from .evaluation import EffectReport, EvaluationReport, effect_report, score
from .fusion import METHODS, FusionResult, GridSearchResult, fuse, search_threshold, threshold_grid
from .io import Options
from .uncertainty import uncertainty_matrix


@dataclass
class Run:
    results: dict[str, FusionResult]
    reports: dict[str, EvaluationReport]
    singles: dict[str, EvaluationReport]
    effects: dict[str, EffectReport]
    grid: GridSearchResult | None


def tune_threshold(
    ps: PredictionSet, options: Options, dev: PredictionSet | None = None, workers: int = 1
) -> GridSearchResult:
    """Grid-search the ut threshold on ``dev`` if given, else on ``ps`` itself."""
    target = dev if dev is not None else ps
    g = options.grid
    return search_threshold(
        target,
        uncertainty_matrix(target),
        metric=options.metric,
        grid=threshold_grid(g.start, g.end, g.step),
        workers=workers,
    )


def single_model_reports(ps: PredictionSet) -> dict[str, EvaluationReport]:
    return {
        name: score(argmax_label(ps.probs[m]), ps.truth, ps.n_classes)
        for m, name in enumerate(ps.names)
    }


def model_effects(ps: PredictionSet) -> dict[str, EffectReport]:
    u = uncertainty_matrix(ps).values
    out = {}
    for m, name in enumerate(ps.names):
        correct = argmax_label(ps.probs[m]) == ps.truth
        out[name] = effect_report(u[m], correct)
    return out


def run_methods(
    ps: PredictionSet,
    methods=METHODS,
    options: Options | None = None,
    dev: PredictionSet | None = None,
    workers: int = 1,
) -> Run:
    options = options or Options()
    methods = [m for m in METHODS if m in methods]
    u = uncertainty_matrix(ps)
    grid = None
    threshold = options.threshold
    if "ut" in methods and threshold is None:
        grid = tune_threshold(ps, options, dev, workers)
        threshold = grid.best_threshold

    def run(method: str) -> FusionResult:
        return fuse(method, ps, u, threshold=threshold,
                    uw_norm=options.uw_norm, cw_norm=options.cw_norm)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            fused = list(pool.map(run, methods))
    else:
        fused = [run(m) for m in methods]
    results = dict(zip(methods, fused))
    reports = {m: score(r.labels, ps.truth, ps.n_classes) for m, r in results.items()}
    return Run(results, reports, single_model_reports(ps), model_effects(ps), grid)
