"""Manifest and prediction-file formats, plus report emission.

Prediction CSV (one file per model, UTF-8)::

    sample_id,true_label,<class_1>,...,<class_K>

``true_label`` is a class name (an integer index is accepted as well). Rows are
aligned across models by ``sample_id`` and sorted lexicographically.

Manifest (JSON, ``schema_version`` 1)::

    {
      "schema_version": 1,
      "task_name": "demo",
      "classes": ["neutral", "happy"],
      "models": [{"name": "a", "path": "a.csv", "kind": "probabilities"}],
      "options": {"uw_norm": "per-sample", "cw_norm": "per-model",
                  "threshold": null, "metric": "UA",
                  "grid": {"start": 0.11, "end": 0.9, "step": 0.01}}
    }

Relative model paths resolve against the manifest's directory.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np

from .core import KINDS, FusekitError, ModelPredictions, PredictionSet, validate
from .evaluation import EffectReport, EvaluationReport
from .fusion import METHODS, NORMS, PER_MODEL, PER_SAMPLE, FusionResult, GridSearchResult

SCHEMA_VERSION = 1


class MissingFile(OSError):
    pass


class ManifestError(FusekitError):
    pass


class HeaderMismatch(FusekitError):
    pass


class SampleIdMismatch(FusekitError):
    pass


class TruthMismatch(FusekitError):
    pass


class ParseError(FusekitError):
    pass


@dataclass(frozen=True)
class ModelEntry:
    name: str
    path: str
    kind: str = "probabilities"


@dataclass(frozen=True)
class GridSpec:
    start: float = 0.11
    end: float = 0.90
    step: float = 0.01


@dataclass(frozen=True)
class Options:
    uw_norm: str = PER_SAMPLE
    cw_norm: str = PER_MODEL
    threshold: float | None = None
    metric: str = "UA"
    grid: GridSpec = field(default_factory=GridSpec)


@dataclass(frozen=True)
class Manifest:
    task_name: str
    classes: tuple[str, ...]
    models: tuple[ModelEntry, ...]
    options: Options = field(default_factory=Options)
    base_dir: Path = Path(".")

    def __post_init__(self):
        if not self.models:
            raise ManifestError("manifest lists no models")
        if len(self.classes) < 2:
            raise ManifestError("manifest needs at least two classes")
        if len(set(self.classes)) != len(self.classes):
            raise ManifestError("class names must be unique")
        names = [m.name for m in self.models]
        if len(set(names)) != len(names):
            raise ManifestError("model names must be unique")
        for m in self.models:
            if m.kind not in KINDS:
                raise ManifestError(f"model {m.name!r}: kind must be one of {KINDS}")
        o = self.options
        if o.uw_norm not in NORMS or o.cw_norm not in NORMS:
            raise ManifestError(f"uw_norm/cw_norm must be one of {NORMS}")
        if o.metric.upper() not in ("UA", "WA"):
            raise ManifestError(f"metric must be UA or WA, got {o.metric!r}")
        if o.threshold is not None and not 0 < o.threshold < 1:
            raise ManifestError(f"threshold must lie in (0, 1), got {o.threshold}")

    def model_path(self, entry: ModelEntry) -> Path:
        p = Path(entry.path)
        return p if p.is_absolute() else self.base_dir / p

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "task_name": self.task_name,
            "classes": list(self.classes),
            "models": [asdict(m) for m in self.models],
            "options": asdict(self.options),
        }


def load_manifest(path) -> Manifest:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise MissingFile(f"manifest not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON: {exc}") from exc
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ManifestError(f"{path}: unsupported schema_version {version!r}")
    try:
        opts = dict(raw.get("options") or {})
        grid = GridSpec(**(opts.pop("grid", None) or {}))
        return Manifest(
            task_name=str(raw.get("task_name", path.stem)),
            classes=tuple(raw["classes"]),
            models=tuple(ModelEntry(**m) for m in raw["models"]),
            options=Options(grid=grid, **opts),
            base_dir=path.parent,
        )
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"{path}: malformed manifest: {exc}") from exc


def save_manifest(manifest: Manifest, path) -> None:
    Path(path).write_text(json.dumps(manifest.to_dict(), indent=2) + "\n", encoding="utf-8")


def _parse_label(value: str, classes: tuple[str, ...], where: str) -> int:
    if value in classes:
        return classes.index(value)
    try:
        idx = int(value)
    except ValueError:
        raise ParseError(f"{where}: unknown class label {value!r}") from None
    if not 0 <= idx < len(classes):
        raise ParseError(f"{where}: label index {idx} out of range")
    return idx


def read_prediction_csv(path, classes: tuple[str, ...]) -> dict[str, tuple[int, list[float]]]:
    """Parse one model file into {sample_id: (truth index, row values)}."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"prediction file not found: {path}")
    rows: dict[str, tuple[int, list[float]]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["sample_id", "true_label", *classes]
        if header != expected:
            raise HeaderMismatch(f"{path}: header {header} != {expected}")
        for line_no, rec in enumerate(reader, start=2):
            where = f"{path}:{line_no}"
            if not rec:
                continue
            if len(rec) != len(expected):
                raise ParseError(f"{where}: expected {len(expected)} fields, got {len(rec)}")
            sid = rec[0]
            if sid in rows:
                raise ParseError(f"{where}: duplicate sample_id {sid!r}")
            try:
                values = [float(x) for x in rec[2:]]
            except ValueError as exc:
                raise ParseError(f"{where}: {exc}") from None
            rows[sid] = (_parse_label(rec[1], classes, where), values)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return rows


def load_predictions(manifest: Manifest, workers: int = 1) -> PredictionSet:
    paths = [manifest.model_path(m) for m in manifest.models]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parsed = list(pool.map(lambda p: read_prediction_csv(p, manifest.classes), paths))
    else:
        parsed = [read_prediction_csv(p, manifest.classes) for p in paths]

    ref_entry, ref = manifest.models[0], parsed[0]
    ids = sorted(ref)
    for entry, rows in zip(manifest.models[1:], parsed[1:]):
        missing = sorted(set(ref) - set(rows))
        extra = sorted(set(rows) - set(ref))
        if missing or extra:
            sid = (missing or extra)[0]
            owner = entry.name if missing else ref_entry.name
            raise SampleIdMismatch(f"sample_id {sid!r} missing from model {owner!r}")
        for sid in ids:
            if rows[sid][0] != ref[sid][0]:
                raise TruthMismatch(
                    f"sample_id {sid!r}: true_label differs between "
                    f"{ref_entry.name!r} and {entry.name!r}"
                )

    models = tuple(
        ModelPredictions(e.name, np.array([rows[sid][1] for sid in ids]), e.kind)
        for e, rows in zip(manifest.models, parsed)
    )
    truth = np.array([ref[sid][0] for sid in ids])
    ps = PredictionSet(models, truth, manifest.classes, tuple(ids))
    validate(ps)
    return ps


def write_prediction_csv(path, ps: PredictionSet, m: int) -> None:
    """Write model ``m`` of ``ps`` in the prediction CSV format (raw matrix)."""
    model = ps.models[m]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "true_label", *ps.classes])
        for sid, t, row in zip(ps.sample_ids, ps.truth, model.matrix):
            w.writerow([sid, ps.classes[t], *(repr(float(x)) for x in row)])


def write_prediction_set(ps: PredictionSet, out_dir, task_name: str = "task") -> Path:
    """Write one CSV per model plus a manifest; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for m, model in enumerate(ps.models):
        fname = f"{model.model_name}.csv"
        write_prediction_csv(out / fname, ps, m)
        entries.append(ModelEntry(model.model_name, fname, model.kind))
    manifest = Manifest(task_name, ps.classes, tuple(entries), base_dir=out)
    path = out / "manifest.json"
    save_manifest(manifest, path)
    return path


def pct(x: float) -> str:
    """Percent with one decimal, rounded half-up: 0.754321 -> '75.4'."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "-"
    d = (Decimal(repr(float(x))) * 100).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)
    return str(d)


def _report_dict(rep: EvaluationReport) -> dict:
    return {
        "ua": rep.ua,
        "wa": rep.wa,
        "ua_pct": pct(rep.ua),
        "wa_pct": pct(rep.wa),
        "confusion": rep.confusion.tolist(),
        "per_class_recall": [None if math.isnan(r) else float(r) for r in rep.per_class_recall],
    }


def _ordered(methods) -> list[str]:
    return [m for m in METHODS if m in methods]


def results_document(
    task_name: str,
    ps: PredictionSet,
    results: dict[str, FusionResult],
    reports: dict[str, EvaluationReport],
    singles: dict[str, EvaluationReport] | None = None,
    grid: GridSearchResult | None = None,
    options: Options | None = None,
) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "task_name": task_name,
        "n_samples": ps.n_samples,
        "classes": list(ps.classes),
        "models": ps.names,
        "options": asdict(options) if options is not None else None,
        "methods": {},
        "singles": {},
        "threshold_search": None,
    }
    for m in _ordered(results):
        entry = _report_dict(reports[m])
        entry["threshold"] = results[m].threshold
        doc["methods"][m] = entry
    for name, rep in (singles or {}).items():
        doc["singles"][name] = _report_dict(rep)
    if grid is not None:
        doc["threshold_search"] = {
            "best_threshold": grid.best_threshold,
            "best_score": grid.best_score,
            "optimized_metric": grid.optimized_metric,
            "scores": [{"threshold": t, "ua": ua, "wa": wa} for t, ua, wa in grid.scores],
        }
    return doc


def markdown_table(task_name: str, reports: dict[str, EvaluationReport],
                   singles: dict[str, EvaluationReport] | None = None) -> str:
    methods = _ordered(reports)
    lines = []
    if singles:
        head = " | ".join(f"{n} UA | {n} WA" for n in singles)
        lines += [f"| Task | {head} |", "|---" * (1 + 2 * len(singles)) + "|"]
        cells = " | ".join(f"{pct(r.ua)} | {pct(r.wa)}" for r in singles.values())
        lines += [f"| {task_name} | {cells} |", ""]
    head = " | ".join(f"{m} UA | {m} WA" for m in methods)
    lines += [f"| Task | {head} |", "|---" * (1 + 2 * len(methods)) + "|"]
    cells = " | ".join(f"{pct(reports[m].ua)} | {pct(reports[m].wa)}" for m in methods)
    lines.append(f"| {task_name} | {cells} |")
    return "\n".join(lines) + "\n"


def write_fused_labels(path, ps: PredictionSet, results: dict[str, FusionResult]) -> None:
    methods = _ordered(results)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "true_label",
                    *[c for m in methods for c in (f"{m}_label", f"{m}_provenance")]])
        for s, sid in enumerate(ps.sample_ids):
            row = [sid, ps.classes[ps.truth[s]]]
            for m in methods:
                row += [ps.classes[results[m].labels[s]], results[m].provenance(s)]
            w.writerow(row)


def read_fused_labels(path, classes) -> dict[str, np.ndarray]:
    """Read a fused-label CSV back into {method: label indices}."""
    classes = tuple(classes)
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        methods = [c[: -len("_label")] for c in reader.fieldnames if c.endswith("_label")
                   and c != "true_label"]
        labels: dict[str, list[int]] = {m: [] for m in methods}
        for rec in reader:
            for m in methods:
                labels[m].append(classes.index(rec[f"{m}_label"]))
    return {m: np.array(v, dtype=np.int64) for m, v in labels.items()}


def write_histograms(path, effects: dict[str, EffectReport]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "bin_lo", "bin_hi", "correct", "incorrect"])
        for name, eff in effects.items():
            h = eff.histogram
            for i in range(len(h["correct"])):
                w.writerow([name, f"{h['edges'][i]:.2f}", f"{h['edges'][i + 1]:.2f}",
                            int(h["correct"][i]), int(h["incorrect"][i])])


def effect_dict(eff: EffectReport) -> dict:
    return {
        "d": eff.d,
        "category": eff.category,
        "degenerate_reason": eff.degenerate_reason,
        "correct": _nan_to_none(asdict(eff.correct)),
        "incorrect": _nan_to_none(asdict(eff.incorrect)),
    }


def _nan_to_none(d: dict) -> dict:
    return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}


def write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, allow_nan=False) + "\n", encoding="utf-8")


def emit_report(
    out_dir,
    task_name: str,
    ps: PredictionSet,
    results: dict[str, FusionResult],
    reports: dict[str, EvaluationReport],
    singles: dict[str, EvaluationReport] | None = None,
    effects: dict[str, EffectReport] | None = None,
    grid: GridSearchResult | None = None,
    options: Options | None = None,
) -> dict[str, Path]:
    """Write results.json, table.md, fused_labels.csv and histogram.csv."""
    if not results:
        raise ValueError("emit_report needs at least one evaluated method")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    paths = {
        "results": out / "results.json",
        "table": out / "table.md",
        "labels": out / "fused_labels.csv",
        "histogram": out / "histogram.csv",
    }
    doc = results_document(task_name, ps, results, reports, singles, grid, options)
    if effects:
        doc["effects"] = {k: effect_dict(v) for k, v in effects.items()}
    write_json(paths["results"], doc)
    paths["table"].write_text(markdown_table(task_name, reports, singles), encoding="utf-8")
    write_fused_labels(paths["labels"], ps, results)
    write_histograms(paths["histogram"], effects or {})
    return paths


def read_score_table(path, ensemble: bool) -> dict[tuple, float]:
    """Long-form score table for improvement counting.

    Ensemble columns: ``dataset,combination,method,metric,score``.
    Single-model columns: ``dataset,model,metric,score``.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"score table not found: {path}")
    cols = (["dataset", "combination", "method", "metric", "score"] if ensemble
            else ["dataset", "model", "metric", "score"])
    table: dict[tuple, float] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != cols:
            raise HeaderMismatch(f"{path}: header {header} != {cols}")
        for line_no, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(cols):
                raise ParseError(f"{path}:{line_no}: expected {len(cols)} fields")
            key = tuple(rec[:-1])
            if key in table:
                raise ParseError(f"{path}:{line_no}: duplicate key {key}")
            try:
                table[key] = float(rec[-1])
            except ValueError:
                raise ParseError(f"{path}:{line_no}: bad score {rec[-1]!r}") from None
    return table
