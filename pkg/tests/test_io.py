import json

import numpy as np
import pytest

from fusekit import PredictionSet
from fusekit.io import (
    HeaderMismatch,
    Manifest,
    ManifestError,
    MissingFile,
    ModelEntry,
    Options,
    ParseError,
    SampleIdMismatch,
    TruthMismatch,
    emit_report,
    load_manifest,
    load_predictions,
    markdown_table,
    pct,
    read_fused_labels,
    save_manifest,
    write_prediction_set,
)
from fusekit.pipeline import run_methods
from fusekit.syngen import SynSpec, generate

CLASSES = ("neutral", "happy", "angry")


def write_csv(path, rows, header=("sample_id", "true_label", *CLASSES)):
    lines = [",".join(header)] + [",".join(str(x) for x in r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def manifest_for(tmp_path, files, kinds=None):
    kinds = kinds or ["probabilities"] * len(files)
    entries = tuple(ModelEntry(f"m{i}", f, k) for i, (f, k) in enumerate(zip(files, kinds)))
    m = Manifest("demo", CLASSES, entries, base_dir=tmp_path)
    save_manifest(m, tmp_path / "manifest.json")
    return load_manifest(tmp_path / "manifest.json")


ROWS_A = [("b", "happy", 0.1, 0.8, 0.1), ("a", "neutral", 0.7, 0.2, 0.1),
          ("c", "angry", 0.2, 0.2, 0.6)]
ROWS_B = [("a", "neutral", 0.3, 0.3, 0.4), ("c", "angry", 0.1, 0.1, 0.8),
          ("b", "happy", 0.25, 0.5, 0.25)]


def test_load_two_models_sorted_by_id(tmp_path):
    write_csv(tmp_path / "a.csv", ROWS_A)
    write_csv(tmp_path / "b.csv", ROWS_B)
    ps = load_predictions(manifest_for(tmp_path, ["a.csv", "b.csv"]))
    assert ps.n_samples == 3 and ps.n_models == 2
    assert ps.sample_ids == ("a", "b", "c")
    assert ps.truth.tolist() == [0, 1, 2]
    np.testing.assert_allclose(ps.probs[0, 0], [0.7, 0.2, 0.1])


def test_load_parallel_same_result(tmp_path):
    write_csv(tmp_path / "a.csv", ROWS_A)
    write_csv(tmp_path / "b.csv", ROWS_B)
    m = manifest_for(tmp_path, ["a.csv", "b.csv"])
    assert np.array_equal(load_predictions(m).probs, load_predictions(m, workers=4).probs)


def test_missing_sample_id(tmp_path):
    write_csv(tmp_path / "a.csv", ROWS_A)
    write_csv(tmp_path / "b.csv", ROWS_B[:2])
    with pytest.raises(SampleIdMismatch, match="'b'"):
        load_predictions(manifest_for(tmp_path, ["a.csv", "b.csv"]))


def test_truth_disagreement(tmp_path):
    write_csv(tmp_path / "a.csv", ROWS_A)
    rows = [("a", "happy", 0.3, 0.3, 0.4)] + ROWS_B[1:]
    write_csv(tmp_path / "b.csv", rows)
    with pytest.raises(TruthMismatch):
        load_predictions(manifest_for(tmp_path, ["a.csv", "b.csv"]))


def test_logits_file(tmp_path):
    write_csv(tmp_path / "a.csv", [("x", "angry", 1, 2, 3)])
    ps = load_predictions(manifest_for(tmp_path, ["a.csv"], ["logits"]))
    np.testing.assert_allclose(
        ps.probs[0, 0], [0.090030573170380458, 0.24472847105479765, 0.66524095577482189],
        atol=1e-9,
    )


def test_header_and_parse_errors(tmp_path):
    write_csv(tmp_path / "a.csv", ROWS_A, header=("sample_id", "true_label", "happy",
                                                  "neutral", "angry"))
    with pytest.raises(HeaderMismatch):
        load_predictions(manifest_for(tmp_path, ["a.csv"]))
    write_csv(tmp_path / "b.csv", [("a", "neutral", 0.5, "x", 0.5)])
    with pytest.raises(ParseError, match=":2"):
        load_predictions(manifest_for(tmp_path, ["b.csv"]))
    with pytest.raises(MissingFile):
        load_predictions(manifest_for(tmp_path, ["nope.csv"]))


def test_manifest_roundtrip_and_validation(tmp_path):
    opts = Options(uw_norm="per-model", threshold=0.3, metric="WA")
    m = Manifest("t", CLASSES, (ModelEntry("a", "a.csv"),), opts, base_dir=tmp_path)
    save_manifest(m, tmp_path / "m.json")
    back = load_manifest(tmp_path / "m.json")
    assert back.options == opts and back.classes == CLASSES
    raw = json.loads((tmp_path / "m.json").read_text())
    assert raw["schema_version"] == 1
    assert raw["options"]["grid"] == {"start": 0.11, "end": 0.9, "step": 0.01}
    raw["schema_version"] = 99
    (tmp_path / "bad.json").write_text(json.dumps(raw))
    with pytest.raises(ManifestError):
        load_manifest(tmp_path / "bad.json")
    with pytest.raises(ManifestError):
        Manifest("t", ("a", "a"), (ModelEntry("a", "a.csv"),))
    with pytest.raises(ManifestError):
        Manifest("t", CLASSES, ())
    with pytest.raises(MissingFile):
        load_manifest(tmp_path / "absent.json")


@pytest.mark.parametrize("x, shown", [(0.754321, "75.4"), (0.7545, "75.5"), (0.7544999, "75.4"),
                                       (1.0, "100.0"), (0.0, "0.0"), (0.5, "50.0")])
def test_pct_half_up(x, shown):
    assert pct(x) == shown


def test_emit_single_method(tmp_path):
    p = np.array([[0.9, 0.1], [0.2, 0.8], [0.6, 0.4], [0.3, 0.7]])
    ps = PredictionSet.from_arrays([p], [0, 1, 1, 1])
    run = run_methods(ps, ["mean"])
    paths = emit_report(tmp_path, "tiny", ps, run.results, run.reports)
    table = paths["table"].read_text()
    assert "mean UA | mean WA" in table and "ul" not in table
    doc = json.loads(paths["results"].read_text())
    assert list(doc["methods"]) == ["mean"]
    assert doc["methods"]["mean"]["wa"] == 0.75
    assert doc["methods"]["mean"]["ua_pct"] == pct(doc["methods"]["mean"]["ua"])


def test_emit_all_methods_columns_and_roundtrip(tmp_path):
    ps = generate(SynSpec(30, 3, (0.6, 0.7), 0.5, seed=3))
    run = run_methods(ps)
    paths = emit_report(tmp_path, "syn", ps, run.results, run.reports, run.singles,
                        run.effects, run.grid)
    header = paths["table"].read_text().splitlines()[-3]
    cols = [c.strip().split()[0] for c in header.strip("|").split("|")[1::2]]
    assert cols == ["ul", "ut", "uw", "cw", "mean", "max"]
    labels = read_fused_labels(paths["labels"], ps.classes)
    for m, r in run.results.items():
        np.testing.assert_array_equal(labels[m], r.labels)
    doc = json.loads(paths["results"].read_text())
    assert set(doc) >= {"schema_version", "methods", "singles", "threshold_search", "effects"}
    assert len(doc["threshold_search"]["scores"]) == 80
    hist = paths["histogram"].read_text().splitlines()
    assert hist[0] == "model,bin_lo,bin_hi,correct,incorrect" and len(hist) == 1 + 2 * 20


def test_write_then_load_preserves_everything(tmp_path):
    ps = generate(SynSpec(25, 4, (0.5, 0.9), 0.7, seed=8))
    path = write_prediction_set(ps, tmp_path)
    back = load_predictions(load_manifest(path))
    assert back.sample_ids == ps.sample_ids
    np.testing.assert_array_equal(back.truth, ps.truth)
    np.testing.assert_array_equal(back.models[0].matrix, ps.models[0].matrix)


def test_markdown_includes_singles():
    ps = generate(SynSpec(20, 2, (0.6, 0.7), 0.5, seed=1))
    run = run_methods(ps, ["ul", "max"])
    text = markdown_table("x", run.reports, run.singles)
    assert "model0 UA" in text and "| ul UA | ul WA | max UA | max WA |" in text
