import json

import pytest

from filread.cli import main
from filread.pipeline import ConfigError, ExperimentConfig, load_config_file, run_experiment, write_run_outputs

FAST = ["--n_trees", "15", "--n_samples", "200", "--epochs", "50"]


@pytest.fixture(scope="module")
def manifest(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    assert main(["synth", "--out", str(out), "--docs_per_level", "12", "--synth_seed", "3"]) == 0
    return out / "manifest.csv"


def test_config_file_and_overrides(tmp_path):
    p = tmp_path / "exp.cfg"
    p.write_text("# experiment\nseed = 7\nmodel = rf, logreg\nk = 5\n", encoding="utf-8")
    raw = load_config_file(p)
    cfg = ExperimentConfig().with_overrides(raw).with_overrides({"k": "3"})
    assert cfg.seed == 7 and cfg.model == ("rf", "logreg") and cfg.k == 3
    p.write_text("bogus = 1\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config_file(p)


@pytest.mark.parametrize("override", [{"model": "foo"}, {"selection": "best"}, {"features": "trad,xyz"}, {"k": "0"}])
def test_invalid_config(override):
    with pytest.raises(ConfigError):
        ExperimentConfig().with_overrides(override).validate()


def test_run_table_shape(manifest):
    cfg = ExperimentConfig(manifest=str(manifest), selection="spearman,global,combined", n_trees=15, n_explain=1, n_samples=200)
    res = run_experiment(cfg)
    assert [name for name, _ in res.metric_rows] == ["RF + Corr", "RF + Global", "RF + Combined"]
    assert len(res.explanations) == 3
    sel = {r.selection.mode: r.selection.names for r in res.runs}
    assert len(sel["spearman"]) == 10 and sel["combined"][:10] == sel["spearman"]


def test_cli_run_deterministic(manifest, tmp_path, capsys):
    args = ["run", "--manifest", str(manifest), "--selection", "spearman,combined", *FAST]
    assert main([*args, "--out", str(tmp_path / "a")]) == 0
    assert main([*args, "--out", str(tmp_path / "b")]) == 0
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    assert {"metrics.csv", "rankings.csv", "report.md", "model.json", "lms.json"} <= {str(f) for f in files}
    assert any(str(f).startswith("explanations/") for f in files)
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes(), f


def test_cli_explain(manifest, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["train", "--manifest", str(manifest), "--out", str(out), *FAST]) == 0
    doc = manifest.parent / "docs" / "L2_001.txt"
    code = main(["explain", "--model-file", str(out / "model.json"), "--doc", str(doc), "--class", "2", "--out", str(out), "--n_samples", "200"])
    assert code == 0
    payload = json.loads((out / "explanations" / "level2_L2_001.json").read_text())
    assert len(payload["conditions"]) == 10 and len(payload["proba"]) == 3
    assert "prediction probabilities" in capsys.readouterr().out


def test_cli_explain_errors(manifest, tmp_path):
    doc = manifest.parent / "docs" / "L1_000.txt"
    assert main(["explain", "--model-file", str(tmp_path / "missing.json"), "--doc", str(doc), "--class", "1"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"version": 1, "kind": "rf", "classes": [1, 2, 3], "feature_names": ["no_such_feature"],
                               "stats": {"mean": [0], "std": [1]}, "config": {}, "trees": [],
                               "extra": {"discretizer": {"feature_names": ["no_such_feature"], "cuts": [[0, 0, 0]], "mins": [0], "maxs": [0]}}}))
    assert main(["explain", "--model-file", str(bad), "--doc", str(doc), "--class", "1"]) == 1


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["run", "--model", "foo"]) == 2
    assert "config error" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "none.cfg")]) == 2
    assert main(["run", "--manifest", str(tmp_path / "none.csv"), "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert "[corpus]" in err
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 2


def test_cli_rank_extract_report(manifest, tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["rank", "--manifest", str(manifest), "--out", str(out), "--model", "logreg,rf", *FAST]) == 0
    rows = (out / "rankings.csv").read_text().splitlines()
    assert rows[0] == "rank,feature,family,score,direction,source,class"
    spearman_rows = [r for r in rows if ",spearman," in r]
    assert len(spearman_rows) == 10
    assert len({r.rsplit(",", 1)[1] for r in rows if ",linear_weights," in r}) == 4  # overall + 3 levels
    assert (out / "cross_reference.txt").is_file()
    assert main(["extract", "--manifest", str(manifest), "--out", str(out), "--features", "trad,syll"]) == 0
    header = (out / "features_train.csv").read_text().splitlines()[0].split(",")
    assert header[:3] == ["doc_id", "label", "word_count"] and len(header) == 19
    assert main(["run", "--manifest", str(manifest), "--out", str(out), *FAST]) == 0
    assert main(["report", "--out", str(out)]) == 0
    assert "## Metrics" in (out / "report.md").read_text()
    assert main(["report", "--out", str(tmp_path / "empty")]) == 2


def test_write_run_outputs_report_matches_metrics(manifest, tmp_path):
    cfg = ExperimentConfig(manifest=str(manifest), model="logreg", selection="all,spearman", epochs=50, n_explain=0)
    res = run_experiment(cfg)
    paths = write_run_outputs(res, tmp_path)
    lines = paths["metrics"].read_text().splitlines()
    for (name, rep), line in zip(res.metric_rows, lines[1:]):
        assert line == ",".join([name, *rep.as_row()])
    assert "features in every level's top" in paths["report"].read_text()
