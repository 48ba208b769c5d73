import csv
import shutil
import subprocess
import sys

import numpy as np
import pytest

from spxforest import synthetic
from spxforest.cli import main
from spxforest.metrics import relative_gain
from spxforest.pipeline import STAGES, ConfigError, PipelineConfig
from spxforest.pipeline.config import parse_text

SMALL = {
    "learners.algorithms": "RC,LR,LDA,GNB,DT,KNN",
    "learners.tune_budget": 2,
    "learners.top_k": 3,
    "learners.folds": 3,
    "ensemble.iterations": 10,
    "ensemble.runs": 2,
}


def small_study(root):
    return synthetic.write_desk_study(root, n_areas=2, size=128, k_target=80, n_pure=4, n_mixed=4,
                                      extra=SMALL)


def read(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


@pytest.fixture(scope="module")
def study(tmp_path_factory):
    root = tmp_path_factory.mktemp("study")
    conf = small_study(root)
    for stage in STAGES:
        assert main([stage, "--config", str(conf)]) == 0, stage
    return root, conf


@pytest.fixture
def fresh(tmp_path):
    return small_study(tmp_path)


class TestConfig:
    def test_parse(self):
        assert parse_text("# c\na = 1\n b=x=y \n") == {"a": "1", "b": "x=y"}

    @pytest.mark.parametrize("text", ["novalue\n", "a = 1\na = 2\n", " = 3\n"])
    def test_parse_errors(self, text):
        with pytest.raises(ConfigError):
            parse_text(text)

    def test_relative_paths_and_defaults(self, fresh):
        cfg = PipelineConfig.load(fresh)
        assert cfg.output == fresh.parent / "run"
        assert cfg.methods == ["crs", "ergc", "etps", "rss", "slic"]
        assert [a.name for a in cfg.areas] == ["a0", "a1"]
        assert cfg.k_target("slic") == 80
        assert PipelineConfig.load(fresh, seed=9).seed == 9

    @pytest.mark.parametrize("line, match", [
        ("methods = slic,seeds", "unknown superpixel methods"),
        ("learners.algorithms = RC,LGBM", "unknown learners"),
        ("grid.lr = {1,2}", "grid keys"),
        ("area.a1.raster = data/nope.hdr", "file not found"),
        ("superpixel.k_target = many", "must be an integer"),
    ])
    def test_validation(self, fresh, line, match):
        text = fresh.read_text()
        key = line.split(" = ")[0]
        lines = [ln for ln in text.splitlines() if not ln.startswith(key + " ")]
        fresh.write_text("\n".join(lines + [line]) + "\n")
        with pytest.raises(ConfigError, match=match):
            PipelineConfig.load(fresh)


class TestCli:
    def test_usage_errors(self, fresh, capsys):
        assert main([]) == 2
        assert main(["segment"]) == 2
        assert main(["bogus", "--config", str(fresh)]) == 2
        assert main(["segment", "--config", str(fresh), "--method", "seeds"]) == 2
        assert "unknown method 'seeds'" in capsys.readouterr().err
        assert main(["segment", "--config", str(fresh), "--jobs", "0"]) == 2
        assert main(["segment", "--config", str(fresh.parent / "missing.conf")]) == 2

    def test_missing_upstream(self, fresh, capsys):
        assert main(["dataset", "--config", str(fresh)]) == 1
        assert "missing upstream artifact" in capsys.readouterr().err

    def test_partial_training_names_missing_methods(self, study, tmp_path, capsys):
        root, _ = study
        work = tmp_path / "w"
        shutil.copytree(root, work)
        for m in ("crs", "rss"):
            (work / "run" / "manifests" / f"train_{m}.txt").unlink()
        assert main(["crosseval", "--config", str(work / "study.conf")]) == 1
        err = capsys.readouterr().err
        assert "crs, rss" in err
        assert main(["train", "--config", str(work / "study.conf"), "--method", "crs", "--method", "rss"]) == 0
        assert main(["crosseval", "--config", str(work / "study.conf")]) == 0

    def test_stale_artifact(self, study, tmp_path, capsys):
        root, _ = study
        work = tmp_path / "w"
        shutil.copytree(root, work)
        f = work / "run" / "features" / "etps" / "a1.csv"
        f.write_text(f.read_text() + "\n")
        assert main(["dataset", "--config", str(work / "study.conf")]) == 1
        err = capsys.readouterr().err
        assert "stale upstream artifact" in err and "etps" in err

    def test_method_restriction(self, fresh):
        assert main(["segment", "--config", str(fresh), "--method", "slic", "--area", "a0"]) == 0
        segs = sorted(p.name for p in (fresh.parent / "run" / "segments").rglob("*.hdr"))
        assert segs == ["a0.hdr"]

    def test_log_env(self, fresh, monkeypatch):
        monkeypatch.setenv("SPXFOREST_LOG", "debug")
        assert main(["segment", "--config", str(fresh), "--method", "rss", "--area", "a1"]) == 0

    def test_module_entry_point(self, fresh):
        r = subprocess.run([sys.executable, "-m", "spxforest.cli", "report", "--config", str(fresh)],
                           capture_output=True, text=True)
        assert r.returncode == 1 and "missing" in r.stderr


class TestArtifacts:
    def test_tree(self, study):
        out = study[0] / "run"
        for rel in ("config.snapshot.txt", "crosseval/table.csv", "ensemble/summary.csv",
                    "ensemble/probabilities.csv", "diversity/cor_all.csv", "report/table1.txt",
                    "report/table2.txt", "report/table3.txt", "report/cor_heatmap.png"):
            assert (out / rel).is_file(), rel
        assert (out / "config.snapshot.txt").read_text() == (study[0] / "study.conf").read_text()

    def test_segment_sidecar(self, study):
        side = study[0] / "run" / "segments" / "crs" / "a0.sidecar.txt"
        text = side.read_text()
        assert "algorithm=crs" in text and "k_actual=" in text and "params.seed=" in text

    def test_relative_gain_recomputes(self, study):
        out = study[0] / "run"
        table = read(out / "crosseval" / "table.csv")
        rows = {r["test_method"]: r for r in table}
        for r in read(out / "ensemble" / "summary.csv"):
            cells = [float(v) for k, v in rows[r["target"]].items() if k != "test_method"]
            assert float(r["top1_balanced_accuracy"]) == pytest.approx(max(cells))
            assert float(r["relative_gain"]) == relative_gain(float(r["umda_balanced_accuracy"]),
                                                              float(r["top1_balanced_accuracy"]))
            assert int(r["mv_n_classifiers"]) == 15

    def test_crosseval_mean_std_rows(self, study):
        table = read(study[0] / "run" / "crosseval" / "table.csv")
        body = [r for r in table if r["test_method"] not in ("mean", "std")]
        stats = {r["test_method"]: r for r in table if r["test_method"] in ("mean", "std")}
        for col in body[0]:
            if col == "test_method":
                continue
            v = np.array([float(r[col]) for r in body])
            assert float(stats["mean"][col]) == pytest.approx(v.mean(), abs=1e-6)
            assert float(stats["std"][col]) == pytest.approx(v.std(ddof=1), abs=1e-6)

    def test_splits_disjoint(self, study):
        for m in ("crs", "ergc", "etps", "rss", "slic"):
            rows = read(study[0] / "run" / "dataset" / f"{m}.csv")
            keys = [(r["area_id"], r["segment_id"]) for r in rows]
            assert len(keys) == len(set(keys))
            assert {r["split"] for r in rows} == {"train", "validation", "test"}

    def test_probabilities_in_range(self, study):
        for r in read(study[0] / "run" / "ensemble" / "probabilities.csv"):
            assert 0.0 <= float(r["percent"]) <= 100.0
