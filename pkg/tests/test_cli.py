import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from cmcsl.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main

WEAK_STRONG = ["--mod", "weak:8:1.0:1.0", "--mod", "strong:8:8.0:1.0"]


def _synth(out, *extra):
    return main(["synth", "--classes", "2", "--per-class", "50", *WEAK_STRONG, "--seed", "7",
                 "--out", str(out), *extra])


@pytest.fixture
def manifest(tmp_path):
    assert _synth(tmp_path / "data") == EXIT_OK
    return tmp_path / "data" / "manifest.json"


def _same_modality_manifest(tmp_path):
    rng = np.random.default_rng(0)
    y = np.repeat([0, 1], 10)
    X = rng.normal(size=(20, 3)) + y[:, None]
    for name in ("a", "b"):
        np.savetxt(tmp_path / f"{name}.csv", X, delimiter=",", fmt="%.17g")
    np.savetxt(tmp_path / "labels.csv", y, fmt="%d")
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"name": "same", "labels": "labels.csv", "modalities": [
        {"name": "a", "path": "a.csv"}, {"name": "b", "path": "b.csv"}]}))
    return path


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestSynth:
    def test_files(self, manifest):
        files = sorted(p.name for p in manifest.parent.iterdir())
        assert files == ["labels.csv", "manifest.json", "strong.csv", "weak.csv"]
        assert len((manifest.parent / "labels.csv").read_text().split()) == 100

    def test_byte_identical_rerun(self, tmp_path, manifest):
        assert _synth(tmp_path / "again") == EXIT_OK
        for p in manifest.parent.iterdir():
            assert p.read_bytes() == (tmp_path / "again" / p.name).read_bytes()

    def test_zero_per_class(self, tmp_path, capsys):
        code = main(["synth", "--per-class", "0", "--out", str(tmp_path)])
        assert code == EXIT_USAGE
        assert "error" in capsys.readouterr().err

    def test_bad_modality_flag(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            main(["synth", "--mod", "weak:x", "--out", str(tmp_path)])
        assert info.value.code == EXIT_USAGE


class TestValidate:
    def test_ok(self, manifest, capsys):
        assert main(["validate", str(manifest)]) == EXIT_OK
        assert "N=100" in capsys.readouterr().out

    def test_missing_file(self, manifest, capsys):
        (manifest.parent / "weak.csv").unlink()
        assert main(["validate", str(manifest)]) == EXIT_DATA
        assert "missing file" in capsys.readouterr().err


class TestPseudolabel:
    def test_identical_modalities(self, tmp_path, capsys):
        assert main(["pseudolabel", str(_same_modality_manifest(tmp_path)), "--b-class", "2"]) == EXIT_OK
        assert "resolved fraction: 0.000000" in capsys.readouterr().out

    def test_stable_and_dump(self, manifest, tmp_path, capsys):
        outs = []
        for i in range(2):
            dump = tmp_path / f"dump{i}.csv"
            assert main(["pseudolabel", str(manifest), "--seed", "3", "--dump-pseudolabels", str(dump)]) == EXIT_OK
            outs.append(capsys.readouterr().out.split("wrote")[0])
        assert outs[0] == outs[1]
        assert (tmp_path / "dump0.csv").read_bytes() == (tmp_path / "dump1.csv").read_bytes()
        rows = _read_csv(tmp_path / "dump0.csv")
        assert list(rows[0]) == ["instance", "y_true", "y_weak", "y_strong", "y_cm", "provenance"]
        assert sum(r["provenance"] == "prelabeled" for r in rows) == 2

    def test_budget_too_large(self, manifest, capsys):
        assert main(["pseudolabel", str(manifest), "--b-class", "51"]) == EXIT_DATA
        assert "class 0" in capsys.readouterr().err


class TestRun:
    def test_default_methods(self, manifest, tmp_path, capsys):
        out = tmp_path / "res"
        assert main(["run", "--manifest", str(manifest), "--budgets", "1,2", "--out", str(out)]) == EXIT_OK
        for name in ("results.csv", "timings.csv", "stats.csv", "curves.csv", "summary.md"):
            assert (out / name).exists()
        rows = _read_csv(out / "results.csv")
        assert {r["method"] for r in rows} == {"full", "ef", "lf", "pre", "uni", "cmcsl"}
        summary = (out / "summary.md").read_text()
        assert "## Rank table: binary" in summary
        assert "Average rank" in summary

    def test_curves_twenty_budgets(self, manifest, tmp_path):
        out = tmp_path / "res"
        assert main(["run", "--manifest", str(manifest), "--methods", "pre,uni,cmcsl",
                     "--budgets", "1-20", "--repeats", "1", "--out", str(out)]) == EXIT_OK
        rows = [r for r in _read_csv(out / "curves.csv") if not r["dataset"].startswith("group:")]
        counts = {}
        for r in rows:
            counts[(r["method"], r["modality"])] = counts.get((r["method"], r["modality"]), 0) + 1
        assert len(counts) == 6 and set(counts.values()) == {20}

    def test_invalid_method(self, manifest, tmp_path, capsys):
        code = main(["run", "--manifest", str(manifest), "--methods", "pre,svm", "--out", str(tmp_path)])
        assert code != EXIT_OK
        err = capsys.readouterr().err
        assert "svm" in err and "cmcsl" in err and "full" in err

    def test_no_datasets(self, capsys):
        assert main(["run"]) == EXIT_USAGE

    def test_config_file_and_report(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"datasets": [{"synthetic": {"samples_per_class": 8}}],
                                   "budgets": [1], "methods": ["full", "cmcsl"], "repeats": 1}))
        out = tmp_path / "res"
        assert main(["run", str(cfg), "--out", str(out)]) == EXIT_OK
        first = (out / "summary.md").read_text()
        (out / "summary.md").unlink()
        assert main(["report", str(out / "results.csv")]) == EXIT_OK
        assert (out / "summary.md").read_text().split("## ", 1)[1] == first.split("## ", 1)[1]


@pytest.mark.parametrize("command", ["synth", "validate", "pseudolabel", "run", "report"])
def test_help(command):
    proc = subprocess.run([sys.executable, "-m", "cmcsl", command, "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "usage" in proc.stdout
