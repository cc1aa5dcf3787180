import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmcsl import DataError
from cmcsl.classifiers import GaussianNB
from cmcsl.dataset import (
    ModalitySpec,
    ModalityView,
    MultimodalDataset,
    SyntheticSpec,
    load_multimodal,
    make_synthetic,
    read_binary,
    save_multimodal,
    stratified_two_fold,
    write_binary,
)
from cmcsl.evalstats import balanced_accuracy


def _write_manifest(tmp_path, visual_rows, text_rows, labels, header=False):
    def dump(name, rows):
        lines = []
        if header:
            lines.append(",".join(f"c{j}" for j in range(len(rows[0]))))
        lines += [",".join(str(v) for v in r) for r in rows]
        (tmp_path / name).write_text("\n".join(lines) + "\n")

    dump("visual.csv", visual_rows)
    dump("text.csv", text_rows)
    (tmp_path / "labels.csv").write_text("\n".join(str(v) for v in labels) + "\n")
    manifest = {
        "name": "toy",
        "labels": "labels.csv",
        "modalities": [{"name": "visual", "path": "visual.csv"}, {"name": "text", "path": "text.csv"}],
    }
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(manifest))
    return path


class TestLoad:
    def test_minimal_manifest(self, tmp_path):
        path = _write_manifest(
            tmp_path,
            [[0, 1], [1, 0], [2, 2], [3, 1]],
            [[0, 0, 1], [1, 1, 1], [2, 0, 0], [5, 5, 5]],
            [0, 0, 1, 1],
        )
        ds = load_multimodal(path)
        assert ds.n_samples == 4
        assert ds.n_classes == 2
        assert [v.d for v in ds.modalities] == [2, 3]
        assert ds.name == "toy"

    def test_header_row_is_skipped(self, tmp_path):
        path = _write_manifest(tmp_path, [[0, 1], [1, 0]], [[1], [2]], [0, 1], header=True)
        ds = load_multimodal(path)
        np.testing.assert_array_equal(ds.views[0], [[0, 1], [1, 0]])

    def test_row_count_mismatch(self, tmp_path):
        path = _write_manifest(
            tmp_path, [[0], [1], [2], [3]], [[0], [1], [2], [3], [4]], [0, 0, 1, 1])
        with pytest.raises(DataError, match="row-count mismatch"):
            load_multimodal(path)

    def test_nan_cell(self, tmp_path):
        path = _write_manifest(tmp_path, [[0], ["NaN"], [2], [3]], [[0], [1], [2], [3]], [0, 0, 1, 1])
        with pytest.raises(DataError, match="non-finite"):
            load_multimodal(path)

    def test_missing_file(self, tmp_path):
        path = _write_manifest(tmp_path, [[0], [1]], [[0], [1]], [0, 1])
        (tmp_path / "text.csv").unlink()
        with pytest.raises(DataError, match="missing file"):
            load_multimodal(path)

    def test_label_out_of_range(self, tmp_path):
        path = _write_manifest(tmp_path, [[0], [1], [2]], [[0], [1], [2]], [0, 1, 3])
        manifest = json.loads(path.read_text())
        manifest["n_classes"] = 2
        path.write_text(json.dumps(manifest))
        with pytest.raises(DataError, match="outside"):
            load_multimodal(path)

    def test_single_modality_rejected(self, tmp_path):
        path = _write_manifest(tmp_path, [[0], [1]], [[0], [1]], [0, 1])
        manifest = json.loads(path.read_text())
        manifest["modalities"] = manifest["modalities"][:1]
        path.write_text(json.dumps(manifest))
        with pytest.raises(DataError, match="at least 2"):
            load_multimodal(path)


class TestRoundTrip:
    def _dataset(self):
        rng = np.random.default_rng(0)
        return MultimodalDataset(
            (ModalityView("a", rng.normal(size=(30, 4)) * 1e3),
             ModalityView("b", rng.normal(size=(30, 2)) / 7)),
            np.arange(30) % 3,
            name="rt",
        )

    def test_csv(self, tmp_path):
        ds = self._dataset()
        back = load_multimodal(save_multimodal(ds, tmp_path))
        for a, b in zip(ds.views, back.views):
            np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)
        np.testing.assert_array_equal(ds.labels, back.labels)

    def test_binary_is_bit_exact(self, tmp_path):
        ds = self._dataset()
        back = load_multimodal(save_multimodal(ds, tmp_path, binary=True))
        for a, b in zip(ds.views, back.views):
            assert a.tobytes() == b.tobytes()

    def test_binary_header_layout(self, tmp_path):
        X = np.arange(6, dtype=float).reshape(3, 2)
        write_binary(tmp_path / "x.cmml", X)
        raw = (tmp_path / "x.cmml").read_bytes()
        assert raw[:4] == b"CMML"
        assert raw[4] == 1
        assert int.from_bytes(raw[5:9], "little") == 3
        assert int.from_bytes(raw[9:13], "little") == 2
        assert len(raw) == 13 + 6 * 8
        np.testing.assert_array_equal(read_binary(tmp_path / "x.cmml"), X)

    def test_binary_bad_magic(self, tmp_path):
        (tmp_path / "x.cmml").write_bytes(b"XXXX" + bytes(9))
        with pytest.raises(DataError, match="magic"):
            read_binary(tmp_path / "x.cmml")


class TestSynthetic:
    def test_deterministic(self):
        spec = SyntheticSpec(2, 50, (ModalitySpec("a", 4, 2.0), ModalitySpec("b", 3, 1.0)), seed=7)
        a, b = make_synthetic(spec), make_synthetic(spec)
        for x, y in zip(a.views, b.views):
            assert x.tobytes() == y.tobytes()
        assert a.labels.tobytes() == b.labels.tobytes()

    def test_center_geometry(self):
        spec = SyntheticSpec(3, 2000, (ModalitySpec("a", 5, 4.0, 0.5), ModalitySpec("b", 3, 1.0)), seed=1)
        ds = make_synthetic(spec)
        means = np.vstack([ds.views[0][ds.labels == k].mean(axis=0) for k in range(3)])
        for i in range(3):
            for j in range(i + 1, 3):
                assert np.linalg.norm(means[i] - means[j]) == pytest.approx(4.0, abs=0.1)

    def test_zero_separation_is_chance(self):
        # full-label GNB on a modality without class signal: BAC near 0.5
        scores = []
        for seed in range(20):
            ds = make_synthetic(SyntheticSpec(
                2, 50, (ModalitySpec("noise", 4, 0.0), ModalitySpec("b", 4, 3.0)), seed=seed))
            pair = stratified_two_fold(ds.labels, seed)
            X, y = ds.views[0], ds.labels
            model = GaussianNB().fit(X[pair.fold_a], y[pair.fold_a])
            scores.append(balanced_accuracy(y[pair.fold_b], model.predict(X[pair.fold_b])))
        assert np.mean(scores) == pytest.approx(0.5, abs=0.1)

    def test_well_separated_is_easy(self):
        ds = make_synthetic(SyntheticSpec(
            2, 50, (ModalitySpec("easy", 4, 10.0, 1.0), ModalitySpec("b", 4, 1.0)), seed=3))
        pair = stratified_two_fold(ds.labels, 3)
        X, y = ds.views[0], ds.labels
        model = GaussianNB().fit(X[pair.fold_a], y[pair.fold_a])
        assert balanced_accuracy(y[pair.fold_b], model.predict(X[pair.fold_b])) >= 0.99

    def test_invalid_synthetic_parameters(self):
        with pytest.raises(ValueError):
            make_synthetic(SyntheticSpec(2, 0))
        with pytest.raises(ValueError, match="d=1"):
            make_synthetic(SyntheticSpec(2, 5, (ModalitySpec("a", 1, 1.0), ModalitySpec("b", 2, 1.0))))


class TestStratifiedTwoFold:
    def test_even_classes(self):
        y = np.array([0, 0, 0, 0, 1, 1, 1, 1])
        pair = stratified_two_fold(y, 0)
        for fold in (pair.fold_a, pair.fold_b):
            assert np.bincount(y[fold]).tolist() == [2, 2]

    def test_odd_class_rule(self):
        y = np.array([0, 0, 0, 1, 1])
        pair = stratified_two_fold(y, 5)
        assert np.bincount(y[pair.fold_a], minlength=2).tolist() == [2, 1]
        assert np.bincount(y[pair.fold_b], minlength=2).tolist() == [1, 1]

    def test_smallest_classes(self):
        y = np.array([0, 1, 0, 1])
        pair = stratified_two_fold(y, 2)
        assert sorted(y[pair.fold_a]) == [0, 1]
        assert sorted(y[pair.fold_b]) == [0, 1]

    def test_singleton_class(self):
        with pytest.raises(DataError, match="class 1"):
            stratified_two_fold([0, 0, 1], 0)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(0, 4), min_size=2, max_size=60), st.integers(0, 2**32 - 1))
    def test_partition_property(self, labels, seed):
        y = np.array(labels)
        counts = np.bincount(y)
        if np.any((counts > 0) & (counts < 2)):
            return
        pair = stratified_two_fold(y, seed)
        both = np.concatenate([pair.fold_a, pair.fold_b])
        assert sorted(both.tolist()) == list(range(y.size))
        ca = np.bincount(y[pair.fold_a], minlength=counts.size)
        cb = np.bincount(y[pair.fold_b], minlength=counts.size)
        assert np.all(np.abs(ca - cb) <= 1)


def test_dataset_is_read_only():
    ds = make_synthetic(SyntheticSpec(seed=0))
    with pytest.raises(ValueError):
        ds.views[0][0, 0] = 1.0
    with pytest.raises(ValueError):
        ds.labels[0] = 1
