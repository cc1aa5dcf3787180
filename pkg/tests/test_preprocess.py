import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from sklearn.base import clone

from cmcsl import DataError
from cmcsl.preprocess import ModalityScaler, PreprocessKind, apply_scaler, fit_scaler, l2_normalize_rows

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
matrices = st.tuples(st.integers(1, 12), st.integers(1, 6)).flatmap(
    lambda s: arrays(np.float64, s, elements=finite))


class TestL2:
    def test_pythagorean_row(self):
        np.testing.assert_allclose(l2_normalize_rows([[3.0, 4.0]]), [[0.6, 0.8]])

    def test_zero_row_unchanged(self):
        np.testing.assert_array_equal(l2_normalize_rows([[0.0, 0.0]]), [[0.0, 0.0]])

    def test_diagonal_row(self):
        np.testing.assert_allclose(l2_normalize_rows([[1.0, 1.0]]), [[0.70710678, 0.70710678]], atol=1e-8)

    @settings(max_examples=200, deadline=None)
    @given(matrices)
    def test_idempotent(self, X):
        once = l2_normalize_rows(X)
        np.testing.assert_allclose(l2_normalize_rows(once), once, atol=1e-12, rtol=0)


class TestFit:
    def test_std_statistics(self):
        s = fit_scaler("std", [[1.0], [2.0], [3.0]])
        assert s.loc[0] == pytest.approx(2.0)
        assert s.scale[0] == pytest.approx(np.sqrt(2 / 3))

    def test_mm_statistics(self):
        s = fit_scaler("mm", [[2.0], [4.0], [6.0]])
        assert s.loc[0] == 2.0
        assert s.loc[0] + s.scale[0] == 6.0

    @pytest.mark.parametrize("kind", ["raw", "l2"])
    def test_stateless_kinds(self, kind):
        s = fit_scaler(kind, np.random.default_rng(0).normal(size=(5, 3)))
        assert s.loc is None and s.scale is None

    def test_empty(self):
        with pytest.raises(DataError):
            fit_scaler("std", np.empty((0, 3)))

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="l2std"):
            PreprocessKind.parse("zscore")


class TestApply:
    def test_std_on_fit_set(self):
        X = np.array([[1.0], [2.0], [3.0]])
        out = apply_scaler(fit_scaler("std", X), X)
        np.testing.assert_allclose(out.ravel(), [-1.2247, 0.0, 1.2247], atol=1e-4)

    def test_mm_on_fit_set(self):
        X = np.array([[2.0], [4.0], [6.0]])
        np.testing.assert_array_equal(apply_scaler(fit_scaler("mm", X), X).ravel(), [0.0, 0.5, 1.0])

    def test_l2std_constant_columns(self):
        X = np.array([[3.0, 4.0], [6.0, 8.0]])
        np.testing.assert_array_equal(apply_scaler(fit_scaler("l2std", X), X), np.zeros((2, 2)))

    def test_l2std_fits_after_normalization(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(20, 3)) + 2
        scaler = fit_scaler("l2std", X)
        np.testing.assert_allclose(scaler.loc, l2_normalize_rows(X).mean(axis=0))

    def test_dimension_mismatch(self):
        with pytest.raises(DataError, match="3 features"):
            apply_scaler(fit_scaler("std", np.ones((4, 3))), np.ones((4, 2)))

    def test_raw_identity_bitwise(self):
        X = np.random.default_rng(1).normal(size=(7, 4))
        assert apply_scaler(fit_scaler("raw", X), X).tobytes() == X.tobytes()

    def test_test_partition_uses_fit_statistics(self):
        train = np.array([[0.0], [2.0]])
        out = apply_scaler(fit_scaler("std", train), np.array([[4.0]]))
        assert out[0, 0] == pytest.approx(3.0)


class TestEstimator:
    def test_matches_functional(self):
        X = np.random.default_rng(2).normal(size=(10, 3))
        est = ModalityScaler("mm").fit(X)
        np.testing.assert_array_equal(est.transform(X), apply_scaler(fit_scaler("mm", X), X))

    def test_params_roundtrip(self):
        est = ModalityScaler(kind="std")
        assert est.get_params() == {"kind": "std"}
        assert clone(est).kind == "std"
        assert est.set_params(kind="l2").kind == "l2"

    def test_fit_transform(self):
        X = np.random.default_rng(3).normal(size=(6, 2))
        np.testing.assert_allclose(ModalityScaler("std").fit_transform(X).mean(axis=0), 0, atol=1e-12)
