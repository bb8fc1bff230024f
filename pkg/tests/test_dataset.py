import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from kplsqsar.dataset import (
    Dataset,
    join_features,
    load_table,
    scale_apply,
    scale_fit,
    write_table,
)
from kplsqsar.errors import DataError


def test_load_table_with_response(write_csv):
    path = write_csv("t.csv", "id,a,b,response\ns1,1.0,2e-1,3\ns2,-4,5,6.5\n")
    d = load_table(path, has_response=True)
    assert d.features.shape == (2, 2)
    assert d.response.tolist() == [3.0, 6.5]
    assert d.sample_ids == ("s1", "s2")
    assert d.feature_names == ("a", "b")
    assert d.features[0, 1] == 0.2


def test_load_table_tab_delimited_without_response(write_csv):
    path = write_csv("t.tsv", "id\ta\tb\nx\t1\t2\ny\t3\t4\n")
    d = load_table(path)
    assert d.response is None
    assert d.features.tolist() == [[1, 2], [3, 4]]


def test_non_numeric_cell_reports_position(write_csv):
    path = write_csv("bad.csv", "id,a,b\ns1,1,2\ns2,3,4\ns3,abc,6\n")
    with pytest.raises(DataError, match="row 3, column 2"):
        load_table(path)


@pytest.mark.parametrize(
    "body, match",
    [
        ("id,a,b\ns1,1\n", "fields"),
        ("id,a\ns1,nan\n", "non-finite"),
        ("id,a\ns1,inf\n", "non-finite"),
        ("", "empty"),
        ("id,a\n", "no data rows"),
        ("id,a\ns1,1\ns1,2\n", "duplicate"),
    ],
)
def test_malformed_tables(write_csv, body, match):
    with pytest.raises(DataError, match=match):
        load_table(write_csv("bad.csv", body))


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="no such file"):
        load_table(tmp_path / "absent.csv")


def test_response_flag_contract(write_csv):
    with_resp = write_csv("r.csv", "id,a,response\ns1,1,2\n")
    without = write_csv("n.csv", "id,a\ns1,1\n")
    with pytest.raises(DataError):
        load_table(without, has_response=True)
    with pytest.raises(DataError):
        load_table(with_resp, has_response=False)


def test_round1_shaped_table(tmp_path):
    rng = np.random.default_rng(0)
    d = Dataset(rng.standard_normal((89, 5787)), rng.standard_normal(89))
    path = tmp_path / "r1.csv"
    write_table(d, path)
    back = load_table(path, has_response=True)
    assert back.features.shape == (89, 5787)
    assert np.array_equal(back.features, d.features)
    assert np.array_equal(back.response, d.response)


def test_scale_fit_examples():
    X = np.array([[1.0, 5.0, -1.0], [2.0, 5.0, 0.0], [3.0, 5.0, 1.0]])
    p = scale_fit(Dataset(X))
    assert p.medians.tolist() == [2.0, 5.0, 0.0]
    assert p.deviations.tolist() == [1.0, 0.0, 1.0]
    assert p.degenerate_mask.tolist() == [False, True, False]
    out = scale_apply(Dataset(X), p).features
    assert out[:, 0].tolist() == [-1.0, 0.0, 1.0]
    assert out[:, 1].tolist() == [0.0, 0.0, 0.0]
    assert out[:, 2].tolist() == [-1.0, 0.0, 1.0]


def test_even_length_median_uses_middle_mean():
    p = scale_fit(Dataset(np.array([[1.0], [2.0], [4.0], [10.0]])))
    assert p.medians[0] == 3.0
    # |x - 3| = 2, 1, 1, 7 -> median 1.5
    assert p.deviations[0] == 1.5


def test_meanabs_mode():
    p = scale_fit(Dataset(np.array([[1.0], [2.0], [4.0], [10.0]])), mode="meanabs")
    assert p.deviations[0] == pytest.approx((2 + 1 + 1 + 7) / 4)


def test_response_untouched_and_refit_is_standard():
    rng = np.random.default_rng(1)
    d = Dataset(rng.standard_normal((11, 4)) * 3 + 2, rng.standard_normal(11))
    s = scale_apply(d, scale_fit(d))
    assert np.array_equal(s.response, d.response)
    p2 = scale_fit(s)
    np.testing.assert_allclose(p2.medians, 0.0, atol=1e-12)
    np.testing.assert_allclose(p2.deviations, 1.0, atol=1e-12)


def test_dimension_mismatch():
    p = scale_fit(Dataset(np.ones((3, 2))))
    with pytest.raises(DataError, match="features"):
        scale_apply(Dataset(np.ones((3, 3))), p)


tables = arrays(
    np.float64,
    st.tuples(st.integers(2, 12), st.integers(1, 5)),
    elements=st.floats(-1e3, 1e3, allow_nan=False, allow_subnormal=False, width=64),
)


@settings(max_examples=60, deadline=None)
@given(tables)
def test_fit_apply_standardizes_nondegenerate_columns(X):
    d = Dataset(X)
    p = scale_fit(d)
    s = scale_apply(d, p).features
    p2 = scale_fit(Dataset(s))
    ok = ~p.degenerate_mask & (p.deviations > 1e-6 * (1 + np.abs(p.medians)))
    np.testing.assert_allclose(p2.medians[ok], 0.0, atol=1e-12)
    np.testing.assert_allclose(p2.deviations[ok], 1.0, atol=1e-12)
    assert np.all(s[:, p.degenerate_mask] == 0)


@settings(max_examples=60, deadline=None)
@given(tables, st.floats(0.01, 100), st.floats(-100, 100))
def test_scaling_is_affine_invariant(X, a, b):
    base = scale_apply(Dataset(X), scale_fit(Dataset(X))).features
    Y = Dataset(a * X + b)
    moved = scale_apply(Y, scale_fit(Y)).features
    p = scale_fit(Dataset(X))
    ok = p.deviations > 1e-6 * (1 + np.abs(p.medians))
    np.testing.assert_allclose(moved[:, ok], base[:, ok], atol=1e-10 * max(1.0, np.max(np.abs(base))))


@settings(max_examples=40, deadline=None)
@given(tables, st.randoms(use_true_random=False))
def test_row_permutation_equivariance(X, rnd):
    perm = list(range(X.shape[0]))
    rnd.shuffle(perm)
    d = Dataset(X)
    a = scale_apply(d, scale_fit(d)).features[perm]
    dp = Dataset(X[perm])
    b = scale_apply(dp, scale_fit(dp)).features
    assert np.array_equal(a, b)


def test_join_features_by_id():
    base = Dataset(np.array([[1.0], [2.0]]), np.array([5.0, 6.0]), ("a", "b"), ("x",))
    extra = Dataset(np.array([[20.0], [10.0]]), None, ("b", "a"), ("d",))
    j = join_features(base, extra)
    assert j.features.tolist() == [[1.0, 10.0], [2.0, 20.0]]
    assert j.feature_names == ("x", "d")
    assert j.response.tolist() == [5.0, 6.0]


def test_join_reports_missing_id():
    base = Dataset(np.array([[1.0]]), None, ("a",), ("x",))
    extra = Dataset(np.array([[1.0], [2.0]]), None, ("a", "zz"), ("d",))
    with pytest.raises(DataError, match="'zz'"):
        join_features(base, extra)
    with pytest.raises(DataError, match="'a'"):
        join_features(Dataset(np.array([[1.0]]), None, ("a",), ("x",)),
                      Dataset(np.array([[1.0]]), None, ("q",), ("d",)))
