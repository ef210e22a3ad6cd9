import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from sparsesvm.datagen import GroupedBinarySpec, gen_grouped_binary
from sparsesvm.dataio import (
    DataFormatError,
    GridSpec,
    SplitSpec,
    default_grid,
    grid_search_cv,
    load_dataset,
    load_delimited,
    load_sparse_text,
    save_delimited,
    save_sparse_text,
    sparsity_key,
    split,
)
from sparsesvm.dataset import Dataset
from sparsesvm.matcore import standardize
from sparsesvm.solvers import SolverConfig
from sparsesvm.svm import TrainingError, count_nonzero, penalty_from_params, predict, train_binary

FAST = SolverConfig(max_iterations=600)


# --- delimited ---------------------------------------------------------------------------


def test_delimited_text_labels(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("id,a,b,diag\n1,0.5,2,M\n2,1.5,3,B\n3,2.5,4,M\n")
    ds = load_delimited(f, label_column="diag", header=True, positive_label="M", ignore_columns=["id"])
    np.testing.assert_array_equal(ds.y, [1, -1, 1])
    np.testing.assert_array_equal(ds.X, [[0.5, 2], [1.5, 3], [2.5, 4]])
    assert ds.feature_names == ("a", "b")


def test_delimited_errors(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("1,2,1\n3,4\n")
    with pytest.raises(DataFormatError, match="line 2"):
        load_delimited(f)
    f.write_text("1,x,1\n")
    with pytest.raises(DataFormatError, match="non-numeric"):
        load_delimited(f)
    f.write_text("1,2,M\n3,4,B\n5,6,Q\n")
    with pytest.raises(DataFormatError, match="line 3"):
        load_delimited(f, positive_label="M")
    with pytest.raises(DataFormatError, match="positive_label"):
        load_delimited(f)
    with pytest.raises(DataFormatError):
        load_delimited(f, positive_label="Z")
    f.write_text("1,2,1.5\n")
    with pytest.raises(DataFormatError, match="not an integer"):
        load_delimited(f)
    f.write_text("")
    with pytest.raises(DataFormatError):
        load_delimited(f)


def test_delimited_tab_and_label_index(tmp_path):
    f = tmp_path / "t.tsv"
    f.write_text("2\t0.25\t1e-3\n1\t-4\t7\n")
    ds = load_delimited(f, label_column=0, delimiter="\t")
    np.testing.assert_array_equal(ds.y, [2, 1])
    np.testing.assert_array_equal(ds.X, [[0.25, 1e-3], [-4, 7]])


@given(arrays(np.float64, (4, 3), elements=st.floats(allow_nan=False, allow_infinity=False, width=64)))
def test_delimited_roundtrip_exact(tmp_path_factory, X):
    f = tmp_path_factory.mktemp("rt") / "x.csv"
    ds = Dataset(X, np.array([1, -1, 1, -1]))
    save_delimited(ds, f)
    back = load_delimited(f, header=True)
    np.testing.assert_array_equal(back.X, ds.X)
    np.testing.assert_array_equal(back.y, ds.y)


# --- sparse ------------------------------------------------------------------------------


def test_sparse_examples(tmp_path):
    f = tmp_path / "s.svm"
    f.write_text("+1 1:0.5 3:2\n-1\n# comment\n-1 2:1e-2  # tail\n")
    ds = load_sparse_text(f, p=3)
    np.testing.assert_array_equal(ds.X, [[0.5, 0, 2], [0, 0, 0], [0, 0.01, 0]])
    np.testing.assert_array_equal(ds.y, [1, -1, -1])
    assert load_dataset(f).p == 3


@pytest.mark.parametrize(
    "line, msg",
    [("1 2:1 2:3", "strictly increasing"), ("1 0:1", "indices start at 1"), ("1 3:1 2:1", "strictly"),
     ("x 1:1", "label"), ("1 1-2", "malformed"), ("1 1:nan", "non-finite")],
)
def test_sparse_errors(tmp_path, line, msg):
    f = tmp_path / "s.svm"
    f.write_text("1 1:1\n" + line + "\n")
    with pytest.raises(DataFormatError, match=msg):
        load_sparse_text(f)


def test_sparse_roundtrip_and_p_check(tmp_path, rng):
    X = np.where(rng.random((6, 5)) < 0.5, 0.0, rng.normal(size=(6, 5)))
    ds = Dataset(X, np.arange(6) % 3 + 1)
    f = tmp_path / "r.sparse"
    save_sparse_text(ds, f)
    back = load_sparse_text(f, p=5)
    np.testing.assert_array_equal(back.X, X)
    with pytest.raises(DataFormatError, match="exceeds"):
        load_sparse_text(f, p=2)
    with pytest.raises(ValueError):
        load_dataset(f, fmt="parquet")


# --- splits ------------------------------------------------------------------------------


def _labels(n, k=2):
    return Dataset(np.zeros((n, 1)), np.arange(n) % k + 1)


def test_holdout_sizes():
    ds = gen_grouped_binary(GroupedBinarySpec(seed=0))
    (tr, te), = split(ds, SplitSpec.holdout(1 / 3, seed=1))
    assert (tr.size, te.size) == (40, 20)
    assert not set(tr) & set(te)
    assert (ds.y[te] == 1).sum() == 10


def test_loo_and_determinism():
    folds = split(_labels(10), SplitSpec.loo())
    assert len(folds) == 10 and all(te.size == 1 for _, te in folds)
    a = split(_labels(30), SplitSpec.kfold(5, seed=3))
    b = split(_labels(30), SplitSpec.kfold(5, seed=3))
    assert all(np.array_equal(x[1], y[1]) for x, y in zip(a, b))


@given(st.integers(4, 60), st.integers(2, 10), st.integers(2, 4), st.booleans(), st.integers(0, 2**32))
def test_kfold_partition_properties(n, k, classes, stratified, seed):
    ds = _labels(n, classes)
    counts = np.bincount(ds.y)[1:]
    if k > n or (stratified and counts.min() < k):
        with pytest.raises(ValueError):
            split(ds, SplitSpec.kfold(k, seed=seed, stratified=stratified))
        return
    folds = split(ds, SplitSpec.kfold(k, seed=seed, stratified=stratified))
    tests = np.concatenate([te for _, te in folds])
    np.testing.assert_array_equal(np.sort(tests), np.arange(n))
    for tr, te in folds:
        assert not set(tr) & set(te) and tr.size + te.size == n
    if stratified:
        for c in range(1, classes + 1):
            per = [int((ds.y[te] == c).sum()) for _, te in folds]
            assert max(per) - min(per) <= 1


def test_split_spec_validation():
    with pytest.raises(ValueError):
        SplitSpec.holdout(1.0)
    with pytest.raises(ValueError):
        SplitSpec.kfold(1)
    with pytest.raises(ValueError):
        SplitSpec("bootstrap")
    with pytest.raises(ValueError):
        split(_labels(1), SplitSpec.loo())


# --- grids and CV ------------------------------------------------------------------------


def test_default_grids():
    g = default_grid("l1")
    assert g.values["lambda"][0] == pytest.approx(1e-4) and len(g.values["lambda"]) == 9
    assert len(default_grid("elasticnet").points("elasticnet")) == 81
    assert default_grid("ksupport", p=30).values["k"] == [1, 2, 5, 10, 20, 30]
    assert default_grid("ksupport", p=3).values["k"] == [1, 2, 3]
    with pytest.raises(ValueError):
        default_grid("ksupport")
    with pytest.raises(ValueError):
        default_grid("ridge")


@pytest.mark.parametrize(
    "family, values",
    [("l1", {"lambda": []}), ("l1", {"lambda": [0.0]}), ("ksupport", {"lambda": [1.0], "k": [0]}),
     ("ksupport", {"lambda": [1.0], "k": [1.5]}), ("l1", {"lambda": [1.0], "k": [1]})],
)
def test_grid_validation(family, values):
    with pytest.raises(ValueError):
        GridSpec(values).validate(family, p=4)


def test_sparsity_key_order():
    assert sparsity_key("ksupport", {"lambda": 1.0, "k": 2}) > sparsity_key("ksupport", {"lambda": 1.0, "k": 5})
    assert sparsity_key("elasticnet", {"lambda1": 2.0, "lambda2": 0.1}) > sparsity_key(
        "elasticnet", {"lambda1": 1.0, "lambda2": 9.0})


@pytest.fixture(scope="module")
def grouped():
    ds = gen_grouped_binary(GroupedBinarySpec(seed=1))
    return ds.with_features(standardize(ds.X)[0])


def test_cv_single_point(grouped):
    res = grid_search_cv(grouped, "l2", GridSpec({"lambda": [1.0]}), SplitSpec.kfold(5, seed=0), FAST)
    assert res.best_params == {"lambda": 1.0}
    assert len(res.table()) == 5
    assert res.best_accuracy == pytest.approx(np.mean([r["accuracy"] for r in res.table()]))


def test_cv_huge_lambda_majority_accuracy(rng):
    X = rng.normal(size=(30, 3))
    y = np.r_[np.ones(20, int), -np.ones(10, int)]
    ds = Dataset(X, y)
    res = grid_search_cv(ds, "l1", GridSpec({"lambda": [1e4]}), SplitSpec.kfold(5, seed=1), exact_lp=True)
    # the zero model predicts the intercept sign: the majority class
    assert res.best_accuracy == pytest.approx(20 / 30)


def test_cv_table_and_manual_mean(grouped):
    grid = GridSpec({"lambda": [0.1, 1.0, 10.0]})
    spec = SplitSpec.kfold(4, seed=2)
    res = grid_search_cv(grouped, "l1", grid, spec, FAST, warm_start=False)
    rows = res.table()
    assert len(rows) == 3 * 4
    folds = split(grouped, spec)
    for gi, lam in enumerate([0.1, 1.0, 10.0]):
        accs = []
        for tr, te in folds:
            m = train_binary(grouped.subset(tr), penalty_from_params("l1", {"lambda": lam}), FAST)
            accs.append(np.mean(predict(m, grouped.X[te]) == grouped.y[te]))
        assert res.mean_accuracy[gi] == pytest.approx(np.mean(accs), abs=1e-12)


def test_cv_tie_break_prefers_sparser(rng):
    # perfectly separable data: small lambdas tie at accuracy 1
    X = np.r_[rng.normal(3, 0.3, size=(10, 2)), rng.normal(-3, 0.3, size=(10, 2))]
    ds = Dataset(X, np.r_[np.ones(10, int), -np.ones(10, int)])
    res = grid_search_cv(ds, "l1", GridSpec({"lambda": [0.01, 0.1, 1.0]}), SplitSpec.kfold(5, seed=0), exact_lp=True)
    assert res.mean_accuracy == [1.0, 1.0, 1.0]
    assert res.best_params == {"lambda": 1.0}


def test_cv_lp_shortcut_matches_direct(rng):
    ds = gen_grouped_binary(GroupedBinarySpec(n_per_class=10, p=6, seed=3))
    grid = GridSpec({"lambda": [0.1, 1.0]})
    fast = grid_search_cv(ds, "l1", grid, SplitSpec.loo(), exact_lp=True)
    slow = grid_search_cv(ds, "l1", grid, SplitSpec.loo(), exact_lp=True, standardize_mode="unit_l2")
    direct = []
    for lam in (0.1, 1.0):
        accs = []
        for tr, te in split(ds, SplitSpec.loo()):
            m = train_binary(ds.subset(tr), penalty_from_params("l1", {"lambda": lam}), exact_lp=True)
            accs.append(float(predict(m, ds.X[te])[0] == ds.y[te][0]))
        direct.append(np.mean(accs))
    assert fast.mean_accuracy == pytest.approx(direct)
    assert len(slow.mean_accuracy) == 2


def test_cv_failed_fold_recorded(rng):
    # a fold whose training part has one class fails its grid point
    X = rng.normal(size=(6, 2))
    ds = Dataset(X, np.array([1, 1, 1, 1, 1, -1]))
    with pytest.raises(TrainingError, match="every grid point failed"):
        grid_search_cv(ds, "l2", GridSpec({"lambda": [1.0]}), SplitSpec.loo(), FAST)


def test_cv_parallel_matches_serial(grouped):
    grid = GridSpec({"lambda": [0.1, 1.0], "k": [1, 3]})
    a = grid_search_cv(grouped, "ksupport", grid, SplitSpec.kfold(3, seed=1), FAST)
    b = grid_search_cv(grouped, "ksupport", grid, SplitSpec.kfold(3, seed=1), FAST, jobs=4)
    assert a.mean_accuracy == b.mean_accuracy and a.best_params == b.best_params


def test_cv_elastic_net_finds_group(grouped):
    res = grid_search_cv(grouped, "elasticnet", default_grid("elasticnet"), SplitSpec.kfold(10, seed=1))
    model = train_binary(grouped, penalty_from_params("elasticnet", res.best_params))
    assert count_nonzero(model, grouped.relevant).relevant >= 4
    assert not math.isnan(res.best_accuracy)


def test_cv_multiclass_modes(rng):
    from sparsesvm.datagen import FourClassSpec, gen_fourclass

    ds = gen_fourclass(FourClassSpec(n=40, p=6, seed=1))
    grid = GridSpec({"lambda": [0.1, 10.0]})
    a = grid_search_cv(ds, "l1", grid, SplitSpec.kfold(4, seed=0), FAST, multiclass="ova")
    b = grid_search_cv(ds, "l1msvm", grid, SplitSpec.loo())
    assert a.best_accuracy > 0.5 and b.best_accuracy > 0.5
    with pytest.raises(ValueError):
        grid_search_cv(ds, "l2", grid, SplitSpec.loo(), multiclass="l1msvm")
