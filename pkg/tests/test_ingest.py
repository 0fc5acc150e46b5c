import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from graph_infill.graph import FeatureMatrix, build_graph
from graph_infill.ingest import (
    DataError, Dataset, MaskSpec, apply_mask, load_dataset, make_split, write_dataset, write_id_map,
)


def _dataset(n, d=3, fill=1.0):
    return Dataset(build_graph([], n), FeatureMatrix.fully_observed(np.full((n, d), fill)), None, 0, "t")


def _write(tmp_path, files):
    for name, text in files.items():
        (tmp_path / name).write_text(text)
    return tmp_path


META = "name=x\nfeature_mode=dense\nfeature_dim=2\nbinary=false\n"


def test_toy3_matches_files(toy3, tmp_path):
    assert toy3.external_ids == ("a", "b", "c")
    np.testing.assert_array_equal(toy3.features.values, [[1, 0], [0, 1], [1, 1]])
    assert toy3.graph.edges().tolist() == [[0, 1], [1, 2]]
    assert toy3.labels.tolist() == [0, 1, 0]
    assert toy3.num_classes == 2 and toy3.binary and toy3.name == "toy3"
    write_id_map(toy3, tmp_path / "id_map.tsv")
    assert (tmp_path / "id_map.tsv").read_text() == "a\t0\nb\t1\nc\t2\n"


def test_round_trip_dense_and_sparse(toy12, tmp_path):
    for mode in ("dense", "sparse"):
        write_dataset(toy12, tmp_path / mode, feature_mode=mode)
        back = load_dataset(tmp_path / mode)
        np.testing.assert_array_equal(back.features.values, toy12.features.values)
        assert np.array_equal(back.graph.col_indices, toy12.graph.col_indices)
        assert back.labels.tolist() == toy12.labels.tolist()


def test_id_map_written_on_request(toy3, tmp_path):
    from conftest import TOY3
    load_dataset(TOY3, id_map_path=tmp_path / "ids.tsv")
    assert (tmp_path / "ids.tsv").read_text().splitlines()[1] == "b\t1"


def test_integer_ids_keep_numeric_order(tmp_path):
    _write(tmp_path, {"meta.txt": META, "features.tsv": "10\t1\t2\n2\t3\t4\n",
                      "edges.tsv": "10\t2\n"})
    ds = load_dataset(tmp_path)
    assert ds.external_ids == ("2", "10")
    np.testing.assert_array_equal(ds.features.values, [[3, 4], [1, 2]])


def test_string_labels_are_remapped(tmp_path):
    _write(tmp_path, {"meta.txt": META, "features.tsv": "a\t1\t2\nb\t3\t4\n",
                      "edges.tsv": "a\tb\n", "labels.tsv": "a\tzeta\nb\talpha\n"})
    ds = load_dataset(tmp_path)
    assert ds.labels.tolist() == [1, 0]


@pytest.mark.parametrize("files, line, msg", [
    ({"features.tsv": "a\t1\t2\nb\t3\n"}, 2, "expected 2 values"),
    ({"features.tsv": "a\t1\tnan\nb\t3\t4\n"}, 1, "non-finite"),
    ({"features.tsv": "a\t1\tx\nb\t3\t4\n"}, 1, "not a number"),
    ({"edges.tsv": "a\tb\tc\n"}, 1, "src<TAB>dst"),
])
def test_parse_errors_carry_line_numbers(tmp_path, files, line, msg):
    base = {"meta.txt": META, "features.tsv": "a\t1\t2\nb\t3\t4\n", "edges.tsv": "a\tb\n"}
    base.update(files)
    _write(tmp_path, base)
    with pytest.raises(DataError, match=msg) as info:
        load_dataset(tmp_path)
    assert info.value.line == line


def test_missing_files(tmp_path):
    with pytest.raises(DataError, match="does not exist"):
        load_dataset(tmp_path / "nope")
    with pytest.raises(DataError, match="meta"):
        load_dataset(tmp_path)
    _write(tmp_path, {"meta.txt": META, "features.tsv": "a\t1\t2\n"})
    with pytest.raises(DataError, match="edges.tsv"):
        load_dataset(tmp_path)


def test_binary_flag_enforced(tmp_path):
    _write(tmp_path, {"meta.txt": META.replace("false", "true"), "features.tsv": "a\t1\t2\n",
                      "edges.tsv": ""})
    with pytest.raises(DataError, match="binary"):
        load_dataset(tmp_path)


def test_cora_table_counts(cora):
    assert cora.num_nodes == 2708
    assert cora.graph.num_entries == 10556 and cora.graph.num_edges == 5278
    assert cora.feature_dim == 1433 and cora.num_classes == 7
    assert cora.binary


def test_citeseer_table_counts(citeseer):
    assert citeseer.num_nodes == 3327
    assert citeseer.feature_dim == 3703 and citeseer.num_classes == 6


def test_split_counts():
    s = make_split(_dataset(100), MaskSpec(0.6, seed=7))
    assert (s.train_observed.size, s.missing_val.size, s.missing_test.size) == (40, 10, 50)


def test_split_rate_zero_and_one():
    s = make_split(_dataset(100), MaskSpec(0.0))
    assert s.train_observed.size == 100 and s.missing.size == 0
    s = make_split(_dataset(100), MaskSpec(1.0))
    assert s.train_observed.size == 0 and s.missing.size == 100


def test_split_deterministic():
    d = _dataset(100)
    assert make_split(d, MaskSpec(0.6, 3)) == make_split(d, MaskSpec(0.6, 3))


def test_split_seeds_differ():
    d = _dataset(100)
    splits = [make_split(d, MaskSpec(0.6, s)) for s in range(20)]
    pairs = [(a, b) for i, a in enumerate(splits) for b in splits[i + 1:]]
    assert all(not np.array_equal(a.missing, b.missing) for a, b in pairs)


@given(st.integers(1, 400), st.floats(0, 1), st.integers(0, 2**31))
def test_split_partition_property(n, rate, seed):
    s = make_split(_dataset(n, d=1), MaskSpec(rate, seed))
    allnodes = np.concatenate([s.train_observed, s.missing_val, s.missing_test])
    assert np.array_equal(np.sort(allnodes), np.arange(n))
    assert s.missing.size == math.floor(rate * n + 0.5)
    # 1:5 within rounding by one element
    assert abs(5 * s.missing_val.size - s.missing_test.size) <= 6


def test_mask_spec_validation():
    with pytest.raises(ValueError):
        MaskSpec(1.5)


def test_apply_mask_zeroes_missing_rows():
    d = _dataset(5, d=2)
    s = make_split(d, MaskSpec(0.2, 0))
    fm = apply_mask(d, s)
    (missing,) = s.missing
    np.testing.assert_array_equal(fm.values[missing], [0, 0])
    others = np.delete(np.arange(5), missing)
    np.testing.assert_array_equal(fm.values[others], np.ones((4, 2)))
    assert fm.observed_mask.tolist() == [i != missing for i in range(5)]
    np.testing.assert_array_equal(d.features.values, np.ones((5, 2)))  # untouched


def test_apply_mask_rate_zero_identity(toy12):
    fm = apply_mask(toy12, make_split(toy12, MaskSpec(0.0)))
    assert np.array_equal(fm.values, toy12.features.values)


@given(st.floats(0, 1), st.integers(0, 1000))
def test_apply_mask_never_alters_observed_rows(rate, seed):
    rng = np.random.default_rng(seed)
    d = Dataset(build_graph([], 30), FeatureMatrix.fully_observed(rng.normal(size=(30, 4))), None, 0, "r")
    s = make_split(d, MaskSpec(rate, seed))
    fm = apply_mask(d, s)
    obs = s.train_observed
    assert np.array_equal(fm.values[obs], d.features.values[obs])


def test_cora_mask_zero_row_count(cora):
    s = make_split(cora, MaskSpec(0.6, 0))
    fm = apply_mask(cora, s)
    x = cora.features.values
    added = int((~fm.values.any(axis=1)).sum() - (~x.any(axis=1)).sum())
    assert added == math.ceil(0.6 * 2708) == 1625
