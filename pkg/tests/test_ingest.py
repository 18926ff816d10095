import json
import random

import numpy as np
import pytest

import oddcov
from oddcov.errors import DataError
from oddcov.ingest import (Malformed, OutOfRange, ingest_csv, open_dataset,
                           record_to_combo)
from oddcov.spec import parse_spec

from _helpers import spec_doc, write_csv

VCAS_HEADER = ["h", "hdot_own", "hdot_int", "tau", "s_adv"]


@pytest.fixture
def small_model():
    doc = spec_doc(
        [{"name": "x", "range": [0, 10], "bin_scheme": {"count": 5}},
         {"name": "lab", "kind": "categorical", "levels": ["red", "green"]}],
        mapping={"x": "x_col", "lab": "lab_col"},
    )
    return oddcov.build_model(parse_spec(json.dumps(doc)))


def test_missing_column_named(tmp_path, small_model):
    path = write_csv(tmp_path / "d.csv", ["x_col", "other"], [[1.0, 2.0]])
    with pytest.raises(DataError, match="lab_col"):
        list(open_dataset(path, small_model))
    with pytest.raises(DataError, match="lab_col"):
        ingest_csv([path], small_model)


def test_header_only_file_is_empty_stream(tmp_path, small_model):
    path = write_csv(tmp_path / "d.csv", ["x_col", "lab_col"], [])
    assert list(open_dataset(path, small_model)) == []
    covered, stats = ingest_csv([path], small_model)
    assert stats.rows_read == 0
    assert covered.count() == 0


def test_columns_located_by_name_not_position(tmp_path, small_model):
    path = write_csv(tmp_path / "d.csv", ["lab_col", "junk", "x_col"],
                     [["green", "zzz", 9.5]])
    covered, stats = ingest_csv([path], small_model)
    assert stats.rows_mapped == 1
    assert covered.contains(oddcov.encode((4, 1), small_model.space))


def test_record_to_combo_published_example(verticalcas_model):
    combo = record_to_combo(("0", "100", "0", "30", "COC"), verticalcas_model)
    assert combo == oddcov.encode((50, 16, 0, 30, 0), verticalcas_model.space)


def test_out_of_range_variant(verticalcas_model):
    result = record_to_combo(("2000", "0", "0", "30", "COC"), verticalcas_model)
    assert result == OutOfRange(("h",))


def test_malformed_variant(verticalcas_model):
    result = record_to_combo(("not-a-number", "0", "0", "30", "COC"), verticalcas_model)
    assert result == Malformed(("h",))
    assert record_to_combo(("nan", "0", "0", "30", "COC"), verticalcas_model) == Malformed(("h",))
    assert record_to_combo(("0", "0", "0", "30", "NOPE"), verticalcas_model) == Malformed(("s_adv",))


def test_categorical_accepts_label_or_index(verticalcas_model):
    by_label = record_to_combo(("0", "100", "0", "30", "DND"), verticalcas_model)
    by_index = record_to_combo(("0", "100", "0", "30", "2"), verticalcas_model)
    assert by_label == by_index


def test_clamp_policy_pulls_into_range(small_model):
    combo = record_to_combo(("99", "red"), small_model, policy="clamp")
    assert combo == oddcov.encode((4, 0), small_model.space)


def test_error_policy_raises(small_model):
    with pytest.raises(DataError, match="'x'"):
        record_to_combo(("99", "red"), small_model, policy="error")


def _mixed_rows(rng, n):
    rows = []
    for _ in range(n):
        roll = rng.random()
        if roll < 0.05:
            rows.append([rng.uniform(11, 20), "red"])  # out of range
        elif roll < 0.10:
            rows.append(["junk", "green"])  # malformed number
        elif roll < 0.12:
            rows.append([rng.uniform(0, 10), "blue"])  # unknown level
        else:
            rows.append([rng.uniform(0, 10), rng.choice(["red", "green", "0", "1"])])
    return rows


def test_stats_conservation_and_block_parity(tmp_path, small_model):
    rng = random.Random(42)
    rows = _mixed_rows(rng, 3000)
    path = write_csv(tmp_path / "d.csv", ["x_col", "lab_col"], rows)

    covered, stats = ingest_csv([path], small_model)
    assert stats.rows_read == 3000
    assert stats.rows_read == stats.rows_mapped + stats.rows_out_of_range + stats.rows_malformed
    assert stats.out_of_range_by_parameter.get("x", 0) == stats.rows_out_of_range

    # row-at-a-time streaming path agrees with the blocked path
    expected = oddcov.CoveredSet.create(small_model.space.total, small_model.spec_hash)
    mapped = oor = bad = 0
    for record in open_dataset(path, small_model):
        result = record_to_combo(record, small_model)
        if isinstance(result, Malformed):
            bad += 1
        elif isinstance(result, OutOfRange):
            oor += 1
        else:
            mapped += 1
            expected.mark(result)
    assert (mapped, oor, bad) == (stats.rows_mapped, stats.rows_out_of_range, stats.rows_malformed)
    idx = np.arange(small_model.space.total, dtype=np.uint64)
    assert np.array_equal(covered.contains_many(idx), expected.contains_many(idx))


def test_ingest_order_insensitive_and_idempotent(tmp_path, small_model):
    rng = random.Random(1)
    rows = _mixed_rows(rng, 500)
    a = write_csv(tmp_path / "a.csv", ["x_col", "lab_col"], rows)
    shuffled = rows[:]
    rng.shuffle(shuffled)
    b = write_csv(tmp_path / "b.csv", ["x_col", "lab_col"], shuffled)

    idx = np.arange(small_model.space.total, dtype=np.uint64)
    cov_a, _ = ingest_csv([a], small_model)
    cov_b, _ = ingest_csv([b], small_model)
    assert np.array_equal(cov_a.contains_many(idx), cov_b.contains_many(idx))

    twice, stats_twice = ingest_csv([a, a], small_model)
    assert np.array_equal(twice.contains_many(idx), cov_a.contains_many(idx))
    assert stats_twice.rows_read == 1000


def test_partitioned_ingestion_matches_sequential(tmp_path, small_model):
    rng = random.Random(9)
    rows = _mixed_rows(rng, 5000)
    path = write_csv(tmp_path / "d.csv", ["x_col", "lab_col"], rows)
    idx = np.arange(small_model.space.total, dtype=np.uint64)
    # tiny blocks force many partitions; jobs must not change anything
    seq, seq_stats = ingest_csv([path], small_model, jobs=1, block_bytes=1 << 10)
    par, par_stats = ingest_csv([path], small_model, jobs=4, block_bytes=1 << 10)
    one, one_stats = ingest_csv([path], small_model, jobs=1)
    assert np.array_equal(seq.contains_many(idx), par.contains_many(idx))
    assert np.array_equal(seq.contains_many(idx), one.contains_many(idx))
    assert seq_stats.to_dict() == par_stats.to_dict() == one_stats.to_dict()


def test_blocked_error_policy_raises(tmp_path, small_model):
    path = write_csv(tmp_path / "d.csv", ["x_col", "lab_col"], [[15.0, "red"]])
    with pytest.raises(DataError, match="'x'"):
        ingest_csv([path], small_model, policy="error")


def test_blocked_clamp_policy_counts_but_keeps_rows(tmp_path, small_model):
    path = write_csv(tmp_path / "d.csv", ["x_col", "lab_col"],
                     [[15.0, "red"], [5.0, "green"]])
    covered, stats = ingest_csv([path], small_model, policy="clamp")
    assert stats.rows_mapped == 2
    assert stats.rows_out_of_range == 1
    assert covered.contains(oddcov.encode((4, 0), small_model.space))


def test_invalid_rows_stay_inert_in_grouped_lookups(tmp_path):
    # a malformed row must not derail the vectorized map-grouping lookup,
    # even when a 1-bin source sits above zero
    doc = spec_doc(
        [{"name": "a", "range": [5, 6], "bin_scheme": {"count": 1}},
         {"name": "b", "kind": "categorical", "levels": ["u", "v"]}],
        groupings=[{"target_name": "ab", "sources": ["a", "b"], "mode": "map",
                    "group_bin_count": 2, "map_table": [[[0, 0], 0], [[0, 1], 1]]}],
    )
    model = oddcov.build_model(parse_spec(json.dumps(doc)))
    path = write_csv(tmp_path / "d.csv", ["a", "b"],
                     [["junk", "u"], [0.0, "u"], [5.5, "v"]])
    covered, stats = ingest_csv([path], model)
    assert stats.rows_malformed == 1
    assert stats.rows_out_of_range == 1
    assert stats.rows_mapped == 1
    assert covered.count() == 1
    assert covered.contains(oddcov.encode((1,), model.space))


def test_quoted_fields_and_crlf(tmp_path, small_model):
    with open(tmp_path / "d.csv", "w", newline="") as fh:
        fh.write('"x_col","lab_col"\r\n"1.0","red"\r\n"9.9","green"\r\n')
    covered, stats = ingest_csv([str(tmp_path / "d.csv")], small_model)
    assert stats.rows_mapped == 2
    assert covered.count() == 2
