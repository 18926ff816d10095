import json
import random

import pytest

import oddcov
from oddcov.cli import main

from _helpers import spec_doc, write_csv

VCAS_HEADER = ["h", "hdot_own", "hdot_int", "tau", "s_adv"]


@pytest.fixture(scope="module")
def vcas_path():
    return oddcov.bundled_spec_path()


@pytest.fixture
def tiny_spec(tmp_path):
    doc = spec_doc(
        [{"name": "x", "range": [0, 4], "bin_scheme": {"count": 4}},
         {"name": "y", "range": [0, 2], "bin_scheme": {"count": 2}}],
        constraints=[{"name": "band", "expression": "y <= x"}],
    )
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_validate_ok(capsys, vcas_path):
    assert main(["validate", vcas_path]) == 0
    assert "ok: 5 parameters" in capsys.readouterr().out


def test_validate_reports_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(spec_doc(
        [{"name": "x", "range": [4, 0], "bin_scheme": {"count": 4}}])))
    assert main(["validate", str(bad)]) == 1
    assert "error" in capsys.readouterr().out


def test_usage_error_exits_1(capsys):
    assert main(["space"]) == 1  # missing spec argument
    assert main(["no-such-command", "x"]) == 1


def test_missing_spec_file_exits_1(capsys):
    assert main(["space", "/nonexistent/spec.json"]) == 1


def test_missing_data_file_exits_2(tmp_path, capsys, vcas_path):
    assert main(["analyze", vcas_path, "/nonexistent/data.csv",
                 "--out", str(tmp_path)]) == 2


def test_space_prints_published_counts(capsys, vcas_path):
    assert main(["space", vcas_path]) == 0
    out = capsys.readouterr().out
    assert "56217600" in out
    assert "195200" in out
    assert "79968" in out
    assert "59.0%" in out


def test_bins_csv(capsys, vcas_path):
    assert main(["bins", vcas_path]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "parameter,index,low,high,center"
    assert lines[1] == "h,0,-1500.0,-1470.0,-1485.0"
    # 100 + 32 + 32 + 61 + 9 bins
    assert len(lines) == 1 + 234


def test_analyze_threshold_gating(tmp_path, capsys, tiny_spec):
    model = oddcov.build_model(oddcov.load_spec(tiny_spec))
    relevant = list(oddcov.iter_relevant(model.space, model.constraints))
    rows = []
    for combo in relevant:
        bx, by = oddcov.decode(combo, model.space)
        rows.append([bx + 0.5, by + 0.5])
    full = write_csv(tmp_path / "full.csv", ["x", "y"], rows)
    partial = write_csv(tmp_path / "partial.csv", ["x", "y"], rows[:2])

    out_full = tmp_path / "out_full"
    assert main(["analyze", tiny_spec, full, "--out", str(out_full)]) == 0
    report = json.loads((out_full / "report.json").read_text())
    assert report["r_cov"] == 1.0
    assert report["format_version"] == 1

    out_partial = tmp_path / "out_partial"
    assert main(["analyze", tiny_spec, partial, "--out", str(out_partial)]) == 3
    assert main(["analyze", tiny_spec, partial, "--out", str(out_partial),
                 "--fresh", "--threshold", "0.1"]) == 0


def test_analyze_accumulates_into_sidecar(tmp_path, tiny_spec):
    out = tmp_path / "out"
    a = write_csv(tmp_path / "a.csv", ["x", "y"], [[0.5, 0.5]])
    b = write_csv(tmp_path / "b.csv", ["x", "y"], [[1.5, 0.5]])
    main(["analyze", tiny_spec, a, "--out", str(out), "--threshold", "0"])
    main(["analyze", tiny_spec, b, "--out", str(out), "--threshold", "0"])
    report = json.loads((out / "report.json").read_text())
    assert report["covered_total"] == 2  # unioned across runs
    # --fresh starts over
    main(["analyze", tiny_spec, b, "--out", str(out), "--threshold", "0", "--fresh"])
    report = json.loads((out / "report.json").read_text())
    assert report["covered_total"] == 1


def test_gaps_hash_mismatch_exits_1(tmp_path, capsys, tiny_spec, vcas_path):
    out = tmp_path / "out"
    a = write_csv(tmp_path / "a.csv", ["x", "y"], [[0.5, 0.5]])
    assert main(["analyze", tiny_spec, a, "--out", str(out), "--threshold", "0"]) == 0
    assert main(["gaps", vcas_path, "--out", str(out)]) == 1
    err = capsys.readouterr().err
    assert "hash" in err


def test_gaps_without_sidecar_lists_all_relevant(tmp_path, tiny_spec):
    out = tmp_path / "out"
    assert main(["gaps", tiny_spec, "--out", str(out)]) == 0
    model = oddcov.build_model(oddcov.load_spec(tiny_spec))
    relevant = list(oddcov.iter_relevant(model.space, model.constraints))
    lines = (out / "gaps.csv").read_text().splitlines()
    assert lines[0] == "gap_index,x_bin,x_center,y_bin,y_center"
    assert len(lines) == 1 + len(relevant)
    first = lines[1].split(",")
    assert int(first[0]) == relevant[0]


def test_gaps_limit(tmp_path, tiny_spec):
    out = tmp_path / "out"
    assert main(["gaps", tiny_spec, "--out", str(out), "--limit", "3"]) == 0
    assert len((out / "gaps.csv").read_text().splitlines()) == 4


def test_gap_and_scenario_manifests_record_spec_hash(tmp_path, tiny_spec):
    out = tmp_path / "out"
    model = oddcov.build_model(oddcov.load_spec(tiny_spec))
    assert main(["gaps", tiny_spec, "--out", str(out)]) == 0
    assert main(["generate", tiny_spec, "--out", str(out), "--seed", "3"]) == 0
    gaps_meta = json.loads((out / "gaps.json").read_text())
    scen_meta = json.loads((out / "scenarios.json").read_text())
    assert gaps_meta["spec_hash"] == model.spec_hash
    assert scen_meta["spec_hash"] == model.spec_hash
    assert scen_meta["seed"] == 3
    assert gaps_meta["gap_count"] == scen_meta["scenario_count"]


def test_generate_then_analyze_closes_loop(tmp_path, tiny_spec):
    out = tmp_path / "out"
    assert main(["generate", tiny_spec, "--out", str(out)]) == 0
    scenarios = out / "scenarios.csv"
    assert main(["analyze", tiny_spec, str(scenarios), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["r_cov"] == 1.0


def test_project_outputs(tmp_path, vcas_path):
    rng = random.Random(2)
    rows = [[rng.uniform(-1500, 1500), rng.uniform(-3200, 3200),
             rng.uniform(-3200, 3200), rng.uniform(0, 60), "COC"] for _ in range(50)]
    data = write_csv(tmp_path / "d.csv", VCAS_HEADER, rows)
    out = tmp_path / "out"
    assert main(["project", vcas_path, data, "--x", "tau", "--y", "h",
                 "--out", str(out)]) == 0
    assert (out / "projection.csv").exists()
    assert (out / "envelope.csv").exists()
    manifest = json.loads((out / "projection.json").read_text())
    assert manifest["rows_mapped"] == 50
    assert manifest["files"]["curve"] == "envelope.csv"


def test_disable_grouping_for_sensitivity_runs(capsys, vcas_path):
    assert main(["space", vcas_path, "--disable-grouping", "hdot_int"]) == 0
    out = capsys.readouterr().out
    # hdot_int back at 32 bins: 100*32*32*61*1
    assert "6246400" in out
    assert main(["space", vcas_path, "--disable-grouping", "nope"]) == 1


def test_outputs_byte_identical_across_jobs(tmp_path, vcas_path):
    rng = random.Random(17)
    rows = [[rng.uniform(-1600, 1600), rng.uniform(-3200, 3200),
             rng.uniform(-3200, 3200), rng.uniform(0, 60),
             rng.choice(["COC", "DNC", "bogus"])] for _ in range(5000)]
    data = write_csv(tmp_path / "d.csv", VCAS_HEADER, rows)
    out1, out8 = tmp_path / "j1", tmp_path / "j8"
    assert main(["analyze", vcas_path, data, "--out", str(out1),
                 "--jobs", "1", "--threshold", "0"]) == 0
    assert main(["analyze", vcas_path, data, "--out", str(out8),
                 "--jobs", "8", "--threshold", "0"]) == 0
    for name in ("report.txt", "report.json", "covered.bin"):
        assert (out1 / name).read_bytes() == (out8 / name).read_bytes()
