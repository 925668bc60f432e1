import json

import pytest
from click.testing import CliRunner

from naming_lab.cli import main
from naming_lab.model import serialize_naming, serialize_testset

from conftest import counts_testset, dataset_doc, explained_testset_and_naming, record_doc


@pytest.fixture
def runner():
    return CliRunner()


def _write(path, document):
    path.write_text(json.dumps(document), encoding="utf-8")
    return str(path)


@pytest.fixture
def valid_testset_path(tmp_path):
    return _write(
        tmp_path / "ts.json", serialize_testset(counts_testset("a", [2, 1, 3]))
    )


def test_validate_ok(runner, valid_testset_path):
    result = runner.invoke(main, ["validate", "--testset", valid_testset_path])
    assert result.exit_code == 0
    assert "ok: 3 records" in result.output


def test_validate_failure_exits_1(runner, tmp_path):
    bad = dataset_doc(5, ["a"], [record_doc("img1", "a", [1.0])])
    path = _write(tmp_path / "bad.json", bad)
    result = runner.invoke(main, ["validate", "--testset", path])
    assert result.exit_code == 1
    assert "error" in result.output


def test_unknown_flag_exits_2(runner):
    result = runner.invoke(main, ["validate", "--wat"])
    assert result.exit_code == 2


def test_unknown_subcommand_exits_2(runner):
    assert runner.invoke(main, ["frobnicate"]).exit_code == 2


def test_significance_writes_documents(runner, valid_testset_path, tmp_path):
    out = tmp_path / "out"
    result = runner.invoke(
        main,
        ["significance", "--testset", valid_testset_path, "--class", "a", "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    document = json.loads((out / "significance_a.json").read_text())
    assert document["total_significant"] == 6
    assert (out / "significance_a.csv").exists()
    assert "6 significant activations over 3 images (avg 2.00)" in result.output


def test_significance_unknown_class_exits_1(runner, valid_testset_path, tmp_path):
    result = runner.invoke(
        main,
        ["significance", "--testset", valid_testset_path, "--class", "zzz",
         "--out", str(tmp_path / "o")],
    )
    assert result.exit_code == 1


def _summary_fixture(tmp_path):
    testset, naming = explained_testset_and_naming(
        "l",
        [
            (45, ["eye"]),
            (3, ["head"]),
            (1, ["wing"]),
            (1, ["eye", "wing", "wing"]),
            (1, [None]),
        ],
    )
    ts_path = _write(tmp_path / "ts.json", serialize_testset(testset))
    naming_path = _write(tmp_path / "naming.json", serialize_naming(naming))
    return ts_path, naming_path


def test_summary_command(runner, tmp_path):
    ts_path, naming_path = _summary_fixture(tmp_path)
    out = tmp_path / "out"
    result = runner.invoke(
        main,
        ["summary", "--testset", ts_path, "--class", "l", "--naming", naming_path,
         "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    assert "('eye') 88.2353%" in result.output
    assert (out / "summary_l.txt").read_text().splitlines()[0] == "('eye') 88.2353%"


def test_coverage_and_purity_commands(runner, tmp_path):
    ts_path, naming_path = _summary_fixture(tmp_path)
    out = tmp_path / "cov"
    result = runner.invoke(
        main,
        ["coverage", "--testset", ts_path, "--class", "l", "--naming", naming_path,
         "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    assert (out / "coverage_l.csv").exists()
    assert (out / "named_by_exactly_n_l.csv").exists()

    out2 = tmp_path / "pur"
    result = runner.invoke(main, ["purity", "--naming", naming_path, "--out", str(out2)])
    assert result.exit_code == 0, result.output
    assert (out2 / "purity_cx_all.csv").exists()


def test_match_and_compat_commands(runner, tmp_path):
    _, naming_path = _summary_fixture(tmp_path)
    out = tmp_path / "match"
    result = runner.invoke(
        main,
        ["match", "--naming", naming_path, "--naming", naming_path, "--d", "2",
         "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    doc = json.loads((out / "match_l_ann-1_ann-1_d2.json").read_text())
    assert doc["exact"] is True and doc["d"] == 2
    assert "agreement 1.0000" in result.output

    result = runner.invoke(
        main,
        ["compat", "--naming", naming_path, "--naming", naming_path, "--mode", "exact"],
    )
    assert result.exit_code == 0, result.output
    assert "exact compatibility (D=1): 1.0000" in result.output


def test_match_requires_two_namings(runner, tmp_path):
    _, naming_path = _summary_fixture(tmp_path)
    result = runner.invoke(main, ["match", "--naming", naming_path])
    assert result.exit_code == 2


def test_synth_command_writes_documents_deterministically(runner, tmp_path):
    args = [
        "synth", "--image-count", "30", "--feature-count", "6",
        "--concept-count", "4", "--annotator-count", "2", "--seed", "5",
    ]
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    assert runner.invoke(main, args + ["--out", str(out1)]).exit_code == 0
    assert runner.invoke(main, args + ["--out", str(out2)]).exit_code == 0
    for name in ("testset.json", "ground_truth.json", "naming_annotator-1.json"):
        assert (out1 / name).read_text() == (out2 / name).read_text()


def test_synth_config_file(runner, tmp_path):
    config = tmp_path / "synth.cfg"
    config.write_text(
        "image_count = 30\nfeature_count = 6\nconcept_count = 4\n"
        "annotator_count = 2\nseed = 3\n"
    )
    out = tmp_path / "out"
    result = runner.invoke(
        main, ["synth", "--config", str(config), "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    assert (out / "testset.json").exists()


def test_synth_infeasible_exits_1(runner, tmp_path):
    result = runner.invoke(
        main,
        ["synth", "--image-count", "5", "--feature-count", "6",
         "--concept-count", "4", "--annotator-count", "1",
         "--out", str(tmp_path / "x")],
    )
    assert result.exit_code == 1
