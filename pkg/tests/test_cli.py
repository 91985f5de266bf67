"""End-to-end checks of the command line front end and record format."""

import json

import pytest
from click.testing import CliRunner

from shiftlab.cli import main
from shiftlab.config import KINDS

MINIMAL_WEGNER = {
    "kind": "wegner",
    "master_seed": 7,
    "dimension": 1,
    "side": 8,
    "distribution": {"kind": "uniform", "a": 0.0, "b": 1.0},
    "epsilon_grid": [0.25, 0.125],
    "realizations": 2,
}


@pytest.fixture
def runner():
    return CliRunner()


def _write(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_run_minimal_wegner_writes_record_and_tables(runner, tmp_path):
    cfg_path = _write(tmp_path, MINIMAL_WEGNER)
    res = runner.invoke(main, ["run", cfg_path, "--out-dir", str(tmp_path)])
    assert res.exit_code == 0, res.output
    assert "record: " in res.output
    assert "payload_sha256: " in res.output

    record = json.loads((tmp_path / "wegner-record.json").read_text())
    for key in ("tool", "version", "kind", "config", "resolved",
                "wall_clock_seconds", "payload", "payload_sha256"):
        assert key in record
    assert record["kind"] == "wegner"
    assert record["resolved"]["threads"] == 1

    counts = (tmp_path / "wegner-counts.tsv").read_text().splitlines()
    assert counts[0].split("\t") == ["realization_index", "epsilon", "count"]
    assert len(counts) == 1 + 2 * len(MINIMAL_WEGNER["epsilon_grid"])


def test_record_stores_config_field_identically(runner, tmp_path):
    cfg_path = _write(tmp_path, MINIMAL_WEGNER)
    res = runner.invoke(main, ["run", cfg_path, "--out-dir", str(tmp_path)])
    assert res.exit_code == 0
    record = json.loads((tmp_path / "wegner-record.json").read_text())
    assert record["config"] == MINIMAL_WEGNER


def test_rerun_from_stored_record_reproduces_hash(runner, tmp_path):
    cfg_path = _write(tmp_path, MINIMAL_WEGNER)
    first = tmp_path / "first"
    res = runner.invoke(main, ["run", cfg_path, "--out-dir", str(first)])
    assert res.exit_code == 0
    record_path = first / "wegner-record.json"
    sha1 = json.loads(record_path.read_text())["payload_sha256"]

    second = tmp_path / "second"
    res2 = runner.invoke(main, ["run", str(record_path), "--out-dir", str(second),
                                "--threads", "2"])
    assert res2.exit_code == 0
    sha2 = json.loads((second / "wegner-record.json").read_text())["payload_sha256"]
    assert sha1 == sha2


def test_seed_override_changes_payload_and_is_recorded(runner, tmp_path):
    cfg_path = _write(tmp_path, MINIMAL_WEGNER)
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert runner.invoke(main, ["run", cfg_path, "--out-dir", str(a)]).exit_code == 0
    res = runner.invoke(main, ["run", cfg_path, "--out-dir", str(b),
                               "--seed-override", "99"])
    assert res.exit_code == 0
    ra = json.loads((a / "wegner-record.json").read_text())
    rb = json.loads((b / "wegner-record.json").read_text())
    assert rb["resolved"]["master_seed"] == 99
    assert ra["payload_sha256"] != rb["payload_sha256"]


def test_bad_epsilon_entry_names_the_field(runner, tmp_path):
    cfg = dict(MINIMAL_WEGNER, epsilon_grid=[0.25, 0.7])
    res = runner.invoke(main, ["run", _write(tmp_path, cfg)])
    assert res.exit_code == 3
    assert "epsilon_grid" in res.stderr


def test_malformed_json_is_a_parse_error(runner, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"kind": "wegner",')
    res = runner.invoke(main, ["run", str(path)])
    assert res.exit_code == 2
    assert "parse error" in res.stderr


def test_unknown_field_is_rejected(runner, tmp_path):
    cfg = dict(MINIMAL_WEGNER, window_count=3)
    res = runner.invoke(main, ["run", _write(tmp_path, cfg)])
    assert res.exit_code == 3
    assert "window_count" in res.stderr


def test_thread_count_must_be_positive(runner, tmp_path):
    cfg_path = _write(tmp_path, MINIMAL_WEGNER)
    res = runner.invoke(main, ["run", cfg_path, "--threads", "0"])
    assert res.exit_code == 3
    assert "threads" in res.stderr


def test_numeric_failure_exits_with_code_four(runner, tmp_path):
    # coarse mesh leaves no admissible t-window for the trace comparison
    cfg = {"kind": "weyl", "master_seed": 0, "dimension": 1, "side": 4,
           "spacing": 1.0}
    res = runner.invoke(main, ["run", _write(tmp_path, cfg),
                               "--out-dir", str(tmp_path)])
    assert res.exit_code == 4
    assert "numeric failure" in res.stderr
    assert "trace window" in res.stderr


def test_list_names_every_kind_once(runner):
    res = runner.invoke(main, ["list"])
    assert res.exit_code == 0
    lines = [ln for ln in res.output.splitlines() if ln.strip()]
    assert len(lines) == len(KINDS) == 8
    listed = [ln.split()[0] for ln in lines]
    assert listed == list(KINDS)


def test_describe_wegner_mentions_the_scaling_check(runner):
    res = runner.invoke(main, ["describe", "wegner"])
    assert res.exit_code == 0
    text = res.output
    assert "eps" in text
    assert "window" in text
    assert "modulus" in text.lower() or "s(mu" in text
    assert "exponent" in text


def test_describe_unknown_kind_fails(runner):
    res = runner.invoke(main, ["describe", "bogus"])
    assert res.exit_code == 2
    assert "unknown kind" in res.stderr


def test_every_table_is_self_describing(runner, tmp_path):
    cfg = {"kind": "weyl", "master_seed": 1, "dimension": 1, "side": 16,
           "spacing": 0.0625}
    res = runner.invoke(main, ["run", _write(tmp_path, cfg),
                               "--out-dir", str(tmp_path)])
    assert res.exit_code == 0, res.output
    tsvs = sorted(tmp_path.glob("*.tsv"))
    assert tsvs, "expected table outputs"
    for path in tsvs:
        lines = path.read_text().splitlines()
        header = lines[0].split("\t")
        assert all(name.strip() for name in header)
        for row in lines[1:]:
            assert len(row.split("\t")) == len(header)
