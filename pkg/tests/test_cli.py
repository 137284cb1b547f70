"""End-to-end tests for the command-line runner: exit codes, determinism,
run/report artifacts, config validation."""

import json
import os

import pytest

from manelab.cli import main


def run_cli(args):
    return main(list(args))


def test_sft_suite_direct(tmp_path):
    out = tmp_path / "sft"
    assert run_cli(["sft", "--out", str(out), "--count", "30"]) == 0
    assert (out / "sft_girth.csv").exists()
    assert (out / "sft_entropy.csv").exists()


def test_csv_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli(["sft", "--out", str(a), "--count", "25"]) == 0
    assert run_cli(["sft", "--out", str(b), "--count", "25"]) == 0
    assert (a / "sft_girth.csv").read_bytes() == \
        (b / "sft_girth.csv").read_bytes()


def test_worker_count_does_not_change_output(tmp_path, monkeypatch):
    a, b = tmp_path / "a", tmp_path / "b"
    monkeypatch.setenv("MANE_LAB_WORKERS", "1")
    assert run_cli(["sft", "--out", str(a), "--count", "25"]) == 0
    monkeypatch.setenv("MANE_LAB_WORKERS", "4")
    assert run_cli(["sft", "--out", str(b), "--count", "25"]) == 0
    assert (a / "sft_girth.csv").read_bytes() == \
        (b / "sft_girth.csv").read_bytes()


def test_invalid_worker_count_is_config_error(tmp_path, monkeypatch):
    monkeypatch.setenv("MANE_LAB_WORKERS", "many")
    assert run_cli(["sft", "--out", str(tmp_path / "x")]) == 2


def test_unknown_subcommand_exits_2():
    assert run_cli(["frobnicate"]) == 2


def test_run_empty_pipeline_creates_empty_dir(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"schema": 1, "pipeline": []}))
    out = tmp_path / "run"
    assert run_cli(["run", str(cfg), "--out", str(out)]) == 0
    assert out.is_dir() and not any(out.iterdir())


def test_run_rejects_unknown_stage(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(
        {"schema": 1, "pipeline": [{"stage": "nope"}]}))
    assert run_cli(["run", str(cfg), "--out", str(tmp_path / "r")]) == 2


def test_run_rejects_unknown_parameter(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(
        {"schema": 1,
         "pipeline": [{"stage": "sft", "params": {"bogus": 1}}]}))
    assert run_cli(["run", str(cfg), "--out", str(tmp_path / "r")]) == 2


def test_run_rejects_bad_json(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    assert run_cli(["run", str(cfg), "--out", str(tmp_path / "r")]) == 2


def test_run_rejects_wrong_schema(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"schema": 99, "pipeline": []}))
    assert run_cli(["run", str(cfg), "--out", str(tmp_path / "r")]) == 2


def test_report_missing_run_exits_2(tmp_path):
    assert run_cli(["report", str(tmp_path / "nowhere")]) == 2


def test_report_empty_run_warns_and_exits_0(tmp_path):
    out = tmp_path / "run"
    out.mkdir()
    assert run_cli(["report", str(out)]) == 0


def test_run_and_report_round_trip(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "schema": 1, "seed": 0,
        "pipeline": [{"stage": "sft", "params": {"count": 30}},
                     {"stage": "shadow", "params": {"per_delta": 5}}]}))
    out = tmp_path / "run"
    assert run_cli(["run", str(cfg), "--out", str(out)]) == 0
    manifest = json.loads((out / "run.json").read_text())
    assert all(s["status"] == "ok" for s in manifest["stages"])
    assert run_cli(["report", str(out)]) == 0
    report = out / "report"
    assert (report / "summary.csv").exists()
    assert (report / "summary.md").exists()
    svg = (report / "shadow_decay.svg").read_text()
    assert svg.lstrip().startswith("<?xml")
    assert "slope" in svg


def test_rows_carry_module_and_op(tmp_path):
    out = tmp_path / "sft"
    run_cli(["sft", "--out", str(out), "--count", "5"])
    lines = (out / "sft_girth.csv").read_text().splitlines()
    assert lines[0].startswith("module,op,")
    assert lines[1].startswith("sft,shortest_periodic_orbit,")


def test_floats_use_17_significant_digits(tmp_path):
    out = tmp_path / "sft"
    run_cli(["sft", "--out", str(out), "--count", "5"])
    lines = (out / "sft_girth.csv").read_text().splitlines()
    entropies = [line.split(",")[4] for line in lines[1:]]
    assert any(len(e.replace(".", "").replace("-", "")) >= 16
               for e in entropies)
