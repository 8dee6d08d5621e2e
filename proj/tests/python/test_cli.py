"""End-to-end exercise of the flatrec CLI binary (path via FLATREC_CLI)."""

import os
import subprocess

import pytest

CLI = os.environ.get("FLATREC_CLI")

pytestmark = pytest.mark.skipif(not CLI, reason="FLATREC_CLI not set")


def run(*args, expect_ok=True):
    proc = subprocess.run([CLI, *args], capture_output=True, text=True)
    if expect_ok:
        assert proc.returncode == 0, proc.stderr
    return proc


def write_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "\n".join(
            [
                f"paths.interactions = {tmp_path}/inter.tsv",
                f"paths.embed_set = {tmp_path}/embed.tsv",
                f"paths.model_set = {tmp_path}/model.tsv",
                f"paths.test_set = {tmp_path}/test.tsv",
                f"paths.embeddings = {tmp_path}/emb.txt",
                f"paths.reprs = {tmp_path}/reprs.bin",
                f"paths.checkpoint = {tmp_path}/model.bin",
                f"paths.history = {tmp_path}/history.csv",
                f"paths.report = {tmp_path}/report.csv",
                f"paths.bench_report = {tmp_path}/bench.csv",
                "graph.k = 2",
                "budget.k1 = 5",
                "budget.k2 = 5",
                "pretrain.dim = 8",
                "pretrain.epochs = 3",
                "train.epochs = 2",
                "train.batch = 32",
                "train.hidden1 = 8",
                "train.hidden2 = 4",
                "bench.seeds = 1",
                "eval.k = 10",
                "seed = 11",
                "workers = 2",
                "",
            ]
        )
    )
    return str(cfg)


def test_pipeline_subcommands(tmp_path):
    cfg = write_config(tmp_path)
    run("synth", "--out", f"{tmp_path}/inter.tsv", "--users", "50", "--items", "50",
        "--inter", "8", "--seed", "3")
    assert (tmp_path / "inter.tsv").exists()

    run("split", "--config", cfg)
    assert (tmp_path / "embed.tsv").exists()
    assert (tmp_path / "manifest.split.json").exists()

    run("pretrain", "--config", cfg)
    head = (tmp_path / "emb.txt").read_text().splitlines()[0]
    assert head.startswith("flatrec-emb v1 ")

    run("precompute", "--config", cfg)
    assert (tmp_path / "reprs.bin").read_bytes()[:4] == b"FLTR"

    run("train", "--config", cfg)
    assert (tmp_path / "model.bin").read_bytes()[:4] == b"FLTM"
    history = (tmp_path / "history.csv").read_text().splitlines()
    assert history[0] == "epoch,train_loss,val_loss"

    out = run("evaluate", "--config", cfg)
    assert "REC@10" in out.stdout
    report = (tmp_path / "report.csv").read_text().splitlines()
    assert len(report) == 2

    run("bench", "--config", cfg)
    bench = (tmp_path / "bench.csv").read_text().splitlines()
    assert len(bench) == 4  # header + 3 samplers


def test_missing_dependency_is_a_one_line_error(tmp_path):
    cfg = write_config(tmp_path)
    run("synth", "--out", f"{tmp_path}/inter.tsv", "--users", "30", "--items", "30", "--seed", "1")
    run("split", "--config", cfg)
    proc = run("train", "--config", cfg, expect_ok=False)
    assert proc.returncode != 0
    lines = [l for l in proc.stderr.strip().splitlines() if l]
    assert len(lines) == 1
    assert lines[0].startswith("error: stage dependency missing: reprs")


def test_flag_overrides_reach_the_manifest(tmp_path):
    cfg = write_config(tmp_path)
    run("synth", "--out", f"{tmp_path}/inter.tsv", "--users", "30", "--items", "30", "--seed", "1")
    run("split", "--config", cfg, "--seed", "777")
    manifest = (tmp_path / "manifest.split.json").read_text()
    assert '"seed": 777' in manifest
