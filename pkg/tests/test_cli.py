import json
import os
from pathlib import Path

import pytest

from termweight.cli import build_parser, main
from termweight.synth import build_uplift_corpus

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Synthetic corpus files plus a built tf index."""
    root = tmp_path_factory.mktemp("cli")
    corpus = build_uplift_corpus(seed=5, n_docs=40, n_eval_queries=10)
    paths = corpus.write(str(root))
    paths["root"] = str(root)
    assert main([
        "index", "--collection", paths["collection"], "--out", str(root / "idx"),
        "--stem", "none",
    ]) == 0
    paths["index"] = str(root / "idx")
    return paths


class TestPipelineSmoke:
    def test_index_then_search_produces_valid_run(self, workspace, tmp_path):
        run_path = tmp_path / "run.txt"
        rc = main([
            "search", "bm25", "--index", workspace["index"],
            "--queries", workspace["eval_queries"], "--out", str(run_path), "--k", "10",
        ])
        assert rc == 0
        lines = run_path.read_text().splitlines()
        assert lines and all(len(line.split(" ")) == 6 for line in lines)

    def test_targets_feed_weighted_index(self, workspace, tmp_path):
        weights = tmp_path / "qtr.jsonl"
        rc = main([
            "targets", "qtr", "--qrels", workspace["train_qrels"],
            "--queries", workspace["train_queries"],
            "--collection", workspace["collection"],
            "--out", str(weights), "--stem", "none",
        ])
        assert rc == 0
        rc = main([
            "index", "--collection", workspace["collection"],
            "--out", str(tmp_path / "widx"), "--weights", str(weights), "--stem", "none",
        ])
        assert rc == 0
        assert (tmp_path / "widx" / "postings.bin").exists()
        assert (tmp_path / "widx" / "config.txt").exists()

    def test_evaluate_prints_json_summary(self, workspace, tmp_path, capsys):
        run_path = tmp_path / "run.txt"
        main([
            "search", "bm25", "--index", workspace["index"],
            "--queries", workspace["eval_queries"], "--out", str(run_path),
        ])
        rc = main([
            "evaluate", "mrr", "--run", str(run_path),
            "--qrels", workspace["eval_qrels"], "--k", "10",
        ])
        assert rc == 0
        summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert set(summary) == {"metric", "k", "mean", "evaluated", "skipped"}
        assert summary["metric"] == "mrr"

    def test_compare_stats_export(self, workspace, tmp_path, capsys):
        run_path = tmp_path / "run.txt"
        main([
            "search", "ql", "--index", workspace["index"],
            "--queries", workspace["eval_queries"], "--out", str(run_path),
        ])
        rc = main([
            "compare", "--run-a", str(run_path), "--run-b", str(run_path),
            "--qrels", workspace["eval_qrels"],
        ])
        assert rc == 0
        result = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert result["win"] == 0 and result["loss"] == 0

        rc = main(["stats", "--index", workspace["index"], "--top-k", "5"])
        assert rc == 0
        profile = json.loads(capsys.readouterr().out.strip().splitlines()[-1])["profile"]
        assert len(profile) == 5

        rc = main([
            "export", "--run", str(run_path), "--depth", "3",
            "--tag", "candidates", "--out", str(tmp_path / "cand.txt"),
        ])
        assert rc == 0
        assert all(int(l.split()[3]) <= 3 for l in (tmp_path / "cand.txt").read_text().splitlines())

    def test_sweep_reports_best(self, workspace, capsys):
        rc = main([
            "sweep", "--index", workspace["index"], "--queries", workspace["eval_queries"],
            "--qrels", workspace["eval_qrels"], "--model", "bm25",
            "--k1-grid", "0.9,1.2", "--b-grid", "0.4",
        ])
        assert rc == 0
        out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert set(out["best"]) == {"k1", "b"}

    def test_train_predict_cycle(self, workspace, tmp_path):
        targets = tmp_path / "qtr.jsonl"
        main([
            "targets", "qtr", "--qrels", workspace["train_qrels"],
            "--queries", workspace["train_queries"],
            "--collection", workspace["collection"],
            "--out", str(targets), "--stem", "none",
        ])
        model = tmp_path / "model.json"
        rc = main([
            "train", "--targets", str(targets), "--collection", workspace["collection"],
            "--out", str(model), "--epochs", "30", "--stem", "none",
        ])
        assert rc == 0
        predictions = tmp_path / "pred.jsonl"
        rc = main([
            "predict", "--model", str(model), "--collection", workspace["collection"],
            "--out", str(predictions), "--stem", "none",
        ])
        assert rc == 0
        assert len(predictions.read_text().splitlines()) == 40


class TestExitCodes:
    def test_module_error_exits_one(self, tmp_path, capsys):
        rc = main(["index", "--collection", str(tmp_path / "missing.tsv"), "--out", str(tmp_path / "i")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_usage_error_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["search"])  # missing required flags
        assert exc.value.code == 2

    def test_sdm_with_bm25_is_usage_error(self, workspace, tmp_path):
        rc = main([
            "search", "bm25", "--sdm", "--index", workspace["index"],
            "--queries", workspace["eval_queries"], "--out", str(tmp_path / "r.txt"),
        ])
        assert rc == 2

    def test_unknown_config_key_exits_one(self, workspace, tmp_path, capsys):
        config = tmp_path / "conf.txt"
        config.write_text("definitely-not-a-key=1\n")
        rc = main([
            "search", "bm25", "--index", workspace["index"],
            "--queries", workspace["eval_queries"], "--out", str(tmp_path / "r.txt"),
            "--config", str(config),
        ])
        assert rc == 1
        assert "unknown config key" in capsys.readouterr().err


class TestConfigPrecedence:
    def test_config_overrides_default_and_flag_overrides_config(self, workspace, tmp_path):
        config = tmp_path / "conf.txt"
        config.write_text("k=3\n")
        out_a = tmp_path / "a.txt"
        main([
            "search", "bm25", "--index", workspace["index"],
            "--queries", workspace["eval_queries"], "--out", str(out_a),
            "--config", str(config),
        ])
        assert all(int(l.split()[3]) <= 3 for l in out_a.read_text().splitlines())

        out_b = tmp_path / "b.txt"
        main([
            "search", "bm25", "--index", workspace["index"],
            "--queries", workspace["eval_queries"], "--out", str(out_b),
            "--config", str(config), "--k", "1",
        ])
        assert all(int(l.split()[3]) == 1 for l in out_b.read_text().splitlines())


class TestHelpGolden:
    def test_every_subcommand_help_matches_golden(self, monkeypatch):
        monkeypatch.setenv("COLUMNS", "80")
        parser = build_parser()
        sub_map = next(
            a.choices for a in parser._actions
            if hasattr(a, "choices") and isinstance(a.choices, dict)
        )
        assert parser.format_help() == (GOLDEN / "help_main.txt").read_text()
        for name, sub in sub_map.items():
            golden = (GOLDEN / f"help_{name}.txt").read_text()
            assert sub.format_help() == golden, f"--help drifted for {name}"
