import csv
import json
from pathlib import Path

import pytest

from appcomp.errors import NoTerminalFound, ParseError, ValidationError
from appcomp.experiment import ExperimentConfig, default_config, run_experiment, run_training, summarize
from appcomp.qcbm import records_from_csv
from appcomp.search import BeamStrategy, RLStrategy

TINY = {"training": {"epochs": 3}, "baseline": {"num_runs": 3}, "search": {"width": 2}}


def read_bundle(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_defaults_document():
    d = default_config()
    assert d["baseline"] == {"preset": "o3", "num_runs": 25}
    assert d["instance"] == {"num_qubits": 4, "grid_side": 4, "layers": 3}
    assert ExperimentConfig.from_dict({}).strategy == BeamStrategy(16)


def test_config_validation():
    with pytest.raises(ValidationError):
        ExperimentConfig.from_dict({"baseline": {"num_runs": 0}})
    with pytest.raises(ValidationError):
        ExperimentConfig.from_dict({"instance": {"qubits": 4}})
    with pytest.raises(ParseError):
        ExperimentConfig.from_dict({"device": "nowhere.json"})
    with pytest.raises(ValidationError):
        ExperimentConfig.from_dict({"instance": {"num_qubits": 6, "grid_side": 8}})


def test_switching_strategy_drops_foreign_keys():
    cfg = ExperimentConfig.from_dict({"search": {"strategy": "rl", "episodes": 7}})
    assert cfg.strategy == RLStrategy(episodes=7)
    assert cfg.raw["search"]["max_steps"] == 12


def test_summarize_ranks_and_improvements():
    runs = [{"run": k, "min_kl": v} for k, v in enumerate([0.4, 0.1, 0.3, 0.2, 0.5])]
    s = summarize(runs, 0.15)
    assert (s["best_baseline_run"], s["median_baseline_run"], s["worst_baseline_run"]) == (1, 2, 4)
    assert s["improvement_vs_median_percent"] == pytest.approx(100 * (1 - 0.15 / 0.3))
    assert s["improvement_vs_best_percent"] < 0


def test_tiny_experiment_bundle(tmp_path):
    cfg = ExperimentConfig.from_dict(TINY)
    manifest = run_experiment(cfg, tmp_path / "a")
    root = tmp_path / "a"
    assert manifest["complete"]
    assert [r["curve"] for r in manifest["baseline_runs"]] == [f"curves/baseline_{k:02d}.csv" for k in range(3)]
    assert manifest["search"]["curve"] == "curves/search.csv"
    on_disk = json.loads((root / "manifest.json").read_text())
    assert on_disk == json.loads(json.dumps(manifest))
    for rel in on_disk["files"]:
        assert (root / rel).is_file()

    # headers and cross-file consistency
    for run in on_disk["baseline_runs"] + [on_disk["search"]]:
        rows = records_from_csv((root / run["curve"]).read_text())
        assert len(rows) == 3
        assert run["min_kl"] == min(r["best_kl"] for r in rows)
        assert all(b["best_kl"] <= a["best_kl"] for a, b in zip(rows, rows[1:]))
    with open(root / "spread.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["run", "min_kl", "argmin_epoch"] and len(rows) == 4
    summary = json.loads((root / "summary.json").read_text())
    med = summary["median_baseline_min_kl"]
    assert summary["improvement_vs_median_percent"] == pytest.approx(100 * (1 - summary["proposed_min_kl"] / med))
    assert (root / "chart.svg").read_text().startswith("<svg")

    run_experiment(cfg, tmp_path / "b")
    assert read_bundle(root) == read_bundle(tmp_path / "b")


def test_failed_experiment_flushes_partial_manifest(tmp_path):
    cfg = ExperimentConfig.from_dict({**TINY, "search": {"max_steps": 2}})
    with pytest.raises(NoTerminalFound):
        run_experiment(cfg, tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["complete"] is False
    assert len(manifest["baseline_runs"]) == 3 and manifest["search"] is None


def test_workers_do_not_change_results(tmp_path):
    run_experiment(ExperimentConfig.from_dict(TINY), tmp_path / "serial")
    run_experiment(ExperimentConfig.from_dict({**TINY, "workers": 2}), tmp_path / "pool")
    a, b = read_bundle(tmp_path / "serial"), read_bundle(tmp_path / "pool")
    # the manifest embeds the config, which differs in "workers"
    a.pop("manifest.json"), b.pop("manifest.json")
    assert a == b


def test_training_outputs(tmp_path):
    cfg = ExperimentConfig.from_dict({"training": {"epochs": 2}})
    summary = run_training(cfg, tmp_path / "x")
    again = run_training(cfg, tmp_path / "y")
    assert summary == again
    assert (tmp_path / "x" / "training.csv").read_bytes() == (tmp_path / "y" / "training.csv").read_bytes()
    assert len(records_from_csv((tmp_path / "x" / "training.csv").read_text())) == 2
