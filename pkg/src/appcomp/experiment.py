"""Experiment configuration and the baseline-versus-search runner.

A run writes a self-contained results bundle::

    manifest.json          completeness flag, config, per-run minima, file list
    summary.json           best/median/worst baseline minima and improvements
    spread.csv             run,min_kl,argmin_epoch
    search_trace.csv       episode,terminal,reward,passes
    curves/*.csv           epoch,best_kl,pop_best,pop_median per training
    compiled/*.txt         compiled circuits in the IR text format
    chart.svg              best-so-far KL per epoch, baseline band vs search

Every file is a deterministic function of the config (master seed included).
"""
from __future__ import annotations

import copy
import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .circuit import circuit_to_text, count_two_qubit_gates, depth
from .device import resolve_device
from .errors import ValidationError
from .fom import FigureOfMeritSpec, FomContext
from .qcbm import (AnsatzSpec, argmin_epoch, build_ansatz, make_x_target, min_kl, records_to_csv,
                   train)
from .search import EpisodeResult, improvement, optimize_sequence, run_baseline, search_layout_seeds, \
    strategy_from_dict, trace_to_csv
from .seeding import derive_seed
from .svgplot import training_chart

SPREAD_HEADER = ["run", "min_kl", "argmin_epoch"]


def default_config() -> dict:
    return json.loads((resources.files("appcomp") / "defaults.json").read_text())


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ValidationError("unknown config field", where)
        if isinstance(base[key], dict) and key != "search":
            if not isinstance(value, dict):
                raise ValidationError("expected an object", where)
            out[key] = _merge(base[key], value, where)
        elif key == "search":
            if not isinstance(value, dict):
                raise ValidationError("expected an object", where)
            merged = dict(base[key]) if value.get("strategy", base[key]["strategy"]) == base[key]["strategy"] \
                else {"max_steps": base[key]["max_steps"], "layout_trials": base[key]["layout_trials"]}
            merged.update(value)
            out[key] = merged
        else:
            out[key] = value
    return out


@dataclass
class ExperimentConfig:
    raw: dict

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        cfg = cls(_merge(default_config(), data))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        from .errors import ParseError

        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ParseError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ParseError("config must be a JSON object")
        return cls.from_dict(data)

    def validate(self):
        r = self.raw
        if r["baseline"]["num_runs"] < 1:
            raise ValidationError("must be >= 1", "baseline.num_runs")
        if r["baseline"]["preset"] not in ("o1", "o3", "o1_like", "o3_like"):
            raise ValidationError("must be o1 or o3", "baseline.preset")
        if r["training"]["epochs"] < 1:
            raise ValidationError("must be >= 1", "training.epochs")
        self.fom  # noqa: B018 - validates the kind
        self.strategy  # noqa: B018
        self.device  # noqa: B018
        inst = r["instance"]
        make_x_target(inst["grid_side"], inst["num_qubits"])
        if inst["num_qubits"] > self.device.num_qubits:
            raise ValidationError(f"{inst['num_qubits']} qubits do not fit on {self.device.name}", "instance")

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def device(self):
        return resolve_device(self.raw["device"])

    @property
    def ansatz_spec(self) -> AnsatzSpec:
        inst = self.raw["instance"]
        return AnsatzSpec(inst["num_qubits"], inst["layers"])

    @property
    def target(self):
        inst = self.raw["instance"]
        return make_x_target(inst["grid_side"], inst["num_qubits"])

    @property
    def fom(self) -> FigureOfMeritSpec:
        t = self.raw["training"]
        return FigureOfMeritSpec(self.raw["fom"]["kind"], epochs=t["epochs"], population=t["population"])

    @property
    def training_fom(self) -> FigureOfMeritSpec:
        t = self.raw["training"]
        return FigureOfMeritSpec("app_kl", epochs=t["epochs"], population=t["population"])

    @property
    def strategy(self):
        s = {k: v for k, v in self.raw["search"].items() if k not in ("max_steps", "layout_trials")}
        return strategy_from_dict(s)

    def context(self) -> FomContext:
        return FomContext(target=self.target, param_names=self.ansatz_spec.param_names,
                          sigma0=self.raw["training"]["sigma0"])


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _ensure_curve(result: EpisodeResult, cfg: ExperimentConfig, seed: int):
    """Training curve for a compiled result; trains only if the reward was not app_kl."""
    if result.records:
        return result.records
    t = cfg.raw["training"]
    return train(result.circuit, cfg.target, cfg.device, epochs=t["epochs"], popsize=t["population"],
                 seed=seed, param_names=cfg.ansatz_spec.param_names, sigma0=t["sigma0"], shots=t["shots"])


def _baseline_run(cfg_raw: dict, k: int):
    cfg = ExperimentConfig(cfg_raw)
    seed = derive_seed(cfg.seed, "baseline", k)
    circuit = build_ansatz(cfg.ansatz_spec)
    result = run_baseline(cfg.raw["baseline"]["preset"], circuit, cfg.device, cfg.fom, seed, cfg.context())
    records = _ensure_curve(result, cfg, derive_seed(seed, "curve"))
    return result, records


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> dict:
    out = Path(out_dir if out_dir is not None else cfg.raw["output"])
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"complete": False, "config": cfg.raw, "baseline_runs": [], "search": None, "files": []}

    def emit(rel: str, text: str):
        _write(out / rel, text)
        if rel not in manifest["files"]:
            manifest["files"].append(rel)

    try:
        n_runs = cfg.raw["baseline"]["num_runs"]
        workers = int(cfg.raw.get("workers") or 1)
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                runs = list(pool.map(_baseline_run, [cfg.raw] * n_runs, range(n_runs)))
        else:
            runs = [_baseline_run(cfg.raw, k) for k in range(n_runs)]
        curves = []
        for k, (result, records) in enumerate(runs):
            name = f"baseline_{k:02d}"
            emit(f"curves/{name}.csv", records_to_csv(records))
            emit(f"compiled/{name}.txt", circuit_to_text(result.circuit))
            curves.append(records)
            manifest["baseline_runs"].append({
                "run": k, "curve": f"curves/{name}.csv", "min_kl": min_kl(records),
                "argmin_epoch": argmin_epoch(records), "passes": list(result.history),
                "two_qubit_gates": count_two_qubit_gates(result.circuit), "depth": depth(result.circuit),
            })
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SPREAD_HEADER)
        for run in manifest["baseline_runs"]:
            w.writerow([run["run"], repr(run["min_kl"]), run["argmin_epoch"]])
        emit("spread.csv", buf.getvalue())

        search_seed = derive_seed(cfg.seed, "search")
        s = cfg.raw["search"]
        best, trace = optimize_sequence(
            cfg.strategy, build_ansatz(cfg.ansatz_spec), cfg.device, cfg.fom, search_seed, cfg.context(),
            max_steps=s["max_steps"], layout_seeds=search_layout_seeds(search_seed, s["layout_trials"]),
        )
        search_records = _ensure_curve(best, cfg, derive_seed(search_seed, "curve"))
        emit("search_trace.csv", trace_to_csv(trace))
        emit("curves/search.csv", records_to_csv(search_records))
        emit("compiled/search.txt", circuit_to_text(best.circuit))
        manifest["search"] = {
            "curve": "curves/search.csv", "min_kl": min_kl(search_records),
            "argmin_epoch": argmin_epoch(search_records), "passes": list(best.history),
            "two_qubit_gates": count_two_qubit_gates(best.circuit), "depth": depth(best.circuit),
            "terminal_evaluations": sum(1 for row in trace if row.terminal),
        }

        summary = summarize(manifest["baseline_runs"], manifest["search"]["min_kl"])
        emit("summary.json", _dumps(summary))
        emit("chart.svg", training_chart(curves, search_records, title=_chart_title(cfg)))
        manifest["complete"] = True
    finally:
        manifest["files"].sort()
        _write(out / "manifest.json", _dumps(manifest))
    return manifest


def _chart_title(cfg: ExperimentConfig) -> str:
    inst = cfg.raw["instance"]
    return f"{inst['num_qubits']} qubits on {cfg.device.name}"


def summarize(baseline_runs: list[dict], proposed_min: float) -> dict:
    """Best, median and worst baseline runs by minimum KL, with improvements in percent."""
    ranked = sorted(baseline_runs, key=lambda r: (r["min_kl"], r["run"]))
    picks = {"best": ranked[0], "median": ranked[(len(ranked) - 1) // 2], "worst": ranked[-1]}
    out = {"proposed_min_kl": proposed_min, "num_runs": len(ranked)}
    for label, run in picks.items():
        out[f"{label}_baseline_run"] = run["run"]
        out[f"{label}_baseline_min_kl"] = run["min_kl"]
        out[f"improvement_vs_{label}_percent"] = improvement(proposed_min, run["min_kl"])
    return out


# ---------------------------------------------------------------------------


def compile_for_training(cfg: ExperimentConfig, preset: str, seed: int) -> EpisodeResult:
    circuit = build_ansatz(cfg.ansatz_spec)
    return run_baseline(preset, circuit, cfg.device, FigureOfMeritSpec("two_qubit_count"), seed)


def run_training(cfg: ExperimentConfig, out_dir=None, preset: str | None = None) -> dict:
    """Compile the configured ansatz with a preset and train it once."""
    out = Path(out_dir if out_dir is not None else cfg.raw["output"])
    preset = preset or cfg.raw["baseline"]["preset"]
    compiled = compile_for_training(cfg, preset, derive_seed(cfg.seed, "train-compile"))
    t = cfg.raw["training"]
    records = train(compiled.circuit, cfg.target, cfg.device, epochs=t["epochs"], popsize=t["population"],
                    seed=derive_seed(cfg.seed, "train"), param_names=cfg.ansatz_spec.param_names,
                    sigma0=t["sigma0"], shots=t["shots"])
    _write(out / "training.csv", records_to_csv(records))
    _write(out / "compiled.txt", circuit_to_text(compiled.circuit))
    summary = {
        "min_kl": min_kl(records), "argmin_epoch": argmin_epoch(records), "epochs": len(records),
        "preset": preset, "passes": list(compiled.history),
        "two_qubit_gates": count_two_qubit_gates(compiled.circuit),
    }
    _write(out / "summary.json", _dumps(summary))
    return summary
