"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

The lines are also collected into a summary section at the end of the run.
"""
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from appcomp.circuit import Gate, Layout, build_fig1_circuit, count_two_qubit_gates, equal_up_to_phase, unitary_of
from appcomp.cmaes import Candidate, ask, cmaes_init, optimize, tell
from appcomp.device import MOCK_DEVICES, mock_device, validate_executable
from appcomp.experiment import ExperimentConfig, run_experiment
from appcomp.fom import kl_divergence
from appcomp.passes import (apply_layout, cancel_inverse_pairs, drop_identity_rz, merge_rz, random_layout, route,
                            translate_to_native)
from appcomp.qcbm import make_x_target, records_from_csv
from appcomp.search import improvement
from appcomp.sim import Distribution, simulate_ideal, simulate_noisy
from conftest import ACCEPTANCE_LINES
from helpers import permutation_matrix, random_circuit, toy_device

QUITO = mock_device("quito")
MASTER_SEED = 0
E2E_CONFIG = {"seed": MASTER_SEED, "device": "quito", "instance": {"num_qubits": 4, "grid_side": 4, "layers": 3},
              "fom": {"kind": "app_kl"}, "training": {"epochs": 60, "population": None},
              "baseline": {"preset": "o3", "num_runs": 25}, "search": {"strategy": "beam", "width": 16}}


def report(number: int, title: str, ok: bool, detail: str):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_1_example_pipeline():
    t0 = time.perf_counter()
    c, _ = translate_to_native(build_fig1_circuit(), QUITO.native_gates)
    c, _ = merge_rz(c)
    rz_q0 = [i.param.evaluate() for i in c.instructions
             if i.kind is Gate.RZ and i.qubits == (0,) and not i.param.symbols()]
    has_3pi2 = any(math.isclose(a, 3 * math.pi / 2, abs_tol=1e-12) for a in rz_q0)
    layout = Layout.from_dict({3: 1, 1: 2, 0: 3, 2: 4})
    routed, rep = route(c, QUITO, layout)
    final, _ = translate_to_native(routed, QUITO.native_gates)
    n2q = count_two_qubit_gates(final)
    elapsed = time.perf_counter() - t0
    ok = has_3pi2 and rep.swaps_inserted == 1 and n2q == 7 and validate_executable(final, QUITO).ok and elapsed < 1
    report(1, "example circuit pipeline", ok,
           f"RZ(3pi/2) on q0={has_3pi2}, swaps={rep.swaps_inserted}, two-qubit gates={n2q}, {elapsed:.3f}s")


def test_2_initial_kl_anchor():
    t0 = time.perf_counter()
    value = kl_divergence(make_x_target(4, 4).distribution, Distribution.uniform(4))
    elapsed = time.perf_counter() - t0
    ok = abs(value - math.log(2)) <= 1e-9 and round(value, 2) == 0.69 and elapsed < 1
    report(2, "initial KL anchor", ok, f"KL={value:.9f} (ln 2={math.log(2):.9f}), {elapsed:.3f}s")


def test_3_pass_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    failures = 0
    for k in range(200):
        n = int(rng.integers(1, 5))
        c = random_circuit(rng, n, int(rng.integers(0, 13)))
        u = unitary_of(c)
        outs = [translate_to_native(c, QUITO.native_gates)[0], merge_rz(c)[0], drop_identity_rz(c)[0],
                cancel_inverse_pairs(c)[0]]
        failures += sum(not equal_up_to_phase(unitary_of(o), u, atol=1e-9) for o in outs)
        lay = random_layout(c, QUITO, k)
        routed, rep = route(c, QUITO, lay)
        expected = permutation_matrix(rep.final_permutation, 5) @ unitary_of(apply_layout(c, lay, 5))
        failures += not equal_up_to_phase(unitary_of(routed), expected, atol=1e-9)
    elapsed = time.perf_counter() - t0
    report(3, "pass equivalence (200 circuits)", failures == 0 and elapsed < 60,
           f"failures={failures}, {elapsed:.2f}s")


def test_4_routing_validity():
    t0 = time.perf_counter()
    bad = {}
    for d, name in enumerate(MOCK_DEVICES):
        dev = mock_device(name)
        rng = np.random.default_rng(400 + d)
        bad[name] = 0
        for k in range(100):
            n = int(rng.integers(2, min(dev.num_qubits, 8) + 1))
            c = random_circuit(rng, n, int(rng.integers(1, 30)), two_qubit_fraction=0.5)
            routed, _ = route(c, dev, random_layout(c, dev, k))
            final, _ = translate_to_native(routed, dev.native_gates)
            bad[name] += not validate_executable(final, dev).ok
    elapsed = time.perf_counter() - t0
    report(4, "routing validity (100 circuits per device)", not any(bad.values()) and elapsed < 60,
           f"non-empty reports={bad}, {elapsed:.2f}s")


def test_5_simulator_soundness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    worst_tv, worst_trace = 0.0, 0.0

    def watch(rho, nq):
        nonlocal worst_trace
        d = 2**nq
        worst_trace = max(worst_trace, abs(np.trace(rho.reshape(d, d)) - 1))

    for _ in range(100):
        n = int(rng.integers(1, 6))
        c = random_circuit(rng, n, int(rng.integers(0, 16)))
        worst_tv = max(worst_tv, simulate_noisy(c, toy_device(n), on_step=watch).total_variation(simulate_ideal(c)))
        simulate_noisy(c, toy_device(n, e1=0.01, e2=0.05, ro=0.02), on_step=watch)
    elapsed = time.perf_counter() - t0
    ok = worst_tv < 1e-10 and worst_trace <= 1e-10 and elapsed < 120
    report(5, "simulator soundness", ok, f"max TV={worst_tv:.2e}, max |tr-1|={worst_trace:.2e}, {elapsed:.2f}s")


def test_6_cmaes_benchmarks():
    t0 = time.perf_counter()
    sph = optimize(lambda x: float(x @ x), np.ones(5), 0.5, budget=5000, seed=0)
    ros = optimize(lambda x: float(100 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2), np.array([-1.2, 1.0]), 0.5,
                   budget=20000, seed=0)
    s1, s2 = cmaes_init(np.ones(4), 0.5, seed=6), cmaes_init(np.ones(4), 0.5, seed=6)
    identical = True
    for _ in range(10):
        x1, x2 = ask(s1), ask(s2)
        f = [float(x @ x) for x in x1]
        s1 = tell(s1, [Candidate(x, v) for x, v in zip(x1, f)])
        s2 = tell(s2, [Candidate(x, math.exp(v) - 5.0) for x, v in zip(x2, f)])
        identical &= all(np.array_equal(getattr(s1, a), getattr(s2, a)) for a in ("mean", "cov", "p_sigma", "p_c"))
        identical &= s1.sigma == s2.sigma
    elapsed = time.perf_counter() - t0
    ok = sph.fitness < 1e-10 and sph.evaluations <= 5000 and ros.fitness < 1e-6 and ros.evaluations <= 20000 \
        and identical and elapsed < 60
    report(6, "CMA-ES benchmarks", ok,
           f"sphere={sph.fitness:.1e} ({sph.evaluations} evals), rosenbrock={ros.fitness:.1e} "
           f"({ros.evaluations} evals), rank invariance bit-exact={identical}, {elapsed:.2f}s")


@pytest.fixture(scope="module")
def e2e(tmp_path_factory):
    root = tmp_path_factory.mktemp("e2e")
    cfg = ExperimentConfig.from_dict(E2E_CONFIG)
    t0 = time.perf_counter()
    manifest = run_experiment(cfg, root / "first")
    elapsed = time.perf_counter() - t0
    return {"root": root, "cfg": cfg, "manifest": manifest, "elapsed": elapsed}


def test_7_end_to_end(e2e):
    summary = json.loads((e2e["root"] / "first" / "summary.json").read_text())
    median = summary["median_baseline_min_kl"]
    proposed = summary["proposed_min_kl"]
    imp = improvement(proposed, median)
    ok = e2e["manifest"]["complete"] and len(e2e["manifest"]["baseline_runs"]) == 25 and proposed <= median \
        and imp >= 0 and e2e["elapsed"] <= 15 * 60
    report(7, "end-to-end experiment (25 o3 runs vs beam search)", ok,
           f"search min KL={proposed:.5f}, median={median:.5f} (best={summary['best_baseline_min_kl']:.5f}, "
           f"worst={summary['worst_baseline_min_kl']:.5f}), improvement vs median={imp:.2f}%, "
           f"{e2e['elapsed']:.0f}s")


def test_8_monotone_artifacts(e2e):
    t0 = time.perf_counter()
    root = e2e["root"] / "first"
    manifest = json.loads((root / "manifest.json").read_text())
    monotone, consistent, curves = True, True, 0
    for run in manifest["baseline_runs"] + [manifest["search"]]:
        rows = records_from_csv((root / run["curve"]).read_text())
        best = [r["best_kl"] for r in rows]
        monotone &= all(b <= a for a, b in zip(best, best[1:]))
        consistent &= run["min_kl"] == min(best)
        curves += 1
    elapsed = time.perf_counter() - t0
    report(8, "monotone artifacts", monotone and consistent and elapsed < 10,
           f"{curves} curves, non-increasing={monotone}, manifest minima match={consistent}, {elapsed:.2f}s")


def _bundle(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_9_determinism(e2e):
    run_experiment(e2e["cfg"], e2e["root"] / "second")
    a, b = _bundle(e2e["root"] / "first"), _bundle(e2e["root"] / "second")
    differing = sorted(k for k in set(a) | set(b) if a.get(k) != b.get(k))
    report(9, "determinism", not differing and len(a) > 0,
           f"{len(a)} files compared, differing={differing or 'none'}")
