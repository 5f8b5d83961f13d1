"""Quantum circuit Born machine: X-letter target, ansatz, CMA-ES training."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuit import CircuitBuilder, QuantumCircuit, Symbol, bind_parameters
from .cmaes import Candidate, ask, cmaes_init, tell
from .device import DeviceModel
from .errors import GridTooLarge, ValidationError
from .fom import kl_divergence
from .sim import Distribution, NoisyProgram, empirical, sample, simulate_ideal

DEFAULT_SIGMA0 = 0.5
# epochs by qubit count; larger instances have more parameters to converge
DEFAULT_EPOCHS = {4: 150, 6: 300, 8: 500}
DEFAULT_GRID = {4: 4, 6: 8, 8: 16}


@dataclass(frozen=True)
class TargetDistribution:
    grid_side: int
    num_qubits: int
    distribution: Distribution

    @property
    def support(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.distribution.probabilities)]

    @property
    def probabilities(self) -> np.ndarray:
        return self.distribution.probabilities


def x_tiles(s: int) -> list[tuple[int, int]]:
    return sorted({(i, i) for i in range(s)} | {(i, s - 1 - i) for i in range(s)})


def make_x_target(s: int, n: int) -> TargetDistribution:
    """Uniform distribution over the two diagonals of an s x s grid; tile (i, j) -> i*s + j."""
    if s < 2:
        raise ValidationError("grid side must be >= 2", "grid_side")
    if 2**n < s * s:
        raise GridTooLarge(f"a {s}x{s} grid does not fit into {n} qubits")
    tiles = x_tiles(s)
    p = np.zeros(2**n)
    for i, j in tiles:
        p[i * s + j] = 1.0
    return TargetDistribution(s, n, Distribution(p / p.sum()))


@dataclass(frozen=True)
class AnsatzSpec:
    num_qubits: int
    num_layers: int

    @property
    def num_params(self) -> int:
        return self.num_qubits * self.num_layers

    @property
    def param_names(self) -> list[str]:
        return [f"theta_{l:02d}_{q:02d}" for l in range(self.num_layers) for q in range(self.num_qubits)]


def build_ansatz(spec: AnsatzSpec) -> QuantumCircuit:
    """Hadamard layer, then per layer RY on every qubit and a linear CX chain; measure all."""
    if spec.num_layers < 1:
        raise ValidationError("need at least one layer", "num_layers")
    n = spec.num_qubits
    b = CircuitBuilder(n)
    for q in range(n):
        b.h(q)
    names = iter(spec.param_names)
    for _ in range(spec.num_layers):
        for q in range(n):
            b.ry(q, Symbol(next(names)))
        for q in range(n - 1):
            b.cx(q, q + 1)
    b.measure_all()
    return b.build()


def _as_mapping(params, names: Sequence[str]) -> dict[str, float]:
    if isinstance(params, dict):
        return params
    params = np.asarray(params, dtype=float)
    if params.size != len(names):
        raise ValidationError(f"expected {len(names)} parameters, got {params.size}", "params")
    return dict(zip(names, params.tolist()))


class Model:
    """Evaluates model distributions of one fixed (compiled) parameterized circuit."""

    def __init__(self, circuit: QuantumCircuit, device: DeviceModel | None = None,
                 param_names: Sequence[str] | None = None, shots: int | None = None):
        self.circuit = circuit
        self.device = device
        self.param_names = list(param_names) if param_names is not None else sorted(circuit.free_symbols)
        if set(self.param_names) != set(circuit.free_symbols):
            raise ValidationError("parameter names do not match the circuit symbols", "param_names")
        self.shots = shots
        self._program = NoisyProgram(circuit, device) if device is not None else None

    @property
    def num_params(self) -> int:
        return len(self.param_names)

    def distribution(self, params, seed=None) -> Distribution:
        values = _as_mapping(params, self.param_names)
        if self._program is not None:
            dist = self._program.run(values)
        else:
            dist = simulate_ideal(bind_parameters(self.circuit, values))
        if self.shots is not None:
            dist = empirical(sample(dist, self.shots, seed), dist.num_bits)
        return dist


def model_distribution(circuit: QuantumCircuit, params, device: DeviceModel | None = None,
                       param_names: Sequence[str] | None = None) -> Distribution:
    """Bind ``params`` and simulate; ``device=None`` selects the ideal simulator."""
    return Model(circuit, device, param_names).distribution(params)


@dataclass(frozen=True)
class TrainingRecord:
    epoch: int
    best_kl: float
    pop_best: float
    pop_median: float
    best_params: tuple[float, ...]


def initial_kl(circuit: QuantumCircuit, target: TargetDistribution, device: DeviceModel | None = None,
               param_names: Sequence[str] | None = None) -> float:
    model = Model(circuit, device, param_names)
    return kl_divergence(target.distribution, model.distribution(np.zeros(model.num_params)))


def train(circuit: QuantumCircuit, target: TargetDistribution, device: DeviceModel | None = None,
          epochs: int = 150, popsize: int | None = None, seed=0,
          param_names: Sequence[str] | None = None, sigma0: float = DEFAULT_SIGMA0,
          shots: int | None = None) -> list[TrainingRecord]:
    """CMA-ES minimisation of KL(target || model), one record per epoch.

    The search starts at theta = 0 (uniform superposition for the shipped
    ansatz) and the first candidate of epoch 0 is the mean itself, so the
    baseline KL is always measured.
    """
    if epochs < 1:
        raise ValidationError("need at least one epoch", "epochs")
    model = Model(circuit, device, param_names, shots)
    state = cmaes_init(np.zeros(model.num_params), sigma0, popsize, seed)
    shot_rng = np.random.default_rng(seed)
    records: list[TrainingRecord] = []
    best_kl, best_theta = math.inf, None
    for epoch in range(epochs):
        xs = ask(state)
        if epoch == 0:
            xs[0] = state.mean.copy()
        fits = []
        for x in xs:
            shot_seed = int(shot_rng.integers(2**63)) if shots is not None else None
            fits.append(kl_divergence(target.distribution, model.distribution(x, shot_seed)))
        i_best = int(np.argmin(fits))
        if fits[i_best] < best_kl:
            best_kl, best_theta = fits[i_best], xs[i_best].copy()
        records.append(TrainingRecord(epoch, best_kl, float(fits[i_best]), float(np.median(fits)),
                                      tuple(float(v) for v in best_theta)))
        if epoch < epochs - 1:
            state = tell(state, [Candidate(x, f) for x, f in zip(xs, fits)])
    return records


def min_kl(records: Sequence[TrainingRecord]) -> float:
    return min(r.best_kl for r in records)


def argmin_epoch(records: Sequence[TrainingRecord]) -> int:
    best = min_kl(records)
    return next(r.epoch for r in records if r.best_kl == best)


TRAINING_HEADER = ["epoch", "best_kl", "pop_best", "pop_median"]


def records_to_csv(records: Sequence[TrainingRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAINING_HEADER)
    for r in records:
        w.writerow([r.epoch, repr(r.best_kl), repr(r.pop_best), repr(r.pop_median)])
    return buf.getvalue()


def records_from_csv(text: str) -> list[dict]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != TRAINING_HEADER:
        raise ValidationError("bad training CSV header", "csv")
    return [{"epoch": int(r[0]), "best_kl": float(r[1]), "pop_best": float(r[2]), "pop_median": float(r[3])}
            for r in rows[1:]]
