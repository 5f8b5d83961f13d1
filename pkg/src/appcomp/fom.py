"""Figures of merit for compiled circuits.

Scores returned by :func:`evaluate_fom` are normalised so that larger is
always better: minimised metrics are negated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .circuit import Gate, QuantumCircuit, bind_parameters, count_two_qubit_gates, depth
from .device import DeviceModel, edge, validate_executable
from .errors import DimensionMismatch, NotExecutable, ValidationError
from .sim import Distribution, simulate_ideal, simulate_noisy

KINDS = ("two_qubit_count", "depth", "expected_fidelity", "histogram_intersection", "app_kl")
_MINIMIZE = frozenset({"two_qubit_count", "depth", "app_kl"})
DEFAULT_EPS = 1e-12


@dataclass(frozen=True)
class FigureOfMeritSpec:
    kind: str
    epochs: int = 150
    population: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown figure of merit {self.kind!r}", "kind")
        if self.epochs < 0:
            raise ValidationError("must be >= 0", "epochs")
        if self.population is not None and self.population < 2:
            raise ValidationError("must be >= 2", "population")

    @property
    def direction(self) -> str:
        return "minimize" if self.kind in _MINIMIZE else "maximize"

    def normalize(self, value: float) -> float:
        return -value if self.direction == "minimize" else value

    @classmethod
    def from_dict(cls, data: dict) -> FigureOfMeritSpec:
        unknown = set(data) - {"kind", "epochs", "population"}
        if unknown:
            raise ValidationError(f"unknown fields {sorted(unknown)}", "fom")
        return cls(**data)

    def as_dict(self) -> dict:
        return {"kind": self.kind, "epochs": self.epochs, "population": self.population}


@dataclass
class FomContext:
    """Extra inputs some metrics need.

    ``target`` and ``seed`` drive app_kl training; ``params`` binds a
    parameterized circuit for histogram_intersection. ``records`` receives
    the training curve of the last app_kl evaluation.
    """

    target: Any = None
    seed: int = 0
    params: dict | None = None
    param_names: list | None = None
    sigma0: float = 0.5
    records: list = field(default_factory=list)


def expected_fidelity(circuit: QuantumCircuit, device: DeviceModel) -> float:
    report = validate_executable(circuit, device)
    if not report.ok:
        raise NotExecutable("circuit is not executable on " + device.name)
    f = 1.0
    for inst in circuit.instructions:
        if inst.kind is Gate.MEASURE:
            f *= 1.0 - device.readout_error[inst.qubits[0]]
        elif inst.kind is Gate.BARRIER:
            continue
        elif inst.is_two_qubit():
            f *= 1.0 - device.error_2q[edge(*inst.qubits)]
        else:
            f *= 1.0 - device.error_1q[inst.qubits[0]]
    return f


def _probs(d) -> np.ndarray:
    return d.probabilities if isinstance(d, Distribution) else np.asarray(d, dtype=float)


def histogram_intersection(p, q) -> float:
    a, b = _probs(p), _probs(q)
    if a.shape != b.shape:
        raise DimensionMismatch(f"outcome spaces differ: {a.size} vs {b.size}")
    return float(np.minimum(a, b).sum())


def kl_divergence(p, q, eps: float = DEFAULT_EPS) -> float:
    """D(P || Q) in nats, with Q floored at ``eps``."""
    a, b = _probs(p), _probs(q)
    if a.shape != b.shape:
        raise DimensionMismatch(f"outcome spaces differ: {a.size} vs {b.size}")
    if eps <= 0:
        raise ValueError("eps must be positive")
    mask = a > 0
    return float(np.sum(a[mask] * np.log(a[mask] / np.maximum(b[mask], eps))))


def evaluate_fom(spec: FigureOfMeritSpec, circuit: QuantumCircuit, device: DeviceModel,
                 context: FomContext | None = None) -> float:
    context = context or FomContext()
    kind = spec.kind
    if kind == "two_qubit_count":
        value = count_two_qubit_gates(circuit)
    elif kind == "depth":
        value = depth(circuit)
    elif kind == "expected_fidelity":
        value = expected_fidelity(circuit, device)
    elif kind == "histogram_intersection":
        bound = circuit
        if circuit.free_symbols:
            values = context.params or {s: 0.0 for s in circuit.free_symbols}
            bound = bind_parameters(circuit, values)
        value = histogram_intersection(simulate_noisy(bound, device), simulate_ideal(bound))
    else:
        from .qcbm import initial_kl, min_kl, train

        if context.target is None:
            raise ValidationError("app_kl needs a target distribution", "context.target")
        if spec.epochs == 0:
            context.records = []
            value = initial_kl(circuit, context.target, device, context.param_names)
        else:
            records = train(circuit, context.target, device, epochs=spec.epochs, popsize=spec.population,
                            seed=context.seed, param_names=context.param_names, sigma0=context.sigma0)
            context.records = records
            value = min_kl(records)
    if isinstance(value, float) and not math.isfinite(value):
        raise ValidationError("non-finite figure of merit", kind)
    return spec.normalize(value)
