"""Device models, the JSON device-file format, and executability checks.

Device file schema (JSON object, unknown keys rejected)::

    name            string
    num_qubits      int
    coupling_edges  list of [a, b] physical-qubit pairs (undirected)
    native_gates    list of gate names
    error_1q        float, or list with one entry per qubit
    error_2q        float, or list with one entry per coupling edge (same order)
    readout_error   float, or list with one entry per qubit

Scalar error values are shorthand for a uniform rate.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

from .circuit import Gate, Instruction, QuantumCircuit
from .errors import ParseError, UnknownDevice, ValidationError

MOCK_DEVICES = ("quito", "nairobi", "montreal")
DEFAULT_NATIVE = frozenset({Gate.RZ, Gate.SX, Gate.CX, Gate.X, Gate.ID})
DEFAULT_ERROR_1Q = 0.001
DEFAULT_ERROR_2Q = 0.01
DEFAULT_READOUT = 0.02

_FIELDS = {"name", "num_qubits", "coupling_edges", "native_gates", "error_1q", "error_2q", "readout_error"}


def edge(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class DeviceModel:
    name: str
    num_qubits: int
    coupling_edges: tuple[tuple[int, int], ...]
    native_gates: frozenset[Gate]
    error_1q: Mapping[int, float]
    error_2q: Mapping[tuple[int, int], float]
    readout_error: Mapping[int, float]
    _adjacency: dict = field(default=None, init=False, repr=False, compare=False)
    _distances: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        edges = tuple(sorted({edge(int(a), int(b)) for a, b in self.coupling_edges}))
        object.__setattr__(self, "coupling_edges", edges)
        object.__setattr__(self, "native_gates", frozenset(Gate(g) for g in self.native_gates))
        if self.num_qubits < 1:
            raise ValidationError("must be positive", "num_qubits")
        for a, b in edges:
            if a == b:
                raise ValidationError(f"self-loop on qubit {a}", "coupling_edges")
            if a < 0 or b >= self.num_qubits:
                raise ValidationError(f"edge ({a},{b}) outside {self.num_qubits} qubits", "coupling_edges")
        e1 = {int(k): float(v) for k, v in self.error_1q.items()}
        e2 = {edge(*k): float(v) for k, v in self.error_2q.items()}
        ro = {int(k): float(v) for k, v in self.readout_error.items()}
        for name, table, keys in (("error_1q", e1, range(self.num_qubits)),
                                  ("error_2q", e2, edges),
                                  ("readout_error", ro, range(self.num_qubits))):
            if set(table) != set(keys):
                raise ValidationError("keys do not match the device", name)
            for v in table.values():
                if not 0.0 <= v < 1.0:
                    raise ValidationError(f"rate {v} outside [0, 1)", name)
        object.__setattr__(self, "error_1q", e1)
        object.__setattr__(self, "error_2q", e2)
        object.__setattr__(self, "readout_error", ro)
        adj: dict[int, list[int]] = {q: [] for q in range(self.num_qubits)}
        for a, b in edges:
            adj[a].append(b)
            adj[b].append(a)
        object.__setattr__(self, "_adjacency", {q: tuple(sorted(v)) for q, v in adj.items()})
        object.__setattr__(self, "_distances", {})

    def neighbors(self, q: int) -> tuple[int, ...]:
        return self._adjacency[q]

    def degree(self, q: int) -> int:
        return len(self._adjacency[q])

    def coupled(self, a: int, b: int) -> bool:
        return edge(a, b) in self.error_2q

    def distances_from(self, src: int) -> dict[int, int]:
        """BFS hop distances; unreachable qubits are absent."""
        cached = self._distances.get(src)
        if cached is None:
            cached = {src: 0}
            queue = deque([src])
            while queue:
                u = queue.popleft()
                for v in self._adjacency[u]:
                    if v not in cached:
                        cached[v] = cached[u] + 1
                        queue.append(v)
            self._distances[src] = cached
        return cached

    def distance(self, a: int, b: int) -> float:
        return self.distances_from(a).get(b, float("inf"))

    def is_connected(self) -> bool:
        return len(self.distances_from(0)) == self.num_qubits

    def with_errors(self, error_1q=None, error_2q=None, readout_error=None) -> DeviceModel:
        """Copy with uniform error rates replaced (``None`` keeps the current table)."""
        def fill(value, keys, current):
            return dict(current) if value is None else {k: float(value) for k in keys}

        return DeviceModel(
            self.name, self.num_qubits, self.coupling_edges, self.native_gates,
            fill(error_1q, range(self.num_qubits), self.error_1q),
            fill(error_2q, self.coupling_edges, self.error_2q),
            fill(readout_error, range(self.num_qubits), self.readout_error),
        )


def _expand(value, keys, name):
    keys = list(keys)
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return {k: float(value) for k in keys}
    if isinstance(value, list):
        if len(value) != len(keys):
            raise ValidationError(f"expected {len(keys)} entries, got {len(value)}", name)
        return {k: float(v) for k, v in zip(keys, value)}
    raise ValidationError("must be a number or a list", name)


def device_from_dict(data: dict) -> DeviceModel:
    if not isinstance(data, dict):
        raise ParseError("device file must hold a JSON object")
    unknown = set(data) - _FIELDS
    if unknown:
        raise ValidationError(f"unknown fields {sorted(unknown)}", sorted(unknown)[0])
    missing = {"name", "num_qubits", "coupling_edges"} - set(data)
    if missing:
        raise ValidationError("missing required field", sorted(missing)[0])
    n = data["num_qubits"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise ValidationError("must be an integer", "num_qubits")
    try:
        raw_edges = [tuple(int(x) for x in pair) for pair in data["coupling_edges"]]
    except (TypeError, ValueError) as exc:
        raise ValidationError("must be a list of integer pairs", "coupling_edges") from exc
    if any(len(p) != 2 for p in raw_edges):
        raise ValidationError("every edge needs two endpoints", "coupling_edges")
    for a, b in raw_edges:
        if a == b:
            raise ValidationError(f"self-loop on qubit {a}", "coupling_edges")
        if min(a, b) < 0 or max(a, b) >= n:
            raise ValidationError(f"edge ({a},{b}) outside {n} qubits", "coupling_edges")
    edges = [edge(a, b) for a, b in raw_edges]
    try:
        native = frozenset(Gate(g) for g in data.get("native_gates", [g.value for g in DEFAULT_NATIVE]))
    except ValueError as exc:
        raise ValidationError(str(exc), "native_gates") from exc
    return DeviceModel(
        name=str(data["name"]),
        num_qubits=n,
        coupling_edges=tuple(edges),
        native_gates=native,
        error_1q=_expand(data.get("error_1q", DEFAULT_ERROR_1Q), range(n), "error_1q"),
        error_2q=_expand(data.get("error_2q", DEFAULT_ERROR_2Q), edges, "error_2q"),
        readout_error=_expand(data.get("readout_error", DEFAULT_READOUT), range(n), "readout_error"),
    )


def load_device(path) -> DeviceModel:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read device file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return device_from_dict(data)


def _compact(values):
    vals = list(values)
    if vals and all(v == vals[0] for v in vals):
        return vals[0]
    return vals


def device_to_dict(device: DeviceModel) -> dict:
    return {
        "name": device.name,
        "num_qubits": device.num_qubits,
        "coupling_edges": [list(e) for e in device.coupling_edges],
        "native_gates": sorted(g.value for g in device.native_gates),
        "error_1q": _compact(device.error_1q[q] for q in range(device.num_qubits)),
        "error_2q": _compact(device.error_2q[e] for e in device.coupling_edges),
        "readout_error": _compact(device.readout_error[q] for q in range(device.num_qubits)),
    }


def serialize_device(device: DeviceModel) -> str:
    data = device_to_dict(device)
    lines = ["{"]
    items = []
    for key, value in data.items():
        if key == "coupling_edges":
            body = ", ".join(json.dumps(e) for e in value)
            items.append(f'  "{key}": [{body}]')
        else:
            items.append(f'  "{key}": {json.dumps(value)}')
    lines.append(",\n".join(items))
    lines.append("}")
    return "\n".join(lines) + "\n"


def mock_device_path(name: str):
    if name not in MOCK_DEVICES:
        raise UnknownDevice(f"unknown device {name!r}; expected one of {', '.join(MOCK_DEVICES)}", "name")
    return resources.files("appcomp") / "devices" / f"{name}.json"


def mock_device(name: str) -> DeviceModel:
    path = mock_device_path(name)
    return device_from_dict(json.loads(path.read_text()))


def resolve_device(spec: str) -> DeviceModel:
    """Mock device name or path to a device file."""
    if spec in MOCK_DEVICES:
        return mock_device(spec)
    return load_device(spec)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    non_native: tuple[tuple[int, Instruction], ...] = ()
    disconnected: tuple[tuple[int, Instruction], ...] = ()

    @property
    def ok(self) -> bool:
        return not self.non_native and not self.disconnected

    def __bool__(self):
        # truthy when there is something to report
        return not self.ok


def validate_executable(circuit: QuantumCircuit, device: DeviceModel) -> ValidationReport:
    non_native = []
    disconnected = []
    for idx, inst in enumerate(circuit.instructions):
        if not inst.kind.unitary:
            continue
        if inst.kind not in device.native_gates:
            non_native.append((idx, inst))
        if inst.is_two_qubit():
            a, b = inst.qubits
            if max(a, b) >= device.num_qubits or not device.coupled(a, b):
                disconnected.append((idx, inst))
    return ValidationReport(tuple(non_native), tuple(disconnected))
