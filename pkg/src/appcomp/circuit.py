"""Circuit IR: symbolic angles, instructions, circuits, layouts.

Basis-state convention used everywhere in the package: qubit 0 is the
least-significant bit of a basis-state index. Global phase is never tracked.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Union

import numpy as np

from .errors import MissingSymbol, ParseError, TooLarge, UnboundSymbol, ValidationError

MAX_UNITARY_QUBITS = 8


class Gate(str, Enum):
    RZ = "RZ"
    SX = "SX"
    X = "X"
    ID = "ID"
    CX = "CX"
    H = "H"
    RY = "RY"
    SWAP = "SWAP"
    MEASURE = "MEASURE"
    BARRIER = "BARRIER"

    @property
    def arity(self) -> int | None:
        if self in (Gate.CX, Gate.SWAP):
            return 2
        if self is Gate.BARRIER:
            return None
        return 1

    @property
    def parametric(self) -> bool:
        return self in (Gate.RZ, Gate.RY)

    @property
    def unitary(self) -> bool:
        return self not in (Gate.MEASURE, Gate.BARRIER)


# ---------------------------------------------------------------------------
# angle expressions


@dataclass(frozen=True)
class Const:
    value: float

    def symbols(self) -> frozenset[str]:
        return frozenset()

    def evaluate(self, values: Mapping[str, float] | None = None) -> float:
        return float(self.value)


@dataclass(frozen=True)
class Symbol:
    name: str

    def symbols(self) -> frozenset[str]:
        return frozenset((self.name,))

    def evaluate(self, values: Mapping[str, float] | None = None) -> float:
        if values is None or self.name not in values:
            raise UnboundSymbol(f"symbol {self.name!r} is unbound")
        return float(values[self.name])


@dataclass(frozen=True)
class Sum:
    terms: tuple

    def symbols(self) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for t in self.terms:
            out |= t.symbols()
        return out

    def evaluate(self, values: Mapping[str, float] | None = None) -> float:
        return float(sum(t.evaluate(values) for t in self.terms))


ParamExpr = Union[Const, Symbol, Sum]


def as_expr(value) -> ParamExpr:
    if isinstance(value, (Const, Symbol, Sum)):
        return value
    if isinstance(value, str):
        return Symbol(value)
    return Const(float(value))


def _flatten(expr: ParamExpr) -> list:
    if isinstance(expr, Sum):
        out = []
        for t in expr.terms:
            out.extend(_flatten(t))
        return out
    return [expr]


def add_angles(*exprs) -> ParamExpr:
    """Sum angle expressions, folding constants and keeping symbols intact."""
    terms = []
    for e in exprs:
        terms.extend(_flatten(as_expr(e)))
    syms = [t for t in terms if isinstance(t, Symbol)]
    consts = [t.value for t in terms if isinstance(t, Const)]
    if not syms:
        total = 0.0
        for c in consts:
            total += c
        return Const(total)
    rest = list(syms)
    if consts:
        total = 0.0
        for c in consts:
            total += c
        if total != 0.0:
            rest.append(Const(total))
    if len(rest) == 1:
        return rest[0]
    return Sum(tuple(rest))


# ---------------------------------------------------------------------------
# instructions and circuits


@dataclass(frozen=True)
class Instruction:
    kind: Gate
    qubits: tuple[int, ...]
    param: ParamExpr | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Gate(self.kind))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        arity = self.kind.arity
        if arity is not None and len(self.qubits) != arity:
            raise ValidationError(f"{self.kind.value} takes {arity} qubit(s), got {self.qubits}", "qubits")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValidationError(f"repeated qubit in {self.qubits}", "qubits")
        if self.kind.parametric:
            if self.param is None:
                raise ValidationError(f"{self.kind.value} requires an angle", "param")
            object.__setattr__(self, "param", as_expr(self.param))
        elif self.param is not None:
            raise ValidationError(f"{self.kind.value} takes no angle", "param")

    def is_two_qubit(self) -> bool:
        return self.kind.arity == 2


@dataclass(frozen=True)
class QuantumCircuit:
    num_qubits: int
    instructions: tuple[Instruction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        if self.num_qubits < 0:
            raise ValidationError("negative qubit count", "num_qubits")
        measured: set[int] = set()
        for inst in self.instructions:
            for q in inst.qubits:
                if not 0 <= q < self.num_qubits:
                    raise ValidationError(f"qubit {q} out of range for {self.num_qubits} qubits", "qubits")
            if inst.kind is Gate.MEASURE:
                measured.update(inst.qubits)
            elif inst.kind.unitary and measured.intersection(inst.qubits):
                raise ValidationError(f"{inst.kind.value} on {inst.qubits} after measurement", "instructions")

    @property
    def free_symbols(self) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for inst in self.instructions:
            if inst.param is not None:
                out |= inst.param.symbols()
        return out

    def __len__(self):
        return len(self.instructions)

    def __iter__(self):
        return iter(self.instructions)

    def with_instructions(self, instructions: Iterable[Instruction], num_qubits: int | None = None) -> QuantumCircuit:
        return QuantumCircuit(self.num_qubits if num_qubits is None else num_qubits, tuple(instructions))

    def measured_qubits(self) -> list[int]:
        """Qubits in measurement order; classical bit k is the k-th MEASURE."""
        return [inst.qubits[0] for inst in self.instructions if inst.kind is Gate.MEASURE]

    def unitary_part(self) -> QuantumCircuit:
        return self.with_instructions(i for i in self.instructions if i.kind.unitary)


class CircuitBuilder:
    """Mutable helper that accumulates instructions and freezes into a circuit."""

    def __init__(self, num_qubits: int):
        self.num_qubits = num_qubits
        self._ops: list[Instruction] = []

    def add(self, kind, *qubits, param=None) -> CircuitBuilder:
        self._ops.append(Instruction(Gate(kind), tuple(qubits), param))
        return self

    def h(self, q):
        return self.add(Gate.H, q)

    def x(self, q):
        return self.add(Gate.X, q)

    def sx(self, q):
        return self.add(Gate.SX, q)

    def id(self, q):
        return self.add(Gate.ID, q)

    def rz(self, q, angle):
        return self.add(Gate.RZ, q, param=angle)

    def ry(self, q, angle):
        return self.add(Gate.RY, q, param=angle)

    def cx(self, control, target):
        return self.add(Gate.CX, control, target)

    def swap(self, a, b):
        return self.add(Gate.SWAP, a, b)

    def measure(self, q):
        return self.add(Gate.MEASURE, q)

    def measure_all(self):
        for q in range(self.num_qubits):
            self.measure(q)
        return self

    def barrier(self, *qubits):
        return self.add(Gate.BARRIER, *qubits)

    def build(self) -> QuantumCircuit:
        return QuantumCircuit(self.num_qubits, tuple(self._ops))


@dataclass(frozen=True)
class Layout:
    """Injective map from logical qubit i to physical qubit ``physical[i]``."""

    physical: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "physical", tuple(int(p) for p in self.physical))
        if len(set(self.physical)) != len(self.physical):
            raise ValidationError(f"layout {self.physical} is not injective", "layout")
        if any(p < 0 for p in self.physical):
            raise ValidationError("negative physical qubit", "layout")

    @classmethod
    def from_dict(cls, mapping: Mapping[int, int]) -> Layout:
        n = len(mapping)
        if sorted(mapping) != list(range(n)):
            raise ValidationError("layout must cover logical qubits 0..n-1", "layout")
        return cls(tuple(mapping[i] for i in range(n)))

    def as_dict(self) -> dict[int, int]:
        return dict(enumerate(self.physical))

    def __getitem__(self, logical: int) -> int:
        return self.physical[logical]

    def __len__(self):
        return len(self.physical)


# ---------------------------------------------------------------------------
# operations


def bind_parameters(circuit: QuantumCircuit, values: Mapping[str, float]) -> QuantumCircuit:
    missing = circuit.free_symbols - set(values)
    if missing:
        raise MissingSymbol(f"unbound symbols: {sorted(missing)}")
    out = []
    for inst in circuit.instructions:
        if inst.param is not None and inst.param.symbols():
            inst = Instruction(inst.kind, inst.qubits, Const(inst.param.evaluate(values)))
        out.append(inst)
    return circuit.with_instructions(out)


def gate_matrix(kind: Gate, angle: float | None = None) -> np.ndarray:
    """Matrix of a gate; two-qubit matrices index as 2*bit(first) + bit(second)."""
    if kind is Gate.RZ:
        return np.array([[np.exp(-0.5j * angle), 0], [0, np.exp(0.5j * angle)]], dtype=complex)
    if kind is Gate.RY:
        c, s = math.cos(angle / 2), math.sin(angle / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    return _FIXED[kind]


_FIXED = {
    Gate.SX: 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]]),
    Gate.X: np.array([[0, 1], [1, 0]], dtype=complex),
    Gate.ID: np.eye(2, dtype=complex),
    Gate.H: np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
    Gate.CX: np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    Gate.SWAP: np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}


def instruction_matrix(inst: Instruction) -> np.ndarray:
    if inst.param is not None:
        if inst.param.symbols():
            raise UnboundSymbol(f"symbols {sorted(inst.param.symbols())} are unbound")
        return gate_matrix(inst.kind, inst.param.evaluate())
    return gate_matrix(inst.kind)


def apply_matrix(tensor: np.ndarray, matrix: np.ndarray, qubits, num_qubits: int) -> np.ndarray:
    """Apply a k-qubit matrix to the leading ``num_qubits`` axes of ``tensor``.

    Axis ``num_qubits - 1 - q`` holds qubit q (qubit 0 = least-significant bit).
    """
    k = len(qubits)
    axes = [num_qubits - 1 - q for q in qubits]
    g = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(g, tensor, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def unitary_of(circuit: QuantumCircuit) -> np.ndarray:
    n = circuit.num_qubits
    if n > MAX_UNITARY_QUBITS:
        raise TooLarge(f"{n} qubits exceeds the {MAX_UNITARY_QUBITS}-qubit unitary limit")
    if circuit.free_symbols:
        raise UnboundSymbol(f"unbound symbols: {sorted(circuit.free_symbols)}")
    dim = 2**n
    u = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for inst in circuit.instructions:
        if inst.kind is Gate.BARRIER:
            continue
        if inst.kind is Gate.MEASURE:
            raise ValidationError("unitary_of does not accept MEASURE", "instructions")
        u = apply_matrix(u, instruction_matrix(inst), inst.qubits, n)
    return u.reshape(dim, dim)


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-9) -> bool:
    if a.shape != b.shape:
        return False
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[idx]) < atol:
        return bool(np.allclose(a, b, atol=atol))
    phase = a[idx] / b[idx]
    if abs(abs(phase) - 1) > atol:
        return False
    return bool(np.allclose(a, phase * b, atol=atol))


def count_two_qubit_gates(circuit: QuantumCircuit) -> int:
    return sum(1 for inst in circuit.instructions if inst.is_two_qubit())


def depth(circuit: QuantumCircuit) -> int:
    level = [0] * circuit.num_qubits
    for inst in circuit.instructions:
        if inst.kind is Gate.BARRIER:
            qs = inst.qubits or tuple(range(circuit.num_qubits))
            top = max((level[q] for q in qs), default=0)
            for q in qs:
                level[q] = top
            continue
        layer = max(level[q] for q in inst.qubits) + 1
        for q in inst.qubits:
            level[q] = layer
    return max(level, default=0)


def build_fig1_circuit() -> QuantumCircuit:
    """Four-qubit example circuit: RZ/H prefix, CX pairs, a symbolic RZ layer, CX pairs."""
    b = CircuitBuilder(4)
    b.rz(0, math.pi).h(0).h(1).cx(0, 2).cx(1, 3)
    for q in range(4):
        b.rz(q, Symbol(f"phi_{q}"))
    b.cx(0, 1).cx(2, 3)
    return b.build()


# ---------------------------------------------------------------------------
# text format:  header "qubits <n>", then "KIND q<i>[,q<j>] [angle|@symbol]"

_PLUS = re.compile(r"(?<![eE])\+")


def _format_expr(expr: ParamExpr) -> str:
    if isinstance(expr, Const):
        return repr(float(expr.value))
    if isinstance(expr, Symbol):
        return "@" + expr.name
    return "+".join(_format_expr(t) for t in expr.terms)


def _parse_expr(text: str) -> ParamExpr:
    parts = [p for p in _PLUS.split(text)]
    terms = []
    for p in parts:
        if p.startswith("@"):
            name = p[1:]
            if not name:
                raise ParseError(f"empty symbol name in {text!r}")
            terms.append(Symbol(name))
        else:
            try:
                terms.append(Const(float(p)))
            except ValueError as exc:
                raise ParseError(f"bad angle {p!r}") from exc
    return terms[0] if len(terms) == 1 else Sum(tuple(terms))


def circuit_to_text(circuit: QuantumCircuit) -> str:
    lines = [f"qubits {circuit.num_qubits}"]
    for inst in circuit.instructions:
        line = inst.kind.value
        if inst.qubits:
            line += " " + ",".join(f"q{q}" for q in inst.qubits)
        if inst.param is not None:
            line += " " + _format_expr(inst.param)
        lines.append(line)
    return "\n".join(lines) + "\n"


def circuit_from_text(text: str) -> QuantumCircuit:
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0].startswith("qubits"):
        raise ParseError("missing 'qubits <n>' header")
    try:
        n = int(lines[0].split()[1])
    except (IndexError, ValueError) as exc:
        raise ParseError(f"bad header {lines[0]!r}") from exc
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        try:
            kind = Gate(tokens[0].upper())
        except ValueError as exc:
            raise ParseError(f"line {lineno}: unknown gate {tokens[0]!r}") from exc
        qubits: tuple[int, ...] = ()
        rest = tokens[1:]
        if rest and rest[0].startswith("q"):
            try:
                qubits = tuple(int(tok[1:]) for tok in rest[0].split(","))
            except ValueError as exc:
                raise ParseError(f"line {lineno}: bad qubit list {rest[0]!r}") from exc
            rest = rest[1:]
        param = _parse_expr(rest[0]) if rest else None
        if len(rest) > 1:
            raise ParseError(f"line {lineno}: trailing tokens")
        try:
            out.append(Instruction(kind, qubits, param))
        except ValidationError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
    try:
        return QuantumCircuit(n, tuple(out))
    except ValidationError as exc:
        raise ParseError(str(exc)) from exc
