"""Compilation passes: native-gate translation, peephole optimization,
layout selection and SWAP routing.

Every pass is a pure function. Circuit-to-circuit passes return the new
circuit together with a :class:`PassReport`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import (Const, Gate, Instruction, Layout, QuantumCircuit, add_angles,
                      count_two_qubit_gates)
from .device import DeviceModel
from .errors import DisconnectedDevice, TooManyQubits, UnsupportedGate, ValidationError

PASS_NAMES = (
    "translate", "merge_rz", "drop_id_rz", "cancel_pairs",
    "layout_trivial", "layout_random", "layout_greedy", "route",
)
# pinned layout supplied by the caller, e.g. a hand-chosen initial mapping
FIXED_LAYOUT = "layout_fixed"

HALF_PI = math.pi / 2
TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class PassReport:
    name: str
    instructions_before: int
    instructions_after: int
    two_qubit_before: int
    two_qubit_after: int
    swaps_inserted: int = 0
    initial_layout: Layout | None = None
    # physical qubit p's content ends on physical qubit final_permutation[p]
    final_permutation: tuple[int, ...] | None = None
    final_layout: Layout | None = None

    def as_dict(self) -> dict:
        out = {
            "name": self.name,
            "instructions_before": self.instructions_before,
            "instructions_after": self.instructions_after,
            "two_qubit_before": self.two_qubit_before,
            "two_qubit_after": self.two_qubit_after,
            "swaps_inserted": self.swaps_inserted,
        }
        if self.final_layout is not None:
            out["initial_layout"] = list(self.initial_layout.physical)
            out["final_layout"] = list(self.final_layout.physical)
        return out


def _report(name, before: QuantumCircuit, after: QuantumCircuit, **extra) -> PassReport:
    return PassReport(name, len(before), len(after), count_two_qubit_gates(before),
                      count_two_qubit_gates(after), **extra)


# ---------------------------------------------------------------------------
# synthesis


def _decompose(inst: Instruction, native) -> list[Instruction]:
    kind = inst.kind
    if kind in native or not kind.unitary:
        return [inst]
    q = inst.qubits
    if kind is Gate.H:
        out = [Instruction(Gate.RZ, q, Const(HALF_PI)), Instruction(Gate.SX, q),
               Instruction(Gate.RZ, q, Const(HALF_PI))]
    elif kind is Gate.RY:
        # RY(t) == RZ(pi) SX RZ(t + pi) SX up to global phase; t lives in one slot
        out = [Instruction(Gate.SX, q), Instruction(Gate.RZ, q, add_angles(inst.param, math.pi)),
               Instruction(Gate.SX, q), Instruction(Gate.RZ, q, Const(math.pi))]
    elif kind is Gate.SWAP:
        a, b = q
        out = [Instruction(Gate.CX, (a, b)), Instruction(Gate.CX, (b, a)), Instruction(Gate.CX, (a, b))]
    elif kind is Gate.X:
        out = [Instruction(Gate.SX, q), Instruction(Gate.SX, q)]
    elif kind is Gate.ID:
        out = []
    else:
        raise UnsupportedGate(f"no rule to express {kind.value} in {sorted(g.value for g in native)}")
    result = []
    for sub in out:
        if sub.kind not in native:
            if sub.kind is kind:
                raise UnsupportedGate(f"no rule to express {kind.value}")
            result.extend(_decompose(sub, native))
        else:
            result.append(sub)
    return result


def translate_to_native(circuit: QuantumCircuit, native_gates) -> tuple[QuantumCircuit, PassReport]:
    native = frozenset(Gate(g) for g in native_gates)
    out: list[Instruction] = []
    for inst in circuit.instructions:
        out.extend(_decompose(inst, native))
    result = circuit.with_instructions(out)
    return result, _report("translate", circuit, result)


# ---------------------------------------------------------------------------
# peephole optimization


def merge_rz(circuit: QuantumCircuit) -> tuple[QuantumCircuit, PassReport]:
    out: list[Instruction | None] = []
    last: dict[int, int] = {}
    for inst in circuit.instructions:
        qubits = inst.qubits or tuple(range(circuit.num_qubits))
        if inst.kind is Gate.RZ:
            q = inst.qubits[0]
            prev = last.get(q)
            if prev is not None and out[prev].kind is Gate.RZ:
                out[prev] = Instruction(Gate.RZ, (q,), add_angles(out[prev].param, inst.param))
                continue
        out.append(inst)
        for q in qubits:
            last[q] = len(out) - 1
    result = circuit.with_instructions(out)
    return result, _report("merge_rz", circuit, result)


def _is_identity_angle(angle: float, tol: float) -> bool:
    r = math.fmod(angle, TWO_PI)
    if r < 0:
        r += TWO_PI
    return min(r, TWO_PI - r) <= tol


def drop_identity_rz(circuit: QuantumCircuit, tol: float = 1e-9) -> tuple[QuantumCircuit, PassReport]:
    if tol < 0:
        raise ValueError("tol must be non-negative")
    out = [
        inst for inst in circuit.instructions
        if not (inst.kind is Gate.RZ and not inst.param.symbols()
                and _is_identity_angle(inst.param.evaluate(), tol))
    ]
    result = circuit.with_instructions(out)
    return result, _report("drop_id_rz", circuit, result)


_SELF_INVERSE = frozenset({Gate.CX, Gate.X, Gate.H, Gate.SWAP})


def cancel_inverse_pairs(circuit: QuantumCircuit) -> tuple[QuantumCircuit, PassReport]:
    """Remove adjacent self-inverse pairs; the stack walk reaches the fixpoint in one sweep."""
    out: list[Instruction | None] = []
    stacks: dict[int, list[int]] = {q: [] for q in range(circuit.num_qubits)}
    for inst in circuit.instructions:
        qubits = inst.qubits or tuple(range(circuit.num_qubits))
        if inst.kind in _SELF_INVERSE:
            tops = {stacks[q][-1] if stacks[q] else None for q in qubits}
            if len(tops) == 1:
                k = tops.pop()
                if k is not None and out[k] == inst:
                    out[k] = None
                    for q in qubits:
                        stacks[q].pop()
                    continue
        out.append(inst)
        for q in qubits:
            stacks[q].append(len(out) - 1)
    result = circuit.with_instructions(i for i in out if i is not None)
    return result, _report("cancel_pairs", circuit, result)


# ---------------------------------------------------------------------------
# layout


def _check_fits(circuit: QuantumCircuit, device: DeviceModel):
    if circuit.num_qubits > device.num_qubits:
        raise TooManyQubits(f"{circuit.num_qubits} logical qubits do not fit on {device.name} "
                            f"({device.num_qubits} qubits)")


def trivial_layout(circuit: QuantumCircuit, device: DeviceModel) -> Layout:
    _check_fits(circuit, device)
    return Layout(tuple(range(circuit.num_qubits)))


def random_layout(circuit: QuantumCircuit, device: DeviceModel, seed) -> Layout:
    _check_fits(circuit, device)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(device.num_qubits)
    return Layout(tuple(int(p) for p in perm[:circuit.num_qubits]))


def interaction_degree(circuit: QuantumCircuit) -> list[int]:
    deg = [0] * circuit.num_qubits
    for inst in circuit.instructions:
        if inst.is_two_qubit():
            for q in inst.qubits:
                deg[q] += 1
    return deg


def greedy_layout(circuit: QuantumCircuit, device: DeviceModel) -> Layout:
    _check_fits(circuit, device)
    deg = interaction_degree(circuit)
    logical = sorted(range(circuit.num_qubits), key=lambda q: (-deg[q], q))
    physical = sorted(range(device.num_qubits), key=lambda p: (-device.degree(p), p))
    mapping = dict(zip(logical, physical))
    return Layout(tuple(mapping[q] for q in range(circuit.num_qubits)))


def check_layout(layout: Layout, circuit: QuantumCircuit, device: DeviceModel):
    if len(layout) != circuit.num_qubits:
        raise ValidationError(f"layout covers {len(layout)} qubits, circuit has {circuit.num_qubits}", "layout")
    if any(p >= device.num_qubits for p in layout.physical):
        raise ValidationError(f"layout {layout.physical} exceeds {device.name}", "layout")


def apply_layout(circuit: QuantumCircuit, layout: Layout, num_physical: int) -> QuantumCircuit:
    """Relabel logical qubits as physical ones without inserting any SWAP."""
    out = [Instruction(i.kind, tuple(layout[q] for q in i.qubits), i.param) for i in circuit.instructions]
    return QuantumCircuit(num_physical, tuple(out))


# ---------------------------------------------------------------------------
# routing


def route(circuit: QuantumCircuit, device: DeviceModel, layout: Layout) -> tuple[QuantumCircuit, PassReport]:
    """Greedy shortest-path SWAP insertion with a one-gate look-ahead.

    Gates are processed in program order. When a two-qubit gate acts on
    uncoupled physical qubits, SWAPs are inserted one at a time; each SWAP
    moves one endpoint one hop closer to the other. Among those candidates
    the one leaving the next two-qubit gate closest is chosen, then the
    smallest physical edge.
    """
    check_layout(layout, circuit, device)
    n_phys = device.num_qubits
    l2p = list(layout.physical)
    p2l = [-1] * n_phys
    for lq, pq in enumerate(l2p):
        p2l[pq] = lq
    content = list(range(n_phys))  # content[p] = initial position of whatever sits on p now
    insts = circuit.instructions
    # index of the next two-qubit gate after position i
    next_2q = [None] * (len(insts) + 1)
    for i in range(len(insts) - 1, -1, -1):
        next_2q[i] = i if insts[i].is_two_qubit() else next_2q[i + 1]

    out: list[Instruction] = []
    swaps = 0

    def do_swap(x, y):
        nonlocal swaps
        out.append(Instruction(Gate.SWAP, (x, y) if x < y else (y, x)))
        swaps += 1
        lx, ly = p2l[x], p2l[y]
        p2l[x], p2l[y] = ly, lx
        if lx >= 0:
            l2p[lx] = y
        if ly >= 0:
            l2p[ly] = x
        content[x], content[y] = content[y], content[x]

    for i, inst in enumerate(insts):
        if inst.is_two_qubit():
            a, b = inst.qubits
            look = next_2q[i + 1]
            while True:
                pa, pb = l2p[a], l2p[b]
                dist = device.distance(pa, pb)
                if dist == math.inf:
                    raise DisconnectedDevice(f"physical qubits {pa} and {pb} are not connected on {device.name}")
                if dist <= 1:
                    break
                best = None
                for p, other in ((pa, pb), (pb, pa)):
                    for nb in device.neighbors(p):
                        if device.distance(nb, other) >= dist:
                            continue
                        score = 0.0
                        if look is not None:
                            la, lb = insts[look].qubits
                            xa, xb = l2p[la], l2p[lb]
                            xa = nb if xa == p else p if xa == nb else xa
                            xb = nb if xb == p else p if xb == nb else xb
                            score = device.distance(xa, xb)
                        key = (score, min(p, nb), max(p, nb))
                        if best is None or key < best[0]:
                            best = (key, p, nb)
                do_swap(best[1], best[2])
            out.append(Instruction(inst.kind, (l2p[a], l2p[b]), inst.param))
        elif inst.kind is Gate.BARRIER and not inst.qubits:
            out.append(inst)
        else:
            out.append(Instruction(inst.kind, tuple(l2p[q] for q in inst.qubits), inst.param))

    perm = [0] * n_phys
    for p, origin in enumerate(content):
        perm[origin] = p
    result = QuantumCircuit(n_phys, tuple(out))
    report = _report("route", circuit, result, swaps_inserted=swaps, initial_layout=layout,
                     final_permutation=tuple(perm), final_layout=Layout(tuple(l2p)))
    return result, report
