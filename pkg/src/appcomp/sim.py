"""Statevector and density-matrix simulation.

Outcome distributions are over classical bits: bit k holds the result of the
k-th MEASURE instruction. A circuit without MEASURE is read out on all of its
qubits (bit k = qubit k).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .circuit import QuantumCircuit, apply_matrix, gate_matrix, instruction_matrix
from .device import DeviceModel, edge, validate_executable
from .errors import NotExecutable, TooLarge, UnboundSymbol, ValidationError

MAX_IDEAL_QUBITS = 12
MAX_NOISY_QUBITS = 10


@dataclass(frozen=True, eq=False)
class Distribution:
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 1 or p.size == 0 or p.size & (p.size - 1):
            raise ValidationError("length must be a power of two", "probabilities")
        if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
            raise ValidationError("not a probability vector", "probabilities")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    @property
    def num_outcomes(self) -> int:
        return self.probabilities.size

    @property
    def num_bits(self) -> int:
        return self.probabilities.size.bit_length() - 1

    def __getitem__(self, outcome: int) -> float:
        return float(self.probabilities[outcome])

    def __eq__(self, other):
        return isinstance(other, Distribution) and np.array_equal(self.probabilities, other.probabilities)

    def total_variation(self, other: Distribution) -> float:
        return 0.5 * float(np.abs(self.probabilities - other.probabilities).sum())

    @classmethod
    def uniform(cls, num_bits: int) -> Distribution:
        return cls(np.full(2**num_bits, 1.0 / 2**num_bits))

    @classmethod
    def point(cls, num_bits: int, outcome: int) -> Distribution:
        p = np.zeros(2**num_bits)
        p[outcome] = 1.0
        return cls(p)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["outcome", "probability"])
        width = self.num_bits
        for i, p in enumerate(self.probabilities):
            w.writerow([format(i, f"0{width}b") if width else "0", repr(float(p))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> Distribution:
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["outcome", "probability"]:
            raise ValidationError("bad header", "csv")
        probs = [float(r[1]) for r in rows[1:]]
        idx = [int(r[0], 2) for r in rows[1:]]
        if idx != list(range(len(probs))):
            raise ValidationError("outcomes must be complete and ascending", "csv")
        return cls(np.array(probs))


def _readout_bits(circuit: QuantumCircuit) -> list[int]:
    measured = circuit.measured_qubits()
    return measured if measured else list(range(circuit.num_qubits))


def _compact(circuit: QuantumCircuit, keep: list[int]):
    """Relabel ``keep`` (sorted physical qubits) as 0..k-1."""
    index = {q: i for i, q in enumerate(keep)}
    ops = [(inst, tuple(index[q] for q in inst.qubits)) for inst in circuit.instructions
           if inst.kind.unitary]
    return ops, index


def _marginal(probs: np.ndarray, n: int, bits: list[int]) -> np.ndarray:
    """Distribution over ``bits`` (bit k <- qubit bits[k]) from a full n-qubit vector."""
    t = probs.reshape((2,) * n)
    keep_axes = [n - 1 - q for q in reversed(bits)]
    drop = tuple(ax for ax in range(n) if ax not in keep_axes)
    t = t.sum(axis=drop) if drop else t
    remaining = [ax for ax in range(n) if ax in keep_axes]
    t = np.transpose(t, [remaining.index(ax) for ax in keep_axes])
    return np.ascontiguousarray(t).reshape(-1)


def simulate_ideal(circuit: QuantumCircuit) -> Distribution:
    if circuit.free_symbols:
        raise UnboundSymbol(f"unbound symbols: {sorted(circuit.free_symbols)}")
    bits = _readout_bits(circuit)
    keep = sorted({q for inst in circuit.instructions if inst.kind.unitary for q in inst.qubits} | set(bits))
    n = len(keep)
    if n > MAX_IDEAL_QUBITS:
        raise TooLarge(f"{n} active qubits exceeds the statevector limit {MAX_IDEAL_QUBITS}")
    ops, index = _compact(circuit, keep)
    psi = np.zeros((2,) * n, dtype=complex)
    psi[(0,) * n] = 1.0
    for inst, qs in ops:
        psi = apply_matrix(psi, instruction_matrix(inst), qs, n)
    probs = np.abs(psi.reshape(-1)) ** 2
    probs /= probs.sum()
    return Distribution(_marginal(probs, n, [index[q] for q in bits]))


# ---------------------------------------------------------------------------
# density matrices: tensor of shape (2,)*2n, ket axis of qubit q is n-1-q,
# bra axis is 2n-1-q


def _apply_unitary(rho: np.ndarray, u: np.ndarray, qubits, n: int) -> np.ndarray:
    rho = apply_matrix(rho, u, qubits, n)
    k = len(qubits)
    g = np.conj(u).reshape((2,) * (2 * k))
    axes = [2 * n - 1 - q for q in qubits]
    out = np.tensordot(g, rho, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def depolarize(rho: np.ndarray, qubits, p: float, n: int) -> np.ndarray:
    """rho -> (1-p) rho + p * (I/d on ``qubits``) (x) Tr_qubits(rho)."""
    if p == 0.0:
        return rho
    k = len(qubits)
    tgt_ket = [n - 1 - q for q in qubits]
    tgt_bra = [2 * n - 1 - q for q in qubits]
    rest_ket = [ax for ax in range(n) if ax not in tgt_ket]
    rest_bra = [ax for ax in range(n, 2 * n) if ax not in tgt_bra]
    order = rest_ket + rest_bra + tgt_ket + tgt_bra
    dr, dq = 2 ** (n - k), 2**k
    t = np.transpose(rho, order).reshape(dr, dr, dq, dq)
    reduced = np.einsum("abii->ab", t)
    mixed = reduced[:, :, None, None] * (np.eye(dq) / dq)
    mixed = np.transpose(mixed.reshape((2,) * (2 * n)), np.argsort(order))
    return (1.0 - p) * rho + p * mixed


def density_trace(rho: np.ndarray, n: int) -> complex:
    d = 2**n
    return complex(np.trace(rho.reshape(d, d)))


def _superop(u: np.ndarray, p: float) -> np.ndarray:
    """Unitary conjugation followed by depolarizing, as a (ket', bra', ket, bra) tensor."""
    dq = u.shape[0]
    k = dq.bit_length() - 1
    s = np.kron(u, np.conj(u))
    if p:
        dep = (1.0 - p) * np.eye(dq * dq)
        flat_id = np.eye(dq).reshape(-1)
        dep += (p / dq) * np.outer(flat_id, flat_id)
        s = dep @ s
    return s.reshape((2,) * (4 * k))


def _apply_superop(rho: np.ndarray, sup: np.ndarray, qubits, n: int) -> np.ndarray:
    k = len(qubits)
    axes = [n - 1 - q for q in qubits] + [2 * n - 1 - q for q in qubits]
    out = np.tensordot(sup, rho, axes=(list(range(2 * k, 4 * k)), axes))
    return np.moveaxis(out, list(range(2 * k)), axes)


class NoisyProgram:
    """A bound-or-parameterized executable circuit prepared for repeated noisy runs.

    Consecutive single-qubit gates on one qubit are fused into one unitary
    followed by one depolarizing channel with the composed strength
    1 - prod(1 - p_i); this is exact because the depolarizing channel
    commutes with unitaries acting on the same qubits.
    """

    def __init__(self, circuit: QuantumCircuit, device: DeviceModel):
        report = validate_executable(circuit, device)
        if not report.ok:
            raise NotExecutable(f"{len(report.non_native)} non-native and "
                                f"{len(report.disconnected)} uncoupled instructions on {device.name}")
        bits = _readout_bits(circuit)
        keep = sorted({q for inst in circuit.instructions if inst.kind.unitary for q in inst.qubits} | set(bits))
        n = len(keep)
        if n > MAX_NOISY_QUBITS:
            raise TooLarge(f"{n} active qubits exceeds the density-matrix limit {MAX_NOISY_QUBITS}")
        self.num_qubits = n
        self.keep = keep
        self.free_symbols = circuit.free_symbols
        index = {q: i for i, q in enumerate(keep)}
        self.readout_bits = [index[q] for q in bits]
        self.readout_flips = [device.readout_error[q] for q in bits]
        self.items: list = []
        pending: dict[int, list] = {}

        def flush(q):
            run = pending.pop(q, None)
            if not run:
                return
            insts = [inst for inst, _ in run]
            keep_prob = 1.0
            for _, p in run:
                keep_prob *= 1.0 - p
            p_total = 1.0 - keep_prob
            if all(not (i.param is not None and i.param.symbols()) for i in insts):
                self.items.append(((q,), _superop(self._product(insts, None), p_total), None, p_total))
            else:
                self.items.append(((q,), None, insts, p_total))

        for inst in circuit.instructions:
            if not inst.kind.unitary:
                continue
            qs = tuple(index[q] for q in inst.qubits)
            if len(qs) == 1:
                pending.setdefault(qs[0], []).append((inst, device.error_1q[inst.qubits[0]]))
            else:
                for q in qs:
                    flush(q)
                p = device.error_2q[edge(*inst.qubits)]
                self.items.append((qs, _superop(instruction_matrix(inst), p), None, p))
        for q in sorted(pending):
            flush(q)

    @staticmethod
    def _product(insts, values) -> np.ndarray:
        u = np.eye(2, dtype=complex)
        for inst in insts:
            if inst.param is not None:
                m = gate_matrix(inst.kind, inst.param.evaluate(values))
            else:
                m = gate_matrix(inst.kind)
            u = m @ u
        return u

    def evolve(self, values=None, on_step: Callable[[np.ndarray, int], None] | None = None) -> np.ndarray:
        missing = self.free_symbols - set(values or ())
        if missing:
            raise UnboundSymbol(f"unbound symbols: {sorted(missing)}")
        n = self.num_qubits
        rho = np.zeros((2,) * (2 * n), dtype=complex)
        rho[(0,) * (2 * n)] = 1.0
        for qs, sup, insts, p in self.items:
            if sup is None:
                sup = _superop(self._product(insts, values), p)
            rho = _apply_superop(rho, sup, qs, n)
            if on_step is not None:
                on_step(rho, n)
        return rho

    def run(self, values=None, on_step=None) -> Distribution:
        rho = self.evolve(values, on_step)
        n = self.num_qubits
        d = 2**n
        diag = np.clip(np.real(np.diagonal(rho.reshape(d, d))), 0.0, None)
        diag = diag / diag.sum()
        probs = _marginal(diag, n, self.readout_bits)
        probs = apply_readout_error(probs, self.readout_flips)
        return Distribution(probs / probs.sum())


def evolve_density(circuit: QuantumCircuit, device: DeviceModel,
                   on_step: Callable[[np.ndarray, int], None] | None = None):
    """Noisy evolution of the active qubits; returns (rho tensor, physical qubits kept)."""
    if circuit.free_symbols:
        raise UnboundSymbol(f"unbound symbols: {sorted(circuit.free_symbols)}")
    program = NoisyProgram(circuit, device)
    return program.evolve(None, on_step), program.keep


def apply_readout_error(probs: np.ndarray, flips) -> np.ndarray:
    """Independent bit-flip confusion; flips[k] is the flip probability of bit k."""
    k_bits = len(flips)
    t = probs.reshape((2,) * k_bits) if k_bits else probs
    for k, r in enumerate(flips):
        if r == 0.0:
            continue
        ax = k_bits - 1 - k
        confusion = np.array([[1.0 - r, r], [r, 1.0 - r]])
        t = np.moveaxis(np.tensordot(confusion, t, axes=([1], [ax])), 0, ax)
    return np.ascontiguousarray(t).reshape(-1)


def simulate_noisy(circuit: QuantumCircuit, device: DeviceModel,
                   on_step: Callable[[np.ndarray, int], None] | None = None) -> Distribution:
    if circuit.free_symbols:
        raise UnboundSymbol(f"unbound symbols: {sorted(circuit.free_symbols)}")
    return NoisyProgram(circuit, device).run(None, on_step)


def simulate_noisy_reference(circuit: QuantumCircuit, device: DeviceModel) -> Distribution:
    """Unfused gate-by-gate density-matrix evolution (slow; cross-checks NoisyProgram)."""
    program = NoisyProgram(circuit, device)
    n = program.num_qubits
    index = {q: i for i, q in enumerate(program.keep)}
    rho = np.zeros((2,) * (2 * n), dtype=complex)
    rho[(0,) * (2 * n)] = 1.0
    for inst in circuit.instructions:
        if not inst.kind.unitary:
            continue
        qs = tuple(index[q] for q in inst.qubits)
        rho = _apply_unitary(rho, instruction_matrix(inst), qs, n)
        p = device.error_1q[inst.qubits[0]] if len(qs) == 1 else device.error_2q[edge(*inst.qubits)]
        rho = depolarize(rho, qs, p, n)
    d = 2**n
    diag = np.clip(np.real(np.diagonal(rho.reshape(d, d))), 0.0, None)
    probs = _marginal(diag / diag.sum(), n, program.readout_bits)
    probs = apply_readout_error(probs, program.readout_flips)
    return Distribution(probs / probs.sum())


def sample(dist: Distribution, shots: int, seed) -> dict[int, int]:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, dist.probabilities)
    return {int(i): int(c) for i, c in enumerate(counts) if c}


def empirical(counts: dict[int, int], num_bits: int) -> Distribution:
    p = np.zeros(2**num_bits)
    for outcome, c in counts.items():
        p[outcome] = c
    return Distribution(p / p.sum())
