"""Shared fixtures: random circuits, permutation matrices, toy devices."""
from __future__ import annotations

import math

import numpy as np

from appcomp.circuit import Gate, Instruction, QuantumCircuit
from appcomp.device import DeviceModel

ONE_Q = (Gate.H, Gate.X, Gate.SX, Gate.ID, Gate.RZ, Gate.RY)
TWO_Q = (Gate.CX, Gate.SWAP)
SPECIAL_ANGLES = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2, 2 * math.pi, -math.pi / 2)


def random_circuit(rng: np.random.Generator, n: int, length: int, two_qubit_fraction: float = 0.35,
                   measure: bool = False) -> QuantumCircuit:
    """Bound random circuit; angles mix special values (so passes fire) with generic ones."""
    out = []
    for _ in range(length):
        if n >= 2 and rng.random() < two_qubit_fraction:
            a, b = (int(q) for q in rng.choice(n, size=2, replace=False))
            out.append(Instruction(TWO_Q[int(rng.integers(len(TWO_Q)))], (a, b)))
        else:
            kind = ONE_Q[int(rng.integers(len(ONE_Q)))]
            q = int(rng.integers(n))
            angle = None
            if kind.parametric:
                angle = float(rng.choice(SPECIAL_ANGLES)) if rng.random() < 0.5 else float(rng.uniform(-7, 7))
            out.append(Instruction(kind, (q,), angle))
    if measure:
        out += [Instruction(Gate.MEASURE, (q,)) for q in range(n)]
    return QuantumCircuit(n, tuple(out))


def permutation_matrix(perm, n: int) -> np.ndarray:
    """Basis permutation moving the bit on wire p to wire perm[p] (qubit 0 = least significant)."""
    d = 2**n
    P = np.zeros((d, d))
    for i in range(d):
        j = 0
        for p in range(n):
            if (i >> p) & 1:
                j |= 1 << perm[p]
        P[j, i] = 1.0
    return P


def toy_device(n: int, edges=None, natives=None, e1=0.0, e2=0.0, ro=0.0, name="toy") -> DeviceModel:
    if edges is None:
        edges = [(a, b) for a in range(n) for b in range(a + 1, n)]
    if natives is None:
        natives = [g for g in Gate if g.unitary]
    edges = [tuple(sorted(e)) for e in edges]
    return DeviceModel(name, n, tuple(edges), frozenset(natives), {q: e1 for q in range(n)},
                       {e: e2 for e in edges}, {q: ro for q in range(n)})


def bfs_distance(edges, n, a, b) -> float:
    """Independent all-pairs oracle via Floyd-Warshall."""
    d = np.full((n, n), math.inf)
    np.fill_diagonal(d, 0)
    for x, y in edges:
        d[x, y] = d[y, x] = 1
    for k in range(n):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    return d[a, b]
