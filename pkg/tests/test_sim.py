import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from appcomp.circuit import CircuitBuilder, QuantumCircuit, Symbol, unitary_of
from appcomp.device import mock_device
from appcomp.errors import NotExecutable, TooLarge, UnboundSymbol, ValidationError
from appcomp.sim import (Distribution, NoisyProgram, apply_readout_error, density_trace, empirical, sample,
                         simulate_ideal, simulate_noisy, simulate_noisy_reference)
from helpers import random_circuit, toy_device


def _statevector_oracle(c):
    """Probabilities from the full unitary's first column."""
    return np.abs(unitary_of(c)[:, 0]) ** 2


# -- Distribution ---------------------------------------------------------------------

def test_distribution_invariants():
    with pytest.raises(ValidationError):
        Distribution([0.5, 0.5, 0.0])
    with pytest.raises(ValidationError):
        Distribution([0.7, 0.7])
    with pytest.raises(ValidationError):
        Distribution([1.2, -0.2])
    d = Distribution.uniform(3)
    assert d.num_bits == 3 and d.num_outcomes == 8


def test_distribution_csv_roundtrip():
    d = Distribution([0.125, 0.375, 0.25, 0.25])
    assert d.to_csv().splitlines()[0] == "outcome,probability"
    assert Distribution.from_csv(d.to_csv()) == d


# -- ideal ----------------------------------------------------------------------------

def test_ideal_basics():
    assert np.allclose(simulate_ideal(CircuitBuilder(1).h(0).build()).probabilities, [0.5, 0.5])
    assert simulate_ideal(QuantumCircuit(2)) == Distribution.point(2, 0)
    hhhh = CircuitBuilder(4).h(0).h(1).h(2).h(3).build()
    assert np.allclose(simulate_ideal(hhhh).probabilities, np.full(16, 1 / 16))


def test_ideal_matches_unitary_oracle():
    rng = np.random.default_rng(5)
    for _ in range(30):
        n = int(rng.integers(1, 6))
        c = random_circuit(rng, n, 15)
        assert np.allclose(simulate_ideal(c).probabilities, _statevector_oracle(c), atol=1e-12)


def test_measure_order_defines_classical_bits():
    # X on q1 only; measuring q1 first puts it into classical bit 0
    c = CircuitBuilder(2).x(1).measure(1).measure(0).build()
    assert simulate_ideal(c) == Distribution.point(2, 1)


def test_ideal_rejects_unbound():
    with pytest.raises(UnboundSymbol):
        simulate_ideal(CircuitBuilder(1).rz(0, Symbol("a")).build())


# -- noisy ----------------------------------------------------------------------------

def test_zero_noise_equals_ideal_100_circuits():
    rng = np.random.default_rng(11)
    for n_case in range(100):
        n = int(rng.integers(1, 6))
        dev = toy_device(n)
        c = random_circuit(rng, n, int(rng.integers(0, 16)))
        traces = []
        purities = []

        def watch(rho, nq):
            d = 2**nq
            m = rho.reshape(d, d)
            traces.append(abs(np.trace(m) - 1))
            purities.append(np.real(np.trace(m @ m)))

        noisy = simulate_noisy(c, dev, on_step=watch)
        assert noisy.total_variation(simulate_ideal(c)) < 1e-10, n_case
        assert all(t < 1e-10 for t in traces)
        assert all(p <= 1 + 1e-9 for p in purities)


def test_trace_and_purity_with_noise():
    rng = np.random.default_rng(12)
    for _ in range(30):
        n = int(rng.integers(1, 6))
        dev = toy_device(n, e1=0.01, e2=0.05, ro=0.03)
        c = random_circuit(rng, n, 14)
        seen = []
        simulate_noisy(c, dev, on_step=lambda rho, nq: seen.append(rho.copy()))
        for rho in seen:
            d = 2 ** (rho.ndim // 2)
            m = rho.reshape(d, d)
            assert abs(np.trace(m) - 1) < 1e-10
            assert np.real(np.trace(m @ m)) <= 1 + 1e-9
            assert np.allclose(m, m.conj().T, atol=1e-12)


def test_readout_closed_form():
    dev = toy_device(1, ro=0.02)
    d = simulate_noisy(CircuitBuilder(1).x(0).build(), dev)
    assert d[1] == pytest.approx(0.98, abs=1e-12)
    assert d[0] == pytest.approx(0.02, abs=1e-12)


def test_readout_two_bits_closed_form():
    r0, r1 = 0.1, 0.2
    p = apply_readout_error(np.array([1.0, 0, 0, 0]), [r0, r1])
    assert np.allclose(p, [(1 - r0) * (1 - r1), r0 * (1 - r1), (1 - r0) * r1, r0 * r1])


def test_full_depolarizing_gives_uniform_marginal():
    dev = toy_device(2, e1=0.999999999999)
    d = simulate_noisy(CircuitBuilder(2).x(0).measure(0).build(), dev)
    assert np.allclose(d.probabilities, [0.5, 0.5], atol=1e-9)


def test_depolarizing_closed_form_on_x():
    # X then depolarize(p) on one qubit: P(1) = 1 - p/2
    p = 0.3
    d = simulate_noisy(CircuitBuilder(1).x(0).build(), toy_device(1, e1=p))
    assert d[1] == pytest.approx(1 - p / 2, abs=1e-12)


def test_fused_program_matches_unfused_reference():
    rng = np.random.default_rng(13)
    for _ in range(20):
        n = int(rng.integers(1, 5))
        dev = toy_device(n, e1=0.02, e2=0.07, ro=0.04)
        c = random_circuit(rng, n, 16, measure=bool(rng.integers(2)))
        a, b = simulate_noisy(c, dev), simulate_noisy_reference(c, dev)
        assert a.total_variation(b) < 1e-12


def test_noisy_program_binds_symbols():
    dev = toy_device(1, e1=0.01)
    c = CircuitBuilder(1).ry(0, Symbol("t")).build()
    prog = NoisyProgram(c, dev)
    from appcomp.circuit import bind_parameters
    for t in (0.0, 0.7, math.pi):
        expected = simulate_noisy(bind_parameters(c, {"t": t}), dev)
        assert prog.run({"t": t}).total_variation(expected) < 1e-12
    with pytest.raises(UnboundSymbol):
        prog.run({})


def test_noisy_requires_executable_and_size_limit():
    with pytest.raises(NotExecutable):
        simulate_noisy(CircuitBuilder(5).h(0).build(), mock_device("quito"))
    big = toy_device(11)
    with pytest.raises(TooLarge):
        simulate_noisy(CircuitBuilder(11).x(0).x(10).cx(0, 10).x(5).x(1).x(2).x(3).x(4).x(6).x(7).x(8).x(9)
                       .build(), big)


def test_density_trace_helper():
    rho = np.zeros((2, 2), dtype=complex)
    rho[0, 0] = 1
    assert density_trace(rho, 1) == 1


# -- sampling ----------------------------------------------------------------------------

def test_sample_point_mass_and_determinism():
    assert sample(Distribution.point(2, 3), 100, seed=1) == {3: 100}
    d = Distribution.uniform(3)
    assert sample(d, 500, seed=9) == sample(d, 500, seed=9)


def test_sample_uniform_within_five_sigma():
    shots, p = 10**6, 0.25
    counts = sample(Distribution.uniform(2), shots, seed=2024)
    sigma = math.sqrt(shots * p * (1 - p))
    for k in range(4):
        assert abs(counts[k] - shots * p) < 5 * sigma


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), shots=st.integers(1, 5000))
def test_empirical_is_a_distribution(seed, shots):
    d = Distribution(np.random.default_rng(seed).dirichlet(np.ones(8)))
    counts = sample(d, shots, seed)
    assert sum(counts.values()) == shots
    e = empirical(counts, 3)
    assert e.num_bits == 3 and abs(e.probabilities.sum() - 1) < 1e-12
