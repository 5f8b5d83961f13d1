"""
Ideal and noisy simulation
==========================

A GHZ-style circuit on nairobi, simulated exactly and with the device's
depolarizing and readout noise.
"""

import numpy as np

from appcomp.circuit import CircuitBuilder
from appcomp.device import mock_device
from appcomp.fom import expected_fidelity, histogram_intersection
from appcomp.passes import route, translate_to_native, trivial_layout
from appcomp.sim import sample, simulate_ideal, simulate_noisy

nairobi = mock_device("nairobi")
ghz = CircuitBuilder(3).h(0).cx(0, 1).cx(1, 2).measure_all().build()

routed, _ = route(ghz, nairobi, trivial_layout(ghz, nairobi))
compiled, _ = translate_to_native(routed, nairobi.native_gates)

ideal = simulate_ideal(ghz)
noisy = simulate_noisy(compiled, nairobi)
np.set_printoptions(precision=4, suppress=True)
print("ideal:", ideal.probabilities)
print("noisy:", noisy.probabilities)

# two scalar summaries of the damage
print("expected fidelity     :", round(expected_fidelity(compiled, nairobi), 4))
print("histogram intersection:", round(histogram_intersection(noisy, ideal), 4))

# finite shots
counts = sample(noisy, 1000, seed=7)
print("1000 shots:", {format(k, "03b"): v for k, v in sorted(counts.items())})
