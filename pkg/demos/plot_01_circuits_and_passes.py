"""
Circuits, devices and compilation passes
========================================

Build the four-qubit example circuit, push it through the passes by hand
and watch the gate counts change.
"""

import math

from appcomp.circuit import Layout, build_fig1_circuit, circuit_to_text, count_two_qubit_gates, depth
from appcomp.device import mock_device, validate_executable
from appcomp.passes import merge_rz, route, translate_to_native

quito = mock_device("quito")
print("quito edges:", quito.coupling_edges)

circuit = build_fig1_circuit()
print(circuit_to_text(circuit))

# H is not native on quito, so translation rewrites it as RZ-SX-RZ
native, rep = translate_to_native(circuit, quito.native_gates)
print("after translate:", rep.instructions_before, "->", rep.instructions_after, "instructions")

# the leading RZ(pi) now sits next to an RZ(pi/2) and the two merge
merged, _ = merge_rz(native)
first = merged.instructions[0]
print("first gate on q0:", first.kind.value, first.param.evaluate() / math.pi, "* pi")

# logical q3 on physical 1, q1 on 2, q0 on 3, q2 on 4
layout = Layout.from_dict({3: 1, 1: 2, 0: 3, 2: 4})
routed, rep = route(merged, quito, layout)
print("SWAPs inserted:", rep.swaps_inserted, " final layout:", rep.final_layout.physical)

final, _ = translate_to_native(routed, quito.native_gates)
print("two-qubit gates:", count_two_qubit_gates(final), " depth:", depth(final))
print("executable on quito:", validate_executable(final, quito).ok)
