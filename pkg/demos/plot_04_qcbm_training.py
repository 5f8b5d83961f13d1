"""
Training a circuit Born machine
===============================

Learn the X-shaped distribution on a 4x4 grid with a 4-qubit ansatz,
first on an ideal simulator, then compiled for noisy quito.
"""

import math

from appcomp.device import mock_device
from appcomp.qcbm import AnsatzSpec, build_ansatz, initial_kl, make_x_target, min_kl, train
from appcomp.search import preset_sequence, run_sequence

target = make_x_target(4, 4)
print("target support (row, col):", [divmod(i, 4) for i in target.support])

spec = AnsatzSpec(num_qubits=4, num_layers=3)
ansatz = build_ansatz(spec)

# all angles zero gives the uniform superposition
print("initial KL:", initial_kl(ansatz, target, param_names=spec.param_names), "ln 2 =", math.log(2))

ideal = train(ansatz, target, None, epochs=150, seed=0, param_names=spec.param_names)
print(f"ideal, 150 epochs: {min_kl(ideal):.2e}")

quito = mock_device("quito")
compiled = run_sequence(ansatz, quito, preset_sequence("o1")).circuit
noisy = train(compiled, target, quito, epochs=60, seed=0, param_names=spec.param_names)
for r in noisy[::10]:
    print(f"epoch {r.epoch:3d}  best {r.best_kl:.4f}  population median {r.pop_median:.4f}")
