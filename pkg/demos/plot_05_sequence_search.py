"""
Searching pass sequences
========================

Compare the fixed presets with beam search and Q-learning, scored by
two-qubit gate count, on the four-qubit example circuit.
"""

from appcomp.circuit import Layout, build_fig1_circuit
from appcomp.device import mock_device
from appcomp.fom import FigureOfMeritSpec
from appcomp.search import BeamStrategy, RLStrategy, optimize_sequence, run_baseline

quito = mock_device("quito")
circuit = build_fig1_circuit()
fom = FigureOfMeritSpec("two_qubit_count")

for preset in ("o1", "o3"):
    r = run_baseline(preset, circuit, quito, fom, seed=0)
    print(f"{preset}: {-r.reward:.0f} two-qubit gates via {' > '.join(r.history)}")

best, trace = optimize_sequence(BeamStrategy(4), circuit, quito, fom, seed=0)
print(f"beam(4): {-best.reward:.0f} via {' > '.join(best.history)}  ({sum(t.terminal for t in trace)} terminals)")

best, trace = optimize_sequence(RLStrategy(episodes=100), circuit, quito, fom, seed=0)
print(f"q-learning: {-best.reward:.0f} via {' > '.join(best.history)}")

# exhaustive search with the hand-picked layout available as an action
pinned = Layout.from_dict({3: 1, 1: 2, 0: 3, 2: 4})
best, _ = optimize_sequence(BeamStrategy(None), circuit, quito, fom, seed=0, max_steps=8, layout_seeds=(),
                            fixed_layouts=(pinned,))
print(f"exhaustive, pinned layout: {-best.reward:.0f}")
