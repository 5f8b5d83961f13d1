"""
CMA-ES on two textbook functions
================================
"""

import numpy as np

from appcomp.cmaes import Candidate, ask, cmaes_init, optimize, tell


def rosenbrock(x):
    return float(100 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2)


res = optimize(rosenbrock, np.array([-1.2, 1.0]), sigma0=0.5, budget=20000, seed=0, ftarget=1e-12)
print("rosenbrock:", res.fitness, "after", res.evaluations, "evaluations at", res.theta)

# the same loop written out with ask/tell
state = cmaes_init(np.ones(5), 0.5, seed=1)
for generation in range(200):
    xs = ask(state)
    state = tell(state, [Candidate(x, float(x @ x)) for x in xs])
    if generation % 40 == 0:
        print(f"gen {generation:3d}  sigma {state.sigma:.2e}  |mean| {np.linalg.norm(state.mean):.2e}")
