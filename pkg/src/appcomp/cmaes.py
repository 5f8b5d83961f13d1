"""Covariance matrix adaptation evolution strategy (minimisation).

Strategy constants follow the widely published default parameterisation
(Hansen's CMA-ES tutorial):

=============  ==========================================================
lambda         4 + floor(3 ln d)
mu             floor(lambda / 2)
w_i            ln((lambda + 1) / 2) - ln i, normalised to sum 1
mu_eff         1 / sum w_i^2
c_sigma        (mu_eff + 2) / (d + mu_eff + 5)
d_sigma        1 + 2 max(0, sqrt((mu_eff - 1) / (d + 1)) - 1) + c_sigma
c_c            (4 + mu_eff / d) / (d + 4 + 2 mu_eff / d)
c_1            2 / ((d + 1.3)^2 + mu_eff)
c_mu           min(1 - c_1, 2 (mu_eff - 2 + 1/mu_eff) / ((d + 2)^2 + mu_eff))
chi_d          sqrt(d) (1 - 1/(4d) + 1/(21 d^2))
=============  ==========================================================
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BadDimension, BadPopulation, BadSigma, NonFiniteFitness, WrongPopulationSize


@dataclass
class Candidate:
    theta: np.ndarray
    fitness: float


@dataclass
class CmaesState:
    mean: np.ndarray
    sigma: float
    cov: np.ndarray
    p_sigma: np.ndarray
    p_c: np.ndarray
    popsize: int
    mu: int
    weights: np.ndarray
    mu_eff: float
    c_sigma: float
    d_sigma: float
    c_c: float
    c_1: float
    c_mu: float
    chi_d: float
    rng: np.random.Generator
    generation: int = 0
    # eigendecomposition of cov: cov = B diag(D^2) B^T
    B: np.ndarray = field(default=None, repr=False)
    D: np.ndarray = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.mean.size

    def copy(self) -> CmaesState:
        return copy.deepcopy(self)


def default_popsize(dim: int) -> int:
    return 4 + int(math.floor(3 * math.log(dim)))


def _decompose(cov: np.ndarray):
    eigvals, B = np.linalg.eigh(cov)
    eigvals = np.maximum(eigvals, 1e-300)
    return B, np.sqrt(eigvals)


def cmaes_init(x0, sigma0: float, popsize: int | None = None, seed=None) -> CmaesState:
    x0 = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    d = x0.size
    if x0.ndim != 1 or d < 1:
        raise BadDimension("x0 must be a non-empty vector")
    if not (sigma0 > 0 and math.isfinite(sigma0)):
        raise BadSigma(f"sigma0 must be positive, got {sigma0}")
    lam = default_popsize(d) if popsize is None else int(popsize)
    if lam < 2:
        raise BadPopulation("population size must be at least 2")
    mu = lam // 2
    w = math.log((lam + 1) / 2) - np.log(np.arange(1, mu + 1))
    w = w / w.sum()
    mu_eff = 1.0 / float(np.sum(w**2))
    c_sigma = (mu_eff + 2) / (d + mu_eff + 5)
    d_sigma = 1 + 2 * max(0.0, math.sqrt((mu_eff - 1) / (d + 1)) - 1) + c_sigma
    c_c = (4 + mu_eff / d) / (d + 4 + 2 * mu_eff / d)
    c_1 = 2 / ((d + 1.3) ** 2 + mu_eff)
    c_mu = min(1 - c_1, 2 * (mu_eff - 2 + 1 / mu_eff) / ((d + 2) ** 2 + mu_eff))
    chi_d = math.sqrt(d) * (1 - 1 / (4 * d) + 1 / (21 * d**2))
    cov = np.eye(d)
    B, D = _decompose(cov)
    return CmaesState(
        mean=x0, sigma=float(sigma0), cov=cov, p_sigma=np.zeros(d), p_c=np.zeros(d),
        popsize=lam, mu=mu, weights=w, mu_eff=mu_eff, c_sigma=c_sigma, d_sigma=d_sigma,
        c_c=c_c, c_1=c_1, c_mu=c_mu, chi_d=chi_d, rng=np.random.default_rng(seed), B=B, D=D,
    )


def ask(state: CmaesState) -> list[np.ndarray]:
    """Sample ``popsize`` candidates; advances the state's RNG."""
    z = state.rng.standard_normal((state.popsize, state.dim))
    y = (z * state.D) @ state.B.T
    return [state.mean + state.sigma * yi for yi in y]


def tell(state: CmaesState, candidates: Sequence[Candidate]) -> CmaesState:
    """Return the updated state; only the ranking of fitness values is used."""
    if len(candidates) != state.popsize:
        raise WrongPopulationSize(f"expected {state.popsize} candidates, got {len(candidates)}")
    fits = [float(c.fitness) for c in candidates]
    if not all(math.isfinite(f) for f in fits):
        raise NonFiniteFitness("fitness values must be finite")
    order = sorted(range(len(candidates)), key=lambda i: fits[i])
    new = state.copy()
    d = state.dim
    xs = np.array([np.asarray(candidates[i].theta, dtype=float) for i in order[: state.mu]])
    ys = (xs - state.mean) / state.sigma
    y_w = state.weights @ ys
    new.mean = state.mean + state.sigma * y_w

    inv_sqrt = state.B @ np.diag(1.0 / state.D) @ state.B.T
    cs = state.c_sigma
    new.p_sigma = (1 - cs) * state.p_sigma + math.sqrt(cs * (2 - cs) * state.mu_eff) * (inv_sqrt @ y_w)
    gen = state.generation + 1
    ps_norm = float(np.linalg.norm(new.p_sigma))
    h_sigma = ps_norm / math.sqrt(1 - (1 - cs) ** (2 * gen)) / state.chi_d < 1.4 + 2 / (d + 1)
    cc = state.c_c
    new.p_c = (1 - cc) * state.p_c + h_sigma * math.sqrt(cc * (2 - cc) * state.mu_eff) * y_w

    c1, cmu = state.c_1, state.c_mu
    rank_one = np.outer(new.p_c, new.p_c)
    if not h_sigma:
        rank_one = rank_one + cc * (2 - cc) * state.cov
    rank_mu = (ys.T * state.weights) @ ys
    cov = (1 - c1 - cmu) * state.cov + c1 * rank_one + cmu * rank_mu
    new.cov = (cov + cov.T) / 2
    new.sigma = state.sigma * math.exp((cs / state.d_sigma) * (ps_norm / state.chi_d - 1))
    new.generation = gen
    new.B, new.D = _decompose(new.cov)
    return new


@dataclass
class OptimizeResult:
    theta: np.ndarray
    fitness: float
    history: list[float]
    evaluations: int
    state: CmaesState


def optimize(objective: Callable[[np.ndarray], float], x0, sigma0: float, budget: int,
             seed=None, popsize: int | None = None, ftarget: float | None = None) -> OptimizeResult:
    """Minimise ``objective`` with at most ``budget`` evaluations.

    ``history`` holds the best-ever fitness after each generation.
    """
    state = cmaes_init(x0, sigma0, popsize, seed)
    if budget < state.popsize:
        raise ValueError(f"budget {budget} is smaller than one generation ({state.popsize})")
    best_x, best_f = None, math.inf
    history: list[float] = []
    evals = 0
    while evals + state.popsize <= budget:
        xs = ask(state)
        cands = [Candidate(x, float(objective(x))) for x in xs]
        evals += len(cands)
        for c in cands:
            if c.fitness < best_f:
                best_x, best_f = c.theta.copy(), c.fitness
        history.append(best_f)
        if ftarget is not None and best_f <= ftarget:
            break
        state = tell(state, cands)
    return OptimizeResult(best_x, best_f, history, evals, state)
