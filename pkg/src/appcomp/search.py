"""Pass-sequence search: the compilation environment, baseline presets,
beam search and tabular Q-learning.

A compilation episode starts from a logical circuit and applies registered
passes one at a time. A state is terminal once it has been routed and the
circuit is executable on the device; only terminal states are rewarded.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .circuit import Layout, QuantumCircuit, circuit_to_text, count_two_qubit_gates
from .device import DeviceModel, validate_executable
from .errors import IllegalAction, NoTerminalFound, NotTerminal, ValidationError
from .fom import FigureOfMeritSpec, FomContext, evaluate_fom
from .passes import (FIXED_LAYOUT, PASS_NAMES, cancel_inverse_pairs, drop_identity_rz, greedy_layout,
                     merge_rz, random_layout, route, translate_to_native, trivial_layout)
from .seeding import derive_seed

DEFAULT_MAX_STEPS = 12
OPTIMIZATION_PASSES = ("merge_rz", "drop_id_rz", "cancel_pairs")
O3_LAYOUT_TRIALS = 5
SEARCH_LAYOUT_TRIALS = 20


@dataclass(frozen=True)
class PassAction:
    name: str
    seed: int | None = None
    layout: Layout | None = None

    def __post_init__(self):
        if self.name not in PASS_NAMES and self.name != FIXED_LAYOUT:
            raise ValidationError(f"unknown pass {self.name!r}", "name")
        if self.name == "layout_random" and self.seed is None:
            raise ValidationError("layout_random needs a seed", "seed")
        if self.name == FIXED_LAYOUT and self.layout is None:
            raise ValidationError("layout_fixed needs a layout", "layout")

    @property
    def label(self) -> str:
        if self.name == "layout_random":
            return f"layout_random({self.seed})"
        if self.name == FIXED_LAYOUT:
            return f"layout_fixed({':'.join(map(str, self.layout.physical))})"
        return self.name


@dataclass(frozen=True)
class CompilationState:
    circuit: QuantumCircuit
    device: DeviceModel
    layout: Layout | None = None
    translated: bool = False
    laid_out: bool = False
    routed: bool = False
    history: tuple[str, ...] = ()
    steps: int = 0
    max_steps: int = DEFAULT_MAX_STEPS
    layout_seeds: tuple[int, ...] = ()
    fixed_layouts: tuple[Layout, ...] = ()
    # after routing: physical content permutation and where logical qubits ended up
    permutation: tuple[int, ...] | None = None
    final_layout: Layout | None = None
    swaps: int = 0

    @property
    def terminal(self) -> bool:
        return self.routed and validate_executable(self.circuit, self.device).ok

    def key(self):
        return (circuit_to_text(self.circuit), self.layout, self.routed)


def initial_state(circuit: QuantumCircuit, device: DeviceModel, max_steps: int = DEFAULT_MAX_STEPS,
                  layout_seeds=(), fixed_layouts=()) -> CompilationState:
    return CompilationState(circuit, device, max_steps=max_steps, layout_seeds=tuple(layout_seeds),
                            fixed_layouts=tuple(fixed_layouts))


def actions_available(state: CompilationState) -> list[PassAction]:
    if state.steps >= state.max_steps:
        return []
    acts = [PassAction("translate")] + [PassAction(n) for n in OPTIMIZATION_PASSES]
    if not state.laid_out:
        acts += [PassAction("layout_trivial"), PassAction("layout_greedy")]
        acts += [PassAction("layout_random", seed=s) for s in state.layout_seeds]
        acts += [PassAction(FIXED_LAYOUT, layout=lay) for lay in state.fixed_layouts]
    elif not state.routed:
        acts.append(PassAction("route"))
    return acts


def step(state: CompilationState, action: PassAction) -> CompilationState:
    if action not in actions_available(state):
        raise IllegalAction(f"{action.label} is not available after {list(state.history)}")
    return _apply(state, action)


def _apply(state: CompilationState, action: PassAction) -> CompilationState:
    name = action.name
    c, device = state.circuit, state.device
    changes: dict = {}
    if name == "translate":
        changes["circuit"], _ = translate_to_native(c, device.native_gates)
        changes["translated"] = True
    elif name == "merge_rz":
        changes["circuit"], _ = merge_rz(c)
    elif name == "drop_id_rz":
        changes["circuit"], _ = drop_identity_rz(c)
    elif name == "cancel_pairs":
        changes["circuit"], _ = cancel_inverse_pairs(c)
    elif name == "layout_trivial":
        changes["layout"] = trivial_layout(c, device)
    elif name == "layout_greedy":
        changes["layout"] = greedy_layout(c, device)
    elif name == "layout_random":
        changes["layout"] = random_layout(c, device, action.seed)
    elif name == FIXED_LAYOUT:
        changes["layout"] = action.layout
    elif name == "route":
        routed, report = route(c, device, state.layout)
        changes.update(circuit=routed, routed=True, permutation=report.final_permutation,
                       final_layout=report.final_layout, swaps=report.swaps_inserted)
    if name.startswith("layout"):
        changes["laid_out"] = True
    return replace(state, history=state.history + (action.label,), steps=state.steps + 1, **changes)


def terminal_reward(state: CompilationState, fom: FigureOfMeritSpec, context: FomContext | None = None) -> float:
    if not state.terminal:
        raise NotTerminal("reward is only defined for terminal states")
    return evaluate_fom(fom, state.circuit, state.device, context)


@dataclass
class EpisodeResult:
    circuit: QuantumCircuit
    reward: float | None
    history: tuple[str, ...]
    terminal: bool
    records: list = field(default_factory=list)
    state: CompilationState | None = None

    @property
    def min_kl(self) -> float | None:
        return -self.reward if self.reward is not None else None


class RewardCache:
    """Evaluates terminal rewards once per distinct compiled circuit.

    For app_kl the training seed is derived from (seed, circuit text), so a
    reward does not depend on the order in which circuits are discovered.
    """

    def __init__(self, fom: FigureOfMeritSpec, context: FomContext | None, seed: int):
        self.fom = fom
        self.template = context or FomContext()
        self.seed = seed
        self._cache: dict[str, tuple[float, list]] = {}
        self.evaluations = 0

    def __call__(self, state: CompilationState) -> tuple[float, list]:
        text = circuit_to_text(state.circuit)
        hit = self._cache.get(text)
        if hit is None:
            ctx = replace(self.template, seed=derive_seed(self.seed, "train", text), records=[])
            reward = terminal_reward(state, self.fom, ctx)
            hit = (reward, list(ctx.records))
            self._cache[text] = hit
            self.evaluations += 1
        return hit


# ---------------------------------------------------------------------------
# baselines


def preset_sequence(preset: str, layout_seed: int | None = None) -> list[PassAction]:
    if preset in ("o1", "o1_like"):
        names = ["translate", "layout_trivial", "route", "translate", "merge_rz", "drop_id_rz"]
        return [PassAction(n) for n in names]
    if preset in ("o3", "o3_like"):
        head = [PassAction(n) for n in ("translate", "merge_rz", "cancel_pairs")]
        tail = [PassAction(n) for n in ("route", "translate", "cancel_pairs", "merge_rz", "drop_id_rz")]
        return head + [PassAction("layout_random", seed=layout_seed)] + tail
    raise ValidationError(f"unknown preset {preset!r}", "preset")


def run_sequence(circuit: QuantumCircuit, device: DeviceModel, actions) -> CompilationState:
    """Apply passes unconditionally (no action gating), e.g. for presets and the CLI."""
    actions = list(actions)
    state = initial_state(circuit, device, max_steps=max(len(actions), DEFAULT_MAX_STEPS))
    for a in actions:
        if a.name == "route" and not state.laid_out:
            raise IllegalAction("route requires a layout")
        state = _apply(state, a)
    return state


def o3_layout_seeds(seed: int) -> list[int]:
    return [derive_seed(seed, "o3-layout", k) % 2**31 for k in range(O3_LAYOUT_TRIALS)]


def search_layout_seeds(seed: int, trials: int = SEARCH_LAYOUT_TRIALS) -> list[int]:
    """Random-layout seeds offered to the search; the o3_like seeds of ``seed`` come first."""
    seeds = o3_layout_seeds(seed)[:trials]
    seeds += [derive_seed(seed, "search-layout", k) % 2**31 for k in range(trials - len(seeds))]
    return seeds


def run_baseline(preset: str, circuit: QuantumCircuit, device: DeviceModel, fom: FigureOfMeritSpec,
                 seed: int, context: FomContext | None = None) -> EpisodeResult:
    """o1_like: fixed trivial-layout pipeline. o3_like: best of five random layouts by two-qubit count."""
    if preset in ("o1", "o1_like"):
        state = run_sequence(circuit, device, preset_sequence(preset))
    elif preset in ("o3", "o3_like"):
        best = None
        for s in o3_layout_seeds(seed):
            cand = run_sequence(circuit, device, preset_sequence(preset, s))
            score = count_two_qubit_gates(cand.circuit)
            if best is None or score < best[0]:
                best = (score, cand)
        state = best[1]
    else:
        raise ValidationError(f"unknown preset {preset!r}", "preset")
    ctx = replace(context or FomContext(), seed=seed, records=[])
    reward = terminal_reward(state, fom, ctx)
    return EpisodeResult(state.circuit, reward, state.history, True, list(ctx.records), state)


# ---------------------------------------------------------------------------
# search strategies


@dataclass(frozen=True)
class BeamStrategy:
    width: int | None = 4  # None: exhaustive


@dataclass(frozen=True)
class RLStrategy:
    episodes: int = 200
    epsilon: float = 0.2
    alpha: float = 0.5
    gamma: float = 1.0
    fail_reward: float = -1e3


@dataclass(frozen=True)
class TraceRow:
    episode: int
    terminal: bool
    reward: float | None
    passes: tuple[str, ...]


def completion_proxy(state: CompilationState) -> tuple[int, int]:
    """Two-qubit count (then size) after finishing the state with default passes."""
    c = state.circuit
    if not state.routed:
        layout = state.layout if state.laid_out else trivial_layout(c, state.device)
        c, _ = route(c, state.device, layout)
    c, _ = translate_to_native(c, state.device.native_gates)
    return count_two_qubit_gates(c), len(c)


def _beam(start: CompilationState, width: int | None, evaluate, trace: list[TraceRow]):
    frontier = [start]
    seen = {start.key()}
    terminals: dict[str, CompilationState] = {}
    while frontier:
        children = []
        for st in frontier:
            for action in actions_available(st):
                child = _apply(st, action)
                k = child.key()
                if k in seen:
                    continue
                seen.add(k)
                children.append(child)
        if not children:
            break
        children.sort(key=lambda s: (completion_proxy(s), s.steps, s.history))
        frontier = children if width is None else children[:width]
        for st in frontier:
            if st.terminal:
                terminals.setdefault(circuit_to_text(st.circuit), st)
    results = []
    for st in terminals.values():
        reward, records = evaluate(st)
        trace.append(TraceRow(len(trace), True, reward, st.history))
        results.append(EpisodeResult(st.circuit, reward, st.history, True, records, st))
    return results


def _q_learning(start: CompilationState, cfg: RLStrategy, evaluate, rng: np.random.Generator,
                trace: list[TraceRow]):
    q: dict = {}
    results = []

    def skey(st):
        return (st.translated, st.laid_out, st.routed, st.history)

    def best_value(st):
        acts = actions_available(st)
        return max((q.get((skey(st), a.label), 0.0) for a in acts), default=0.0)

    for episode in range(cfg.episodes):
        st = start
        reward = None
        while True:
            acts = actions_available(st)
            if not acts:
                break
            if rng.random() < cfg.epsilon:
                action = acts[int(rng.integers(len(acts)))]
            else:
                values = [q.get((skey(st), a.label), 0.0) for a in acts]
                top = max(values)
                ties = [a for a, v in zip(acts, values) if v == top]
                action = ties[int(rng.integers(len(ties)))]
            nxt = _apply(st, action)
            sa = (skey(st), action.label)
            if nxt.terminal:
                reward, records = evaluate(nxt)
                target = reward
            elif not actions_available(nxt):
                target = cfg.fail_reward
            else:
                target = cfg.gamma * best_value(nxt)
            q[sa] = q.get(sa, 0.0) + cfg.alpha * (target - q.get(sa, 0.0))
            st = nxt
            if reward is not None:
                results.append(EpisodeResult(st.circuit, reward, st.history, True, records, st))
                break
        trace.append(TraceRow(episode, reward is not None, reward, st.history))
    return results


def optimize_sequence(strategy, circuit: QuantumCircuit, device: DeviceModel, fom: FigureOfMeritSpec,
                      seed: int, context: FomContext | None = None, max_steps: int = DEFAULT_MAX_STEPS,
                      layout_seeds=None, fixed_layouts=()) -> tuple[EpisodeResult, list[TraceRow]]:
    """Search pass sequences; returns the best terminal episode and the search trace."""
    if layout_seeds is None:
        layout_seeds = search_layout_seeds(seed)
    start = initial_state(circuit, device, max_steps, layout_seeds, fixed_layouts)
    evaluate = RewardCache(fom, context, seed)
    trace: list[TraceRow] = []
    if isinstance(strategy, BeamStrategy):
        if strategy.width is not None and strategy.width < 1:
            raise ValidationError("beam width must be positive", "width")
        results = _beam(start, strategy.width, evaluate, trace)
    elif isinstance(strategy, RLStrategy):
        if strategy.episodes < 1:
            raise ValidationError("need at least one episode", "episodes")
        results = _q_learning(start, strategy, evaluate, np.random.default_rng(seed), trace)
    else:
        raise ValidationError(f"unknown strategy {strategy!r}", "strategy")
    if not results:
        raise NoTerminalFound("no terminal state reached within the search budget")
    # first-found wins among equal rewards
    best = results[0]
    for r in results[1:]:
        if r.reward > best.reward:
            best = r
    return best, trace


def improvement(min_proposed: float, min_baseline: float) -> float:
    """Relative improvement in percent: 100 * (1 - proposed / baseline)."""
    if min_baseline == 0:
        raise ZeroDivisionError("baseline minimum is zero")
    if min_baseline < 0:
        raise ValueError("baseline minimum must be positive")
    return 100.0 * (1.0 - min_proposed / min_baseline)


TRACE_HEADER = ["episode", "terminal", "reward", "passes"]


def trace_to_csv(trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for row in trace:
        w.writerow([row.episode, int(row.terminal), "" if row.reward is None else repr(row.reward),
                    ";".join(row.passes)])
    return buf.getvalue()


def strategy_from_dict(data: dict):
    data = dict(data)
    kind = data.pop("strategy", "beam")
    try:
        if kind == "beam":
            return BeamStrategy(**data)
        if kind == "rl":
            return RLStrategy(**data)
    except TypeError as exc:
        raise ValidationError(str(exc), "search") from exc
    raise ValidationError(f"unknown strategy {kind!r}", "search.strategy")
