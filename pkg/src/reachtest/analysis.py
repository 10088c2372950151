"""Reachability fixpoints and reward shaping over the input-state graph.

All functions here work on the explicit graph between input states that
the compiled automaton caches: the valuation enumeration is paid once,
after which fixpoints and distance layers are plain set/BFS computations.
Results are immutable and safe to share across concurrent test attempts.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from .automaton import SpecAutomaton, compiled
from .errors import ContractError


def pre_star(a: SpecAutomaton, targets) -> frozenset[str]:
    """Input states from which some trace reaches ``targets``.

    Least fixpoint of X -> targets | Pre(X), computed as a backward
    worklist sweep over the cached predecessor relation.
    """
    eng = compiled(a)
    reached = set(targets)
    frontier = list(targets)
    while frontier:
        s = frontier.pop()
        for p in eng.predecessors.get(s, ()):
            if p not in reached:
                reached.add(p)
                frontier.append(p)
    return frozenset(reached)


def post_star(a: SpecAutomaton, sources) -> frozenset[str]:
    """Input states reachable from ``sources``; dual of pre_star."""
    eng = compiled(a)
    reached = set(sources)
    frontier = list(sources)
    while frontier:
        s = frontier.pop()
        for t in eng.successors.get(s, ()):
            if t not in reached:
                reached.add(t)
                frontier.append(t)
    return frozenset(reached)


@dataclass(frozen=True)
class CoreachInput:
    """Per-state input valuations that can keep a run coreachable.

    ``allowed[s]`` lists, in canonical valuation order, every input
    valuation for which some output leads to a coreachable state.  Playing
    anything else from s makes the trace inconclusive no matter what the
    implementation does.
    """

    coreach: frozenset[str]
    allowed: dict[str, tuple[int, ...]]

    def pairs(self) -> frozenset[tuple[str, int]]:
        return frozenset(
            (s, v) for s, vals in self.allowed.items() for v in vals
        )


def coreach_inp(a: SpecAutomaton, objective) -> CoreachInput:
    eng = compiled(a)
    core = pre_star(a, objective)
    n_in_vals = 1 << a.alphabet.n_inputs
    allowed: dict[str, tuple[int, ...]] = {}
    for s in a.input_states:
        vals = []
        for v in range(n_in_vals):
            targets, _ = eng.input_succ(s, v)
            if any(t in core for t in targets):
                vals.append(v)
        allowed[s] = tuple(vals)
    return CoreachInput(coreach=core, allowed=allowed)


@dataclass(frozen=True)
class RewardLayers:
    """Distance partition of the input states relative to an objective.

    ``layers[k]`` holds the states whose shortest run into the objective
    has length k; ``sink`` holds the non-coreachable states, indexed as
    one past the last layer.  ``index`` maps every input state to its
    layer number.
    """

    layers: tuple[frozenset[str], ...]
    sink: frozenset[str]
    index: dict[str, int]

    @property
    def depth(self) -> int:
        """Largest populated layer number (m)."""
        return len(self.layers) - 1

    @property
    def sink_index(self) -> int:
        return len(self.layers)


def reward_layers(a: SpecAutomaton, objective) -> RewardLayers:
    """Peel coreach(a, objective) into one-step predecessor layers."""
    objective = frozenset(objective)
    if not objective:
        warnings.warn("empty objective: every state lands in the sink layer")
        sink = frozenset(a.input_states)
        return RewardLayers(
            layers=(frozenset(),), sink=sink, index={s: 1 for s in sink}
        )
    eng = compiled(a)
    layers = [objective]
    seen = set(objective)
    index = {s: 0 for s in objective}
    while True:
        frontier = set()
        for s in layers[-1]:
            for p in eng.predecessors.get(s, ()):
                if p not in seen:
                    frontier.add(p)
        if not frontier:
            break
        for s in frontier:
            index[s] = len(layers)
        seen |= frontier
        layers.append(frozenset(frontier))
    sink = frozenset(s for s in a.input_states if s not in seen)
    for s in sink:
        index[s] = len(layers)
    return RewardLayers(layers=tuple(layers), sink=sink, index=index)


def last_reward(layers: RewardLayers, end_state: str) -> int:
    """Layer number of the state a run ended in; 0 means covering."""
    try:
        return layers.index[end_state]
    except KeyError:
        raise ContractError(
            f"state {end_state!r} is not indexed by these layers"
        ) from None


def discounted_reward(rewards, gamma: float) -> float:
    """Final reward times the discounted sum of the whole reward sequence.

    The caller is responsible for right-padding short runs by repeating
    the last reward up to the horizon.  Zero iff the final reward is zero.
    """
    if not 0 < gamma < 1:
        raise ContractError(f"discount factor must be in (0,1), got {gamma}")
    rewards = list(rewards)
    if not rewards:
        raise ContractError("empty reward sequence")
    total = 0.0
    g = 1.0
    for r in rewards:
        total += g * r
        g *= gamma
    return rewards[-1] * total


def pad_rewards(rewards, horizon: int) -> list:
    """Repeat the last reward so the sequence has exactly ``horizon`` entries."""
    rewards = list(rewards)
    if not rewards:
        raise ContractError("empty reward sequence")
    if len(rewards) > horizon:
        raise ContractError(f"{len(rewards)} rewards exceed horizon {horizon}")
    return rewards + [rewards[-1]] * (horizon - len(rewards))
