"""Two-player game analysis of a requirement automaton.

The tester picks input valuations, the system answers with outputs.  A
state controllably reaches a target set if some input forces every output
either into the target or into the error states (revealing a
non-conformance also ends the game in the tester's favor).  On top of the
controllable-predecessor fixpoint this module builds cooperative
strategies (progress that needs a helpful output) and stitches both into
the greedy strategy used to bias the test algorithms.
"""

from __future__ import annotations

from dataclasses import dataclass

from .analysis import pre_star
from .automaton import SpecAutomaton, compiled
from .errors import ContractError


def _forcing_inputs(eng, state: str, goal: frozenset[str], err: frozenset[str], n_vals: int):
    """Inputs whose every output lands in goal or err, with no output gap."""
    out = []
    for v in range(n_vals):
        targets, has_gap = eng.input_succ(state, v)
        if targets and not has_gap and all(t in goal or t in err for t in targets):
            out.append(v)
    return tuple(out)


def cpre(a: SpecAutomaton, targets) -> frozenset[str]:
    """One-step controllable predecessors of ``targets``.

    A non-error input state belongs to the result if it has an input
    valuation all of whose outcomes fall in ``targets`` or the error set.
    States with no enabled input (or an output gap on every input) never
    qualify: the play must actually reach the target, not get stuck.
    """
    eng = compiled(a)
    targets = frozenset(targets)
    err = a.error_states
    n_vals = 1 << a.alphabet.n_inputs
    return frozenset(
        s
        for s in a.input_states
        if s not in err and _forcing_inputs(eng, s, targets, err, n_vals)
    )


@dataclass(frozen=True)
class CpreFixpoint:
    """Result of a controllable-predecessor fixpoint.

    ``iterates[i]`` is the i-th approximant (iterates[0] is empty); they
    are kept because strategy extraction ranks each state by the first
    iterate that contains it.
    """

    states: frozenset[str]
    iterates: tuple[frozenset[str], ...]

    def level(self, state: str) -> int:
        for i, it in enumerate(self.iterates):
            if state in it:
                return i
        raise ContractError(f"state {state!r} outside the fixpoint")


def cpre_star(a: SpecAutomaton, targets) -> CpreFixpoint:
    """Least fixpoint of X -> targets | cpre(X), with its iterate chain."""
    targets = frozenset(targets)
    iterates = [frozenset()]
    current = frozenset()
    while True:
        nxt = targets | current | cpre(a, current)
        if nxt == current:
            break
        iterates.append(nxt)
        current = nxt
    return CpreFixpoint(states=current, iterates=tuple(iterates))


@dataclass(frozen=True)
class Strategy:
    """Memoryless input prescription: state -> allowed input valuations."""

    choices: dict[str, tuple[int, ...]]

    def domain(self) -> frozenset[str]:
        return frozenset(self.choices)

    def __getitem__(self, state: str) -> tuple[int, ...]:
        try:
            return self.choices[state]
        except KeyError:
            raise ContractError(f"state {state!r} outside strategy domain") from None

    def __contains__(self, state: str) -> bool:
        return state in self.choices


def winning_strategy(a: SpecAutomaton, targets) -> tuple[CpreFixpoint, Strategy]:
    """Inputs that force ``targets`` (or an error) from every fixpoint state.

    Each state keeps every input whose outcomes all lie one iterate lower
    or in the error set, so any play following the strategy strictly
    descends the iterate chain until it reaches the targets.  States
    already inside ``targets`` have nothing to force; they keep all their
    enabled inputs since no play consults them.
    """
    eng = compiled(a)
    targets = frozenset(targets)
    fix = cpre_star(a, targets)
    err = a.error_states
    n_vals = 1 << a.alphabet.n_inputs
    choices: dict[str, tuple[int, ...]] = {}
    for s in sorted(fix.states):
        below = fix.iterates[fix.level(s) - 1]
        forcing = _forcing_inputs(eng, s, below, err, n_vals)
        if not forcing:
            if s not in targets and s not in err:
                raise AssertionError(f"no forcing input at fixpoint state {s}")
            forcing = tuple(
                v for v in range(n_vals) if eng.square(s, v) is not None
            )
        choices[s] = forcing
    return fix, Strategy(choices)


def cooperative_strategy(a: SpecAutomaton, targets) -> Strategy:
    """Inputs after which at least one output enters ``targets``.

    Defined exactly on the immediate predecessors of the target set minus
    the set itself; nonempty there by construction.
    """
    eng = compiled(a)
    targets = frozenset(targets)
    n_vals = 1 << a.alphabet.n_inputs
    choices: dict[str, tuple[int, ...]] = {}
    for s in a.input_states:
        if s in targets:
            continue
        vals = tuple(
            v
            for v in range(n_vals)
            if any(t in targets for t in eng.input_succ(s, v)[0])
        )
        if vals:
            choices[s] = vals
    return Strategy(choices)


WINNING = "winning"
COOPERATIVE = "cooperative"
ARBITRARY = "arbitrary"


@dataclass(frozen=True)
class GreedyArtifacts:
    """Everything the greedy construction produces.

    ``levels[i]`` is the i-th winning set of the hierarchy (levels[0] is
    the controllable predecessors of the objective); ``frontiers[i]`` the
    cooperative frontier crossed to build ``levels[i+1]``.  ``rank`` maps
    each coreachable state to the first level containing it.  The greedy
    strategy covers every input state; ``mode`` records whether a state's
    choice is winning, cooperative, or an arbitrary default outside the
    coreachable set.
    """

    levels: tuple[frozenset[str], ...]
    frontiers: tuple[frozenset[str], ...]
    rank: dict[str, int]
    strategy: Strategy
    mode: dict[str, str]
    coreach: frozenset[str]


def greedy_strategy(a: SpecAutomaton, objective) -> GreedyArtifacts:
    """Build the winning/cooperative hierarchy and its stitched strategy.

    Level 0 is the controllably-winning region for the objective.  Each
    round takes the immediate predecessors of the current region as the
    cooperative frontier, then closes it under controllable predecessors
    again; the result grows until the frontier is empty, at which point
    the levels cover the whole coreachable set.  At a frontier state the
    stitched strategy keeps the cooperative inputs; elsewhere in its level
    it keeps the winning ones.
    """
    eng = compiled(a)
    objective = frozenset(objective)
    core = pre_star(a, objective)

    fix0, st0 = winning_strategy(a, objective)
    levels = [fix0.states]
    frontiers: list[frozenset[str]] = []
    rank: dict[str, int] = {s: 0 for s in fix0.states}
    strategy: dict[str, tuple[int, ...]] = dict(st0.choices)
    mode: dict[str, str] = {s: WINNING for s in fix0.states}

    # when the initial state is already winning, the level-0 strategy is
    # the whole answer and no cooperation levels are built
    grow = a.initial not in fix0.states
    while grow:
        current = levels[-1]
        frontier = frozenset(
            s
            for s in a.input_states
            if s not in current and any(t in current for t in eng.successors[s])
        )
        if not frontier:
            break
        coop = cooperative_strategy(a, current)
        fix, winning = winning_strategy(a, frontier | current)
        level = fix.states
        frontiers.append(frontier)
        for s in sorted(level):
            if s in rank:
                continue
            rank[s] = len(levels)
            if s in frontier:
                strategy[s] = coop[s]
                mode[s] = COOPERATIVE
            else:
                strategy[s] = winning[s]
                mode[s] = WINNING
        levels.append(level)

    n_vals = 1 << a.alphabet.n_inputs
    for s in a.input_states:
        if s not in strategy:
            # outside the coreachable set; any input is as good as any other
            strategy[s] = tuple(
                v for v in range(n_vals) if eng.square(s, v) is not None
            )
            mode[s] = ARBITRARY

    return GreedyArtifacts(
        levels=tuple(levels),
        frontiers=tuple(frontiers),
        rank=rank,
        strategy=Strategy(strategy),
        mode=mode,
        coreach=core,
    )
