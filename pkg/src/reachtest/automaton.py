"""Two-phase guarded automata over Boolean input/output propositions.

An automaton alternates between input states (the environment picks an
input valuation) and output states (the system picks an output valuation).
Error states are absorbing input states; they make the automaton a safety
monitor.  Everything here is explicit-state: valuations are integers whose
bit i is the truth value of the i-th declared proposition of the phase,
and per-state transition guards are compiled to valuation bitmasks once,
then reused by validation, stepping, and all fixpoint analyses.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field

from .errors import ContractError, RunError, SpecError
from .guards import Const, Guard, Not, TRUE, disjoin_all, full_mask

IN = "in"
OUT = "out"


@dataclass(frozen=True)
class Alphabet:
    """Ordered, disjoint input and output proposition lists.

    Declaration order is canonical: it fixes valuation bit positions, the
    wire-protocol bit strings, and all serialized traces.  Bit i of an
    input valuation is the truth value of inputs[i]; a full valuation
    packs the input bits low and the output bits above them.
    """

    inputs: tuple[str, ...]
    outputs: tuple[str, ...]

    def __post_init__(self):
        seen = set()
        for name in self.inputs + self.outputs:
            if name in seen:
                raise SpecError(f"duplicate proposition {name!r}")
            seen.add(name)

    @property
    def n_inputs(self) -> int:
        return len(self.inputs)

    @property
    def n_outputs(self) -> int:
        return len(self.outputs)

    @property
    def props(self) -> tuple[str, ...]:
        return self.inputs + self.outputs

    def join(self, v_inp: int, v_out: int) -> int:
        return v_inp | (v_out << self.n_inputs)

    def split(self, v_full: int) -> tuple[int, int]:
        return v_full & ((1 << self.n_inputs) - 1), v_full >> self.n_inputs

    def input_env(self, v_inp: int) -> dict[str, bool]:
        return {p: bool((v_inp >> i) & 1) for i, p in enumerate(self.inputs)}

    def output_env(self, v_out: int) -> dict[str, bool]:
        return {p: bool((v_out >> i) & 1) for i, p in enumerate(self.outputs)}

    def full_env(self, v_full: int) -> dict[str, bool]:
        v_inp, v_out = self.split(v_full)
        env = self.input_env(v_inp)
        env.update(self.output_env(v_out))
        return env

    def format_input(self, v_inp: int) -> str:
        return format_valuation(v_inp, self.n_inputs)

    def format_output(self, v_out: int) -> str:
        return format_valuation(v_out, self.n_outputs)

    def format_full(self, v_full: int) -> str:
        return format_valuation(v_full, self.n_inputs + self.n_outputs)

    def parse_input(self, bits: str) -> int:
        return parse_valuation(bits, self.n_inputs)

    def parse_output(self, bits: str) -> int:
        return parse_valuation(bits, self.n_outputs)

    def parse_full(self, bits: str) -> int:
        return parse_valuation(bits, self.n_inputs + self.n_outputs)


def format_valuation(value: int, width: int) -> str:
    """Bit string with character j holding the j-th proposition's value."""
    return "".join("1" if (value >> i) & 1 else "0" for i in range(width))


def parse_valuation(bits: str, width: int) -> int:
    if len(bits) != width or any(c not in "01" for c in bits):
        raise SpecError(f"expected {width} bits of 0/1, got {bits!r}")
    value = 0
    for i, c in enumerate(bits):
        if c == "1":
            value |= 1 << i
    return value


@dataclass(frozen=True)
class Transition:
    source: str
    guard: Guard
    target: str


@dataclass(eq=False)
class SpecAutomaton:
    """A guarded two-phase automaton with absorbing error states.

    State names are unique; ``kinds`` maps each to IN or OUT.  Transitions
    alternate IN -> OUT -> IN.  ``objectives`` maps objective names to sets
    of input-state names.  Instances are treated as immutable once built;
    analyses attach compiled lookup tables keyed on object identity.
    """

    alphabet: Alphabet
    state_names: tuple[str, ...]
    kinds: dict[str, str]
    initial: str
    error_states: frozenset[str]
    transitions: tuple[Transition, ...]
    objectives: dict[str, frozenset[str]] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        names = set()
        for s in self.state_names:
            if s in names:
                raise SpecError(f"duplicate state {s!r}")
            names.add(s)
        if self.initial not in names:
            raise SpecError(f"initial state {self.initial!r} not declared")
        if self.kinds.get(self.initial) != IN:
            raise SpecError(f"initial state {self.initial!r} must be an input state")
        for s in self.error_states:
            if s not in names:
                raise SpecError(f"error state {s!r} not declared")
            if self.kinds[s] != IN:
                raise SpecError(f"error state {s!r} must be an input state")
        for t in self.transitions:
            for endpoint in (t.source, t.target):
                if endpoint not in names:
                    raise SpecError(f"dangling state reference {endpoint!r}")
            if self.kinds[t.source] == self.kinds[t.target]:
                raise SpecError(
                    f"transition {t.source} -> {t.target} does not alternate phases"
                )
            phase = self.alphabet.inputs if self.kinds[t.source] == IN else self.alphabet.outputs
            extraneous = t.guard.props() - set(phase)
            if extraneous:
                raise SpecError(
                    f"guard on {t.source} -> {t.target} uses propositions "
                    f"{sorted(extraneous)} outside its phase"
                )
        for oname, states in self.objectives.items():
            for s in states:
                if s not in names:
                    raise SpecError(f"objective {oname!r} references unknown state {s!r}")
                if self.kinds[s] != IN:
                    raise SpecError(f"objective {oname!r} contains non-input state {s!r}")

    @property
    def input_states(self) -> tuple[str, ...]:
        return tuple(s for s in self.state_names if self.kinds[s] == IN)

    @property
    def output_states(self) -> tuple[str, ...]:
        return tuple(s for s in self.state_names if self.kinds[s] == OUT)

    @property
    def accepting_states(self) -> frozenset[str]:
        return frozenset(self.state_names) - self.error_states

    def outgoing(self, state: str) -> list[Transition]:
        return [t for t in self.transitions if t.source == state]


def structurally_equal(a: SpecAutomaton, b: SpecAutomaton) -> bool:
    return (
        a.alphabet == b.alphabet
        and a.state_names == b.state_names
        and a.kinds == b.kinds
        and a.initial == b.initial
        and a.error_states == b.error_states
        and a.transitions == b.transitions
        and a.objectives == b.objectives
    )


# ---------------------------------------------------------------------------
# Compiled form: per-state dispatch tables over valuation integers.
# ---------------------------------------------------------------------------


class CompiledAutomaton:
    """Dense lookup tables for a deterministic automaton.

    For an input state s, ``in_dispatch[s][v_inp]`` is the successor output
    state (or None); for an output state q, ``out_dispatch[q][v_out]`` is
    the successor input state (or None).  ``square_targets[q]`` caches the
    distinct reachable targets of q and whether q leaves any output
    valuation unmatched, which is what the game fixpoints consume.
    """

    def __init__(self, automaton: SpecAutomaton):
        ab = automaton.alphabet
        n_in_vals = 1 << ab.n_inputs
        n_out_vals = 1 << ab.n_outputs
        self.automaton = automaton
        self.in_dispatch: dict[str, list[str | None]] = {}
        self.out_dispatch: dict[str, list[str | None]] = {}
        self.square_targets: dict[str, tuple[tuple[str, ...], bool]] = {}

        by_source: dict[str, list[Transition]] = {s: [] for s in automaton.state_names}
        for t in automaton.transitions:
            by_source[t.source].append(t)

        for s in automaton.state_names:
            if automaton.kinds[s] == IN:
                table: list[str | None] = [None] * n_in_vals
                for t in by_source[s]:
                    m = t.guard.mask(ab.inputs)
                    while m:
                        low = m & -m
                        v = low.bit_length() - 1
                        if table[v] is not None and table[v] != t.target:
                            raise ContractError(
                                f"nondeterministic input dispatch at {s} on "
                                f"{ab.format_input(v)}"
                            )
                        table[v] = t.target
                        m ^= low
                self.in_dispatch[s] = table
            else:
                table = [None] * n_out_vals
                for t in by_source[s]:
                    m = t.guard.mask(ab.outputs)
                    while m:
                        low = m & -m
                        v = low.bit_length() - 1
                        if table[v] is not None and table[v] != t.target:
                            raise ContractError(
                                f"nondeterministic output dispatch at {s} on "
                                f"{ab.format_output(v)}"
                            )
                        table[v] = t.target
                        m ^= low
                self.out_dispatch[s] = table
                distinct = tuple(sorted({t for t in table if t is not None}))
                self.square_targets[s] = (distinct, None in table)

        # one-step relations between input states, ignoring valuations
        self.successors: dict[str, tuple[str, ...]] = {}
        preds: dict[str, set[str]] = {s: set() for s in automaton.input_states}
        for s in automaton.input_states:
            succ: set[str] = set()
            for q in set(self.in_dispatch[s]):
                if q is not None:
                    succ.update(self.square_targets[q][0])
            self.successors[s] = tuple(sorted(succ))
            for t in succ:
                preds[t].add(s)
        self.predecessors = {s: tuple(sorted(p)) for s, p in preds.items()}

    def square(self, state: str, v_inp: int) -> str | None:
        return self.in_dispatch[state][v_inp]

    def step(self, state: str, v_full: int) -> str | None:
        v_inp, v_out = self.automaton.alphabet.split(v_full)
        q = self.in_dispatch[state][v_inp]
        if q is None:
            return None
        return self.out_dispatch[q][v_out]

    def input_succ(self, state: str, v_inp: int) -> tuple[tuple[str, ...], bool]:
        """Distinct successors of playing v_inp at state, plus gap flag."""
        q = self.in_dispatch[state][v_inp]
        if q is None:
            return (), True
        return self.square_targets[q]


_compiled_cache: "weakref.WeakKeyDictionary[SpecAutomaton, CompiledAutomaton]"
_compiled_cache = weakref.WeakKeyDictionary()


def compiled(automaton: SpecAutomaton) -> CompiledAutomaton:
    engine = _compiled_cache.get(automaton)
    if engine is None:
        engine = CompiledAutomaton(automaton)
        _compiled_cache[automaton] = engine
    return engine


# ---------------------------------------------------------------------------
# Core operations.
# ---------------------------------------------------------------------------


def post_states(a: SpecAutomaton, state: str, v_full: int) -> frozenset[str]:
    """Input states reachable from ``state`` via the two-phase step on v."""
    if a.kinds.get(state) != IN:
        raise ContractError(f"post requires an input state, got {state!r}")
    ab = a.alphabet
    v_inp, v_out = ab.split(v_full)
    in_env = ab.input_env(v_inp)
    out_env = ab.output_env(v_out)
    result = set()
    for t in a.transitions:
        if t.source == state and t.guard.evaluate(in_env):
            for u in a.transitions:
                if u.source == t.target and u.guard.evaluate(out_env):
                    result.add(u.target)
    return frozenset(result)


def pre_states(a: SpecAutomaton, state: str, v_full: int) -> frozenset[str]:
    """Input states from which ``state`` is reached via valuation v."""
    if a.kinds.get(state) != IN:
        raise ContractError(f"pre requires an input state, got {state!r}")
    ab = a.alphabet
    v_inp, v_out = ab.split(v_full)
    in_env = ab.input_env(v_inp)
    out_env = ab.output_env(v_out)
    squares_in = {u.source for u in a.transitions if u.target == state and u.guard.evaluate(out_env)}
    result = set()
    for t in a.transitions:
        if t.target in squares_in and t.guard.evaluate(in_env):
            result.add(t.source)
    return frozenset(result)


@dataclass(frozen=True)
class ValidationReport:
    complete: bool
    deterministic: bool
    errors_absorbing: bool
    incomplete_witnesses: tuple[tuple[str, str], ...]  # (state, valuation bits)
    nondet_witnesses: tuple[tuple[str, str, str, str], ...]  # (state, bits, t1, t2)
    absorbing_witnesses: tuple[tuple[str, str], ...]  # (error state, escaping target)

    @property
    def ok(self) -> bool:
        return self.complete and self.deterministic and self.errors_absorbing


def validate(a: SpecAutomaton) -> ValidationReport:
    """Check completeness, determinism and error absorbance.

    Completeness is checked on states reachable from the initial state,
    by enumerating every valuation of the relevant phase.  Determinism is
    checked on all declared states.  Counterexamples are reported for each
    failing property.
    """
    ab = a.alphabet
    by_source: dict[str, list[Transition]] = {s: [] for s in a.state_names}
    for t in a.transitions:
        by_source[t.source].append(t)

    nondet = []
    masks: dict[str, list[tuple[int, str]]] = {}
    for s in a.state_names:
        phase = ab.inputs if a.kinds[s] == IN else ab.outputs
        entries = [(t.guard.mask(phase), t.target) for t in by_source[s]]
        masks[s] = entries
        for i in range(len(entries)):
            for j in range(i + 1, len(entries)):
                overlap = entries[i][0] & entries[j][0]
                if overlap and entries[i][1] != entries[j][1]:
                    v = (overlap & -overlap).bit_length() - 1
                    bits = (
                        ab.format_input(v) if a.kinds[s] == IN else ab.format_output(v)
                    )
                    nondet.append((s, bits, entries[i][1], entries[j][1]))

    # forward reachability over defined transitions
    reachable = {a.initial}
    frontier = [a.initial]
    while frontier:
        s = frontier.pop()
        for t in by_source[s]:
            if t.target not in reachable:
                reachable.add(t.target)
                frontier.append(t.target)

    incomplete = []
    for s in a.state_names:
        if s not in reachable:
            continue
        phase_n = ab.n_inputs if a.kinds[s] == IN else ab.n_outputs
        covered = 0
        for m, _ in masks[s]:
            covered |= m
        gap = full_mask(phase_n) ^ covered
        if gap:
            v = (gap & -gap).bit_length() - 1
            bits = ab.format_input(v) if a.kinds[s] == IN else ab.format_output(v)
            incomplete.append((s, bits))

    escaping = []
    for e in sorted(a.error_states):
        for t in by_source[e]:
            for u in by_source[t.target]:
                if u.target not in a.error_states:
                    escaping.append((e, u.target))
    return ValidationReport(
        complete=not incomplete,
        deterministic=not nondet,
        errors_absorbing=not escaping,
        incomplete_witnesses=tuple(incomplete),
        nondet_witnesses=tuple(nondet),
        absorbing_witnesses=tuple(escaping),
    )


TO_ERROR = "to-error"
SELF_LOOP = "self-loop"
_PAD_PREFIX = "_pad"


def complete(a: SpecAutomaton, policy: str = TO_ERROR) -> SpecAutomaton:
    """Close input/output gaps so the automaton validates complete.

    Missing input valuations at an input state are routed per ``policy``:
    TO_ERROR sends them to an error sink (unexpected stimulus is a
    don't-care sink for requirements), SELF_LOOP loops them back to the
    same state through a fresh unconstrained output state.  Missing output
    valuations are always routed to the error sink.  Gaps at error states
    return to the state itself, preserving absorbance.  An already
    complete automaton is returned unchanged.
    """
    if policy not in (TO_ERROR, SELF_LOOP):
        raise SpecError(f"unknown completion policy {policy!r}")
    report = validate(a)
    if not report.deterministic:
        s, bits, t1, t2 = report.nondet_witnesses[0]
        raise ContractError(
            f"cannot complete a nondeterministic automaton: state {s} on "
            f"{bits} reaches both {t1} and {t2}"
        )
    ab = a.alphabet
    by_source: dict[str, list[Transition]] = {s: [] for s in a.state_names}
    for t in a.transitions:
        by_source[t.source].append(t)

    def gap_guard(state: str, phase: tuple[str, ...]) -> Guard | None:
        existing = [t.guard for t in by_source[state]]
        covered = 0
        for g in existing:
            covered |= g.mask(phase)
        if covered == full_mask(len(phase)):
            return None
        if not existing:
            return TRUE
        return Not(disjoin_all(existing))

    new_states: list[tuple[str, str]] = []  # (name, kind)
    new_transitions: list[Transition] = []
    new_errors = set(a.error_states)
    taken = set(a.state_names)
    pad_counter = 0

    def fresh(kind: str) -> str:
        nonlocal pad_counter
        while True:
            name = f"{_PAD_PREFIX}{pad_counter}"
            pad_counter += 1
            if name not in taken:
                taken.add(name)
                new_states.append((name, kind))
                return name

    error_sink: str | None = None

    def get_error_sink() -> str:
        nonlocal error_sink
        if error_sink is None:
            if a.error_states:
                error_sink = min(
                    a.error_states, key=lambda s: a.state_names.index(s)
                )
            else:
                error_sink = fresh(IN)
                new_errors.add(error_sink)
        return error_sink

    for s in a.state_names:
        if a.kinds[s] == IN:
            gap = gap_guard(s, ab.inputs)
            if gap is None:
                continue
            if s in new_errors:
                target = s
            elif policy == SELF_LOOP:
                target = s
            else:
                target = get_error_sink()
            q = fresh(OUT)
            new_transitions.append(Transition(s, gap, q))
            new_transitions.append(Transition(q, TRUE, target))
        else:
            gap = gap_guard(s, ab.outputs)
            if gap is None:
                continue
            new_transitions.append(Transition(s, gap, get_error_sink()))

    # freshly created pad squares and sinks may themselves need closing
    changed = True
    while changed:
        changed = False
        for name, kind in list(new_states):
            outgoing = [t for t in new_transitions if t.source == name]
            if kind == OUT:
                if not outgoing:
                    raise AssertionError("pad square created without outgoing edge")
                continue
            if not outgoing:  # a fresh error sink: loop it onto itself
                q = fresh(OUT)
                new_transitions.append(Transition(name, TRUE, q))
                new_transitions.append(Transition(q, TRUE, name))
                changed = True

    if not new_transitions:
        return a
    return SpecAutomaton(
        alphabet=ab,
        state_names=a.state_names + tuple(n for n, _ in new_states),
        kinds={**a.kinds, **{n: k for n, k in new_states}},
        initial=a.initial,
        error_states=frozenset(new_errors),
        transitions=a.transitions + tuple(new_transitions),
        objectives=dict(a.objectives),
        name=a.name,
    )


def product(a1: SpecAutomaton, a2: SpecAutomaton) -> SpecAutomaton:
    """Synchronous product over the union alphabet.

    Guards are conjoined pairwise; only states reachable from the pair of
    initial states are materialized.  A pair is an error state as soon as
    either component is.  Shared propositions must appear in the same
    relative order in both alphabets.
    """
    inputs = _merge_props(a1.alphabet.inputs, a2.alphabet.inputs, "input")
    outputs = _merge_props(a1.alphabet.outputs, a2.alphabet.outputs, "output")
    ab = Alphabet(inputs, outputs)

    out1: dict[str, list[Transition]] = {s: [] for s in a1.state_names}
    for t in a1.transitions:
        out1[t.source].append(t)
    out2: dict[str, list[Transition]] = {s: [] for s in a2.state_names}
    for t in a2.transitions:
        out2[t.source].append(t)

    def pair_name(s1: str, s2: str) -> str:
        return f"{s1}|{s2}"

    init = (a1.initial, a2.initial)
    order: list[tuple[str, str]] = [init]
    seen = {init}
    transitions: list[Transition] = []
    idx = 0
    while idx < len(order):
        s1, s2 = order[idx]
        idx += 1
        phase = a1.kinds[s1]
        phase_props = ab.inputs if phase == IN else ab.outputs
        for t1 in out1[s1]:
            for t2 in out2[s2]:
                g = _conjoin_nontrivial(t1.guard, t2.guard, phase_props)
                if g is None:
                    continue
                dest = (t1.target, t2.target)
                if dest not in seen:
                    seen.add(dest)
                    order.append(dest)
                transitions.append(
                    Transition(pair_name(s1, s2), g, pair_name(*dest))
                )

    kinds = {pair_name(s1, s2): a1.kinds[s1] for (s1, s2) in order}
    errors = frozenset(
        pair_name(s1, s2)
        for (s1, s2) in order
        if a1.kinds[s1] == IN and (s1 in a1.error_states or s2 in a2.error_states)
    )
    for s1, s2 in order:
        if a1.kinds[s1] != a2.kinds[s2]:
            raise SpecError("product components disagree on state phase")
    return SpecAutomaton(
        alphabet=ab,
        state_names=tuple(pair_name(s1, s2) for (s1, s2) in order),
        kinds=kinds,
        initial=pair_name(*init),
        error_states=errors,
        transitions=tuple(transitions),
        objectives={},
        name=f"{a1.name or 'a1'}x{a2.name or 'a2'}",
    )


def _conjoin_nontrivial(g1: Guard, g2: Guard, phase: tuple[str, ...]) -> Guard | None:
    if isinstance(g1, Const) and g1.value:
        g = g2
    elif isinstance(g2, Const) and g2.value:
        g = g1
    else:
        from .guards import And

        g = And(g1, g2)
    if g.mask(phase) == 0:
        return None
    return g


def _merge_props(p1: tuple[str, ...], p2: tuple[str, ...], what: str) -> tuple[str, ...]:
    merged = list(p1) + [p for p in p2 if p not in p1]
    shared = [p for p in p1 if p in p2]
    if [p for p in p2 if p in shared] != shared:
        raise SpecError(
            f"{what} propositions shared by both automata appear in "
            f"conflicting orders: {shared}"
        )
    return tuple(merged)


def run_trace(a: SpecAutomaton, trace) -> tuple[str, bool]:
    """Run a trace of full valuations; return (end state, fails).

    ``fails`` is true iff the run ends in an error state.  Requires the
    automaton to be deterministic; a missing transition raises RunError
    with the offending step index.
    """
    state, states = _run(a, trace)
    return state, state in a.error_states


def run_states(a: SpecAutomaton, trace) -> list[str]:
    """Input states visited by a run, starting with the initial state."""
    _, states = _run(a, trace)
    return states


def _run(a: SpecAutomaton, trace) -> tuple[str, list[str]]:
    eng = compiled(a)
    state = a.initial
    states = [state]
    for i, v in enumerate(trace):
        nxt = eng.step(state, v)
        if nxt is None:
            raise RunError(
                f"no transition from {state} on {a.alphabet.format_full(v)} "
                f"at step {i}",
                step=i,
            )
        state = nxt
        states.append(state)
    return state, states
