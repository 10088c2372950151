"""Parsing and serialization of requirement spec files.

The text format is line oriented, with five sections::

    inputs: a b            # ordered input propositions
    outputs: z             # ordered output propositions
    states:
      s0 in initial        # name, kind (in/out), optional flags
      t in error
      q out
    transitions:
      s0 -> q [!a & b]     # guard over the source phase's propositions
      q -> t               # missing guard means true
    objectives:
      goal = s0 t          # named set of input states

``#`` starts a comment.  A transition between two input states is sugar:
it is expanded at parse time through a fresh output state, with the guard
attached to whichever phase its propositions belong to and ``true`` on the
other phase.  A JSON mirror of the same schema is accepted for ``.json``
files (or content starting with ``{``).
"""

from __future__ import annotations

import json

from .automaton import IN, OUT, Alphabet, SpecAutomaton, Transition
from .errors import SpecError
from .guards import TRUE, format_guard, parse_guard

_SECTIONS = ("inputs", "outputs", "states", "transitions", "objectives")
_DESUGAR_PREFIX = "_via"


def parse_spec(text: str, filename: str = "<spec>") -> SpecAutomaton:
    """Parse a spec file (text or JSON mirror) into an automaton.

    Parsing is total on the grammar: structural problems such as
    incompleteness are left to ``validate``.  Dangling state references,
    guards over the wrong phase, and syntax errors are rejected here.
    """
    if filename.endswith(".json") or text.lstrip()[:1] == "{":
        return _from_json(text, filename)
    return _from_text(text, filename)


def _from_text(text: str, filename: str) -> SpecAutomaton:
    inputs: list[str] = []
    outputs: list[str] = []
    states: list[tuple[str, str]] = []
    initial: str | None = None
    errors: set[str] = set()
    raw_transitions: list[tuple[str, str, str, int]] = []  # src, dst, guard text, line
    objectives: dict[str, list[str]] = {}
    section: str | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split(":", 1)[0].strip()
        if ":" in line and head in _SECTIONS:
            section = head
            line = line.split(":", 1)[1].strip()
            if not line:
                continue
        if section is None:
            raise SpecError(f"content before any section: {line!r}", lineno)
        if section == "inputs":
            inputs.extend(line.split())
        elif section == "outputs":
            outputs.extend(line.split())
        elif section == "states":
            parts = line.split()
            if len(parts) < 2 or parts[1] not in (IN, OUT):
                raise SpecError(
                    f"expected 'name in|out [initial] [error]', got {line!r}", lineno
                )
            name, kind = parts[0], parts[1]
            states.append((name, kind))
            for flag in parts[2:]:
                if flag == "initial":
                    if initial is not None:
                        raise SpecError("second state flagged initial", lineno)
                    initial = name
                elif flag == "error":
                    errors.add(name)
                else:
                    raise SpecError(f"unknown state flag {flag!r}", lineno)
        elif section == "transitions":
            raw_transitions.append(_split_transition(line, lineno))
        else:  # objectives
            if "=" not in line:
                raise SpecError(f"expected 'name = state ...', got {line!r}", lineno)
            name, rhs = line.split("=", 1)
            objectives.setdefault(name.strip(), []).extend(rhs.split())

    if not inputs:
        raise SpecError("no input propositions declared")
    if initial is None:
        raise SpecError("no state flagged initial")
    return _assemble(
        filename, inputs, outputs, states, initial, errors, raw_transitions, objectives
    )


def _split_transition(line: str, lineno: int) -> tuple[str, str, str, int]:
    if "->" not in line:
        raise SpecError(f"expected 'src -> dst [guard]', got {line!r}", lineno)
    src, rest = line.split("->", 1)
    rest = rest.strip()
    if "[" in rest:
        dst, bracket = rest.split("[", 1)
        if not bracket.rstrip().endswith("]"):
            raise SpecError("unterminated guard bracket", lineno)
        guard_text = bracket.rstrip()[:-1]
    else:
        dst, guard_text = rest, "true"
    src, dst = src.strip(), dst.strip()
    if not src or not dst:
        raise SpecError(f"expected 'src -> dst [guard]', got {line!r}", lineno)
    return src, dst, guard_text, lineno


def _from_json(text: str, filename: str) -> SpecAutomaton:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON spec: {exc}", exc.lineno, exc.colno) from None
    try:
        inputs = list(doc["inputs"])
        outputs = list(doc.get("outputs", []))
        state_docs = doc["states"]
        transition_docs = doc.get("transitions", [])
    except KeyError as exc:
        raise SpecError(f"JSON spec missing key {exc}") from None
    states = []
    initial = None
    errors: set[str] = set()
    for sd in state_docs:
        states.append((sd["name"], sd["kind"]))
        if sd.get("initial"):
            if initial is not None:
                raise SpecError("second state flagged initial")
            initial = sd["name"]
        if sd.get("error"):
            errors.add(sd["name"])
    if initial is None:
        raise SpecError("no state flagged initial")
    raw_transitions = [
        (td["src"], td["dst"], td.get("guard", "true"), 0) for td in transition_docs
    ]
    objectives = {
        name: list(members) for name, members in doc.get("objectives", {}).items()
    }
    return _assemble(
        filename, inputs, outputs, states, initial, errors, raw_transitions, objectives
    )


def _assemble(
    filename, inputs, outputs, states, initial, errors, raw_transitions, objectives
) -> SpecAutomaton:
    alphabet = Alphabet(tuple(inputs), tuple(outputs))
    kinds = dict(states)
    if len(kinds) != len(states):
        dupes = [n for i, (n, _) in enumerate(states) if n in dict(states[:i])]
        raise SpecError(f"duplicate state {dupes[0]!r}")
    state_names = [n for n, _ in states]
    input_set = set(alphabet.inputs)
    output_set = set(alphabet.outputs)

    transitions: list[Transition] = []
    via_counter = 0
    for src, dst, guard_text, lineno in raw_transitions:
        for endpoint in (src, dst):
            if endpoint not in kinds:
                raise SpecError(f"dangling state reference {endpoint!r}", lineno or None)
        guard = parse_guard(guard_text, lineno or None)
        if kinds[src] == IN and kinds[dst] == IN:
            # sugar: route through a fresh output state
            props = guard.props()
            while f"{_DESUGAR_PREFIX}{via_counter}" in kinds:
                via_counter += 1
            fresh = f"{_DESUGAR_PREFIX}{via_counter}"
            via_counter += 1
            kinds[fresh] = OUT
            state_names.append(fresh)
            if props <= input_set:
                transitions.append(Transition(src, guard, fresh))
                transitions.append(Transition(fresh, TRUE, dst))
            elif props <= output_set:
                transitions.append(Transition(src, TRUE, fresh))
                transitions.append(Transition(fresh, guard, dst))
            else:
                raise SpecError(
                    f"transition {src} -> {dst} between input states mixes "
                    "input and output propositions; write the output state "
                    "explicitly",
                    lineno or None,
                )
        elif kinds[src] == OUT and kinds[dst] == OUT:
            raise SpecError(
                f"transition {src} -> {dst} connects two output states", lineno or None
            )
        else:
            transitions.append(Transition(src, guard, dst))

    return SpecAutomaton(
        alphabet=alphabet,
        state_names=tuple(state_names),
        kinds=kinds,
        initial=initial,
        error_states=frozenset(errors),
        transitions=tuple(transitions),
        objectives={n: frozenset(m) for n, m in objectives.items()},
        name=filename,
    )


def serialize_spec(a: SpecAutomaton) -> str:
    """Render an automaton in the text format; parses back structurally equal."""
    lines = []
    lines.append("inputs: " + " ".join(a.alphabet.inputs))
    lines.append("outputs: " + " ".join(a.alphabet.outputs))
    lines.append("states:")
    for s in a.state_names:
        flags = ""
        if s == a.initial:
            flags += " initial"
        if s in a.error_states:
            flags += " error"
        lines.append(f"  {s} {a.kinds[s]}{flags}")
    lines.append("transitions:")
    for t in a.transitions:
        lines.append(f"  {t.source} -> {t.target} [{format_guard(t.guard)}]")
    if a.objectives:
        lines.append("objectives:")
        for name in a.objectives:
            members = " ".join(sorted(a.objectives[name]))
            lines.append(f"  {name} = {members}")
    return "\n".join(lines) + "\n"


def spec_to_json(a: SpecAutomaton) -> str:
    doc = {
        "inputs": list(a.alphabet.inputs),
        "outputs": list(a.alphabet.outputs),
        "states": [
            {
                "name": s,
                "kind": a.kinds[s],
                "initial": s == a.initial,
                "error": s in a.error_states,
            }
            for s in a.state_names
        ],
        "transitions": [
            {"src": t.source, "dst": t.target, "guard": format_guard(t.guard)}
            for t in a.transitions
        ],
        "objectives": {n: sorted(m) for n, m in a.objectives.items()},
    }
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"
