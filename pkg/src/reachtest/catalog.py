"""Bundled requirement specs and systems under test.

Spec sources and SUT URIs accepted by the CLI resolve here.  A spec
source is a file path or a builtin name (``fig1``, ``fig5``, ``carriage``,
``i1``, ``fig6``, ``passageway``); ``passageway@N`` selects an N-room
variant.  SUT URIs are ``builtin:<name>`` for in-process systems or
``exec:<command>`` for an external process on the wire protocol.
"""

from __future__ import annotations

import os
from importlib import resources

from .automaton import IN, OUT, Alphabet, SpecAutomaton, Transition
from .errors import SpecError
from .guards import And, Guard, Not, Or, Prop, TRUE, disjoin_all
from .specfile import parse_spec
from .sut import AutomatonSut, CarriageSut, PassagewaySut, spawn_external

_FILE_SPECS = ("fig1", "fig5", "carriage", "i1", "fig6")
BUILTIN_SPECS = _FILE_SPECS + ("passageway",)

DEFAULT_ROOMS = 10


def _load_data(name: str) -> str:
    return resources.files("reachtest.data").joinpath(f"{name}.spec").read_text()


def load_builtin_spec(name: str) -> SpecAutomaton:
    base, rooms = _split_variant(name)
    if base == "passageway":
        return passageway_requirement(rooms if rooms else DEFAULT_ROOMS)
    if rooms:
        raise SpecError(f"spec {base!r} has no size variants")
    if base not in _FILE_SPECS:
        raise SpecError(f"unknown builtin spec {name!r}")
    return parse_spec(_load_data(base), f"{base}.spec")


def resolve_spec(source: str) -> SpecAutomaton:
    """Load a spec from a file path, or fall back to a builtin name."""
    if os.path.exists(source):
        with open(source, encoding="utf-8") as fh:
            return parse_spec(fh.read(), source)
    base, _ = _split_variant(source)
    if base in BUILTIN_SPECS:
        return load_builtin_spec(source)
    raise SpecError(f"no such file or builtin spec: {source!r}")


def _split_variant(name: str) -> tuple[str, int | None]:
    if "@" in name:
        base, _, tail = name.partition("@")
        try:
            n = int(tail)
        except ValueError:
            raise SpecError(f"bad size variant in {name!r}") from None
        if n < 2:
            raise SpecError(f"size variant must be >= 2 in {name!r}")
        return base, n
    return name, None


BUILTIN_SUTS = (
    "passageway",
    "passageway-bug",
    "carriage",
    "carriage-bug",
    "i1",
    "fig6",
)


def make_sut_factory(uri: str, alphabet: Alphabet | None = None):
    """Build a zero-argument session factory from a SUT URI.

    Each call of the factory yields a fresh session, so parallel attempts
    never share one.  For ``exec:`` URIs the expected alphabet, when
    given, is enforced during the protocol handshake.
    """
    if uri.startswith("exec:"):
        command = uri[len("exec:"):]
        return lambda: spawn_external(command, expected_alphabet=alphabet)
    if not uri.startswith("builtin:"):
        raise SpecError(f"SUT URI must start with 'builtin:' or 'exec:', got {uri!r}")
    name = uri[len("builtin:"):]
    base, rooms = _split_variant(name)
    if base == "passageway":
        n = rooms if rooms else DEFAULT_ROOMS
        return lambda: PassagewaySut(rooms=n)
    if base == "passageway-bug":
        n = rooms if rooms else DEFAULT_ROOMS
        return lambda: PassagewaySut(rooms=n, bug=True)
    if rooms:
        raise SpecError(f"SUT {base!r} has no size variants")
    if base == "carriage":
        return lambda: CarriageSut()
    if base == "carriage-bug":
        return lambda: CarriageSut(bug=True)
    if base in ("i1", "fig6"):
        impl = load_builtin_spec(base)
        return lambda: AutomatonSut(impl)
    raise SpecError(f"unknown builtin SUT {name!r}")


# ---------------------------------------------------------------------------
# Passageway requirement automaton.
# ---------------------------------------------------------------------------


def passageway_requirement(rooms: int = DEFAULT_ROOMS) -> SpecAutomaton:
    """Requirement monitor for the passageway robot with ``rooms`` rooms.

    Three input states track each room: not in the open area (m0), open
    but not at the doorstep (m1), and open at the doorstep (m2).  In odd
    rooms the open area cannot be reached by moving up, in even rooms not
    by moving down.  Entering the next room is allowed exactly by moving
    right from m2; moving right from m2 and *not* arriving in the next
    room is the error the bugged implementation triggers.  A collision
    output leads to an absorbing, accepting state outside the coreachable
    set, and malformed room vectors (not one-hot) are errors.
    """
    if rooms < 2:
        raise SpecError("the passageway needs at least two rooms")
    room_props = tuple(f"room_{i}" for i in range(1, rooms + 1))
    alphabet = Alphabet(("right", "up"), room_props + ("open", "doorstep", "collision"))

    opn = Prop("open")
    ds = Prop("doorstep")
    col = Prop("collision")
    not_col = Not(col)
    right = Prop("right")
    up = Prop("up")

    def one_hot(j: int) -> Guard:
        g: Guard = Prop(f"room_{j}")
        for k in range(1, rooms + 1):
            if k != j:
                g = And(g, Not(Prop(f"room_{k}")))
        return g

    hot = {j: one_hot(j) for j in range(1, rooms + 1)}
    some_hot = disjoin_all(hot[j] for j in range(1, rooms + 1))

    def entry_cases(j: int) -> list[tuple[Guard, str]]:
        return [
            (Not(opn), f"m0_{j}"),
            (And(opn, Not(ds)), f"m1_{j}"),
            (And(opn, ds), f"m2_{j}"),
        ]

    states: list[tuple[str, str]] = []
    transitions: list[Transition] = []

    def add_square(
        name: str,
        source: str,
        in_guard: Guard,
        room: int,
        in_room: list[tuple[Guard, str]],
        next_room_entry: bool,
    ) -> None:
        states.append((name, OUT))
        transitions.append(Transition(source, in_guard, name))
        transitions.append(Transition(name, col, "collided"))
        transitions.append(Transition(name, And(not_col, Not(some_hot)), "err"))
        for j in range(1, rooms + 1):
            base = And(not_col, hot[j])
            if j == room:
                for g, target in in_room:
                    transitions.append(Transition(name, And(base, g), target))
            elif j == room - 1 or (j == room + 1 and next_room_entry):
                for g, target in entry_cases(j):
                    transitions.append(Transition(name, And(base, g), target))
            else:
                transitions.append(Transition(name, base, "err"))

    for i in range(1, rooms + 1):
        for m in ("m0", "m1", "m2"):
            states.append((f"{m}_{i}", IN))
        odd = i % 2 == 1
        # the vertical direction that cannot newly reach the open area
        good_dir, bad_dir = (Not(up), up) if odd else (up, Not(up))
        add_square(
            f"q_m0_{i}_good", f"m0_{i}", good_dir, i,
            entry_cases(i), next_room_entry=False,
        )
        add_square(
            f"q_m0_{i}_bad", f"m0_{i}", bad_dir, i,
            [(opn, "err"), (Not(opn), f"m0_{i}")], next_room_entry=False,
        )
        add_square(
            f"q_m1_{i}_r", f"m1_{i}", right, i,
            entry_cases(i), next_room_entry=False,
        )
        add_square(
            f"q_m1_{i}_l", f"m1_{i}", Not(right), i,
            [(ds, "err"), (And(Not(ds), opn), f"m1_{i}"), (And(Not(ds), Not(opn)), f"m0_{i}")],
            next_room_entry=False,
        )
        if i < rooms:
            # moving right at the doorstep with the door open must enter
            # the next room: staying in this room is the non-conformance
            m2r_cases: list[tuple[Guard, str]] = [(TRUE, "err")]
        else:
            m2r_cases = entry_cases(i)
        add_square(
            f"q_m2_{i}_r", f"m2_{i}", right, i, m2r_cases, next_room_entry=True,
        )
        add_square(
            f"q_m2_{i}_l", f"m2_{i}", Not(right), i,
            entry_cases(i), next_room_entry=False,
        )

    states.append(("collided", IN))
    states.append(("q_collided", OUT))
    transitions.append(Transition("collided", TRUE, "q_collided"))
    transitions.append(Transition("q_collided", TRUE, "collided"))
    states.append(("err", IN))
    states.append(("q_err", OUT))
    transitions.append(Transition("err", TRUE, "q_err"))
    transitions.append(Transition("q_err", TRUE, "err"))

    objective = frozenset({f"m0_{rooms}", f"m1_{rooms}", f"m2_{rooms}"})
    return SpecAutomaton(
        alphabet=alphabet,
        state_names=tuple(n for n, _ in states),
        kinds=dict(states),
        initial="m0_1",
        error_states=frozenset({"err"}),
        transitions=tuple(transitions),
        objectives={f"room{rooms}": objective},
        name=f"passageway@{rooms}",
    )
