"""Session contract for systems under test.

A session is a resettable synchronous process: the tester sets an input
valuation, the system immediately answers with an output valuation.
Valuations are integers in the declared proposition order (bit i is the
i-th declared proposition).  Sessions are input-complete; the bundled
ones are also output-deterministic, so replaying an input sequence after
a reset reproduces the same outputs.  A session belongs to one test
attempt at a time.
"""

from __future__ import annotations

from ..automaton import IN, SpecAutomaton, compiled
from ..errors import ContractError, TransportError


class SutSession:
    """Behavioral contract; concrete sessions override reset/step."""

    input_props: tuple[str, ...] = ()
    output_props: tuple[str, ...] = ()

    def reset(self) -> None:
        raise NotImplementedError

    def step(self, v_inp: int) -> int:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class AutomatonSut(SutSession):
    """Runs an implementation modeled as an output-deterministic automaton.

    Every input state must enable every input valuation, and every output
    state must have exactly one outgoing transition; the emitted output is
    the transition's unique satisfying valuation (lowest, if the guard
    admits several).
    """

    def __init__(self, automaton: SpecAutomaton):
        self.automaton = automaton
        self.input_props = automaton.alphabet.inputs
        self.output_props = automaton.alphabet.outputs
        self._eng = compiled(automaton)
        self._emit: dict[str, tuple[int, str]] = {}
        for q in automaton.output_states:
            outgoing = automaton.outgoing(q)
            if len(outgoing) != 1:
                raise ContractError(
                    f"output state {q} has {len(outgoing)} transitions; "
                    "an implementation must be output-deterministic"
                )
            mask = outgoing[0].guard.mask(automaton.alphabet.outputs)
            if mask == 0:
                raise ContractError(f"output state {q} has an unsatisfiable guard")
            v_out = (mask & -mask).bit_length() - 1
            self._emit[q] = (v_out, outgoing[0].target)
        self._state = automaton.initial

    def reset(self) -> None:
        self._state = self.automaton.initial

    def step(self, v_inp: int) -> int:
        q = self._eng.square(self._state, v_inp)
        if q is None:
            raise TransportError(
                f"implementation state {self._state} refuses input "
                f"{self.automaton.alphabet.format_input(v_inp)}"
            )
        v_out, nxt = self._emit[q]
        self._state = nxt
        return v_out
