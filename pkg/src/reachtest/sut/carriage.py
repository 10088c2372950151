"""Controller for the factory carriage: move cargo to the forward limit.

Inputs are the sensor bits (cargo present, carriage at backward limit,
carriage at forward limit); outputs are the two motor commands.  The
conformant controller starts moving forward exactly when a cargo arrives
at the backward limit and stops the moment the forward limit is reached.
The buggy variant keeps the forward motor on for one extra step after the
forward limit, which the requirement automaton rejects.
"""

from __future__ import annotations

from .session import SutSession

IDLE, MOVING, DONE = range(3)


class CarriageSut(SutSession):
    input_props = ("cargo", "bwdlimit", "fwdlimit")
    output_props = ("movefwd", "movebwd")

    def __init__(self, bug: bool = False):
        self.bug = bug
        self.reset()

    def reset(self) -> None:
        self.phase = IDLE

    def step(self, v_inp: int) -> int:
        cargo = bool(v_inp & 1)
        bwdlimit = bool(v_inp & 2)
        fwdlimit = bool(v_inp & 4)
        movefwd = False
        if self.phase == IDLE:
            if cargo and bwdlimit:
                self.phase = MOVING
                movefwd = True
        elif self.phase == MOVING:
            if fwdlimit:
                self.phase = DONE
                movefwd = self.bug  # conformant: stop immediately
            else:
                movefwd = True
        return 1 if movefwd else 0
