"""Grid-world robot moving through a passageway of door-connected rooms.

Rooms are 4x4 grids placed left to right; x grows rightward (0..3), y
grows upward (0..3).  The open area is the bottom row of odd-numbered
rooms and the top row of even-numbered rooms; the doorstep is the
rightmost column of every room but the last.  The door to the next room
is open exactly while the robot stands in the open area, so a transit
requires standing on the open/doorstep corner cell and moving right.

Every step is diagonal: x moves right or left, y moves up or down, both
unconditionally.  A move that would leave the room through a wall or a
closed door is a collision: the robot stays put and the collision output
is raised for that step.  A transit lands in the next room at column 0 in
the same row, ignoring the step's vertical component; this keeps the
parity of x+y compatible with the alternating open rows, without which
the far rooms would be unreachable.

The injectable bug suppresses the transit out of room ``bug_room``
(default: the next-to-last room): the robot stays put and reports its
truthful open/doorstep position with no collision, which is exactly the
behavior the requirement automaton rejects.
"""

from __future__ import annotations

from .session import SutSession

GRID = 4
START_X, START_Y = 0, 3  # top-left, outside the open area


def open_row(room: int) -> int:
    return 0 if room % 2 == 1 else GRID - 1


class PassagewaySut(SutSession):
    input_props = ("right", "up")

    def __init__(self, rooms: int = 10, bug: bool = False, bug_room: int | None = None):
        if rooms < 2:
            raise ValueError("need at least two rooms")
        self.rooms = rooms
        self.bug = bug
        self.bug_room = bug_room if bug_room is not None else rooms - 1
        self.output_props = tuple(f"room_{i}" for i in range(1, rooms + 1)) + (
            "open",
            "doorstep",
            "collision",
        )
        self.reset()

    def reset(self) -> None:
        self.room = 1
        self.x = START_X
        self.y = START_Y

    @property
    def position(self) -> tuple[int, int, int]:
        return (self.room, self.x, self.y)

    def _in_open(self) -> bool:
        return self.y == open_row(self.room)

    def _in_doorstep(self) -> bool:
        return self.x == GRID - 1 and self.room < self.rooms

    def step(self, v_inp: int) -> int:
        right = bool(v_inp & 1)
        up = bool(v_inp & 2)
        collision = False
        if right and self._in_open() and self._in_doorstep():
            # transit: next room, column 0, row preserved
            if self.bug and self.room == self.bug_room:
                pass  # injected non-conformance: the robot silently stays
            else:
                self.room += 1
                self.x = 0
        else:
            nx = self.x + (1 if right else -1)
            ny = self.y + (1 if up else -1)
            if 0 <= nx < GRID and 0 <= ny < GRID:
                self.x, self.y = nx, ny
            else:
                collision = True
        return self._encode(collision)

    def _encode(self, collision: bool) -> int:
        v = 1 << (self.room - 1)
        base = self.rooms
        if self._in_open():
            v |= 1 << base
        if self._in_doorstep():
            v |= 1 << (base + 1)
        if collision:
            v |= 1 << (base + 2)
        return v
