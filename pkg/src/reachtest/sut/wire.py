"""Line protocol for driving an external process as the system under test.

All messages are LF-terminated ASCII lines.  The child announces its
alphabet on startup::

    INPUTS right up
    OUTPUTS room_1 ... collision
    READY

after which the tester sends ``RESET`` (answered ``OK``), ``STEP <bits>``
(answered ``OUT <bits>``, bits in declared order) and finally ``QUIT``
(no answer; the child exits 0).  Any other line is answered with
``ERR <message>`` and the session is considered violated.
"""

from __future__ import annotations

import os
import select
import shlex
import subprocess
import sys

from ..errors import TransportError
from .session import SutSession

DEFAULT_TIMEOUT = 5.0


class ExternalSut(SutSession):
    """Client side: a child process attached via the wire protocol."""

    def __init__(self, command, timeout: float = DEFAULT_TIMEOUT):
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = command
        self.timeout = timeout
        try:
            self.proc = subprocess.Popen(
                command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                bufsize=0,
            )
        except OSError as exc:
            raise TransportError(f"cannot launch {command!r}: {exc}") from None
        self._buffer = b""
        self._handshake()

    def _read_line(self) -> str:
        # buffer raw bytes ourselves so select() sees exactly what we see
        fd = self.proc.stdout.fileno()
        while b"\n" not in self._buffer:
            ready, _, _ = select.select([fd], [], [], self.timeout)
            if not ready:
                raise TransportError(
                    f"timeout after {self.timeout}s waiting for the SUT"
                )
            chunk = os.read(fd, 4096)
            if chunk == b"":
                raise TransportError("broken pipe: the SUT closed its output")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line.rstrip(b"\r").decode("ascii", errors="replace")

    def _send(self, line: str) -> None:
        try:
            self.proc.stdin.write((line + "\n").encode("ascii"))
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise TransportError(f"broken pipe writing to the SUT: {exc}") from None

    def _handshake(self) -> None:
        line = self._read_line()
        if not line.startswith("INPUTS "):
            raise TransportError(f"bad handshake, expected INPUTS line, got {line!r}")
        self.input_props = tuple(line.split()[1:])
        line = self._read_line()
        if not line.startswith("OUTPUTS "):
            raise TransportError(f"bad handshake, expected OUTPUTS line, got {line!r}")
        self.output_props = tuple(line.split()[1:])
        line = self._read_line()
        if line != "READY":
            raise TransportError(f"bad handshake, expected READY, got {line!r}")

    def reset(self) -> None:
        self._send("RESET")
        reply = self._read_line()
        if reply != "OK":
            raise TransportError(f"RESET answered {reply!r}")

    def step(self, v_inp: int) -> int:
        bits = "".join(
            "1" if (v_inp >> i) & 1 else "0" for i in range(len(self.input_props))
        )
        self._send(f"STEP {bits}")
        reply = self._read_line()
        if not reply.startswith("OUT "):
            raise TransportError(f"STEP answered {reply!r}")
        out_bits = reply[4:]
        if len(out_bits) != len(self.output_props) or any(
            c not in "01" for c in out_bits
        ):
            raise TransportError(f"malformed output bits {out_bits!r}")
        v_out = 0
        for i, c in enumerate(out_bits):
            if c == "1":
                v_out |= 1 << i
        return v_out

    def close(self) -> None:
        if self.proc.poll() is None:
            try:
                self._send("QUIT")
            except TransportError:
                pass
            try:
                self.proc.wait(timeout=self.timeout)
            except subprocess.TimeoutExpired:
                self.proc.kill()
        if self.proc.stdin:
            self.proc.stdin.close()
        if self.proc.stdout:
            self.proc.stdout.close()


def spawn_external(command, expected_alphabet=None, timeout: float = DEFAULT_TIMEOUT) -> ExternalSut:
    """Launch a child SUT and validate its declared alphabet.

    When ``expected_alphabet`` is given, the child's INPUTS/OUTPUTS lines
    must match its proposition names and order exactly.
    """
    session = ExternalSut(command, timeout=timeout)
    if expected_alphabet is not None:
        if (
            session.input_props != expected_alphabet.inputs
            or session.output_props != expected_alphabet.outputs
        ):
            session.close()
            raise TransportError(
                "SUT alphabet mismatch: declared "
                f"inputs={session.input_props} outputs={session.output_props}, "
                f"expected inputs={expected_alphabet.inputs} "
                f"outputs={expected_alphabet.outputs}"
            )
    return session


def serve_session(session: SutSession, stdin=None, stdout=None) -> int:
    """Serve an in-process session over the wire protocol (the child side).

    Returns the exit code: 0 after QUIT or end of input.
    """
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout

    def send(line: str) -> None:
        stdout.write(line + "\n")
        stdout.flush()

    send("INPUTS " + " ".join(session.input_props))
    send("OUTPUTS " + " ".join(session.output_props))
    send("READY")
    n_in = len(session.input_props)
    for raw in stdin:
        line = raw.rstrip("\n").rstrip("\r")
        if line == "QUIT":
            return 0
        if line == "RESET":
            session.reset()
            send("OK")
            continue
        if line.startswith("STEP "):
            bits = line[5:]
            if len(bits) != n_in or any(c not in "01" for c in bits):
                send(f"ERR expected {n_in} input bits, got {bits!r}")
                continue
            v_inp = 0
            for i, c in enumerate(bits):
                if c == "1":
                    v_inp |= 1 << i
            v_out = session.step(v_inp)
            send("OUT " + "".join(
                "1" if (v_out >> i) & 1 else "0"
                for i in range(len(session.output_props))
            ))
            continue
        send(f"ERR unknown command {line.split(' ', 1)[0]!r}")
    return 0
