"""Boolean guard expressions over named propositions.

Guards are stored as small expression trees and evaluated either pointwise
(against a truth assignment) or as bitmasks over all valuations of an
ordered proposition list.  The mask form encodes a guard as an integer in
which bit v is set iff valuation v satisfies the guard, where valuation v
assigns proposition i the bit ``(v >> i) & 1``.  Alphabets in scope are
small (<= ~16 propositions), so masks stay cheap and make satisfiability,
overlap and completeness checks single integer operations.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import SpecError


class Guard:
    """Base class for guard expression nodes."""

    __slots__ = ()

    def evaluate(self, env) -> bool:
        raise NotImplementedError

    def props(self) -> frozenset[str]:
        """All proposition names referenced by this guard."""
        raise NotImplementedError

    def mask(self, props: tuple[str, ...]) -> int:
        """Bitmask of satisfying valuations over the ordered prop list."""
        raise NotImplementedError

    def __str__(self) -> str:
        return format_guard(self)


@dataclass(frozen=True, slots=True)
class Const(Guard):
    value: bool

    def evaluate(self, env):
        return self.value

    def props(self):
        return frozenset()

    def mask(self, props):
        return full_mask(len(props)) if self.value else 0


@dataclass(frozen=True, slots=True)
class Prop(Guard):
    name: str

    def evaluate(self, env):
        try:
            return bool(env[self.name])
        except KeyError:
            raise SpecError(f"unknown proposition {self.name!r}") from None

    def props(self):
        return frozenset((self.name,))

    def mask(self, props):
        try:
            return atom_mask(props.index(self.name), len(props))
        except ValueError:
            raise SpecError(f"unknown proposition {self.name!r}") from None


@dataclass(frozen=True, slots=True)
class Not(Guard):
    operand: Guard

    def evaluate(self, env):
        return not self.operand.evaluate(env)

    def props(self):
        return self.operand.props()

    def mask(self, props):
        return full_mask(len(props)) ^ self.operand.mask(props)


@dataclass(frozen=True, slots=True)
class And(Guard):
    left: Guard
    right: Guard

    def evaluate(self, env):
        return self.left.evaluate(env) and self.right.evaluate(env)

    def props(self):
        return self.left.props() | self.right.props()

    def mask(self, props):
        return self.left.mask(props) & self.right.mask(props)


@dataclass(frozen=True, slots=True)
class Or(Guard):
    left: Guard
    right: Guard

    def evaluate(self, env):
        return self.left.evaluate(env) or self.right.evaluate(env)

    def props(self):
        return self.left.props() | self.right.props()

    def mask(self, props):
        return self.left.mask(props) | self.right.mask(props)


@dataclass(frozen=True, slots=True)
class Implies(Guard):
    left: Guard
    right: Guard

    def evaluate(self, env):
        return (not self.left.evaluate(env)) or self.right.evaluate(env)

    def props(self):
        return self.left.props() | self.right.props()

    def mask(self, props):
        full = full_mask(len(props))
        return (full ^ self.left.mask(props)) | self.right.mask(props)


TRUE = Const(True)
FALSE = Const(False)


def full_mask(n_props: int) -> int:
    return (1 << (1 << n_props)) - 1


def atom_mask(index: int, n_props: int) -> int:
    """Mask of valuations in which proposition ``index`` is true."""
    block = 1 << index
    m = ((1 << block) - 1) << block  # one period: `block` zeros then ones
    span = block << 1
    total = 1 << n_props
    while span < total:
        m |= m << span
        span <<= 1
    return m


def eval_guard(guard: Guard, valuation) -> bool:
    """Evaluate a guard against a truth assignment.

    ``valuation`` is any mapping from proposition name to truthy/falsy.
    Propositions referenced by the guard but absent from the mapping raise
    a SpecError naming the proposition.
    """
    return guard.evaluate(valuation)


def conjoin(a: Guard, b: Guard) -> Guard:
    if a == TRUE:
        return b
    if b == TRUE:
        return a
    return And(a, b)


def disjoin_all(guards) -> Guard:
    guards = list(guards)
    if not guards:
        return FALSE
    out = guards[0]
    for g in guards[1:]:
        out = Or(out, g)
    return out


# ---------------------------------------------------------------------------
# Concrete syntax.
#
#   expr   := imp
#   imp    := or ("=>" imp)?          right associative, lowest precedence
#   or     := and ("|" and)*
#   and    := unary ("&" unary)*
#   unary  := "!" unary | "(" expr ")" | "true" | "false" | ident
# ---------------------------------------------------------------------------

_SYMBOLS = ("=>", "(", ")", "!", "&", "|")


def _tokenize(text: str, line: int | None):
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if text.startswith("=>", i):
            tokens.append(("=>", i))
            i += 2
            continue
        if ch in "()!&|":
            tokens.append((ch, i))
            i += 1
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append((text[i:j], i))
            i = j
            continue
        raise SpecError(f"unexpected character {ch!r} in guard", line, i + 1)
    return tokens


class _GuardParser:
    def __init__(self, tokens, line):
        self.tokens = tokens
        self.line = line
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos][0] if self.pos < len(self.tokens) else None

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message):
        col = self.tokens[self.pos][1] + 1 if self.pos < len(self.tokens) else None
        raise SpecError(message, self.line, col)

    def parse(self):
        expr = self.imp()
        if self.peek() is not None:
            self.fail(f"trailing input {self.peek()!r} in guard")
        return expr

    def imp(self):
        left = self.disj()
        if self.peek() == "=>":
            self.next()
            return Implies(left, self.imp())
        return left

    def disj(self):
        expr = self.conj()
        while self.peek() == "|":
            self.next()
            expr = Or(expr, self.conj())
        return expr

    def conj(self):
        expr = self.unary()
        while self.peek() == "&":
            self.next()
            expr = And(expr, self.unary())
        return expr

    def unary(self):
        tok = self.peek()
        if tok is None:
            self.fail("guard ended unexpectedly")
        if tok == "!":
            self.next()
            return Not(self.unary())
        if tok == "(":
            self.next()
            expr = self.imp()
            if self.peek() != ")":
                self.fail("expected ')'")
            self.next()
            return expr
        if tok in _SYMBOLS:
            self.fail(f"unexpected {tok!r} in guard")
        self.next()
        if tok == "true":
            return TRUE
        if tok == "false":
            return FALSE
        return Prop(tok)


def parse_guard(text: str, line: int | None = None) -> Guard:
    tokens = _tokenize(text, line)
    if not tokens:
        raise SpecError("empty guard", line)
    return _GuardParser(tokens, line).parse()


def _precedence(guard: Guard) -> int:
    if isinstance(guard, Implies):
        return 0
    if isinstance(guard, Or):
        return 1
    if isinstance(guard, And):
        return 2
    return 3


def format_guard(guard: Guard) -> str:
    """Render a guard in the concrete syntax accepted by parse_guard."""

    def render(g: Guard, parent_prec: int) -> str:
        prec = _precedence(g)
        if isinstance(g, Const):
            text = "true" if g.value else "false"
        elif isinstance(g, Prop):
            text = g.name
        elif isinstance(g, Not):
            text = "!" + render(g.operand, 3)
        elif isinstance(g, And):
            # left associative: parenthesize a right-nested conjunction so
            # that parse(format(g)) rebuilds the identical tree
            text = f"{render(g.left, 2)} & {render(g.right, 3)}"
        elif isinstance(g, Or):
            text = f"{render(g.left, 1)} | {render(g.right, 2)}"
        elif isinstance(g, Implies):
            # right associative: parenthesize a left-nested implication
            text = f"{render(g.left, 1)} => {render(g.right, 0)}"
        else:  # pragma: no cover - closed class hierarchy
            raise TypeError(type(g))
        if prec < parent_prec:
            return f"({text})"
        return text

    return render(guard, 0)
