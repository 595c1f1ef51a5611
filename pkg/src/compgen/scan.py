"""SCAN command grammar: parsing, interpretation, and exhaustive enumeration.

The grammar (declaration order fixes the canonical enumeration order):

    C -> S | S "and" S | S "after" S
    S -> V | V "twice" | V "thrice"
    V -> U | "turn" DIR | U DIR | W "opposite" DIR | W "around" DIR
    W -> U | "turn"
    U -> "jump" | "walk" | "run" | "look"
    DIR -> "left" | "right"

Semantics: primitives map to their uppercase action; ``turn d`` -> dTURN;
``u d`` -> dTURN + [[u]]; ``u opposite d`` -> dTURN dTURN + [[u]];
``u around d`` -> 4 x (dTURN + [[u]]); ``x twice``/``thrice`` repeat;
``x and y`` -> [[x]] [[y]]; ``x after y`` -> [[y]] [[x]].  A bare ``turn``
under opposite/around contributes no action of its own, so
``turn around left`` is 4 x LTURN.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

PRIMITIVES = ("jump", "walk", "run", "look")
DIRECTIONS = ("left", "right")
MODIFIER_WORDS = ("opposite", "around")
REPEAT_WORDS = {"twice": 2, "thrice": 3}
CONJUNCTIONS = ("and", "after")

VOCABULARY = frozenset(PRIMITIVES) | frozenset(DIRECTIONS) | {"turn"} | \
    frozenset(MODIFIER_WORDS) | frozenset(REPEAT_WORDS) | frozenset(CONJUNCTIONS)

PRIMITIVE_ACTIONS = {"jump": "JUMP", "walk": "WALK", "run": "RUN", "look": "LOOK"}
TURN_ACTIONS = {"left": "LTURN", "right": "RTURN"}

ROOT_RULE = "root"


class ScanParseError(ValueError):
    """Raised when a token sequence is not a grammatical SCAN command."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at token {position})")
        self.position = position


@dataclass(frozen=True)
class CommandAst:
    """Parse tree node.

    kind is one of prim, turn, directed, opposite, around, repeat, and,
    after.  payload holds the primitive name (prim), the direction (turn,
    directed, opposite, around) or the repetition count (repeat).  A turn
    node with payload None is the degenerate verb slot under
    opposite/around ("turn opposite left").
    """

    kind: str
    payload: Optional[object] = None
    children: tuple["CommandAst", ...] = ()

    def tokens(self) -> tuple[str, ...]:
        """Re-serialize this subtree to its surface command tokens."""
        if self.kind == "prim":
            return (self.payload,)
        if self.kind == "turn":
            return ("turn",) if self.payload is None else ("turn", self.payload)
        if self.kind == "directed":
            return self.children[0].tokens() + (self.payload,)
        if self.kind in ("opposite", "around"):
            return self.children[0].tokens() + (self.kind, self.payload)
        if self.kind == "repeat":
            word = "twice" if self.payload == 2 else "thrice"
            return self.children[0].tokens() + (word,)
        if self.kind in ("and", "after"):
            return self.children[0].tokens() + (self.kind,) + self.children[1].tokens()
        raise AssertionError(f"unknown node kind {self.kind!r}")

    def rule_id(self) -> str:
        if self.kind == "prim":
            return f"prim_{self.payload}"
        if self.kind == "turn":
            return "turn" if self.payload is None else f"turn_{self.payload}"
        if self.kind == "directed":
            return f"dir_{self.payload}"
        if self.kind == "opposite":
            return f"opp_{self.payload}"
        if self.kind == "around":
            return f"around_{self.payload}"
        if self.kind == "repeat":
            return "twice" if self.payload == 2 else "thrice"
        return self.kind  # and / after


@dataclass(frozen=True)
class DerivationTrace:
    """Tree of applied rule ids mirroring the CommandAst shape."""

    rule: str
    children: tuple["DerivationTrace", ...] = ()

    def to_jsonable(self):
        return [self.rule, [c.to_jsonable() for c in self.children]]

    @classmethod
    def from_jsonable(cls, obj) -> "DerivationTrace":
        rule, children = obj
        return cls(rule, tuple(cls.from_jsonable(c) for c in children))

    def iter_nodes(self) -> Iterator["DerivationTrace"]:
        yield self
        for child in self.children:
            yield from child.iter_nodes()


def serialize(ast: CommandAst) -> str:
    return " ".join(ast.tokens())


def parse_command(tokens: Sequence[str] | str) -> CommandAst:
    """Parse a SCAN command; raises ScanParseError for malformed input."""
    if isinstance(tokens, str):
        tokens = tokens.split()
    tokens = list(tokens)
    if not tokens:
        raise ScanParseError("empty command", 0)
    for i, tok in enumerate(tokens):
        if tok not in VOCABULARY:
            raise ScanParseError(f"unknown word {tok!r}", i)
    conj = [i for i, t in enumerate(tokens) if t in CONJUNCTIONS]
    if len(conj) > 1:
        raise ScanParseError(f"unexpected second conjunction {tokens[conj[1]]!r}", conj[1])
    if conj:
        i = conj[0]
        if i == 0:
            raise ScanParseError("conjunction with empty left side", 0)
        if i == len(tokens) - 1:
            raise ScanParseError("unexpected end of input after conjunction", len(tokens))
        left = _parse_conjunct(tokens[:i], 0)
        right = _parse_conjunct(tokens[i + 1:], i + 1)
        return CommandAst(tokens[i], None, (left, right))
    return _parse_conjunct(tokens, 0)


def _parse_conjunct(tokens: list[str], offset: int) -> CommandAst:
    count = None
    if tokens and tokens[-1] in REPEAT_WORDS:
        count = REPEAT_WORDS[tokens[-1]]
        tokens = tokens[:-1]
        if tokens and tokens[-1] in REPEAT_WORDS:
            raise ScanParseError("doubled repetition word", offset + len(tokens) - 1)
    if not tokens:
        raise ScanParseError("missing verb phrase", offset)
    verb = _parse_verb_phrase(tokens, offset)
    if count is not None:
        verb = CommandAst("repeat", count, (verb,))
    return verb


def _parse_verb_phrase(tokens: list[str], offset: int) -> CommandAst:
    head = tokens[0]
    if head in DIRECTIONS or head in MODIFIER_WORDS:
        raise ScanParseError(f"expected a verb, got {head!r}", offset)
    if len(tokens) == 1:
        if head == "turn":
            raise ScanParseError("'turn' requires a direction", offset + 1)
        return CommandAst("prim", head)
    if len(tokens) == 2:
        verb, direction = tokens
        if direction not in DIRECTIONS:
            raise ScanParseError(f"expected a direction, got {direction!r}", offset + 1)
        if verb == "turn":
            return CommandAst("turn", direction)
        return CommandAst("directed", direction, (CommandAst("prim", verb),))
    if len(tokens) == 3:
        verb, modifier, direction = tokens
        if modifier not in MODIFIER_WORDS:
            raise ScanParseError(f"expected 'opposite' or 'around', got {modifier!r}", offset + 1)
        if direction not in DIRECTIONS:
            raise ScanParseError(f"expected a direction, got {direction!r}", offset + 2)
        child = CommandAst("turn") if verb == "turn" else CommandAst("prim", verb)
        return CommandAst(modifier, direction, (child,))
    raise ScanParseError(f"unexpected token {tokens[3]!r}", offset + 3)


def interpret(ast: CommandAst) -> tuple[str, ...]:
    """Map a command parse tree to its action token sequence."""
    kind = ast.kind
    if kind == "prim":
        return (PRIMITIVE_ACTIONS[ast.payload],)
    if kind == "turn":
        return () if ast.payload is None else (TURN_ACTIONS[ast.payload],)
    if kind == "directed":
        return (TURN_ACTIONS[ast.payload],) + interpret(ast.children[0])
    if kind == "opposite":
        turn = TURN_ACTIONS[ast.payload]
        return (turn, turn) + interpret(ast.children[0])
    if kind == "around":
        unit = (TURN_ACTIONS[ast.payload],) + interpret(ast.children[0])
        return unit * 4
    if kind == "repeat":
        return interpret(ast.children[0]) * ast.payload
    if kind == "and":
        return interpret(ast.children[0]) + interpret(ast.children[1])
    if kind == "after":
        return interpret(ast.children[1]) + interpret(ast.children[0])
    raise AssertionError(f"unknown node kind {kind!r}")


def derivation_trace(ast: CommandAst) -> DerivationTrace:
    """Trace of applied rules, wrapped in a root rule so that even a bare
    primitive yields one parent-child compound."""
    return DerivationTrace(ROOT_RULE, (_trace(ast),))


def _trace(ast: CommandAst) -> DerivationTrace:
    return DerivationTrace(ast.rule_id(), tuple(_trace(c) for c in ast.children))


_RULE_PARTS = {}
for _p in PRIMITIVES:
    _RULE_PARTS[f"prim_{_p}"] = ("prim", _p)
for _d in DIRECTIONS:
    _RULE_PARTS[f"turn_{_d}"] = ("turn", _d)
    _RULE_PARTS[f"dir_{_d}"] = ("directed", _d)
    _RULE_PARTS[f"opp_{_d}"] = ("opposite", _d)
    _RULE_PARTS[f"around_{_d}"] = ("around", _d)
_RULE_PARTS["turn"] = ("turn", None)
_RULE_PARTS["twice"] = ("repeat", 2)
_RULE_PARTS["thrice"] = ("repeat", 3)
_RULE_PARTS["and"] = ("and", None)
_RULE_PARTS["after"] = ("after", None)


def replay_trace(trace: DerivationTrace) -> CommandAst:
    """Rebuild the command tree from a derivation trace."""
    node = trace
    if node.rule == ROOT_RULE:
        (node,) = node.children
    kind, payload = _RULE_PARTS[node.rule]
    children = tuple(replay_trace(c) for c in node.children)
    return CommandAst(kind, payload, children)


def _iter_verb_phrases() -> Iterator[CommandAst]:
    # Declaration order: bare primitives, bare turns, directed, opposite, around.
    for p in PRIMITIVES:
        yield CommandAst("prim", p)
    for d in DIRECTIONS:
        yield CommandAst("turn", d)
    for p in PRIMITIVES:
        for d in DIRECTIONS:
            yield CommandAst("directed", d, (CommandAst("prim", p),))
    for kind in MODIFIER_WORDS:
        for verb in PRIMITIVES + ("turn",):
            child = CommandAst("turn") if verb == "turn" else CommandAst("prim", verb)
            for d in DIRECTIONS:
                yield CommandAst(kind, d, (child,))


def _iter_conjuncts() -> Iterator[CommandAst]:
    for v in _iter_verb_phrases():
        yield v
        yield CommandAst("repeat", 2, (v,))
        yield CommandAst("repeat", 3, (v,))


def iter_commands() -> Iterator[CommandAst]:
    """All grammatical commands, once each, in canonical order."""
    conjuncts = list(_iter_conjuncts())
    yield from conjuncts
    for kind in CONJUNCTIONS:
        for left, right in itertools.product(conjuncts, conjuncts):
            yield CommandAst(kind, None, (left, right))


def enumerate_dataset() -> list:
    """Exhaustively instantiate the grammar into Examples with traces."""
    from .data import Example, content_id

    examples = []
    for ast in iter_commands():
        inp = ast.tokens()
        out = interpret(ast)
        examples.append(Example(
            id=content_id(inp, out),
            input=inp,
            output=out,
            derivation=derivation_trace(ast),
            meta={"source": "scan"},
        ))
    return examples
