"""Boolean keyword query grammar.

    expr    := or_expr
    or_expr := and_expr ( OR and_expr )*
    and_expr:= not_expr ( AND not_expr )*
    not_expr:= NOT not_expr | atom
    atom    := KEYWORD | "quoted keyword" | ( expr )

Operator names are case-insensitive and reserved. Precedence NOT > AND > OR,
binary operators associate left. Atoms are normalized keywords; quote an
atom that contains spaces. Parse errors carry the character position. The
browser console implements the identical grammar, pinned by a shared
expression corpus.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .errors import MalformedInput
from .indexer import normalize_keyword

MAX_ATOMS = 8


@dataclass(frozen=True)
class Atom:
    keyword: str


@dataclass(frozen=True)
class Not:
    child: "Node"


@dataclass(frozen=True)
class And:
    lhs: "Node"
    rhs: "Node"


@dataclass(frozen=True)
class Or:
    lhs: "Node"
    rhs: "Node"


Node = Union[Atom, Not, And, Or]


class ParseError(MalformedInput):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


@dataclass(frozen=True)
class _Token:
    kind: str  # op | atom | lparen | rparen
    text: str
    pos: int


_RESERVED = {"or", "and", "not"}


def _tokenize(expr: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    while i < len(expr):
        ch = expr[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "(":
            tokens.append(_Token("lparen", "(", i))
            i += 1
        elif ch == ")":
            tokens.append(_Token("rparen", ")", i))
            i += 1
        elif ch == '"':
            j = expr.find('"', i + 1)
            if j < 0:
                raise ParseError("unterminated quote", i)
            tokens.append(_Token("atom", expr[i + 1:j], i))
            i = j + 1
        else:
            j = i
            while j < len(expr) and not expr[j].isspace() and expr[j] not in '()"':
                j += 1
            word = expr[i:j]
            if word.lower() in _RESERVED:
                tokens.append(_Token("op", word.lower(), i))
            else:
                tokens.append(_Token("atom", word, i))
            i = j
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], length: int):
        self.tokens = tokens
        self.i = 0
        self.end = length

    def _peek(self) -> _Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def _next(self) -> _Token:
        tok = self._peek()
        if tok is None:
            raise ParseError("unexpected end of expression", self.end)
        self.i += 1
        return tok

    def parse(self) -> Node:
        node = self.or_expr()
        tok = self._peek()
        if tok is not None:
            raise ParseError(f"unexpected {tok.text!r}", tok.pos)
        return node

    def or_expr(self) -> Node:
        node = self.and_expr()
        while (tok := self._peek()) and tok.kind == "op" and tok.text == "or":
            self._next()
            node = Or(node, self.and_expr())
        return node

    def and_expr(self) -> Node:
        node = self.not_expr()
        while (tok := self._peek()) and tok.kind == "op" and tok.text == "and":
            self._next()
            node = And(node, self.not_expr())
        return node

    def not_expr(self) -> Node:
        tok = self._peek()
        if tok is not None and tok.kind == "op" and tok.text == "not":
            self._next()
            return Not(self.not_expr())
        return self.atom()

    def atom(self) -> Node:
        tok = self._next()
        if tok.kind == "lparen":
            node = self.or_expr()
            closing = self._peek()
            if closing is None or closing.kind != "rparen":
                pos = closing.pos if closing else self.end
                raise ParseError("expected ')'", pos)
            self._next()
            return node
        if tok.kind == "atom":
            try:
                return Atom(normalize_keyword(tok.text))
            except MalformedInput:
                raise ParseError("empty keyword", tok.pos) from None
        raise ParseError(f"unexpected {tok.text!r}", tok.pos)


def count_atoms(node: Node) -> int:
    if isinstance(node, Atom):
        return 1
    if isinstance(node, Not):
        return count_atoms(node.child)
    return count_atoms(node.lhs) + count_atoms(node.rhs)


def parse(expr: str) -> Node:
    """Parse an expression into an AST; atoms come out normalized."""
    tokens = _tokenize(expr)
    if not tokens:
        raise ParseError("empty expression", 0)
    node = _Parser(tokens, len(expr)).parse()
    atoms = count_atoms(node)
    if atoms > MAX_ATOMS:
        raise MalformedInput(f"query has {atoms} atoms; the limit is {MAX_ATOMS}")
    return node


def render(node: Node) -> str:
    """Canonical text form; render(parse(x)) reparses to an identical AST."""
    def fmt(n: Node, parent_prec: int) -> str:
        if isinstance(n, Atom):
            needs_quote = any(c.isspace() for c in n.keyword) or n.keyword.lower() in _RESERVED
            return f'"{n.keyword}"' if needs_quote else n.keyword
        if isinstance(n, Not):
            return f"NOT {fmt(n.child, 3)}"
        prec = 2 if isinstance(n, And) else 1
        op = "AND" if isinstance(n, And) else "OR"
        text = f"{fmt(n.lhs, prec)} {op} {fmt(n.rhs, prec + 1)}"
        return f"({text})" if prec < parent_prec else text

    return fmt(node, 0)


def to_json(node: Node) -> dict:
    """JSON shape shared with the browser console's parser."""
    if isinstance(node, Atom):
        return {"op": "atom", "keyword": node.keyword}
    if isinstance(node, Not):
        return {"op": "not", "child": to_json(node.child)}
    op = "and" if isinstance(node, And) else "or"
    return {"op": op, "lhs": to_json(node.lhs), "rhs": to_json(node.rhs)}
