"""Minimal s-expression reader with source positions.

Atoms are kept as :class:`Symbol` tokens; lists are :class:`SList`. Both carry
the (line, column) where they start so callers can report errors precisely.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class SexprError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Symbol:
    name: str
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class SList:
    items: tuple
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, i):
        return self.items[i]

    def __iter__(self):
        return iter(self.items)

    def __str__(self) -> str:
        return "(" + " ".join(str(x) for x in self.items) + ")"


def _tokenize(text: str):
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line, col = line + 1, 1
            i += 1
        elif c.isspace():
            i += 1
            col += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            yield c, line, col
            i += 1
            col += 1
        else:
            start, start_col = i, col
            while i < n and not text[i].isspace() and text[i] not in "();":
                i += 1
                col += 1
            yield text[start:i], line, start_col
    yield None, line, col


def read_all(text: str) -> list:
    """Parse every top-level form in ``text``."""
    stack: list[tuple[list, int, int]] = []
    forms: list = []
    for tok, line, col in _tokenize(text):
        if tok is None:
            if stack:
                _, l0, c0 = stack[-1]
                raise SexprError("unclosed parenthesis", l0, c0)
            return forms
        if tok == "(":
            stack.append(([], line, col))
        elif tok == ")":
            if not stack:
                raise SexprError("unbalanced ')'", line, col)
            items, l0, c0 = stack.pop()
            node = SList(tuple(items), l0, c0)
            (stack[-1][0] if stack else forms).append(node)
        else:
            node = Symbol(tok, line, col)
            (stack[-1][0] if stack else forms).append(node)
    return forms


def position(node) -> tuple[int, int]:
    return node.line, node.col
