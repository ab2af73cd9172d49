"""Tokenizer and parser for the Turtle subset used by mapping documents.

Supported: ``@prefix``/``PREFIX`` and ``@base``/``BASE`` directives, IRIs,
prefixed names, ``_:`` blank node labels, ``[ ... ]`` anonymous blank nodes,
single- and double-quoted string literals (short and long form), the ``a``
keyword and ``;`` ``,`` ``.`` punctuation.  Collections, numeric/boolean
shorthand and datatyped or language-tagged literals are rejected.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, NamedTuple

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"


class MappingError(Exception):
    """Raised for any problem with a mapping document.

    ``line`` and ``col`` are 1-based and ``None`` when the problem has no
    single source position.
    """

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.message = message
        self.line = line
        self.col = col
        if line is not None:
            message = f"{message} (line {line}, col {col})"
        super().__init__(message)


class TurtleSyntaxError(MappingError):
    pass


@dataclass(frozen=True)
class Node:
    """An RDF term as found in the document.

    ``kind`` is one of ``iri``, ``bnode`` or ``literal``.
    """

    kind: str
    value: str

    def __str__(self) -> str:
        if self.kind == "iri":
            return f"<{self.value}>"
        if self.kind == "bnode":
            return f"_:{self.value}"
        return '"' + self.value.replace("\\", "\\\\").replace('"', '\\"') + '"'


class Triple(NamedTuple):
    subject: Node
    predicate: Node
    object: Node
    line: int
    col: int


class Token(NamedTuple):
    kind: str
    value: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<iri><[^<>"{}|^`\\\x00-\x20]*>)
  | (?P<long_string>\"\"\"(?:[^"\\]|\\.|"(?!""))*\"\"\"|'''(?:[^'\\]|\\.|'(?!''))*''')
  | (?P<string>"(?:[^"\\\n\r]|\\.)*"|'(?:[^'\\\n\r]|\\.)*')
  | (?P<directive>@prefix\b|@base\b)
  | (?P<bnode>_:[A-Za-z0-9_](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?)
  | (?P<pname>(?:[A-Za-z][A-Za-z0-9_\-]*)?:(?:[A-Za-z0-9_:%](?:[A-Za-z0-9_.:%\-]*[A-Za-z0-9_:%\-])?)?)
  | (?P<word>[A-Za-z][A-Za-z0-9_\-]*)
  | (?P<punct>[\[\];,.()])
  | (?P<other>.)
    """,
    re.VERBOSE | re.DOTALL,
)

_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


def tokenize(text: str) -> Iterator[Token]:
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        kind = m.lastgroup
        value = m.group()
        col = pos - line_start + 1
        if kind == "other":
            if value in "^@":
                raise TurtleSyntaxError("datatyped or language-tagged literals are not supported", line, col)
            if value in "+-0123456789":
                raise TurtleSyntaxError("numeric literals are not supported", line, col)
            raise TurtleSyntaxError(f"unexpected character {value!r}", line, col)
        if kind not in ("ws", "comment"):
            yield Token(kind, value, line, col)
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()
    yield Token("eof", "", line, pos - line_start + 1)


def _unescape(body: str, tok: Token) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        nxt = body[i + 1]
        if nxt in _ESCAPES:
            out.append(_ESCAPES[nxt])
            i += 2
        elif nxt in "uU":
            width = 4 if nxt == "u" else 8
            hexdigits = body[i + 2 : i + 2 + width]
            if len(hexdigits) != width or not re.fullmatch(r"[0-9A-Fa-f]+", hexdigits):
                raise TurtleSyntaxError("bad unicode escape", tok.line, tok.col)
            out.append(chr(int(hexdigits, 16)))
            i += 2 + width
        else:
            raise TurtleSyntaxError(f"bad escape \\{nxt}", tok.line, tok.col)
    return "".join(out)


class TurtleParser:
    """Recursive-descent parser producing positioned triples.

    ``prefixes`` seeds the namespace table; prefixes the document declares
    override the seeds.  Using an undeclared prefix is an error.
    """

    def __init__(self, text: str, prefixes: dict[str, str] | None = None, base: str = ""):
        self.tokens = list(tokenize(text))
        self.i = 0
        self.prefixes = dict(prefixes or {})
        self.base = base
        self.triples: list[Triple] = []
        self._bnode_count = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def _next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def _expect(self, value: str) -> Token:
        tok = self._next()
        if tok.value != value or tok.kind not in ("punct", "word"):
            raise TurtleSyntaxError(f"expected {value!r}, found {tok.value or 'end of input'!r}", tok.line, tok.col)
        return tok

    def _fresh_bnode(self) -> Node:
        self._bnode_count += 1
        return Node("bnode", f"anon{self._bnode_count}")

    def parse(self) -> list[Triple]:
        while self.tok.kind != "eof":
            if self.tok.kind == "directive" or (
                self.tok.kind == "word" and self.tok.value.upper() in ("PREFIX", "BASE")
            ):
                self._directive()
            else:
                self._statement()
        return self.triples

    def _directive(self) -> None:
        tok = self._next()
        sparql_style = tok.kind == "word"
        keyword = tok.value.lstrip("@").lower()
        if keyword == "prefix":
            name = self._next()
            if name.kind != "pname" or not name.value.endswith(":") or name.value.count(":") != 1:
                raise TurtleSyntaxError("expected prefix name ending in ':'", name.line, name.col)
            iri = self._next()
            if iri.kind != "iri":
                raise TurtleSyntaxError("expected IRI in prefix declaration", iri.line, iri.col)
            self.prefixes[name.value[:-1]] = self._resolve(_unescape(iri.value[1:-1], iri))
        else:
            iri = self._next()
            if iri.kind != "iri":
                raise TurtleSyntaxError("expected IRI in base declaration", iri.line, iri.col)
            self.base = self._resolve(iri.value[1:-1])
        if not sparql_style:
            self._expect(".")

    def _resolve(self, iri: str) -> str:
        if re.match(r"[A-Za-z][A-Za-z0-9+.\-]*:", iri) or not self.base:
            return iri
        return self.base + iri

    def _statement(self) -> None:
        tok = self.tok
        if tok.kind == "punct" and tok.value == "[":
            subject = self._blank_node_property_list()
            if self.tok.value == ".":
                self._next()
                return
        else:
            subject = self._subject()
        self._predicate_object_list(subject)
        self._expect(".")

    def _subject(self) -> Node:
        tok = self._next()
        if tok.kind == "iri":
            return Node("iri", self._resolve(_unescape(tok.value[1:-1], tok)))
        if tok.kind == "pname":
            return Node("iri", self._expand(tok))
        if tok.kind == "bnode":
            return Node("bnode", tok.value[2:])
        raise TurtleSyntaxError(f"expected subject, found {tok.value or 'end of input'!r}", tok.line, tok.col)

    def _expand(self, tok: Token) -> str:
        prefix, _, local = tok.value.partition(":")
        if prefix not in self.prefixes:
            raise TurtleSyntaxError(f"unknown prefix {prefix + ':'!r}", tok.line, tok.col)
        return self.prefixes[prefix] + local

    def _predicate_object_list(self, subject: Node) -> None:
        while True:
            ptok = self._next()
            if ptok.kind == "word" and ptok.value == "a":
                predicate = Node("iri", RDF_TYPE)
            elif ptok.kind == "iri":
                predicate = Node("iri", self._resolve(_unescape(ptok.value[1:-1], ptok)))
            elif ptok.kind == "pname":
                predicate = Node("iri", self._expand(ptok))
            else:
                raise TurtleSyntaxError(
                    f"expected predicate, found {ptok.value or 'end of input'!r}", ptok.line, ptok.col
                )
            while True:
                obj = self._object()
                self.triples.append(Triple(subject, predicate, obj, ptok.line, ptok.col))
                if self.tok.value == "," and self.tok.kind == "punct":
                    self._next()
                    continue
                break
            if self.tok.value == ";" and self.tok.kind == "punct":
                while self.tok.value == ";" and self.tok.kind == "punct":
                    self._next()
                # a trailing ';' may close the list
                if self.tok.kind == "punct" and self.tok.value in ".]":
                    return
                continue
            return

    def _object(self) -> Node:
        tok = self.tok
        if tok.kind == "punct" and tok.value == "[":
            return self._blank_node_property_list()
        if tok.kind == "punct" and tok.value == "(":
            raise TurtleSyntaxError("collections are not supported", tok.line, tok.col)
        if tok.kind in ("string", "long_string"):
            self._next()
            quote = 3 if tok.kind == "long_string" else 1
            return Node("literal", _unescape(tok.value[quote:-quote], tok))
        if tok.kind == "word" and tok.value in ("true", "false"):
            raise TurtleSyntaxError("boolean literals are not supported", tok.line, tok.col)
        return self._subject()

    def _blank_node_property_list(self) -> Node:
        self._expect("[")
        node = self._fresh_bnode()
        if self.tok.kind == "punct" and self.tok.value == "]":
            self._next()
            return node
        self._predicate_object_list(node)
        self._expect("]")
        return node


def parse_turtle(text: str, prefixes: dict[str, str] | None = None, base: str = "") -> list[Triple]:
    return TurtleParser(text, prefixes, base).parse()
