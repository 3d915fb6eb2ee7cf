"""Reader for the textual model format (``.efsm``).

Example::

    model Login {
        var tries: int = 0;
        var seen: list = [];
        state v_Form start;
        state v_Done exit;
        state v_Game submodel GamePlay;
        trans e_Submit: v_Form -> v_Done guard "tries < 3" do "tries = tries + 1;";
    }

``#`` and ``//`` start comments that run to the end of the line.
"""

from __future__ import annotations

import re

from ..context import VALUE_TYPES
from ..efsm import EfsmModel, State, Transition, VarDecl
from ..errors import DslSyntaxError, ExprSyntaxError
from ..expr import parse_actions, parse_expr
from .bundle import ModelBundle
from .labels import check_state_label, check_transition_label

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>(?:\#|//)[^\n]*)
  | (?P<arrow>->)
  | (?P<int>-?\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<dq>"(?:[^"\\]|\\.)*")
  | (?P<sq>'(?:[^'\\]|\\.)*')
  | (?P<punct>[{};:=\[\],])
""", re.VERBOSE)

KEYWORDS = {"model", "var", "state", "trans", "start", "exit", "submodel", "guard", "do"}


class _Tok:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind, self.text, self.line, self.col = kind, text, line, col


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DslSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            value = m.group()
            if kind == "punct":
                kind = value
            toks.append(_Tok(kind, value, line, pos - line_start + 1))
        chunk = m.group()
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


def _unquote(text: str) -> str:
    return re.sub(r"\\(.)", r"\1", text[1:-1])


class _DslParser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def fail(self, message, tok=None):
        tok = tok or self.tok
        raise DslSyntaxError(message, tok.line, tok.col)

    def next(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, kind, text=None) -> _Tok:
        tok = self.tok
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            shown = tok.text or "end of input"
            self.fail(f"expected {want!r}, found {shown!r}")
        return self.next()

    def at_keyword(self, word):
        return self.tok.kind == "ident" and self.tok.text == word

    def name(self) -> _Tok:
        return self.expect("ident")

    def parse(self) -> list[EfsmModel]:
        models = []
        while self.tok.kind != "eof":
            models.append(self.parse_model())
        if not models:
            self.fail("expected at least one 'model' block")
        return models

    def parse_model(self) -> EfsmModel:
        self.expect("ident", "model")
        name = self.name().text
        self.expect("{")
        variables, states, transitions = [], [], []
        while self.tok.kind != "}":
            if self.at_keyword("var"):
                variables.append(self.parse_var())
            elif self.at_keyword("state"):
                states.append(self.parse_state())
            elif self.at_keyword("trans"):
                transitions.append(self.parse_trans())
            elif self.tok.kind == "eof":
                self.fail(f"unterminated model {name!r}")
            else:
                self.fail(f"expected 'var', 'state', 'trans' or '}}', found {self.tok.text!r}")
        self.expect("}")
        return EfsmModel(name, tuple(states), tuple(transitions), tuple(variables))

    def parse_var(self) -> VarDecl:
        self.next()
        name_tok = self.name()
        self.expect(":")
        type_tok = self.name()
        if type_tok.text not in VALUE_TYPES:
            self.fail(f"unknown type {type_tok.text!r}", type_tok)
        self.expect("=")
        value_tok = self.tok
        value = self.parse_literal()
        self.expect(";")
        try:
            return VarDecl(name_tok.text, type_tok.text, value)
        except TypeError:
            self.fail(f"initial value does not match type {type_tok.text}", value_tok)

    def parse_literal(self):
        tok = self.tok
        if tok.kind == "int":
            self.next()
            return int(tok.text)
        if tok.kind == "sq":
            self.next()
            return _unquote(tok.text)
        if tok.kind == "ident" and tok.text in ("true", "false"):
            self.next()
            return tok.text == "true"
        if tok.kind == "[":
            self.next()
            items = []
            while self.tok.kind != "]":
                items.append(_unquote(self.expect("sq").text))
                if self.tok.kind == ",":
                    self.next()
                elif self.tok.kind != "]":
                    self.fail("expected ',' or ']'")
            self.next()
            return items
        self.fail(f"expected a literal, found {tok.text!r}")

    def parse_state(self) -> State:
        self.next()
        label_tok = self.name()
        self._check(check_state_label, label_tok)
        is_start = is_exit = False
        submodel = None
        while self.tok.kind != ";":
            if self.at_keyword("start"):
                self.next()
                is_start = True
            elif self.at_keyword("exit"):
                self.next()
                is_exit = True
            elif self.at_keyword("submodel"):
                self.next()
                submodel = self.name().text
            else:
                self.fail(f"expected 'start', 'exit', 'submodel' or ';', found {self.tok.text!r}")
        self.next()
        return State(label_tok.text, is_start, is_exit, submodel)

    def parse_trans(self) -> Transition:
        self.next()
        label_tok = self.name()
        self._check(check_transition_label, label_tok)
        self.expect(":")
        source = self.name()
        self._check(check_state_label, source)
        self.expect("arrow")
        target = self.name()
        self._check(check_state_label, target)
        guard = None
        actions = ()
        while self.tok.kind != ";":
            if self.at_keyword("guard"):
                self.next()
                src_tok = self.expect("dq")
                guard = self._expr(parse_expr, src_tok)
            elif self.at_keyword("do"):
                self.next()
                src_tok = self.expect("dq")
                actions = tuple(self._expr(parse_actions, src_tok))
            else:
                self.fail(f"expected 'guard', 'do' or ';', found {self.tok.text!r}")
        self.next()
        return Transition(label_tok.text, source.text, target.text, guard, actions)

    def _check(self, checker, tok):
        try:
            checker(tok.text)
        except ValueError as exc:
            self.fail(str(exc), tok)

    def _expr(self, parse, tok):
        try:
            return parse(_unquote(tok.text))
        except ExprSyntaxError as exc:
            # +1 for the opening quote; escapes inside the string may shift this slightly
            raise DslSyntaxError(f"in embedded expression: {exc}", tok.line,
                                 tok.col + 1 + exc.offset) from exc


def parse_dsl(text: str) -> ModelBundle:
    """Parse one or more ``model`` blocks; the first block is the main model."""
    models = _DslParser(text).parse()
    names = [m.name for m in models]
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise DslSyntaxError(f"duplicate model name(s) {sorted(dupes)}", 1, 1)
    return ModelBundle({m.name: m for m in models}, models[0].name)

