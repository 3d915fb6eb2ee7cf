"""A small statically typed language for transition guards and actions.

Grammar::

    expr   := or
    or     := and ("||" and)*
    and    := cmp ("&&" cmp)*
    cmp    := add (("==" | "!=" | "<" | "<=" | ">" | ">=") add)?
    add    := unary (("+" | "-") unary)*     (a - b reads as a + -b)
    unary  := "!" unary | "-" unary | atom
    atom   := int | "true" | "false" | "'" chars "'" | ident
            | ident "(" args ")" | "(" expr ")"
    action := ident "=" expr ";" | ident "(" args ")" ";"

Values are booleans, integers, strings and lists of strings. String literals
use single quotes; ``\\'`` and ``\\\\`` are the only escapes.
"""

from __future__ import annotations

import re
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from typing import Any, Union

from .context import BOOL, INT, LIST, STRING, VOID, Context, value_type
from .errors import ActionError, EvalError, ExprSyntaxError, ExprTypeError

# -- syntax tree -----------------------------------------------------------


@dataclass(frozen=True)
class Lit:
    value: Any
    type: str

    def __str__(self):
        return to_source(self)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"

    def __str__(self):
        return to_source(self)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"

    def __str__(self):
        return to_source(self)


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple

    def __str__(self):
        return to_source(self)


Expr = Union[Lit, Var, Unary, Binary, Call]


@dataclass(frozen=True)
class Assign:
    name: str
    expr: Expr

    def __str__(self):
        return f"{self.name} = {to_source(self.expr)};"


@dataclass(frozen=True)
class CallStmt:
    call: Call

    def __str__(self):
        return f"{to_source(self.call)};"


ActionStmt = Union[Assign, CallStmt]

COMPARISONS = ("==", "!=", "<", "<=", ">", ">=")
_PREC = {"||": 1, "&&": 2, "+": 4, **{op: 3 for op in COMPARISONS}}
_UNARY_PREC = 5
_ATOM_PREC = 6


def true_lit() -> Lit:
    return Lit(True, BOOL)


# -- builtins --------------------------------------------------------------


@dataclass(frozen=True)
class Builtin:
    name: str
    arg_types: tuple
    result: str
    pure: bool
    impl: Callable | None = None


def _last(items):
    if not items:
        raise EvalError("last() of an empty list")
    return items[-1]


BUILTINS: dict[str, Builtin] = {
    "contains": Builtin("contains", (LIST, STRING), BOOL, True, lambda xs, s: s in xs),
    "len": Builtin("len", (LIST,), INT, True, len),
    "last": Builtin("last", (LIST,), STRING, True, _last),
    # push mutates its first argument, so it is executed by exec_actions
    "push": Builtin("push", (LIST, STRING), VOID, False),
}


# -- tokenizer -------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>'(?:[^'\\]|\\.)*')
  | (?P<op>&&|\|\||==|!=|<=|>=|[<>!+\-(),=;])
""", re.VERBOSE)

_EOF = "end of input"


def _byte_offset(src: str, pos: int) -> int:
    return len(src[:pos].encode("utf-8"))


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    """Tokens as (kind, text, byte offset)."""
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            if src[pos] == "'":
                raise ExprSyntaxError("unterminated string literal", _byte_offset(src, pos),
                                      ("'",))
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", _byte_offset(src, pos),
                                  ("int", "bool", "string", "ident", "operator"))
        kind = m.lastgroup
        if kind != "ws":
            text = m.group()
            if kind == "op":
                kind = text
            elif kind == "ident" and text in ("true", "false"):
                kind = "bool"
            tokens.append((kind, text, _byte_offset(src, pos)))
        pos = m.end()
    tokens.append((_EOF, "", _byte_offset(src, len(src))))
    return tokens


def _unescape(text: str) -> str:
    return re.sub(r"\\(.)", r"\1", text[1:-1])


def _escape(text: str) -> str:
    return "'" + text.replace("\\", "\\\\").replace("'", "\\'") + "'"


# -- parser ----------------------------------------------------------------


class _Parser:
    def __init__(self, src: str):
        self.tokens = _tokenize(src)
        self.i = 0

    @property
    def kind(self):
        return self.tokens[self.i][0]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, *expected):
        kind, text, offset = self.tokens[self.i]
        shown = text if kind != _EOF else _EOF
        raise ExprSyntaxError(f"unexpected {shown!r}", offset, expected)

    def expect(self, kind):
        if self.kind != kind:
            self.fail(kind)
        return self.advance()

    def parse_or(self):
        left = self.parse_and()
        while self.kind == "||":
            self.advance()
            left = Binary("||", left, self.parse_and())
        return left

    def parse_and(self):
        left = self.parse_cmp()
        while self.kind == "&&":
            self.advance()
            left = Binary("&&", left, self.parse_cmp())
        return left

    def parse_cmp(self):
        left = self.parse_add()
        if self.kind in COMPARISONS:
            op = self.advance()[0]
            left = Binary(op, left, self.parse_add())
        return left

    def parse_add(self):
        left = self.parse_unary()
        while self.kind in ("+", "-"):
            op = self.advance()[0]
            right = self.parse_unary()
            # "a - b" is sugar for "a + -b"; trees only ever hold "+"
            left = Binary("+", left, Unary("-", right) if op == "-" else right)
        return left

    def parse_unary(self):
        if self.kind in ("!", "-"):
            op = self.advance()[0]
            return Unary(op, self.parse_unary())
        return self.parse_atom()

    def parse_atom(self):
        kind, text, _ = self.tokens[self.i]
        if kind == "int":
            self.advance()
            return Lit(int(text), INT)
        if kind == "bool":
            self.advance()
            return Lit(text == "true", BOOL)
        if kind == "string":
            self.advance()
            return Lit(_unescape(text), STRING)
        if kind == "ident":
            self.advance()
            if self.kind == "(":
                return self.parse_call(text)
            return Var(text)
        if kind == "(":
            self.advance()
            inner = self.parse_or()
            self.expect(")")
            return inner
        self.fail("int", "bool", "string", "ident", "(", "!", "-")

    def parse_call(self, name):
        self.expect("(")
        args = []
        if self.kind != ")":
            args.append(self.parse_or())
            while self.kind == ",":
                self.advance()
                args.append(self.parse_or())
        if self.kind != ")":
            self.fail(",", ")")
        self.advance()
        return Call(name, tuple(args))

    def parse_statement(self):
        _, name, _ = self.expect("ident")
        if self.kind == "=":
            self.advance()
            stmt = Assign(name, self.parse_or())
        elif self.kind == "(":
            stmt = CallStmt(self.parse_call(name))
        else:
            self.fail("=", "(")
        self.expect(";")
        return stmt


def parse_expr(src: str) -> Expr:
    """Parse a guard expression; raises ExprSyntaxError on malformed input."""
    if not src.strip():
        raise ExprSyntaxError("empty expression", 0, ("int", "bool", "string", "ident", "("))
    p = _Parser(src)
    e = p.parse_or()
    if p.kind != _EOF:
        p.fail(_EOF, "&&", "||", "+", "-", *COMPARISONS)
    return e


def parse_actions(src: str) -> list[ActionStmt]:
    """Parse a sequence of ``;``-terminated action statements (possibly empty)."""
    p = _Parser(src)
    stmts = []
    while p.kind != _EOF:
        stmts.append(p.parse_statement())
    return stmts


# -- pretty printing -------------------------------------------------------


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary):
        return _UNARY_PREC
    return _ATOM_PREC


def to_source(e: Expr) -> str:
    """Render an expression with the minimal parentheses that re-parse to the same tree."""
    if isinstance(e, Lit):
        if e.type == BOOL:
            return "true" if e.value else "false"
        if e.type == STRING:
            return _escape(e.value)
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.name}({', '.join(to_source(a) for a in e.args)})"
    if isinstance(e, Unary):
        inner = to_source(e.operand)
        if _prec(e.operand) < _UNARY_PREC:
            inner = f"({inner})"
        return f"{e.op}{inner}"
    p = _PREC[e.op]
    left, right = to_source(e.left), to_source(e.right)
    # comparisons do not chain, so an equal-precedence left operand needs parentheses too
    if _prec(e.left) < p or (p == 3 and _prec(e.left) == 3):
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {e.op} {right}"


def actions_to_source(stmts: Sequence[ActionStmt]) -> str:
    return " ".join(str(s) for s in stmts)


# -- type checking ---------------------------------------------------------


def type_check(e: Expr, decls: Mapping[str, str], *, allow_actions: bool = False) -> str:
    """Return the static type of ``e`` under the variable declarations ``decls``."""
    if isinstance(e, Lit):
        return e.type
    if isinstance(e, Var):
        if e.name not in decls:
            raise ExprTypeError(f"undeclared variable {e.name!r}", to_source(e))
        return decls[e.name]
    if isinstance(e, Unary):
        t = type_check(e.operand, decls)
        want = BOOL if e.op == "!" else INT
        if t != want:
            raise ExprTypeError(f"operator {e.op} needs {want}, got {t}", to_source(e))
        return want
    if isinstance(e, Binary):
        lt = type_check(e.left, decls)
        rt = type_check(e.right, decls)
        if e.op in ("&&", "||"):
            if lt != BOOL or rt != BOOL:
                raise ExprTypeError(f"operator {e.op} needs bool operands, got {lt} and {rt}",
                                    to_source(e))
            return BOOL
        if e.op == "+":
            if lt == rt and lt in (INT, STRING):
                return lt
            raise ExprTypeError(f"operator + needs two ints or two strings, got {lt} and {rt}",
                                to_source(e))
        allowed = (BOOL, INT, STRING) if e.op in ("==", "!=") else (INT, STRING)
        if lt != rt or lt not in allowed:
            raise ExprTypeError(f"cannot compare {lt} {e.op} {rt}", to_source(e))
        return BOOL
    if isinstance(e, Call):
        builtin = BUILTINS.get(e.name)
        if builtin is None:
            raise ExprTypeError(f"unknown function {e.name!r}", to_source(e))
        if not builtin.pure and not allow_actions:
            raise ExprTypeError(f"{e.name}() is only allowed as an action", to_source(e))
        if len(e.args) != len(builtin.arg_types):
            raise ExprTypeError(
                f"{e.name}() takes {len(builtin.arg_types)} arguments, got {len(e.args)}",
                to_source(e))
        for arg, want in zip(e.args, builtin.arg_types):
            got = type_check(arg, decls)
            if got != want:
                raise ExprTypeError(f"argument of {e.name}() must be {want}, got {got}",
                                    to_source(arg))
        return builtin.result
    raise ExprTypeError(f"not an expression: {e!r}")


def check_guard(e: Expr, decls: Mapping[str, str]) -> None:
    t = type_check(e, decls)
    if t != BOOL:
        raise ExprTypeError(f"guard must be bool, got {t}", to_source(e))


def check_action(stmt: ActionStmt, decls: Mapping[str, str]) -> None:
    if isinstance(stmt, Assign):
        if stmt.name not in decls:
            raise ExprTypeError(f"assignment to undeclared variable {stmt.name!r}", str(stmt))
        t = type_check(stmt.expr, decls)
        if t != decls[stmt.name]:
            raise ExprTypeError(f"cannot assign {t} to {stmt.name} ({decls[stmt.name]})", str(stmt))
        return
    call = stmt.call
    builtin = BUILTINS.get(call.name)
    if builtin is None or builtin.pure:
        raise ExprTypeError("only action builtins may be used as statements", str(stmt))
    type_check(call, decls, allow_actions=True)
    if not isinstance(call.args[0], Var):
        raise ExprTypeError(f"first argument of {call.name}() must be a variable", str(stmt))


# -- evaluation ------------------------------------------------------------


def eval_expr(e: Expr, ctx: Mapping[str, Any]) -> Any:
    """Evaluate ``e`` strictly, short-circuiting ``&&`` and ``||``. Never mutates ``ctx``."""
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Var):
        try:
            return ctx[e.name]
        except KeyError:
            raise EvalError(f"unbound variable {e.name!r}") from None
    if isinstance(e, Binary):
        op = e.op
        if op == "&&":
            return bool(eval_expr(e.left, ctx)) and bool(eval_expr(e.right, ctx))
        if op == "||":
            return bool(eval_expr(e.left, ctx)) or bool(eval_expr(e.right, ctx))
        a = eval_expr(e.left, ctx)
        b = eval_expr(e.right, ctx)
        if op == "+":
            return a + b
        if op == "==":
            return a == b
        if op == "!=":
            return a != b
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        return a >= b
    if isinstance(e, Unary):
        v = eval_expr(e.operand, ctx)
        return (not v) if e.op == "!" else -v
    if isinstance(e, Call):
        builtin = BUILTINS.get(e.name)
        if builtin is None or builtin.impl is None:
            raise EvalError(f"{e.name}() cannot be evaluated in an expression")
        return builtin.impl(*(eval_expr(a, ctx) for a in e.args))
    raise EvalError(f"not an expression: {e!r}")


def exec_actions(stmts: Sequence[ActionStmt], ctx: Context) -> Context:
    """Run ``stmts`` in order and return the resulting context."""
    if not stmts:
        return ctx
    env = dict(ctx)
    for index, stmt in enumerate(stmts):
        try:
            if isinstance(stmt, Assign):
                if stmt.name not in env:
                    raise ActionError(f"undeclared variable {stmt.name!r}", index)
                value = eval_expr(stmt.expr, env)
                if value_type(value) != value_type(env[stmt.name]):
                    raise ActionError(
                        f"{stmt.name} is {value_type(env[stmt.name])}, "
                        f"got {value_type(value)}", index)
                env[stmt.name] = value
            elif stmt.call.name == "push":
                target, item = stmt.call.args
                if not isinstance(target, Var) or target.name not in env:
                    raise ActionError("push() needs a declared list variable", index)
                value = eval_expr(item, env)
                if not isinstance(value, str):
                    raise ActionError("push() needs a string item", index)
                env[target.name] = env[target.name] + (value,)
            else:
                raise ActionError(f"{stmt.call.name}() is not an action", index)
        except (EvalError, TypeError) as exc:
            raise ActionError(str(exc), index) from exc
    return Context._trusted(env)
