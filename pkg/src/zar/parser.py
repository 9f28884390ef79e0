"""Concrete syntax for guarded-command programs: lexer, parser, printer.

Statement grammar (semicolon-separated; `#` comments run to end of line):

    stmt := "skip" | ident "<-" expr | "observe" expr
          | "if" expr block "else" block
          | "choice" expr block block
          | "{" program "}" "[" expr "]" "{" program "}"
          | "uniform" expr "as" ident block
          | "while" expr block
          | "flip" ident expr

`flip x p` is sugar for `choice p { x <- true } { x <- false }`, and the
bracketed form is the same node as `choice`. Expressions use the usual
precedence (or < and < not < comparisons < additive < multiplicative <
unary minus), with `a > b` and `a >= b` accepted as the flipped `<`/`<=`.

Literals: division of two integer literals folds to an exact rational
constant, as do decimal literals (`0.3` is 3/10, not a float), so `2/3`
is both a probability literal and ordinary division. pretty_print emits
a canonical form whose reparse is the identity on parser-produced ASTs;
sequencing prints flattened and reparses right-nested.

Lines of the form `#param x = <expr>` are pragmas: they suggest initial
state bindings (parse_pragmas) but are ordinary comments to the parser.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import NamedTuple

from .core import (
    Abs, Add, And, Assign, Choice, Command, Const, Div, Eq, Expr, Floor,
    IsEven, IsPrime, Ite, Le, Lt, Mod, Mul, Neg, Not, Observe, Or, Seq,
    Skip, Sub, UniformBind, Var, While, eval_expr, seq,
)
from .errors import ArityError, ParseError

_KEYWORDS = {
    "skip", "observe", "if", "else", "choice", "uniform", "as", "while",
    "flip", "true", "false", "and", "or", "not", "mod",
    "is_prime", "is_even", "floor", "abs",
}

_BUILTINS = {"is_prime": IsPrime, "is_even": IsEven, "floor": Floor, "abs": Abs}


class _Tok(NamedTuple):
    kind: str  # int | dec | ident | kw | op | eof
    text: str
    line: int
    col: int


_MASTER = re.compile(
    r"""(?P<ws>\s+)
      | (?P<comment>\#[^\n]*)
      | (?P<dec>\d+\.\d+)
      | (?P<int>\d+)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<op><-|<=|>=|<|>|=|\+|-|\*|/|\(|\)|\{|\}|\[|\]|;|,)
    """,
    re.VERBOSE,
)


def _lex(text: str) -> list[_Tok]:
    toks = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _MASTER.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind == "ident" and s in _KEYWORDS:
            kind = "kw"
        if kind not in ("ws", "comment"):
            toks.append(_Tok(kind, s, line, col))
        nl = s.count("\n")
        if nl:
            line += nl
            col = len(s) - s.rfind("\n")
        else:
            col += len(s)
        pos = m.end()
    toks.append(_Tok("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def at(self, kind, text=None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def fail(self, msg):
        t = self.peek()
        raise ParseError(msg, t.line, t.col)

    def expect(self, kind, text=None) -> _Tok:
        if not self.at(kind, text):
            got = self.peek().text or "end of input"
            self.fail(f"expected {text or kind!r}, found {got!r}")
        return self.next()

    # ---- statements

    def program(self, stop) -> Command:
        cs = [self.stmt()]
        while self.at("op", ";"):
            self.next()
            if (stop == "}" and self.at("op", "}")) or (stop == "eof" and self.at("eof")):
                break  # tolerate a trailing separator
            cs.append(self.stmt())
        return seq(*cs)

    def block(self) -> Command:
        self.expect("op", "{")
        c = self.program("}")
        self.expect("op", "}")
        return c

    def stmt(self) -> Command:
        t = self.peek()
        if t.kind == "kw":
            if t.text == "skip":
                self.next()
                return Skip()
            if t.text == "observe":
                self.next()
                return Observe(self.expr())
            if t.text == "if":
                self.next()
                e = self.expr()
                c1 = self.block()
                self.expect("kw", "else")
                return Ite(e, c1, self.block())
            if t.text == "choice":
                self.next()
                p = self.expr()
                c1 = self.block()
                return Choice(p, c1, self.block())
            if t.text == "uniform":
                self.next()
                e = self.expr()
                self.expect("kw", "as")
                x = self.expect("ident").text
                return UniformBind(e, x, self.block())
            if t.text == "while":
                self.next()
                e = self.expr()
                return While(e, self.block())
            if t.text == "flip":
                self.next()
                x = self.expect("ident").text
                p = self.expr()
                return Choice(p, Assign(x, Const(True)), Assign(x, Const(False)))
            self.fail(f"unexpected keyword {t.text!r}")
        if t.kind == "op" and t.text == "{":
            c1 = self.block()
            self.expect("op", "[")
            p = self.expr()
            self.expect("op", "]")
            return Choice(p, c1, self.block())
        if t.kind == "ident":
            x = self.next().text
            self.expect("op", "<-")
            return Assign(x, self.expr())
        self.fail(f"expected a statement, found {t.text or 'end of input'!r}")

    # ---- expressions

    def expr(self) -> Expr:
        return self.e_or()

    def e_or(self) -> Expr:
        a = self.e_and()
        while self.at("kw", "or"):
            self.next()
            a = Or(a, self.e_and())
        return a

    def e_and(self) -> Expr:
        a = self.e_not()
        while self.at("kw", "and"):
            self.next()
            a = And(a, self.e_not())
        return a

    def e_not(self) -> Expr:
        if self.at("kw", "not"):
            self.next()
            return Not(self.e_not())
        return self.e_cmp()

    def e_cmp(self) -> Expr:
        a = self.e_add()
        if self.at("op", "=") or self.at("op", "<") or self.at("op", "<=") \
                or self.at("op", ">") or self.at("op", ">="):
            op = self.next().text
            b = self.e_add()
            if op == "=":
                return Eq(a, b)
            if op == "<":
                return Lt(a, b)
            if op == "<=":
                return Le(a, b)
            if op == ">":
                return Lt(b, a)
            return Le(b, a)
        return a

    def e_add(self) -> Expr:
        a = self.e_mul()
        while self.at("op", "+") or self.at("op", "-"):
            op = self.next().text
            b = self.e_mul()
            a = Add(a, b) if op == "+" else Sub(a, b)
        return a

    def e_mul(self) -> Expr:
        a = self.e_unary()
        while self.at("op", "*") or self.at("op", "/") or self.at("kw", "mod"):
            op = self.next().text
            b = self.e_unary()
            if op == "*":
                a = Mul(a, b)
            elif op == "mod":
                a = Mod(a, b)
            else:
                a = self._div(a, b)
        return a

    @staticmethod
    def _div(a, b):
        # integer-literal division is an exact rational literal
        if type(a) is Const and type(b) is Const \
                and type(a.value) is int and type(b.value) is int and b.value != 0:
            return Const(Fraction(a.value, b.value))
        return Div(a, b)

    def e_unary(self) -> Expr:
        if self.at("op", "-"):
            self.next()
            a = self.e_unary()
            if type(a) is Const and type(a.value) is not bool:
                return Const(-a.value)
            return Neg(a)
        return self.e_atom()

    def e_atom(self) -> Expr:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return Const(int(t.text))
        if t.kind == "dec":
            self.next()
            return Const(Fraction(t.text))  # exact decimal, never a float
        if t.kind == "kw" and t.text in ("true", "false"):
            self.next()
            return Const(t.text == "true")
        if t.kind == "kw" and t.text in _BUILTINS:
            self.next()
            node = _BUILTINS[t.text]
            self.expect("op", "(")
            args = [self.expr()]
            while self.at("op", ","):
                self.next()
                args.append(self.expr())
            self.expect("op", ")")
            if len(args) != 1:
                raise ArityError(f"{t.text} takes 1 argument, got {len(args)}", t.line, t.col)
            return node(args[0])
        if t.kind == "ident":
            self.next()
            return Var(t.text)
        if t.kind == "op" and t.text == "(":
            self.next()
            e = self.expr()
            self.expect("op", ")")
            return e
        self.fail(f"expected an expression, found {t.text or 'end of input'!r}")


def parse_program(text: str) -> Command:
    p = _Parser(_lex(text))
    c = p.program("eof")
    p.expect("eof")
    return c


def parse_expression(text: str) -> Expr:
    p = _Parser(_lex(text))
    e = p.expr()
    p.expect("eof")
    return e


_PRAGMA = re.compile(r"^\s*#\s*param\s+([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.+?)\s*$")


def parse_pragmas(text: str) -> dict:
    """Initial-state bindings declared in `#param x = <expr>` comment lines."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = _PRAGMA.match(line)
        if not m:
            continue
        name, src = m.group(1), m.group(2)
        try:
            out[name] = eval_expr(parse_expression(src), {})
        except ParseError:
            raise ParseError(f"bad pragma value {src!r}", lineno, 1)
    return out


# ---------------------------------------------------------------- printing

# printed precedence; higher binds tighter
_PREC = {
    Or: 1, And: 2, Not: 3, Eq: 4, Lt: 4, Le: 4,
    Add: 5, Sub: 5, Mul: 6, Div: 6, Mod: 6, Neg: 7,
}

_BINTXT = {
    Or: "or", And: "and", Eq: "=", Lt: "<", Le: "<=",
    Add: "+", Sub: "-", Mul: "*", Div: "/", Mod: "mod",
}

_CALLTXT = {IsPrime: "is_prime", IsEven: "is_even", Floor: "floor", Abs: "abs"}


def _prec(e) -> int:
    t = type(e)
    if t is Const:
        v = e.value
        if type(v) is Fraction:
            return 6  # prints as n/d, which reparses at division level
        if type(v) is int and v < 0:
            return 7
        return 8
    return _PREC.get(t, 8)


def render_expr(e: Expr, level: int = 1) -> str:
    """e as source text, parenthesized when its shape binds looser than level."""
    t = type(e)
    if t is Const:
        v = e.value
        s = "true" if v is True else "false" if v is False else \
            f"{v.numerator}/{v.denominator}" if type(v) is Fraction else str(v)
    elif t is Var:
        s = e.name
    elif t in _CALLTXT:
        return f"{_CALLTXT[t]}({render_expr(e.a)})"
    elif t is Not:
        s = f"not {render_expr(e.a, 3)}"
    elif t is Neg:
        s = f"-{render_expr(e.a, 7)}"
    else:
        p = _PREC[t]
        # comparison operands reparse one level up; same for right of left-assoc
        lo = 5 if p == 4 else p
        s = f"{render_expr(e.a, lo)} {_BINTXT[t]} {render_expr(e.b, lo + (1 if p != 4 else 0))}"
    if _prec(e) < level:
        return f"({s})"
    return s


def _flatten(c: Command, out: list):
    if type(c) is Seq:
        _flatten(c.c1, out)
        _flatten(c.c2, out)
    else:
        out.append(c)


def _block_lines(c: Command, ind: int) -> list:
    stmts = []
    _flatten(c, stmts)
    lines = []
    for k, s in enumerate(stmts):
        chunk = _stmt_lines(s, ind)
        if k < len(stmts) - 1:
            chunk[-1] += ";"
        lines.extend(chunk)
    return lines


def _stmt_lines(c: Command, ind: int) -> list:
    pad = "  " * ind
    t = type(c)
    if t is Skip:
        return [pad + "skip"]
    if t is Assign:
        return [pad + f"{c.x} <- {render_expr(c.e)}"]
    if t is Observe:
        return [pad + f"observe {render_expr(c.e)}"]
    if t is Ite:
        return [pad + f"if {render_expr(c.e)} {{",
                *_block_lines(c.c1, ind + 1),
                pad + "} else {",
                *_block_lines(c.c2, ind + 1),
                pad + "}"]
    if t is Choice:
        if (type(c.c1) is Assign and type(c.c2) is Assign and c.c1.x == c.c2.x
                and type(c.c1.e) is Const and c.c1.e.value is True
                and type(c.c2.e) is Const and c.c2.e.value is False):
            return [pad + f"flip {c.c1.x} {render_expr(c.p)}"]
        return [pad + f"choice {render_expr(c.p)} {{",
                *_block_lines(c.c1, ind + 1),
                pad + "} {",
                *_block_lines(c.c2, ind + 1),
                pad + "}"]
    if t is UniformBind:
        return [pad + f"uniform {render_expr(c.e)} as {c.x} {{",
                *_block_lines(c.body, ind + 1),
                pad + "}"]
    if t is While:
        return [pad + f"while {render_expr(c.e)} {{",
                *_block_lines(c.body, ind + 1),
                pad + "}"]
    # Seq only arrives here if passed directly
    return _block_lines(c, ind)


def pretty_print(c: Command) -> str:
    return "\n".join(_block_lines(c, 0))
