"""Tokenizer, recursive-descent parser, canonical printer and compiler for
the map DSL.

Grammar (whitespace-insensitive)::

    map    := NAME '(' [param (',' param)*] ')' '->' INT '=' '(' expr (',' expr)* ')'
    param  := NAME ':' ( 'circle' [const] | 'interval' const const )
    const  := ['+'|'-'] ( NUMBER | 'pi' | '(' expr ')' )
    expr   := term (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := ('+'|'-') unary | power
    power  := atom [('^'|'**') ['+'|'-'] INT]
    atom   := NUMBER | 'pi' | NAME | FUNC '(' expr ')' | '(' expr ')'

``FUNC`` is one of sin, cos, exp, sqrt, neg.  Sub-expressions made only of
constants are folded while parsing.
"""

import math
import re
from dataclasses import dataclass
from typing import Union

from ..errors import DomainError, DSLSyntaxError, UnknownIdentifier
from . import dual

FUNCTIONS = ("sin", "cos", "exp", "sqrt", "neg")
KEYWORDS = ("circle", "interval", "pi")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, BinOp, Pow, Call]


# -- constant folding constructors -------------------------------------------

def make_binop(op, left, right):
    if isinstance(left, Num) and isinstance(right, Num):
        a, b = left.value, right.value
        if op == "+":
            return Num(a + b)
        if op == "-":
            return Num(a - b)
        if op == "*":
            return Num(a * b)
        if b != 0.0:
            return Num(a / b)
    return BinOp(op, left, right)


def make_pow(base, exponent):
    if isinstance(base, Num) and not (base.value == 0.0 and exponent < 0):
        return Num(float(base.value ** exponent))
    return Pow(base, exponent)


def make_call(func, arg):
    if isinstance(arg, Num):
        v = arg.value
        if func == "neg":
            return Num(-v)
        if func == "sin":
            return Num(math.sin(v))
        if func == "cos":
            return Num(math.cos(v))
        if func == "exp":
            return Num(math.exp(v))
        if func == "sqrt" and v >= 0:
            return Num(math.sqrt(v))
    return Call(func, arg)


def variables(node):
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, BinOp):
        return variables(node.left) | variables(node.right)
    if isinstance(node, Pow):
        return variables(node.base)
    if isinstance(node, Call):
        return variables(node.arg)
    return set()


def substitute(node, mapping):
    """Replace variables by sub-trees (re-folding constants)."""
    if isinstance(node, Var):
        return mapping.get(node.name, node)
    if isinstance(node, BinOp):
        return make_binop(node.op, substitute(node.left, mapping),
                          substitute(node.right, mapping))
    if isinstance(node, Pow):
        return make_pow(substitute(node.base, mapping), node.exponent)
    if isinstance(node, Call):
        return make_call(node.func, substitute(node.arg, mapping))
    return node


# -- tokenizer ----------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>->|\*\*|[-+*/^(),:=])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int  # byte offset into the UTF-8 encoding


def tokenize(text):
    tokens = []
    pos = 0
    byte = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DSLSyntaxError(f"unexpected character {text[pos]!r}", byte)
        chunk = m.group()
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, chunk, byte))
        byte += len(chunk.encode("utf-8"))
        pos = m.end()
    tokens.append(Token("eof", "", byte))
    return tokens


# -- parser -------------------------------------------------------------------

class _Parser:
    def __init__(self, text, names=None):
        self.tokens = tokenize(text)
        self.i = 0
        self.names = names

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text, kind="op"):
        t = self.tok
        if t.kind != kind or (text is not None and t.text != text):
            shown = t.text or "end of input"
            raise DSLSyntaxError(f"unexpected {shown!r}", t.offset, repr(text) if text else kind)
        return self.advance()

    def at(self, text, kind="op"):
        return self.tok.kind == kind and self.tok.text == text

    # expressions
    def expr(self):
        node = self.term()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            node = make_binop(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.at("*") or self.at("/"):
            op = self.advance().text
            node = make_binop(op, node, self.unary())
        return node

    def unary(self):
        if self.at("-"):
            self.advance()
            return make_call("neg", self.unary())
        if self.at("+"):
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.at("^") or self.at("**"):
            self.advance()
            sign = 1
            if self.at("-") or self.at("+"):
                sign = -1 if self.advance().text == "-" else 1
            t = self.tok
            if t.kind != "number" or not t.text.isdigit():
                raise DSLSyntaxError("exponent must be an integer literal", t.offset, "integer")
            self.advance()
            return make_pow(base, sign * int(t.text))
        return base

    def atom(self):
        t = self.tok
        if t.kind == "number":
            self.advance()
            return Num(float(t.text))
        if t.kind == "name":
            self.advance()
            if t.text == "pi":
                return Num(math.pi)
            if self.at("("):
                if t.text not in FUNCTIONS:
                    raise UnknownIdentifier(t.text, t.offset)
                self.advance()
                arg = self.expr()
                self.expect(")")
                return make_call(t.text, arg)
            if t.text in FUNCTIONS:
                raise DSLSyntaxError(f"function {t.text!r} needs an argument", self.tok.offset, "'('")
            if self.names is not None and t.text not in self.names:
                raise UnknownIdentifier(t.text, t.offset)
            return Var(t.text)
        if self.at("("):
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        shown = t.text or "end of input"
        raise DSLSyntaxError(f"unexpected {shown!r}", t.offset, "number, name or '('")

    def const(self):
        start = self.tok.offset
        sign = 1.0
        if self.at("-") or self.at("+"):
            sign = -1.0 if self.advance().text == "-" else 1.0
        t = self.tok
        if t.kind == "number":
            self.advance()
            node = Num(float(t.text))
        elif t.kind == "name" and t.text == "pi":
            self.advance()
            node = Num(math.pi)
        elif self.at("("):
            saved, self.names = self.names, set()
            self.advance()
            node = self.expr()
            self.expect(")")
            self.names = saved
        else:
            raise DSLSyntaxError("expected a constant", t.offset, "number, 'pi' or '(' constant ')'")
        if not isinstance(node, Num):
            raise DSLSyntaxError("bound is not a constant", start, "constant expression")
        return sign * node.value

    # map header
    def param(self):
        t = self.expect(None, "name")
        if t.text in KEYWORDS or t.text in FUNCTIONS:
            raise DSLSyntaxError(f"{t.text!r} is reserved", t.offset, "parameter name")
        self.expect(":")
        kind = self.expect(None, "name")
        if kind.text == "circle":
            period = 2.0 * math.pi
            if not (self.at(",") or self.at(")")):
                period = self.const()
            return t, ("circle", period)
        if kind.text == "interval":
            lo = self.const()
            hi = self.const()
            return t, ("interval", lo, hi)
        raise DSLSyntaxError(f"unknown domain kind {kind.text!r}", kind.offset, "'circle' or 'interval'")

    def map(self):
        name = self.expect(None, "name")
        self.expect("(")
        params = []
        if not self.at(")"):
            params.append(self.param())
            while self.at(","):
                self.advance()
                params.append(self.param())
        self.expect(")")
        self.expect("->")
        dim_tok = self.tok
        if dim_tok.kind != "number" or not dim_tok.text.isdigit():
            raise DSLSyntaxError("target dimension must be a positive integer", dim_tok.offset, "integer")
        self.advance()
        self.expect("=")
        seen = set()
        for p, _ in params:
            if p.text in seen:
                raise DSLSyntaxError(f"duplicate parameter {p.text!r}", p.offset)
            seen.add(p.text)
        self.names = seen
        self.expect("(")
        comps = [self.expr()]
        while self.at(","):
            self.advance()
            comps.append(self.expr())
        self.expect(")")
        self.expect(None, "eof")
        return name.text, params, int(dim_tok.text), dim_tok.offset, comps


def parse_expression(text, names=None):
    """Parse a bare expression; ``names`` restricts the allowed variables."""
    p = _Parser(text, set(names) if names is not None else None)
    node = p.expr()
    p.expect(None, "eof")
    return node


def parse_header_and_body(text):
    return _Parser(text).map()


# -- printer ------------------------------------------------------------------

def _num(v):
    s = repr(float(v))
    return f"({s})" if v < 0 or s.startswith("-") else s


def to_text(node):
    if isinstance(node, Num):
        return _num(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Pow):
        base = to_text(node.base)
        if isinstance(node.base, Pow) or (isinstance(node.base, Call) and node.base.func == "neg"):
            base = f"({base})"
        return f"{base}^{node.exponent}"
    if isinstance(node, Call):
        if node.func == "neg":
            return f"(-{to_text(node.arg)})"
        return f"{node.func}({to_text(node.arg)})"
    raise TypeError(node)


# -- compiler -----------------------------------------------------------------

def _div(a, b):
    if not isinstance(b, dual.Dual) and dual.np.any(dual.np.asarray(b) == 0):
        raise DomainError("division by zero")
    return a / b


def _pow(a, n):
    if isinstance(a, dual.Dual):
        return a ** n
    if n < 0:
        return _div(1.0, a ** (-n))
    return a ** n


_CALLS = {
    "sin": dual.sin,
    "cos": dual.cos,
    "exp": dual.exp,
    "sqrt": dual.sqrt,
}


def compile_node(node, index):
    """Turn an AST into a closure ``f(args)``; ``index`` maps names to
    positions in ``args``.  Works on floats, arrays and :class:`Dual`."""
    if isinstance(node, Num):
        v = node.value
        return lambda a: v
    if isinstance(node, Var):
        i = index[node.name]
        return lambda a: a[i]
    if isinstance(node, BinOp):
        l = compile_node(node.left, index)
        r = compile_node(node.right, index)
        if node.op == "+":
            return lambda a: l(a) + r(a)
        if node.op == "-":
            return lambda a: l(a) - r(a)
        if node.op == "*":
            return lambda a: l(a) * r(a)
        return lambda a: _div(l(a), r(a))
    if isinstance(node, Pow):
        b = compile_node(node.base, index)
        n = node.exponent
        return lambda a: _pow(b(a), n)
    if isinstance(node, Call):
        f = compile_node(node.arg, index)
        if node.func == "neg":
            return lambda a: -f(a)
        g = _CALLS[node.func]
        return lambda a: g(f(a))
    raise TypeError(node)
