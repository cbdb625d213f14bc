"""Line-oriented circuit language (``.cvc``) for linear optics with feedforward.

One statement per line, ``#`` starts a comment, tokens are separated by
whitespace and keywords are case-insensitive::

    INPUT name alpha_re alpha_im      coherent input, fresh basis mode
    VACUUM name                       fresh vacuum mode
    EPR name1 name2 r                 two-mode squeezed pair from fresh vacua
    BS out1 out2 in1 in2 minus|plus   balanced beamsplitter
    HOMODYNE result X|Y +|- mode [partner]
    FEEDFORWARD target gain x_result y_result
    OUTPUT name

``HOMODYNE r X - m p`` records ``(X_p - X_m)/√2``, the X quadrature of one
port of a balanced beamsplitter mixing ``p`` and ``m``. Without a partner it
records ``±X_m``. Two HOMODYNE statements on the same mode pair that
measure different quadratures form one joint measurement (the two output
ports of the same beamsplitter) and do not count as reusing the modes.

Every optical mode is consumed at most once, by a BS input, a HOMODYNE or an
OUTPUT. Measurement results are classical and may be fed forward any number
of times.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, Mapping, Optional, Tuple, Union

from .algebra import (
    MINUS_FIRST,
    PLUS_FIRST,
    Basis,
    ModeExpr,
    QuadExpr,
    add_scaled,
    beamsplit,
    two_mode_squeeze,
)

_SQRT2 = math.sqrt(2.0)

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
NUMBER_RE = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?\Z")
PLACEHOLDER_RE = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")

CONVENTIONS = {"minus": MINUS_FIRST, "plus": PLUS_FIRST}


class ParseError(Exception):
    """First problem found in a circuit source.

    ``kind`` is one of ``syntax``, ``unknown-name``, ``reuse``, ``arity`` or
    ``number-format``. ``line`` and ``column`` are 1-based.
    """

    def __init__(self, line: int, column: int, message: str, kind: str):
        super().__init__(f"{line}:{column}: {kind}: {message}")
        self.line = line
        self.column = column
        self.message = message
        self.kind = kind


class PlaceholderError(KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return f"no value for placeholder ${{{self.name}}}"


# -- AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class Input:
    name: str
    alpha_re: float
    alpha_im: float
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Vacuum:
    name: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Epr:
    name1: str
    name2: str
    r: float
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Bs:
    out1: str
    out2: str
    in1: str
    in2: str
    convention: str  # "minus" or "plus"
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Homodyne:
    result: str
    quadrature: str  # "X" or "Y"
    sign: str  # "+" or "-"
    mode: str
    partner: Optional[str] = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Feedforward:
    target: str
    gain: float
    x_result: str
    y_result: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Output:
    name: str
    line: int = field(default=0, compare=False)


Statement = Union[Input, Vacuum, Epr, Bs, Homodyne, Feedforward, Output]


@dataclass(frozen=True)
class CircuitAst:
    statements: Tuple[Statement, ...]

    @property
    def outputs(self) -> Tuple[str, ...]:
        return tuple(s.name for s in self.statements if isinstance(s, Output))


# -- placeholder substitution ----------------------------------------------

def substitute(source: str, values: Mapping[str, object]) -> str:
    """Replace ``${name}`` with ``values[name]``; raise :class:`PlaceholderError` if absent."""
    def repl(m):
        key = m.group(1)
        if key not in values:
            raise PlaceholderError(key)
        v = values[key]
        return repr(float(v)) if isinstance(v, (int, float)) else str(v)
    return PLACEHOLDER_RE.sub(repl, source)


def placeholders(source: str) -> Tuple[str, ...]:
    return tuple(dict.fromkeys(PLACEHOLDER_RE.findall(source)))


# -- parser ----------------------------------------------------------------

_ARITY = {
    "INPUT": (3, 3),
    "VACUUM": (1, 1),
    "EPR": (3, 3),
    "BS": (5, 5),
    "HOMODYNE": (4, 5),
    "FEEDFORWARD": (4, 4),
    "OUTPUT": (1, 1),
}


class _Token:
    __slots__ = ("text", "col")

    def __init__(self, text, col):
        self.text = text
        self.col = col


class _Checker:
    """Name and consumption bookkeeping shared by every statement."""

    def __init__(self):
        self.live = set()
        self.consumed = set()
        self.results = set()
        self.joint: Dict[frozenset, set] = {}

    def define(self, tok, lineno, kind="mode"):
        name = tok.text
        if name in self.live or name in self.consumed or name in self.results:
            raise ParseError(lineno, tok.col, f"name {name!r} already defined", "reuse")
        (self.results if kind == "result" else self.live).add(name)

    def consume(self, tok, lineno):
        name = tok.text
        if name in self.consumed:
            raise ParseError(lineno, tok.col, f"mode {name!r} already consumed", "reuse")
        if name not in self.live:
            raise ParseError(lineno, tok.col, f"unknown mode {name!r}", "unknown-name")
        self.live.discard(name)
        self.consumed.add(name)

    def require_live(self, tok, lineno):
        if tok.text in self.consumed:
            raise ParseError(lineno, tok.col, f"mode {tok.text!r} already consumed", "reuse")
        if tok.text not in self.live:
            raise ParseError(lineno, tok.col, f"unknown mode {tok.text!r}", "unknown-name")

    def require_result(self, tok, lineno):
        if tok.text not in self.results:
            raise ParseError(lineno, tok.col, f"unknown measurement result {tok.text!r}", "unknown-name")


def _name(tok, lineno) -> str:
    if not NAME_RE.match(tok.text):
        raise ParseError(lineno, tok.col, f"invalid name {tok.text!r}", "syntax")
    return tok.text


def _number(tok, lineno) -> float:
    if not NUMBER_RE.match(tok.text):
        raise ParseError(lineno, tok.col, f"malformed number {tok.text!r}", "number-format")
    value = float(tok.text)
    if not math.isfinite(value):
        raise ParseError(lineno, tok.col, f"number out of range {tok.text!r}", "number-format")
    return value


def _tokens(line: str):
    return [_Token(m.group(), m.start() + 1) for m in re.finditer(r"\S+", line)]


def parse(source: str) -> CircuitAst:
    """Parse and validate ``source``; raises :class:`ParseError` on the first problem."""
    if source.startswith("\ufeff"):
        source = source[1:]
    lines = source.replace("\r\n", "\n").replace("\r", "\n").split("\n")
    chk = _Checker()
    stmts = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0]
        toks = _tokens(line)
        if not toks:
            continue
        head, args = toks[0], toks[1:]
        kw = head.text.upper()
        if kw not in _ARITY:
            raise ParseError(lineno, head.col, f"unknown statement {head.text!r}", "syntax")
        lo, hi = _ARITY[kw]
        if not lo <= len(args) <= hi:
            want = str(lo) if lo == hi else f"{lo}-{hi}"
            col = args[hi].col if len(args) > hi else head.col
            raise ParseError(lineno, col, f"{kw} takes {want} arguments, got {len(args)}", "arity")
        stmts.append(_statement(kw, args, lineno, chk))

    if not any(isinstance(s, Output) for s in stmts):
        raise ParseError(max(len(lines), 1), 1, "circuit declares no OUTPUT", "syntax")
    return CircuitAst(tuple(stmts))


def _statement(kw, args, lineno, chk: _Checker) -> Statement:
    if kw == "INPUT":
        name = _name(args[0], lineno)
        re_, im = _number(args[1], lineno), _number(args[2], lineno)
        chk.define(args[0], lineno)
        return Input(name, re_, im, line=lineno)

    if kw == "VACUUM":
        name = _name(args[0], lineno)
        chk.define(args[0], lineno)
        return Vacuum(name, line=lineno)

    if kw == "EPR":
        n1, n2 = _name(args[0], lineno), _name(args[1], lineno)
        r = _number(args[2], lineno)
        chk.define(args[0], lineno)
        if n2 == n1:
            raise ParseError(lineno, args[1].col, f"name {n2!r} already defined", "reuse")
        chk.define(args[1], lineno)
        return Epr(n1, n2, r, line=lineno)

    if kw == "BS":
        names = [_name(t, lineno) for t in args[:4]]
        conv = args[4].text.lower()
        if conv not in CONVENTIONS:
            raise ParseError(lineno, args[4].col, f"convention must be 'minus' or 'plus', got {args[4].text!r}", "syntax")
        chk.consume(args[2], lineno)
        if names[3] == names[2]:
            raise ParseError(lineno, args[3].col, f"mode {names[3]!r} used twice", "reuse")
        chk.consume(args[3], lineno)
        chk.define(args[0], lineno)
        if names[1] == names[0]:
            raise ParseError(lineno, args[1].col, f"name {names[1]!r} already defined", "reuse")
        chk.define(args[1], lineno)
        return Bs(*names, conv, line=lineno)

    if kw == "HOMODYNE":
        result = _name(args[0], lineno)
        quad = args[1].text.upper()
        if quad not in ("X", "Y"):
            raise ParseError(lineno, args[1].col, f"quadrature must be X or Y, got {args[1].text!r}", "syntax")
        sign = args[2].text
        if sign not in ("+", "-"):
            raise ParseError(lineno, args[2].col, f"sign must be + or -, got {sign!r}", "syntax")
        mode = _name(args[3], lineno)
        partner = _name(args[4], lineno) if len(args) == 5 else None
        if partner is None:
            chk.consume(args[3], lineno)
        else:
            if partner == mode:
                raise ParseError(lineno, args[4].col, f"mode {mode!r} used twice", "reuse")
            _consume_joint(chk, args[3], args[4], quad, lineno)
        chk.define(args[0], lineno, kind="result")
        return Homodyne(result, quad, sign, mode, partner, line=lineno)

    if kw == "FEEDFORWARD":
        target = _name(args[0], lineno)
        gain = _number(args[1], lineno)
        xr, yr = _name(args[2], lineno), _name(args[3], lineno)
        chk.require_live(args[0], lineno)
        chk.require_result(args[2], lineno)
        chk.require_result(args[3], lineno)
        return Feedforward(target, gain, xr, yr, line=lineno)

    # OUTPUT
    name = _name(args[0], lineno)
    chk.consume(args[0], lineno)
    return Output(name, line=lineno)


def _consume_joint(chk: _Checker, mode_tok, partner_tok, quad, lineno):
    key = frozenset((mode_tok.text, partner_tok.text))
    done = chk.joint.get(key)
    if done is not None:
        if quad in done:
            raise ParseError(lineno, mode_tok.col,
                             f"quadrature {quad} of modes {sorted(key)} already measured", "reuse")
        done.add(quad)
        return
    chk.consume(mode_tok, lineno)
    chk.consume(partner_tok, lineno)
    chk.joint[key] = {quad}


# -- printer ---------------------------------------------------------------

def _num(x: float) -> str:
    # repr is the shortest string that round-trips exactly
    return repr(float(x))


def format_statement(s: Statement) -> str:
    if isinstance(s, Input):
        return f"INPUT {s.name} {_num(s.alpha_re)} {_num(s.alpha_im)}"
    if isinstance(s, Vacuum):
        return f"VACUUM {s.name}"
    if isinstance(s, Epr):
        return f"EPR {s.name1} {s.name2} {_num(s.r)}"
    if isinstance(s, Bs):
        return f"BS {s.out1} {s.out2} {s.in1} {s.in2} {s.convention}"
    if isinstance(s, Homodyne):
        tail = f" {s.partner}" if s.partner else ""
        return f"HOMODYNE {s.result} {s.quadrature} {s.sign} {s.mode}{tail}"
    if isinstance(s, Feedforward):
        return f"FEEDFORWARD {s.target} {_num(s.gain)} {s.x_result} {s.y_result}"
    if isinstance(s, Output):
        return f"OUTPUT {s.name}"
    raise TypeError(f"not a statement: {s!r}")


def print_circuit(ast: CircuitAst) -> str:
    """Canonical text: upper-case keywords, single spaces, ``repr`` numbers, LF endings."""
    return "".join(format_statement(s) + "\n" for s in ast.statements)


# -- elaboration -------------------------------------------------------------

@dataclass(frozen=True)
class Elaboration:
    basis: Basis
    modes: Dict[str, ModeExpr]
    outputs: Dict[str, ModeExpr]
    results: Dict[str, QuadExpr]
    inputs: Dict[str, complex]


def elaborate(ast: CircuitAst) -> Elaboration:
    """Run the statements in order; the basis label of a fresh mode ``n`` is ``n_0``."""
    basis = Basis()
    modes: Dict[str, ModeExpr] = {}
    outputs: Dict[str, ModeExpr] = {}
    results: Dict[str, QuadExpr] = {}
    inputs: Dict[str, complex] = {}
    for s in ast.statements:
        if isinstance(s, Input):
            alpha = complex(s.alpha_re, s.alpha_im)
            modes[s.name] = basis.fresh_mode(f"{s.name}_0", alpha)
            inputs[s.name] = alpha
        elif isinstance(s, Vacuum):
            modes[s.name] = basis.fresh_mode(f"{s.name}_0")
        elif isinstance(s, Epr):
            m1 = basis.fresh_mode(f"{s.name1}_0")
            m2 = basis.fresh_mode(f"{s.name2}_0")
            modes[s.name1], modes[s.name2] = two_mode_squeeze(m1, m2, s.r)
        elif isinstance(s, Bs):
            modes[s.out1], modes[s.out2] = beamsplit(modes[s.in1], modes[s.in2], CONVENTIONS[s.convention])
        elif isinstance(s, Homodyne):
            q = "x" if s.quadrature == "X" else "y"
            sign = 1.0 if s.sign == "+" else -1.0
            own = getattr(modes[s.mode], q)
            if s.partner is None:
                results[s.result] = own * sign
            else:
                results[s.result] = (getattr(modes[s.partner], q) + own * sign) / _SQRT2
        elif isinstance(s, Feedforward):
            modes[s.target] = add_scaled(modes[s.target], results[s.x_result], results[s.y_result], s.gain)
        elif isinstance(s, Output):
            outputs[s.name] = modes[s.name]
    return Elaboration(basis, modes, outputs, results, inputs)


# -- bundled presets ---------------------------------------------------------

def preset_source(name: str = "switch") -> str:
    return resources.files("cvswitch").joinpath("presets", f"{name}.cvc").read_text(encoding="utf-8")


def switch_values(r_a: float, r_b: float, g1: float = 1.0, g2: float = 1.0,
                  alpha_in: complex = 0j) -> Dict[str, float]:
    """Placeholder values for the bundled ``switch.cvc``."""
    alpha_in = complex(alpha_in)
    return {"ra": r_a, "rb": r_b, "g1": g1, "g2": g2,
            "alpha_re": alpha_in.real, "alpha_im": alpha_in.imag}


def load(source: str, values: Optional[Mapping[str, object]] = None) -> CircuitAst:
    return parse(substitute(source, values or {}))
