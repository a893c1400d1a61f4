"""Text format for free-electron circuits (``.quafe`` files).

Grammar::

    program   := decl* stmt+
    decl      := "path" ID | "waveguide" ID "{" [param ("," param)*] "}"
    param     := ID "=" NUMBER
    stmt      := split | mix | ephase | ophase | couple | detect
    split     := "split" ID "->" ID ID
    mix       := "mix" ID ID "->" ID
    ephase    := "ephase" ID angle
    ophase    := "ophase" ID angle
    couple    := "couple" ID ID "@" ID
    detect    := "detect" ID ("current" | "energy")
    angle     := NUMBER ("rad" | "deg") | "$" ID

Numbers may carry a unit suffix (rad, deg, eV, keV, nm, mm); physical
literals must, dimensionless ones must not.  ``#`` starts a comment.
Waveguide parameters: ``scale`` multiplies every coupling on the waveguide,
``modes`` keeps only the lowest modes.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .circuit import (
    Circuit,
    Coupler,
    Coupling,
    Detector,
    ElectronPhase,
    Mixer,
    OpticalPhase,
    Splitter,
)
from .errors import CircuitError, QuafeError

__all__ = [
    "SourceSpan",
    "Token",
    "Diagnostic",
    "DslError",
    "CircuitAst",
    "tokenize",
    "parse",
    "parse_source",
    "pretty",
    "lower",
    "load_circuit",
    "KEYWORDS",
    "UNITS",
]

KEYWORDS = frozenset({"path", "waveguide", "split", "mix", "ephase", "ophase", "couple", "detect",
                      "current", "energy"})
UNITS = ("rad", "deg", "eV", "keV", "nm", "mm")
STATEMENT_KEYWORDS = ("split", "mix", "ephase", "ophase", "couple", "detect")
DECL_KEYWORDS = ("path", "waveguide")
WAVEGUIDE_PARAMS = ("scale", "modes")
MAX_ERRORS = 10


@dataclass(frozen=True)
class SourceSpan:
    """1-based line/column of the first character plus byte offsets [start, end)."""

    line: int
    column: int
    start: int
    end: int


@dataclass(frozen=True)
class Token:
    kind: str  # keyword, ident, number, arrow, lbrace, rbrace, comma, equals, at, dollar, eof
    text: str
    span: SourceSpan
    unit: Optional[str] = None

    def describe(self) -> str:
        if self.kind == "eof":
            return "end of input"
        return f"{self.kind} {self.text!r}" if self.kind in ("ident", "number") else repr(self.text)

    @property
    def angle(self) -> float:
        """Value in radians; degrees go through an exact rational."""
        if self.unit == "deg":
            return float(Fraction(self.text) / 180) * math.pi
        return float(self.text)


@dataclass(frozen=True)
class Diagnostic:
    span: SourceSpan
    message: str

    def format(self, filename: str = "<input>") -> str:
        return f"{filename}:{self.span.line}:{self.span.column}: {self.message}"


class DslError(QuafeError):
    def __init__(self, diagnostics: Sequence[Diagnostic], filename: str = "<input>"):
        self.diagnostics = tuple(diagnostics)
        self.filename = filename
        super().__init__("\n".join(d.format(filename) for d in self.diagnostics))


# -- lexer ---------------------------------------------------------------

_NUMBER = re.compile(r"-?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_PUNCT = {"->": "arrow", "{": "lbrace", "}": "rbrace", ",": "comma", "=": "equals", "@": "at", "$": "dollar"}


def tokenize(source: str, filename: str = "<input>") -> list:
    """Split ``source`` into tokens; raises :class:`DslError` on illegal characters."""
    tokens = []
    errors = []
    pos = 0
    line, col, byte = 1, 1, 0

    def span_for(text):
        return SourceSpan(line, col, byte, byte + len(text.encode("utf-8")))

    while pos < len(source):
        ch = source[pos]
        text = None
        if ch == "\n":
            pos, line, col, byte = pos + 1, line + 1, 1, byte + 1
            continue
        if ch.isspace():
            text = ch
        elif ch == "#":
            end = source.find("\n", pos)
            text = source[pos:] if end < 0 else source[pos:end]
        elif source.startswith("->", pos):
            text = "->"
            tokens.append(Token("arrow", text, span_for(text)))
        elif ch in _PUNCT:
            text = ch
            tokens.append(Token(_PUNCT[ch], text, span_for(text)))
        elif (m := _NUMBER.match(source, pos)) and (ch != "-" or m.end() > pos + 1):
            text = m.group()
            rest = _IDENT.match(source, m.end())
            unit = None
            if rest:
                if rest.group() not in UNITS:
                    bad = text + rest.group()
                    errors.append(Diagnostic(span_for(bad), f"unknown unit {rest.group()!r} on number"))
                    text = bad
                else:
                    unit = rest.group()
            if unit is not None or not rest:
                tokens.append(Token("number", text, span_for(text + (unit or "")), unit))
            if unit:
                text += unit
        elif m := _IDENT.match(source, pos):
            text = m.group()
            tokens.append(Token("keyword" if text in KEYWORDS else "ident", text, span_for(text)))
        else:
            text = ch
            errors.append(Diagnostic(span_for(text), f"illegal character {ch!r}"))
        pos += len(text)
        col += len(text)
        byte += len(text.encode("utf-8"))
        if len(errors) >= MAX_ERRORS:
            break
    if errors:
        raise DslError(errors, filename)
    tokens.append(Token("eof", "", SourceSpan(line, col, byte, byte)))
    return tokens


# -- syntax tree -----------------------------------------------------------

@dataclass(frozen=True)
class Ident:
    text: str
    span: SourceSpan = field(compare=False)


@dataclass(frozen=True)
class Param:
    key: Ident
    value: Token = field(compare=False)

    @property
    def literal(self):
        return (self.value.text, self.value.unit)

    def __eq__(self, other):
        return isinstance(other, Param) and (self.key, self.literal) == (other.key, other.literal)

    def __hash__(self):
        return hash((self.key, self.literal))


@dataclass(frozen=True)
class Angle:
    """Either a literal number with a unit or a ``$name`` placeholder."""

    literal: Optional[Token] = field(default=None, compare=False)
    parameter: Optional[Ident] = None
    span: Optional[SourceSpan] = field(default=None, compare=False)

    @property
    def key(self):
        if self.literal is not None:
            return (self.literal.text, self.literal.unit)
        return ("$", self.parameter.text)

    def __eq__(self, other):
        return isinstance(other, Angle) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def text(self) -> str:
        if self.literal is not None:
            return self.literal.text + (self.literal.unit or "")
        return "$" + self.parameter.text


@dataclass(frozen=True)
class Stmt:
    op: str
    args: tuple  # Ident / Angle / str entries, per op
    span: SourceSpan = field(compare=False)


@dataclass(frozen=True)
class PathDecl:
    name: Ident
    span: SourceSpan = field(compare=False)


@dataclass(frozen=True)
class WaveguideDecl:
    name: Ident
    params: tuple
    span: SourceSpan = field(compare=False)


@dataclass(frozen=True)
class CircuitAst:
    decls: tuple
    stmts: tuple

    @property
    def paths(self):
        return [d for d in self.decls if isinstance(d, PathDecl)]

    @property
    def waveguides(self):
        return {d.name.text: d for d in self.decls if isinstance(d, WaveguideDecl)}


# -- parser ----------------------------------------------------------------

class _Recover(Exception):
    pass


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0
        self.errors = []

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def error(self, span, message):
        self.errors.append(Diagnostic(span, message))
        if len(self.errors) >= MAX_ERRORS:
            raise _Recover("too many errors")

    def expect(self, kinds, texts=None, what=None):
        tok = self.tok
        ok = tok.kind in kinds and (texts is None or tok.text in texts)
        if not ok:
            expected = what or ", ".join(sorted(texts or kinds))
            self.error(tok.span, f"expected {expected}, found {tok.describe()}")
            raise _Recover()
        self.pos += 1
        return tok

    def ident(self, what="identifier"):
        tok = self.expect(("ident",), what=what)
        return Ident(tok.text, tok.span)

    def sync(self):
        while self.tok.kind != "eof" and not (self.tok.kind == "keyword" and self.tok.text in
                                               STATEMENT_KEYWORDS + DECL_KEYWORDS):
            self.pos += 1

    def program(self):
        decls, stmts = [], []
        while self.tok.kind != "eof":
            start = self.pos
            try:
                tok = self.tok
                if tok.kind == "keyword" and tok.text in DECL_KEYWORDS:
                    if stmts:
                        self.error(tok.span, f"declaration {tok.text!r} after the first statement")
                    decls.append(self.decl())
                elif tok.kind == "keyword" and tok.text in STATEMENT_KEYWORDS:
                    stmts.append(self.stmt())
                else:
                    self.expect(("keyword",), STATEMENT_KEYWORDS + DECL_KEYWORDS,
                                what="declaration or statement keyword")
            except _Recover:
                if len(self.errors) >= MAX_ERRORS:
                    break
                if self.pos == start:
                    self.pos += 1
                self.sync()
        if not stmts and not self.errors:
            self.error(self.tok.span, "program has no statements: no detector")
        return CircuitAst(tuple(decls), tuple(stmts))

    def decl(self):
        kw = self.expect(("keyword",), DECL_KEYWORDS)
        name = self.ident()
        if kw.text == "path":
            return PathDecl(name, kw.span)
        self.expect(("lbrace",), what="'{'")
        params = []
        if self.tok.kind != "rbrace":
            params.append(self.param())
            while self.tok.kind == "comma":
                self.pos += 1
                params.append(self.param())
        self.expect(("rbrace",), what="',' or '}'")
        return WaveguideDecl(name, tuple(params), kw.span)

    def param(self):
        key = self.ident("parameter name")
        self.expect(("equals",), what="'='")
        value = self.expect(("number",), what="number")
        return Param(key, value)

    def angle(self):
        tok = self.tok
        if tok.kind == "dollar":
            self.pos += 1
            name = self.ident("parameter name")
            return Angle(parameter=name, span=tok.span)
        num = self.expect(("number",), what="angle (number with rad|deg, or $name)")
        return Angle(literal=num, span=num.span)

    def stmt(self):
        kw = self.expect(("keyword",), STATEMENT_KEYWORDS)
        op = kw.text
        if op == "split":
            src = self.ident()
            self.expect(("arrow",), what="'->'")
            args = (src, self.ident(), self.ident())
        elif op == "mix":
            a, b = self.ident(), self.ident()
            self.expect(("arrow",), what="'->'")
            args = (a, b, self.ident())
        elif op in ("ephase", "ophase"):
            args = (self.ident(), self.angle())
        elif op == "couple":
            path, wg = self.ident(), self.ident()
            self.expect(("at",), what="'@' coupling profile")
            args = (path, wg, self.ident("profile name"))
        else:
            path = self.ident()
            kind = self.expect(("keyword",), ("current", "energy"), what="'current' or 'energy'")
            args = (path, kind.text)
        return Stmt(op, args, kw.span)


def _check_semantics(ast: CircuitAst, errors: list):
    def err(span, msg):
        if len(errors) < MAX_ERRORS:
            errors.append(Diagnostic(span, msg))

    paths = ast.paths
    if len(paths) != 1:
        span = paths[1].name.span if len(paths) > 1 else (ast.stmts[0].span if ast.stmts else SourceSpan(1, 1, 0, 0))
        err(span, "exactly one incident 'path' must be declared")
    waveguides = {}
    for d in ast.decls:
        if isinstance(d, WaveguideDecl):
            if d.name.text in waveguides:
                err(d.name.span, f"waveguide {d.name.text!r} declared twice")
            waveguides[d.name.text] = d
            seen = set()
            for p in d.params:
                if p.key.text not in WAVEGUIDE_PARAMS:
                    err(p.key.span, f"unknown waveguide parameter {p.key.text!r} (expected one of "
                                    f"{', '.join(WAVEGUIDE_PARAMS)})")
                elif p.key.text in seen:
                    err(p.key.span, f"parameter {p.key.text!r} given twice")
                elif p.value.unit is not None:
                    err(p.value.span, f"parameter {p.key.text!r} is dimensionless and takes no unit")
                elif p.key.text == "modes" and not re.fullmatch(r"[1-9]\d*", p.value.text):
                    err(p.value.span, "'modes' must be a positive integer")
                elif p.key.text == "scale" and not float(p.value.text) > 0:
                    err(p.value.span, "'scale' must be positive")
                seen.add(p.key.text)

    live = {paths[0].name.text} if paths else set()
    used = set(live)

    def use(ident):
        if ident.text not in live:
            what = "was consumed earlier" if ident.text in used else "is not declared"
            err(ident.span, f"path {ident.text!r} {what}")

    def produce(ident):
        if ident.text in used:
            err(ident.span, f"path {ident.text!r} already exists")
        used.add(ident.text)
        live.add(ident.text)

    def waveguide(ident):
        if ident.text not in waveguides:
            err(ident.span, f"waveguide {ident.text!r} is not declared")

    detectors = [s for s in ast.stmts if s.op == "detect"]
    for i, s in enumerate(ast.stmts):
        a = s.args
        if s.op == "split":
            use(a[0])
            live.discard(a[0].text)
            if a[1].text == a[2].text:
                err(a[2].span, f"duplicate output path {a[2].text!r}")
            produce(a[1])
            if a[2].text != a[1].text:
                produce(a[2])
        elif s.op == "mix":
            if a[0].text == a[1].text:
                err(a[1].span, f"duplicate input path {a[1].text!r}")
            use(a[0])
            if a[1].text != a[0].text:
                use(a[1])
            live.difference_update((a[0].text, a[1].text))
            produce(a[2])
        elif s.op == "ephase":
            use(a[0])
            _check_angle(a[1], err)
        elif s.op == "ophase":
            waveguide(a[0])
            _check_angle(a[1], err)
        elif s.op == "couple":
            use(a[0])
            waveguide(a[1])
        elif s.op == "detect":
            use(a[0])
            if i != len(ast.stmts) - 1:
                err(s.span, "detector must be the last statement")
    if ast.stmts and not detectors:
        err(ast.stmts[-1].span, "program has no detector")
    elif len(detectors) > 1:
        err(detectors[1].span, "only one detector is allowed")


def _check_angle(angle: Angle, err):
    if angle.literal is not None and angle.literal.unit not in ("rad", "deg"):
        if angle.literal.unit is None:
            err(angle.literal.span, "angle needs a unit (rad or deg)")
        else:
            err(angle.literal.span, f"unit {angle.literal.unit!r} is not an angle unit")


def parse(tokens: Sequence[Token], filename: str = "<input>") -> CircuitAst:
    """Build and check a :class:`CircuitAst`.  Raises :class:`DslError`
    listing up to ten diagnostics; no simulation happens here."""
    parser = _Parser(list(tokens))
    try:
        ast = parser.program()
    except _Recover:
        ast = None
    errors = parser.errors
    if ast is not None and not errors:
        _check_semantics(ast, errors)
    if errors:
        raise DslError(errors[:MAX_ERRORS], filename)
    return ast


def parse_source(source: str, filename: str = "<input>") -> CircuitAst:
    return parse(tokenize(source, filename), filename)


def pretty(ast: CircuitAst) -> str:
    """Canonical source text; reparses to an equal AST."""
    lines = []
    for d in ast.decls:
        if isinstance(d, PathDecl):
            lines.append(f"path {d.name.text}")
        else:
            params = ", ".join(f"{p.key.text} = {p.value.text}{p.value.unit or ''}" for p in d.params)
            lines.append(f"waveguide {d.name.text} {{ {params} }}" if params else f"waveguide {d.name.text} {{}}")
    for s in ast.stmts:
        a = s.args
        if s.op == "split":
            lines.append(f"split {a[0].text} -> {a[1].text} {a[2].text}")
        elif s.op == "mix":
            lines.append(f"mix {a[0].text} {a[1].text} -> {a[2].text}")
        elif s.op in ("ephase", "ophase"):
            lines.append(f"{s.op} {a[0].text} {a[1].text()}")
        elif s.op == "couple":
            lines.append(f"couple {a[0].text} {a[1].text} @{a[2].text}")
        else:
            lines.append(f"detect {a[0].text} {a[1]}")
    return "\n".join(lines) + "\n"


def lower(
    ast: CircuitAst,
    profiles: Mapping[str, Coupling],
    parameters: Optional[Mapping[str, float]] = None,
    filename: str = "<input>",
) -> Circuit:
    """Resolve coupling profiles and ``$`` parameters into a :class:`Circuit`."""
    parameters = dict(parameters or {})
    errors = []
    _check_semantics(ast, errors)
    if errors:
        raise DslError(errors, filename)
    wg_decls = ast.waveguides

    def angle(a: Angle) -> Optional[float]:
        if a.literal is not None:
            return a.literal.angle
        if a.parameter.text not in parameters:
            errors.append(Diagnostic(a.parameter.span, f"unbound parameter ${a.parameter.text}"))
            return None
        return float(parameters[a.parameter.text])

    def coupling(stmt) -> Optional[Coupling]:
        path, wg, profile = stmt.args
        if profile.text not in profiles:
            errors.append(Diagnostic(profile.span, f"unknown coupling profile @{profile.text}"))
            return None
        base = profiles[profile.text]
        if base is None or not base.mean_photons:
            errors.append(Diagnostic(profile.span, f"profile @{profile.text} has no phase-matched modes"))
            return None
        for p in wg_decls[wg.text].params:
            if p.key.text == "modes":
                base = base.truncated(int(p.value.text))
            elif p.key.text == "scale":
                base = base.scaled(float(p.value.text))
        return base

    elements = []
    for s in ast.stmts:
        a = s.args
        if s.op == "split":
            elements.append(Splitter(a[0].text, a[1].text, a[2].text))
        elif s.op == "mix":
            elements.append(Mixer(a[0].text, a[1].text, a[2].text))
        elif s.op == "ephase":
            elements.append(ElectronPhase(a[0].text, angle(a[1])))
        elif s.op == "ophase":
            elements.append(OpticalPhase(a[0].text, angle(a[1])))
        elif s.op == "couple":
            elements.append(Coupler(a[0].text, a[1].text, coupling(s)))
        else:
            elements.append(Detector(a[0].text, a[1]))
    if errors:
        raise DslError(errors, filename)
    try:
        return Circuit(ast.paths[0].name.text, tuple(elements))
    except CircuitError as exc:
        raise DslError([Diagnostic(ast.stmts[0].span, str(exc))], filename) from exc


def load_circuit(path, profiles, parameters=None) -> Circuit:
    with open(path, encoding="utf-8") as fh:
        source = fh.read()
    name = str(path)
    return lower(parse_source(source, name), profiles, parameters, name)
