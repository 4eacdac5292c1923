"""Line-oriented text format for pulse programs.

Grammar::

    document := (stmt | repeat)*
    repeat   := "repeat" INT "{" document "}"
    stmt     := KEYWORD (KEY "=" VALUE[UNIT] | VALUE[UNIT])* (NEWLINE | ";")

Keywords are ``rf``, ``mw``, ``wait``, ``interact``, ``measure``, ``readout``,
``polarize`` and ``phasestep``. ``#`` starts a comment. Units: ``s ms us ns``,
``Hz kHz MHz`` (rf frequencies are converted to rad/s, couplings stay in Hz),
``rad/s``, ``deg rad``. A bare number is taken in the internal unit.

Example::

    polarize p=1
    rf angle=90deg phase=0deg rabi=15.15kHz
    repeat 60 {
      phasestep phi=90deg
      wait 10us
    }
"""

import math
import re

from ..exceptions import InputError, SequenceSyntaxError
from .elements import (FreeEvolution, Interaction, NuclearPulse, OpticalReadout, PhaseStep,
                       Polarize, RepeatBlock, SensorPulse, Sequence, WeakMeasurement)

_TIME_UNITS = {"s": 1.0, "ms": 1e3, "us": 1e6, "µs": 1e6, "ns": 1e9}  # divisors
_FREQ_UNITS = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6}  # multipliers

# quantity kinds: time [s], freq [Hz], angfreq [rad/s, written in Hz], angle [rad],
# rad [angle, written bare], number [dimensionless], word [identifier]
_SCHEMA = {
    "rf": (NuclearPulse, {"angle": ("angle", "angle"), "phase": ("phase", "angle"),
                          "rabi": ("rabi", "angfreq"), "detuning": ("detuning", "angfreq"),
                          "eps": ("amp_error", "number")}),
    "mw": (SensorPulse, {"angle": ("angle", "angle"), "phase": ("phase", "angle")}),
    "wait": (FreeEvolution, {"duration": ("duration", "time")}),
    "interact": (Interaction, {"duration": ("duration", "time"), "azz": ("a_zz", "freq")}),
    "measure": (WeakMeasurement, {"alpha": ("alpha", "rad"), "phase": ("phase", "angle"),
                                  "duration": ("duration", "time")}),
    "readout": (OpticalReadout, {"contrast": ("contrast", "number"),
                                 "counts": ("mean_counts", "number"),
                                 "fidelity": ("init_fidelity", "number"),
                                 "target": ("target", "word")}),
    "polarize": (Polarize, {"p": ("polarization", "number")}),
    "phasestep": (PhaseStep, {"phi": ("step", "angle")}),
}
_POSITIONAL = {"wait": "duration", "interact": "duration", "phasestep": "phi",
               "polarize": "p", "measure": "alpha"}
_NUMBER = re.compile(r"([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(.*)$")


def _convert(text, kind):
    """Convert ``'10us'``-style text to the internal unit of ``kind``."""
    if kind == "word":
        if not re.fullmatch(r"[A-Za-z_]\w*", text):
            raise InputError(f"expected an identifier, got {text!r}")
        return text
    m = _NUMBER.match(text)
    if not m:
        raise InputError(f"malformed number {text!r}")
    value, unit = float(m.group(1)), m.group(2)
    if not math.isfinite(value):
        raise InputError(f"non-finite value {text!r}")
    if kind == "time":
        if unit == "":
            return value
        if unit in _TIME_UNITS:
            return value / _TIME_UNITS[unit]
    elif kind == "freq":
        if unit == "":
            return value
        if unit in _FREQ_UNITS:
            return value * _FREQ_UNITS[unit]
    elif kind == "angfreq":
        if unit in ("", "rad/s"):
            return value
        if unit in _FREQ_UNITS:
            return 2 * math.pi * (value * _FREQ_UNITS[unit])
    elif kind in ("angle", "rad"):
        if unit in ("", "rad"):
            return value
        if unit == "deg":
            return math.radians(value)
    elif kind == "number":
        if unit == "":
            return value
    raise InputError(f"unknown unit {unit!r} for a {kind} value in {text!r}")


# ---------------------------------------------------------------- tokenizer

def _tokenize(text):
    """Yield (kind, value, line, col); kinds: WORD, LBRACE, RBRACE, END."""
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.split("#", 1)[0]
        col = 0
        n = len(line)
        while col < n:
            ch = line[col]
            if ch.isspace():
                col += 1
            elif ch == "{":
                yield ("LBRACE", ch, lineno, col + 1)
                col += 1
            elif ch == "}":
                yield ("RBRACE", ch, lineno, col + 1)
                col += 1
            elif ch == ";":
                yield ("END", ch, lineno, col + 1)
                col += 1
            else:
                start = col
                while col < n and not line[col].isspace() and line[col] not in "{};":
                    col += 1
                yield ("WORD", line[start:col], lineno, start + 1)
        yield ("END", "\n", lineno, len(line) + 1)


class _Parser:
    def __init__(self, text):
        self.tokens = list(_tokenize(text))
        self.pos = 0
        self.depth = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def document(self, closing=False):
        items = []
        while True:
            tok = self.peek()
            if tok is None:
                if closing:
                    last = self.tokens[-1]
                    raise SequenceSyntaxError("missing '}'", last[2], last[3])
                return items
            kind, value, line, col = tok
            if kind == "END":
                self.next()
            elif kind == "RBRACE":
                if not closing:
                    raise SequenceSyntaxError("unexpected '}'", line, col)
                self.next()
                return items
            elif kind == "LBRACE":
                raise SequenceSyntaxError("unexpected '{'", line, col)
            elif value == "repeat":
                items.append(self.repeat())
            else:
                items.append(self.statement())

    def repeat(self):
        _, _, line, col = self.next()
        tok = self.next()
        if tok is None or tok[0] != "WORD" or not re.fullmatch(r"[+-]?\d+", tok[1]):
            where = tok or (None, None, line, col)
            raise SequenceSyntaxError("repeat needs an integer count", where[2], where[3])
        count = int(tok[1])
        if count < 1:
            raise SequenceSyntaxError(f"repeat count must be >= 1, got {count}", tok[2], tok[3])
        while self.peek() is not None and self.peek()[0] == "END" and self.peek()[1] == "\n":
            self.next()
        brace = self.next()
        if brace is None or brace[0] != "LBRACE":
            where = brace or tok
            raise SequenceSyntaxError("expected '{' after repeat count", where[2], where[3])
        self.depth += 1
        body = self.document(closing=True)
        self.depth -= 1
        try:
            return RepeatBlock(count, tuple(body))
        except InputError as exc:
            raise SequenceSyntaxError(str(exc), line, col) from None

    def statement(self):
        _, keyword, line, col = self.next()
        if keyword not in _SCHEMA:
            raise SequenceSyntaxError(f"unknown statement {keyword!r}", line, col)
        cls, params = _SCHEMA[keyword]
        kwargs = {}
        while self.peek() is not None and self.peek()[0] == "WORD":
            _, arg, aline, acol = self.next()
            if "=" in arg:
                key, _, raw = arg.partition("=")
            elif keyword in _POSITIONAL and not kwargs:
                key, raw = _POSITIONAL[keyword], arg
            else:
                raise SequenceSyntaxError(f"expected key=value, got {arg!r}", aline, acol)
            if key not in params:
                raise SequenceSyntaxError(f"unknown parameter {key!r} for {keyword}", aline, acol)
            name, kind = params[key]
            if name in kwargs:
                raise SequenceSyntaxError(f"duplicate parameter {key!r}", aline, acol)
            try:
                kwargs[name] = _convert(raw, kind)
            except InputError as exc:
                raise SequenceSyntaxError(str(exc), aline, acol) from None
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise SequenceSyntaxError(f"{keyword}: {exc}", line, col) from None
        except InputError as exc:
            raise SequenceSyntaxError(f"{keyword}: {exc}", line, col) from None


def parse_sequence(text):
    """Parse a sequence document into a :class:`Sequence`.

    Raises :class:`SequenceSyntaxError` carrying the line and column of the
    first problem found.
    """
    parser = _Parser(text)
    items = parser.document()
    try:
        return Sequence(tuple(items))
    except InputError as exc:
        raise SequenceSyntaxError(str(exc), 1, 1) from None


def load_sequence(path):
    with open(path, encoding="utf-8") as fh:
        return parse_sequence(fh.read())


# ---------------------------------------------------------------- serializer

def _fmt(x):
    s = f"{x:.12g}"
    return s if float(s) == x else repr(float(x))


def _format_value(x, kind):
    """Shortest readable text that parses back to exactly ``x``."""
    if kind == "word":
        return x
    if kind == "number":
        return repr(float(x)).removesuffix(".0") if float(x).is_integer() else repr(float(x))
    candidates = []
    if kind == "time":
        ax = abs(x)
        order = ["s", "ms", "us", "ns"] if ax >= 1 else ["ms", "s", "us", "ns"] if ax >= 1e-3 else \
            ["us", "ns", "ms", "s"] if ax >= 1e-6 else ["ns", "us", "s"]
        if x == 0:
            order = ["s"]
        candidates = [(x * _TIME_UNITS[u], u) for u in order]
    elif kind == "freq":
        ax = abs(x)
        order = ["MHz", "kHz", "Hz"] if ax >= 1e6 else ["kHz", "Hz"] if ax >= 1e3 else ["Hz"]
        candidates = [(x / _FREQ_UNITS[u], u) for u in order]
    elif kind == "angfreq":
        hz = x / (2 * math.pi)
        ax = abs(hz)
        order = ["MHz", "kHz", "Hz"] if ax >= 1e6 else ["kHz", "Hz"] if ax >= 1e3 else ["Hz"]
        candidates = [(hz / _FREQ_UNITS[u], u) for u in order]
        candidates.append((x, "rad/s"))
    elif kind == "angle":
        candidates = [(math.degrees(x), "deg"), (x, "rad")]
    elif kind == "rad":
        candidates = [(x, "")]
    for value, unit in candidates:
        for text in (f"{value:.12g}", repr(float(value))):
            text = text.removesuffix(".0") if "e" not in text else text
            if _convert(text + unit, kind) == x:
                return text + unit
    base = {"time": "s", "freq": "Hz", "angfreq": "rad/s", "angle": "rad", "rad": ""}[kind]
    return repr(float(x)) + base


_DEFAULTS = {cls: cls.__dataclass_fields__ for cls, _ in _SCHEMA.values()}
_ALWAYS = {"rf": ("angle", "phase", "rabi"), "mw": ("angle", "phase")}
_KEYWORD = {cls: kw for kw, (cls, _) in _SCHEMA.items()}


def _statement_text(el):
    keyword = _KEYWORD[type(el)]
    _, params = _SCHEMA[keyword]
    parts = [keyword]
    for key, (name, kind) in params.items():
        value = getattr(el, name)
        default = _DEFAULTS[type(el)][name].default
        if name not in _ALWAYS.get(keyword, ()) and value == default:
            continue
        text = _format_value(value, kind)
        if keyword in _POSITIONAL and key == _POSITIONAL[keyword] and len(parts) == 1:
            parts.append(text)
        else:
            parts.append(f"{key}={text}")
    return " ".join(parts)


def _lines(items, indent):
    pad = "  " * indent
    for it in items:
        if isinstance(it, RepeatBlock):
            yield f"{pad}repeat {it.count} {{"
            yield from _lines(it.body, indent + 1)
            yield f"{pad}}}"
        else:
            yield pad + _statement_text(it)


def serialize_sequence(seq):
    """Render a :class:`Sequence` in the text format. Empty sequences give ``''``."""
    lines = list(_lines(seq.elements, 0))
    return "\n".join(lines) + "\n" if lines else ""
