"""
Reader and writer for the textual LP file format.

Supports the subset needed here: one linear objective with optional
bracketed square terms, linear rows with optional square terms, a Bounds
section and End. Coefficients are written as decimals; when a row holds a
coefficient without a finite decimal expansion, an exact comment line
"\\ exact <name>: <expression with p/q>" precedes it and the reader uses it,
so every round trip is exact.
"""

import logging
import re
from dataclasses import dataclass, field
from decimal import Context, Decimal
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from utils import format_rational, is_terminating

logger = logging.getLogger(__name__)

Bound = Tuple[Optional[Fraction], Optional[Fraction]]

_SENSES = {"<=": "<=", "=<": "<=", ">=": ">=", "=>": ">=", "=": "=", "<": "<=", ">": ">="}
_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:/\d+)?|\.\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><=|>=|=<|=>|[-+\[\]\^/=<>*]))"
)
_SECTIONS = {
    "minimize": "objective",
    "minimise": "objective",
    "min": "objective",
    "maximize": "objective",
    "maximise": "objective",
    "max": "objective",
    "subject to": "rows",
    "such that": "rows",
    "st": "rows",
    "s.t.": "rows",
    "bounds": "bounds",
    "end": "end",
}


class LpFormatError(Exception):
    """Raised when LP text cannot be parsed or a model cannot be written."""

    pass


@dataclass
class LpRow:
    """A named row linear + quadratic (sense) rhs; quadratic maps a variable to the coefficient of its square."""

    name: str
    linear: Dict[str, Fraction]
    sense: str
    rhs: Fraction
    quadratic: Dict[str, Fraction] = field(default_factory=dict)


@dataclass
class LpModel:
    """
    An LP (or diagonal QCQP) model with named variables.

    Attributes:
        name (str): Problem name.
        sense (str): "min" or "max".
        objective (dict): Linear objective coefficients.
        rows (list): Constraint rows.
        bounds (dict): Variable bounds, None for infinite.
        objective_quadratic (dict): Coefficient of v^2 in the objective.
        comments (list): Free-form header lines.
    """

    name: str = "model"
    sense: str = "min"
    objective: Dict[str, Fraction] = field(default_factory=dict)
    rows: List[LpRow] = field(default_factory=list)
    bounds: Dict[str, Bound] = field(default_factory=dict)
    objective_quadratic: Dict[str, Fraction] = field(default_factory=dict)
    comments: List[str] = field(default_factory=list, compare=False)

    @property
    def is_quadratic(self) -> bool:
        return bool(self.objective_quadratic) or any(row.quadratic for row in self.rows)

    def variables(self) -> List[str]:
        """All variable names in first-appearance order."""
        seen: Dict[str, None] = {}
        for name in list(self.objective) + list(self.objective_quadratic):
            seen.setdefault(name)
        for row in self.rows:
            for name in list(row.linear) + list(row.quadratic):
                seen.setdefault(name)
        for name in self.bounds:
            seen.setdefault(name)
        return list(seen)


# Writing


def format_decimal(value: Fraction) -> str:
    """Exact decimal for terminating values, 20 significant digits otherwise."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    if not is_terminating(value):
        approx = Context(prec=20).divide(Decimal(value.numerator), Decimal(value.denominator))
        return format(approx, "f")
    digits = 0
    scaled = value
    while scaled.denominator != 1:
        scaled *= 10
        digits += 1
    sign = "-" if scaled < 0 else ""
    text = str(abs(scaled.numerator)).rjust(digits + 1, "0")
    return f"{sign}{text[:-digits]}.{text[-digits:]}"


def _expression(linear: Dict[str, Fraction], quadratic: Dict[str, Fraction], exact: bool, halve: bool) -> str:
    fmt = format_rational if exact else format_decimal
    parts: List[str] = []
    for name, coef in linear.items():
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {fmt(abs(coef))} {name}")
    if quadratic:
        inner = []
        for name, coef in quadratic.items():
            stored = 2 * coef if halve else coef
            sign = "-" if stored < 0 else "+"
            inner.append(f"{sign} {fmt(abs(stored))} {name} ^ 2")
        bracket = "[ " + " ".join(inner).lstrip("+ ") + " ]"
        if halve:
            bracket += " / 2"
        parts.append(("+ " if parts else "") + bracket)
    if not parts:
        return "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def _needs_exact(*groups: Dict[str, Fraction]) -> bool:
    return any(not is_terminating(v) for group in groups for v in group.values())


def to_lp_text(model: LpModel) -> str:
    """
    Render a model as LP text.

    Raises:
        LpFormatError: On an unknown sense.
    """
    if model.sense not in ("min", "max"):
        raise LpFormatError(f"Unknown objective sense {model.sense!r}")
    lines = [f"\\ Problem name: {model.name}"]
    lines.extend(f"\\ {comment}" for comment in model.comments)
    lines.append("Minimize" if model.sense == "min" else "Maximize")
    if _needs_exact(model.objective, model.objective_quadratic):
        lines.append(f"\\ exact obj: {_expression(model.objective, model.objective_quadratic, True, True)}")
    lines.append(f" obj: {_expression(model.objective, model.objective_quadratic, False, True)}")
    lines.append("Subject To")
    for row in model.rows:
        if row.sense not in ("<=", ">=", "="):
            raise LpFormatError(f"Row {row.name} has unknown sense {row.sense!r}")
        if _needs_exact(row.linear, row.quadratic, {"rhs": row.rhs}):
            exact = _expression(row.linear, row.quadratic, True, False)
            lines.append(f"\\ exact {row.name}: {exact} {row.sense} {format_rational(row.rhs)}")
        expr = _expression(row.linear, row.quadratic, False, False)
        lines.append(f" {row.name}: {expr} {row.sense} {format_decimal(row.rhs)}")
    lines.append("Bounds")
    for name, (low, high) in model.bounds.items():
        if any(v is not None and not is_terminating(v) for v in (low, high)):
            low_text = "-inf" if low is None else format_rational(low)
            high_text = "inf" if high is None else format_rational(high)
            lines.append(f"\\ exact bound: {low_text} <= {name} <= {high_text}")
        if low is None and high is None:
            lines.append(f" {name} free")
        elif high is None:
            lines.append(f" {name} >= {format_decimal(low)}")
        elif low is None:
            lines.append(f" -inf <= {name} <= {format_decimal(high)}")
        else:
            lines.append(f" {format_decimal(low)} <= {name} <= {format_decimal(high)}")
    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp(model: LpModel, path: str) -> None:
    """
    Write a model to a file.

    Raises:
        LpFormatError: If the file cannot be written.
    """
    try:
        with open(path, "w", encoding="utf-8") as f:
            f.write(to_lp_text(model))
    except OSError as e:
        raise LpFormatError(f"Cannot write LP file {path}: {e}") from e
    logger.debug(f"Wrote {len(model.rows)} rows to {path}")


# Reading


def _tokens(text: str) -> List[Tuple[str, str]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if not match or match.end() == pos:
            raise LpFormatError(f"Unexpected text near {text[pos:pos + 20]!r}")
        kind = match.lastgroup
        tokens.append((kind, match.group(kind)))
        pos = match.end()
    return tokens


def _parse_expression(tokens: List[Tuple[str, str]]) -> Tuple[Dict[str, Fraction], Dict[str, Fraction]]:
    """Parse "[+-] [coef] name ..." with an optional "[ ... ] [/ 2]" block."""
    linear: Dict[str, Fraction] = {}
    quadratic: Dict[str, Fraction] = {}
    k = 0

    def read_term(k: int) -> Tuple[Fraction, Optional[str], int]:
        sign = Fraction(1)
        while k < len(tokens) and tokens[k] in (("op", "+"), ("op", "-")):
            if tokens[k][1] == "-":
                sign = -sign
            k += 1
        coef = Fraction(1)
        if k < len(tokens) and tokens[k][0] == "num":
            coef = Fraction(tokens[k][1])
            k += 1
        if k < len(tokens) and tokens[k][0] == "name":
            return sign * coef, tokens[k][1], k + 1
        return sign * coef, None, k

    while k < len(tokens):
        if tokens[k] == ("op", "+") and k + 1 < len(tokens) and tokens[k + 1] == ("op", "["):
            k += 1
        if tokens[k] == ("op", "["):
            k += 1
            block: Dict[str, Fraction] = {}
            while k < len(tokens) and tokens[k] != ("op", "]"):
                coef, name, k = read_term(k)
                if name is None or tokens[k:k + 2] != [("op", "^"), ("num", "2")]:
                    raise LpFormatError("Only squared terms 'c v ^ 2' are supported inside brackets")
                k += 2
                block[name] = block.get(name, Fraction(0)) + coef
            if k >= len(tokens):
                raise LpFormatError("Unclosed quadratic bracket")
            k += 1
            divisor = Fraction(1)
            if tokens[k:k + 2] and tokens[k] == ("op", "/"):
                divisor = Fraction(tokens[k + 1][1])
                k += 2
            for name, coef in block.items():
                quadratic[name] = quadratic.get(name, Fraction(0)) + coef / divisor
            continue
        coef, name, k = read_term(k)
        if name is None:
            if coef == 0:
                continue
            raise LpFormatError("Constant terms are not supported in expressions")
        linear[name] = linear.get(name, Fraction(0)) + coef
    return linear, quadratic


def _split_named(line: str) -> Tuple[Optional[str], str]:
    if ":" in line:
        name, rest = line.split(":", 1)
        return name.strip(), rest
    return None, line


def _parse_row(name: str, body: str) -> LpRow:
    tokens = _tokens(body)
    positions = [k for k, tok in enumerate(tokens) if tok[0] == "op" and tok[1] in _SENSES]
    if len(positions) != 1:
        raise LpFormatError(f"Row {name} needs exactly one comparison")
    at = positions[0]
    linear, quadratic = _parse_expression(tokens[:at])
    rhs_tokens = tokens[at + 1:]
    try:
        sign = -1 if rhs_tokens and rhs_tokens[0] == ("op", "-") else 1
        number = rhs_tokens[-1][1]
        rhs = sign * Fraction(number)
    except (IndexError, ValueError) as e:
        raise LpFormatError(f"Row {name} has a malformed right-hand side") from e
    return LpRow(name=name, linear=linear, sense=_SENSES[tokens[at][1]], rhs=rhs, quadratic=quadratic)


def _parse_bound_value(text: str) -> Optional[Fraction]:
    text = text.strip().lower()
    if text in ("-inf", "-infinity", "+inf", "inf", "infinity", "+infinity"):
        return None
    return Fraction(text)


def _parse_bound(line: str) -> Tuple[str, Bound]:
    parts = line.split()
    try:
        if len(parts) == 2 and parts[1].lower() == "free":
            return parts[0], (None, None)
        if len(parts) == 5 and parts[1] in ("<=", "=<") and parts[3] in ("<=", "=<"):
            return parts[2], (_parse_bound_value(parts[0]), _parse_bound_value(parts[4]))
        if len(parts) == 3 and parts[1] in (">=", "=>"):
            return parts[0], (_parse_bound_value(parts[2]), None)
        if len(parts) == 3 and parts[1] in ("<=", "=<"):
            return parts[0], (Fraction(0), _parse_bound_value(parts[2]))
        if len(parts) == 3 and parts[1] == "=":
            value = _parse_bound_value(parts[2])
            return parts[0], (value, value)
    except ValueError as e:
        raise LpFormatError(f"Malformed bound {line!r}") from e
    raise LpFormatError(f"Malformed bound {line!r}")


def parse_lp(text: str) -> LpModel:
    """
    Parse LP text produced by to_lp_text (and the common subset of the format).

    Raises:
        LpFormatError: On malformed input.
    """
    model = LpModel(name="model")
    section = None
    exact: Dict[str, str] = {}
    exact_bounds: Dict[str, Bound] = {}
    pending = ""
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("\\"):
            comment = line[1:].strip()
            if comment.startswith("Problem name:"):
                model.name = comment.split(":", 1)[1].strip()
            elif comment.startswith("exact bound:"):
                name, bound = _parse_bound(comment.split(":", 1)[1])
                exact_bounds[name] = bound
            elif comment.startswith("exact "):
                name, body = comment[len("exact "):].split(":", 1)
                exact[name.strip()] = body
            elif section is None:
                model.comments.append(comment)
            continue
        key = line.lower()
        if key in _SECTIONS and not pending:
            section = _SECTIONS[key]
            if section == "objective":
                model.sense = "max" if key.startswith("max") else "min"
            if section == "end":
                break
            continue
        if section == "objective":
            name, body = _split_named(line)
            name = name or "obj"
            source = exact.get(name, body)
            model.objective, model.objective_quadratic = _parse_expression(_tokens(source))
        elif section == "rows":
            pending = f"{pending} {line}".strip()
            if not any(op in pending.split(":", 1)[-1] for op in ("<", ">", "=")):
                continue
            name, body = _split_named(pending)
            pending = ""
            if name is None:
                name = f"R{len(model.rows) + 1}"
            model.rows.append(_parse_row(name, exact.get(name, body)))
        elif section == "bounds":
            name, bound = _parse_bound(line)
            model.bounds[name] = exact_bounds.get(name, bound)
        else:
            raise LpFormatError(f"Text outside any section: {line!r}")
    if pending:
        raise LpFormatError(f"Unterminated row: {pending!r}")
    return model


def read_lp(path: str) -> LpModel:
    """
    Read a model from a file.

    Raises:
        LpFormatError: If the file cannot be read or parsed.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            return parse_lp(f.read())
    except OSError as e:
        raise LpFormatError(f"Cannot read LP file {path}: {e}") from e
