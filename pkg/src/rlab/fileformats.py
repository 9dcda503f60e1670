"""Plain-text input formats.

Function-spec file::

    masses: 1 1 0.5
    f: 1 2 -3
    g: 0 1/2 4

Numbers are parsed exactly (integers stay integers, decimals and ``p/q``
become fractions).  Blank lines and ``#`` comments are ignored.  A family
file adds ``pair: a <function-name>`` lines and, optionally,
``closed: no`` to evaluate the pairs without rearranging them.

Grid-field file: a header ``box: n lo_1 hi_1 ... lo_2n hi_2n N_1 ... N_2n
[periodic|compact_support]`` followed by the samples in row-major order.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from typing import Union

import numpy as np

from .functional import SupportFamily
from .grid import COMPACT, PERIODIC, DarbouxBox, GridField
from .measure import DiscreteFunction, MeasureSpace
from .quadratic import QuadraticForm, diagonal_type

__all__ = [
    "ParseError",
    "parse_number",
    "parse_function_text",
    "parse_function_file",
    "parse_family_text",
    "parse_family_file",
    "parse_grid_text",
    "parse_grid_file",
    "format_grid_field",
    "parse_hamiltonian",
]

RESERVED = {"masses", "pair", "closed", "box"}


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<text>"):
        self.line = line
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


def parse_number(token: str):
    """Exact value of a decimal, integer or ``p/q`` literal."""
    try:
        value = Fraction(token)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a number: {token!r}") from None
    return int(value) if value.denominator == 1 else value


def _lines(text: str):
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield number, line


def _split_label(line: str, number: int, source: str):
    if ":" not in line:
        raise ParseError("expected 'name: values'", number, source)
    label, rest = line.split(":", 1)
    label = label.strip()
    if not label or any(c.isspace() for c in label):
        raise ParseError(f"bad name {label!r}", number, source)
    return label, rest.split()


def _numbers(tokens, number: int, source: str) -> list:
    try:
        return [parse_number(t) for t in tokens]
    except ValueError as exc:
        raise ParseError(str(exc), number, source) from None


def _parse_functions(text: str, source: str, extra=None):
    space = None
    functions: dict = {}
    for number, line in _lines(text):
        label, tokens = _split_label(line, number, source)
        if label == "masses":
            if space is not None:
                raise ParseError("duplicate masses line", number, source)
            masses = _numbers(tokens, number, source)
            if not masses:
                raise ParseError("no masses given", number, source)
            for w in masses:
                if not w > 0:
                    raise ParseError(f"mass must be positive, got {w}", number, source)
            space = MeasureSpace(tuple(masses))
            continue
        if label in RESERVED:
            if extra is None:
                raise ParseError(f"{label!r} lines are not allowed here", number, source)
            extra(label, tokens, number)
            continue
        if space is None:
            raise ParseError("the masses line must come first", number, source)
        if label in functions:
            raise ParseError(f"duplicate function name {label!r}", number, source)
        values = _numbers(tokens, number, source)
        if len(values) != space.n_cells:
            raise ParseError(
                f"{label} has {len(values)} values for {space.n_cells} cells", number, source
            )
        functions[label] = DiscreteFunction(space, tuple(values))
    if space is None:
        raise ParseError("missing masses line", None, source)
    return space, functions


def parse_function_text(text: str, source: str = "<text>"):
    """``(MeasureSpace, {name: DiscreteFunction})`` in file order."""
    return _parse_functions(text, source)


def parse_function_file(path: Union[str, Path]):
    path = Path(path)
    return parse_function_text(path.read_text(), str(path))


def parse_family_text(text: str, source: str = "<text>"):
    """``(MeasureSpace, functions, SupportFamily)``."""
    pairs_raw: list = []
    closed = [True]

    def extra(label, tokens, number):
        if label == "pair":
            if len(tokens) != 2:
                raise ParseError("expected 'pair: a <function-name>'", number, source)
            pairs_raw.append((_numbers(tokens[:1], number, source)[0], tokens[1], number))
        elif label == "closed":
            if tokens not in (["yes"], ["no"]):
                raise ParseError("expected 'closed: yes' or 'closed: no'", number, source)
            closed[0] = tokens == ["yes"]
        else:
            raise ParseError(f"{label!r} lines are not allowed here", number, source)

    space, functions = _parse_functions(text, source, extra)
    if not pairs_raw:
        raise ParseError("family has no pair lines", None, source)
    pairs = []
    for a, name, number in pairs_raw:
        if name not in functions:
            raise ParseError(f"unknown function {name!r}", number, source)
        pairs.append((a, functions[name]))
    return space, functions, SupportFamily(tuple(pairs), closed[0])


def parse_family_file(path: Union[str, Path]):
    path = Path(path)
    return parse_family_text(path.read_text(), str(path))


def parse_grid_text(text: str, source: str = "<text>") -> GridField:
    lines = list(_lines(text))
    if not lines:
        raise ParseError("empty grid file", None, source)
    number, header = lines[0]
    label, tokens = _split_label(header, number, source)
    if label != "box":
        raise ParseError("grid files start with a 'box:' header", number, source)
    boundary = COMPACT
    if tokens and tokens[-1] in (PERIODIC, COMPACT):
        boundary = tokens.pop()
    try:
        n = int(tokens[0])
        d = 2 * n
        extent = [(float(tokens[1 + 2 * k]), float(tokens[2 + 2 * k])) for k in range(d)]
        grid = [int(t) for t in tokens[1 + 2 * d : 1 + 3 * d]]
        if len(tokens) != 1 + 3 * d:
            raise IndexError
        box = DarbouxBox(n, tuple(extent), tuple(grid), boundary)
    except (IndexError, ValueError) as exc:
        raise ParseError(f"bad box header ({exc or 'wrong token count'})", number, source) from None
    values = []
    for number, line in lines[1:]:
        try:
            values.extend(float(t) for t in line.split())
        except ValueError:
            raise ParseError("non-numeric sample", number, source) from None
    expected = int(np.prod(box.grid))
    if len(values) != expected:
        raise ParseError(f"expected {expected} samples, found {len(values)}", None, source)
    return GridField(box, np.array(values).reshape(box.grid))


def parse_grid_file(path: Union[str, Path]) -> GridField:
    path = Path(path)
    return parse_grid_text(path.read_text(), str(path))


def format_grid_field(field: GridField, per_line: int = 8) -> str:
    box = field.box
    head = [str(box.n)]
    head += [f"{v!r}" for lo_hi in box.extent for v in lo_hi]
    head += [str(g) for g in box.grid]
    head.append(box.boundary)
    flat = [repr(float(v)) for v in field.samples.ravel()]
    rows = [" ".join(flat[i : i + per_line]) for i in range(0, len(flat), per_line)]
    return "box: " + " ".join(head) + "\n" + "\n".join(rows) + "\n"


def parse_hamiltonian(spec: str) -> Union[QuadraticForm, GridField]:
    """``quad:q1,q2,...`` for ``sum q_k x_k y_k``; anything else is a grid file path."""
    if spec.startswith("quad:"):
        try:
            q = [float(t) for t in spec[5:].split(",") if t.strip()]
        except ValueError:
            raise ParseError(f"bad quadratic spec {spec!r}") from None
        if not q:
            raise ParseError("quad: needs at least one coefficient")
        return diagonal_type(q)
    return parse_grid_file(spec)
