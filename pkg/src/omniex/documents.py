"""JSON problem, scheme and result documents.

All exact quantities (field elements, rationals) travel as strings or
integers so nothing is squeezed through floating point; pmf probabilities
are plain JSON numbers.  Parsing errors carry either the JSON line (for
syntax errors) or the path of the offending field.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Optional, Union

import numpy as np

from . import field as ff
from .errors import UnitMismatch, ValidationError
from .netcode import TransmissionScheme
from .rates import RateVector
from .setfun import Value
from .sources import (
    DmmsSource,
    LinearSource,
    Source,
    TableSource,
    make_dmms_source,
    make_linear_source,
    validate,
)


@dataclass(frozen=True)
class ProblemDocument:
    source: Source
    weights: Optional[tuple[Value, ...]]
    n: int
    seed: int
    sha256: str

    @property
    def m(self) -> int:
        return self.source.m


def format_value(v: Value) -> Union[str, float]:
    """Lowest-terms fraction string for exact values, number for floats."""
    if isinstance(v, bool):
        raise TypeError("booleans are not values")
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Fraction):
        return str(v)
    return float(v)


def parse_value(raw: Any, where: str) -> Value:
    if isinstance(raw, bool):
        raise ValidationError(f"{where}: expected a number, got a boolean")
    if isinstance(raw, int):
        return raw
    if isinstance(raw, float):
        return raw
    if isinstance(raw, str):
        try:
            return Fraction(raw)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"{where}: invalid rational {raw!r} ({exc})")
    raise ValidationError(f"{where}: expected a number or rational string")


def _expect(mapping: Any, key: str, where: str) -> Any:
    if not isinstance(mapping, dict):
        raise ValidationError(f"{where}: expected an object")
    if key not in mapping:
        raise ValidationError(f"{where}.{key}: missing")
    return mapping[key]


def _int_field(mapping: dict, key: str, where: str, minimum: int = 0) -> int:
    value = _expect(mapping, key, where)
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ValidationError(f"{where}.{key}: expected an integer >= {minimum}")
    return value


def _parse_linear(data: dict, where: str) -> LinearSource:
    p = _int_field(data, "p", where, minimum=2)
    n_packets = _int_field(data, "N", where, minimum=1)
    raw = _expect(data, "matrices", where)
    if not isinstance(raw, list) or not raw:
        raise ValidationError(f"{where}.matrices: expected a nonempty list")
    mats = []
    for ui, rows in enumerate(raw):
        uwhere = f"{where}.matrices[{ui}]"
        if not isinstance(rows, list):
            raise ValidationError(f"{uwhere}: expected a list of rows")
        clean = []
        for ri, row in enumerate(rows):
            if (not isinstance(row, list) or len(row) != n_packets
                    or any(not isinstance(x, int) or isinstance(x, bool) for x in row)):
                raise ValidationError(
                    f"{uwhere}[{ri}]: expected {n_packets} integers")
            clean.append(row)
        try:
            mats.append(ff.FieldMatrix.from_rows(clean, p, cols=n_packets))
        except ValueError as exc:
            raise ValidationError(f"{uwhere}: {exc}")
    return make_linear_source(mats, p=p, N=n_packets)


def _parse_pmf(data: dict, where: str) -> DmmsSource:
    raw_alpha = _expect(data, "alphabets", where)
    if (not isinstance(raw_alpha, list) or not raw_alpha
            or any(not isinstance(a, int) or isinstance(a, bool) or a < 1
                   for a in raw_alpha)):
        raise ValidationError(f"{where}.alphabets: expected positive integers")
    alphabets = tuple(raw_alpha)
    entries = _expect(data, "entries", where)
    if not isinstance(entries, dict):
        raise ValidationError(f"{where}.entries: expected an outcome->probability map")
    table = np.zeros(alphabets, dtype=float)
    for key, prob in entries.items():
        kwhere = f"{where}.entries[{key!r}]"
        parts = key.split(",")
        if len(parts) != len(alphabets):
            raise ValidationError(f"{kwhere}: outcome needs {len(alphabets)} symbols")
        try:
            idx = tuple(int(s) for s in parts)
        except ValueError:
            raise ValidationError(f"{kwhere}: outcome symbols must be integers")
        if any(not 0 <= x < a for x, a in zip(idx, alphabets)):
            raise ValidationError(f"{kwhere}: outcome outside the alphabets")
        if not isinstance(prob, (int, float)) or isinstance(prob, bool):
            raise ValidationError(f"{kwhere}: probability must be a number")
        table[idx] = float(prob)
    return make_dmms_source(alphabets, table)


def _parse_table(data: dict, where: str) -> TableSource:
    m = _int_field(data, "m", where, minimum=1)
    unit = data.get("unit", "bits")
    if not isinstance(unit, str):
        raise ValidationError(f"{where}.unit: expected a string")
    raw = _expect(data, "entropies", where)
    if not isinstance(raw, dict):
        raise ValidationError(f"{where}.entropies: expected a subset->value map")
    entries: dict[int, Value] = {}
    for key, val in raw.items():
        kwhere = f"{where}.entropies[{key!r}]"
        try:
            users = sorted({int(s) for s in key.split(",") if s.strip() != ""})
        except ValueError:
            raise ValidationError(f"{kwhere}: subset must list user indices")
        if any(not 1 <= u <= m for u in users):
            raise ValidationError(f"{kwhere}: user index outside 1..{m}")
        mask = 0
        for u in users:
            mask |= 1 << (u - 1)
        entries[mask] = parse_value(val, kwhere)
    return TableSource(m=m, entries=entries, unit=unit)


def parse_problem(data: Any, *, sha256: str = "", where: str = "$") -> ProblemDocument:
    src_raw = _expect(data, "source", where)
    kind = _expect(src_raw, "kind", f"{where}.source")
    if kind == "linear":
        source: Source = _parse_linear(src_raw, f"{where}.source")
    elif kind == "pmf":
        source = _parse_pmf(src_raw, f"{where}.source")
    elif kind == "table":
        source = _parse_table(src_raw, f"{where}.source")
    else:
        raise ValidationError(
            f"{where}.source.kind: expected 'linear', 'pmf' or 'table', got {kind!r}")
    problems = validate(source)
    if problems:
        raise ValidationError("; ".join(f"{where}.source: {p}" for p in problems))

    weights: Optional[tuple[Value, ...]] = None
    if "weights" in data and data["weights"] is not None:
        raw_w = data["weights"]
        if not isinstance(raw_w, list) or len(raw_w) != source.m:
            raise ValidationError(
                f"{where}.weights: expected {source.m} entries")
        weights = tuple(parse_value(w, f"{where}.weights[{i}]")
                        for i, w in enumerate(raw_w))
        for i, w in enumerate(weights):
            if w < 0:
                raise ValidationError(f"{where}.weights[{i}]: negative weight {w}")

    n = data.get("n", 1)
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValidationError(f"{where}.n: expected a positive integer")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ValidationError(f"{where}.seed: expected a nonnegative integer")
    return ProblemDocument(source=source, weights=weights, n=n, seed=seed,
                           sha256=sha256)


def _load_json(path: str) -> tuple[Any, str]:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise ValidationError(f"{path}: {exc}")
    try:
        return json.loads(blob.decode("utf-8")), hashlib.sha256(blob).hexdigest()
    except UnicodeDecodeError as exc:
        raise ValidationError(f"{path}: not valid UTF-8 ({exc})")
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{exc.lineno}: {exc.msg}")


def load_problem(path: str) -> ProblemDocument:
    data, digest = _load_json(path)
    return parse_problem(data, sha256=digest, where=path)


def scheme_to_json(scheme: TransmissionScheme, unit: str) -> dict:
    return {
        "kind": "scheme",
        "p": scheme.p,
        "n": scheme.n,
        "unit": unit,
        "coefficients": [
            {"rows": c.rows, "cols": c.cols,
             "entries": [x for row in c.to_rows() for x in row]}
            for c in scheme.coefficients
        ],
    }


def parse_scheme(data: Any, where: str = "$") -> tuple[TransmissionScheme, str]:
    kind = _expect(data, "kind", where)
    if kind != "scheme":
        raise ValidationError(f"{where}.kind: expected 'scheme', got {kind!r}")
    p = _int_field(data, "p", where, minimum=2)
    n = _int_field(data, "n", where, minimum=1)
    unit = data.get("unit", "")
    if not isinstance(unit, str):
        raise ValidationError(f"{where}.unit: expected a string")
    raw = _expect(data, "coefficients", where)
    if not isinstance(raw, list):
        raise ValidationError(f"{where}.coefficients: expected a list")
    coeffs = []
    for ui, entry in enumerate(raw):
        uwhere = f"{where}.coefficients[{ui}]"
        rows = _int_field(entry, "rows", uwhere)
        cols = _int_field(entry, "cols", uwhere)
        ents = _expect(entry, "entries", uwhere)
        if (not isinstance(ents, list)
                or any(not isinstance(x, int) or isinstance(x, bool) for x in ents)):
            raise ValidationError(f"{uwhere}.entries: expected integers")
        try:
            coeffs.append(ff.FieldMatrix(rows, cols, p, ents))
        except Exception as exc:
            raise ValidationError(f"{uwhere}: {exc}")
    return TransmissionScheme(n=n, p=p, coefficients=tuple(coeffs)), unit


def load_scheme(path: str, expected_unit: Optional[str] = None
                ) -> TransmissionScheme:
    data, _digest = _load_json(path)
    scheme, unit = parse_scheme(data, where=path)
    if expected_unit is not None and unit and unit != expected_unit:
        raise UnitMismatch(
            f"{path}: scheme unit {unit!r} does not match problem unit "
            f"{expected_unit!r}")
    return scheme


def rates_to_json(rates: RateVector) -> list:
    return [format_value(v) for v in rates.values]


def dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def render_table(doc: dict, indent: str = "") -> str:
    """Aligned plain-text rendering of a (nested) result document."""
    lines: list[str] = []
    scalars = [(k, v) for k, v in doc.items() if not isinstance(v, (dict, list))]
    width = max((len(k) for k, _ in scalars), default=0)
    for key, value in doc.items():
        if isinstance(value, dict):
            lines.append(f"{indent}{key}:")
            lines.append(render_table(value, indent + "  "))
        elif isinstance(value, list):
            rendered = " ".join(
                json.dumps(x) if isinstance(x, (dict, list)) else str(x)
                for x in value)
            lines.append(f"{indent}{key:<{width}}  {rendered}")
        else:
            lines.append(f"{indent}{key:<{width}}  {value}")
    return "\n".join(lines)
