"""Categorical datasets: CSV ingestion, schema overrides, projections and
longitudinal variable transforms.

A :class:`Dataset` is immutable. Transforms and projections return new
datasets and never touch their input.
"""
from __future__ import annotations

import configparser
import csv
import io
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import IO, Iterable, Optional, Sequence, Union

from .errors import ArgumentError, ParseError, ValidationError

MISSING = None

ROLES = ("time-invariant-covariate", "timed-covariate", "timed-outcome", "other")
TIMED_ROLES = ("timed-covariate", "timed-outcome")


@dataclass(frozen=True)
class VariableSchema:
    name: str
    categories: tuple[str, ...]
    role: str = "other"
    time: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(self.categories))
        if not self.name:
            raise ValidationError("variable name must be non-empty")
        if not self.categories:
            raise ValidationError(f"variable {self.name!r} has no categories")
        if len(set(self.categories)) != len(self.categories):
            raise ValidationError(f"variable {self.name!r} has duplicate categories")
        if self.role not in ROLES:
            raise ValidationError(f"variable {self.name!r}: unknown role {self.role!r}")
        timed = self.role in TIMED_ROLES
        if timed and (self.time is None or self.time < 1):
            raise ValidationError(
                f"variable {self.name!r}: timed role requires a time index >= 1"
            )
        if not timed and self.time is not None:
            raise ValidationError(
                f"variable {self.name!r}: time index given for untimed role {self.role!r}"
            )


@dataclass(frozen=True)
class Dataset:
    """Columnar categorical table. ``rows`` hold labels or ``MISSING``."""

    schema: tuple[VariableSchema, ...]
    rows: tuple[tuple[Optional[str], ...], ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "schema", tuple(self.schema))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        names = [v.name for v in self.schema]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate variable names in schema")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})
        allowed = [set(v.categories) for v in self.schema]
        for r, row in enumerate(self.rows, start=1):
            if len(row) != len(self.schema):
                raise ValidationError(
                    f"row {r} has {len(row)} values, expected {len(self.schema)}"
                )
            for value, cats, var in zip(row, allowed, self.schema):
                if value is not MISSING and value not in cats:
                    raise ValidationError(
                        f"row {r}: value {value!r} is not a category of {var.name!r}"
                    )

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.schema)

    def __len__(self):
        return len(self.rows)

    def variable(self, name: str) -> VariableSchema:
        try:
            return self.schema[self._index[name]]
        except KeyError:
            raise ArgumentError(f"unknown variable {name!r}") from None

    def column(self, name: str) -> tuple[Optional[str], ...]:
        self.variable(name)
        i = self._index[name]
        return tuple(row[i] for row in self.rows)

    def with_columns(self, new_vars: Sequence[VariableSchema], columns) -> "Dataset":
        """Append variables; ``columns`` holds one value sequence per variable."""
        columns = [tuple(c) for c in columns]
        rows = [
            tuple(row) + tuple(col[r] for col in columns)
            for r, row in enumerate(self.rows)
        ]
        return Dataset(self.schema + tuple(new_vars), rows)


def _read_text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source).decode("utf-8")
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8", newline="") as fh:
            return fh.read()
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


def load_dataset(
    source: Union[str, os.PathLike, bytes, IO],
    schema_override: Optional[Sequence[VariableSchema]] = None,
) -> Dataset:
    """Read a UTF-8 CSV (header row first, empty cell = missing).

    Without an override, every column becomes an ``other`` variable whose
    categories are the observed labels sorted lexicographically. With an
    override, categories and roles come from the schema and unknown labels
    raise :class:`ValidationError`.
    """
    text = _read_text(source)
    if text.startswith("\ufeff"):
        text = text[1:]
    try:
        records = list(csv.reader(io.StringIO(text, newline="")))
    except csv.Error as exc:
        raise ParseError(f"malformed CSV: {exc}") from None
    records = [r for r in records if r]
    if not records:
        raise ParseError("empty input: header row missing")
    header = [h.strip() for h in records[0]]
    if any(not h for h in header):
        raise ParseError("row 1: empty variable name in header")
    if len(set(header)) != len(header):
        raise ParseError("row 1: duplicate variable names in header")
    rows = []
    for lineno, rec in enumerate(records[1:], start=2):
        if len(rec) != len(header):
            raise ParseError(
                f"row {lineno}: expected {len(header)} fields, found {len(rec)}"
            )
        rows.append(tuple(v.strip() or MISSING for v in rec))

    if schema_override is None:
        schema = []
        for j, name in enumerate(header):
            observed = sorted({row[j] for row in rows if row[j] is not MISSING})
            if not observed:
                raise ValidationError(f"variable {name!r} has no observed values")
            schema.append(VariableSchema(name, tuple(observed)))
    else:
        by_name = {v.name: v for v in schema_override}
        unknown = set(by_name) - set(header)
        if unknown:
            raise ValidationError(f"schema names variables absent from data: {sorted(unknown)}")
        schema = []
        for j, name in enumerate(header):
            if name in by_name:
                schema.append(by_name[name])
            else:
                observed = sorted({row[j] for row in rows if row[j] is not MISSING})
                if not observed:
                    raise ValidationError(f"variable {name!r} has no observed values")
                schema.append(VariableSchema(name, tuple(observed)))
    return Dataset(tuple(schema), tuple(rows))


def load_schema(path: Union[str, os.PathLike]) -> list[VariableSchema]:
    """Read a schema override file.

    One INI section per variable::

        [Week1]
        categories = A, N
        role = timed-outcome
        time = 1

    ``role`` defaults to ``other``; ``time`` is required for timed roles.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ParseError(f"schema file: {exc}") from None
    schema = []
    for name in parser.sections():
        sec = parser[name]
        if "categories" not in sec:
            raise ValidationError(f"schema variable {name!r} lacks 'categories'")
        cats = tuple(c.strip() for c in sec["categories"].split(",") if c.strip())
        time = sec.get("time")
        try:
            time = int(time) if time is not None else None
        except ValueError:
            raise ValidationError(f"schema variable {name!r}: time must be an integer") from None
        schema.append(VariableSchema(name, cats, sec.get("role", "other"), time))
    return schema


def load_example(name: str = "depression") -> Dataset:
    """Bundled datasets. ``depression``: Koch et al. (1977), 340 patients."""
    try:
        raw = resources.files("stagedlong.datasets").joinpath(f"{name}.csv").read_bytes()
    except FileNotFoundError:
        raise ArgumentError(f"no bundled dataset named {name!r}") from None
    return load_dataset(raw)


def margin_spec(names: Iterable[str]) -> tuple[str, ...]:
    names = tuple(names)
    if not names:
        raise ArgumentError("margin must name at least one variable")
    if len(set(names)) != len(names):
        raise ArgumentError(f"margin has duplicate variables: {names}")
    return names


def project_margin(data: Dataset, margin: Sequence[str]) -> Dataset:
    margin = margin_spec(margin)
    idx = []
    for name in margin:
        data.variable(name)
        idx.append(data.names.index(name))
    schema = tuple(data.schema[i] for i in idx)
    rows = tuple(tuple(row[i] for i in idx) for row in data.rows)
    return Dataset(schema, rows)


def complete_cases(data: Dataset, names: Optional[Sequence[str]] = None) -> Dataset:
    """Drop rows with any missing value among ``names`` (default: all)."""
    cols = range(len(data.schema)) if names is None else [data.names.index(n) for n in names]
    rows = tuple(r for r in data.rows if all(r[i] is not MISSING for i in cols))
    return Dataset(data.schema, rows)


def _as_int(value: str, var: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ValidationError(f"variable {var!r}: category {value!r} is not an integer") from None


DIFFERENCE_LABELS = ("decreasing", "increasing")


def transform_difference_outcome(
    data: Dataset,
    count_vars: Sequence[str],
    pairs: Sequence[tuple[int, int]],
    names: Optional[Sequence[str]] = None,
) -> Dataset:
    """Append binary change variables between integer-valued count variables.

    ``pairs`` index ``count_vars`` from 1; index 0 stands for a baseline count
    of zero. ``(i, j)`` yields ``increasing`` when the count at ``j`` exceeds
    the count at ``i``, ``decreasing`` otherwise (ties included).
    """
    count_vars = list(count_vars)
    for name in count_vars:
        var = data.variable(name)
        for c in var.categories:
            _as_int(c, name)
    if names is None:
        names = [f"Y{i}_{j}" for i, j in pairs]
    if len(names) != len(pairs):
        raise ArgumentError("one output name per pair is required")
    cols = {name: data.column(name) for name in count_vars}
    new_vars, new_cols = [], []
    for (i, j), out in zip(pairs, names):
        if not 0 <= i < j <= len(count_vars):
            raise ArgumentError(f"invalid pair ({i}, {j}): need 0 <= i < j <= {len(count_vars)}")
        before = [0] * len(data) if i == 0 else cols[count_vars[i - 1]]
        after = cols[count_vars[j - 1]]
        col = []
        for a, b in zip(before, after):
            if a is MISSING or b is MISSING:
                col.append(MISSING)
            else:
                inc = _as_int(b, count_vars[j - 1]) - int(a) > 0
                col.append(DIFFERENCE_LABELS[inc])
        new_vars.append(VariableSchema(out, DIFFERENCE_LABELS))
        new_cols.append(col)
    return data.with_columns(new_vars, new_cols)


def transform_cumulative_sum(
    data: Dataset,
    binary_var_names: Sequence[str],
    positive_label: str,
    prefix: str = "Hsum",
) -> Dataset:
    """Append running counts of ``positive_label`` over ``binary_var_names``.

    Output variable ``t`` (named ``f"{prefix}{t}"``) has categories
    ``"0" .. str(t)``. A missing value makes that running count and every
    later one missing.
    """
    binary_var_names = list(binary_var_names)
    for name in binary_var_names:
        var = data.variable(name)
        if len(var.categories) != 2:
            raise ValidationError(f"variable {name!r} is not binary: {var.categories}")
        if positive_label not in var.categories:
            raise ValidationError(f"{positive_label!r} is not a category of {name!r}")
    cols = [data.column(name) for name in binary_var_names]
    out_cols = [[] for _ in cols]
    for r in range(len(data)):
        total = 0
        broken = False
        for t, col in enumerate(cols):
            value = col[r]
            if broken or value is MISSING:
                broken = True
                out_cols[t].append(MISSING)
                continue
            total += value == positive_label
            out_cols[t].append(str(total))
    new_vars = [
        VariableSchema(f"{prefix}{t}", tuple(str(k) for k in range(t + 1)))
        for t in range(1, len(cols) + 1)
    ]
    return data.with_columns(new_vars, out_cols)


def with_roles(data: Dataset, roles: dict) -> Dataset:
    """Return ``data`` with roles set; ``roles`` maps name -> (role, time)."""
    schema = []
    for var in data.schema:
        if var.name in roles:
            role, time = roles[var.name]
            var = replace(var, role=role, time=time)
        schema.append(var)
    return Dataset(tuple(schema), data.rows)
