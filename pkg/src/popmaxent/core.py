"""Categorical attribute spaces, populations, patterns, and marginals.

An attribute space is the Cartesian product of K finite category domains.
Cells of the space are addressed by a mixed-radix integer code with
attribute 0 most significant, so enumeration order is row-major and
bit-reproducible everywhere.  Populations are sparse nonnegative integer
contingency tables over cells; marginals are support-only frequency
tables over 1 to 3 attributes.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ValidationError

MAX_PATTERN_ARITY = 3

MARGINAL_SUM_TOL = 1e-9


@dataclass(frozen=True)
class AttributeSchema:
    """Ordered categorical attributes with finite domains.

    ``attributes`` is a tuple of ``(name, domain)`` pairs where each domain
    is a tuple of category labels in canonical (ingestion) order.  Every
    domain must hold at least two distinct categories, and attribute names
    must be unique.
    """

    attributes: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self):
        if not self.attributes:
            raise ValidationError("schema needs at least one attribute")
        names = [name for name, _ in self.attributes]
        if len(set(names)) != len(names):
            raise ValidationError("attribute names must be unique")
        for name, domain in self.attributes:
            if len(domain) < 2:
                raise ValidationError(
                    f"attribute {name!r} needs at least 2 categories, got {len(domain)}"
                )
            if len(set(domain)) != len(domain):
                raise ValidationError(f"attribute {name!r} has duplicate category labels")

    @classmethod
    def from_domains(cls, attrs: Iterable[tuple[str, Sequence[str]]]) -> "AttributeSchema":
        return cls(tuple((name, tuple(domain)) for name, domain in attrs))

    @property
    def k(self) -> int:
        return len(self.attributes)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.attributes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(domain) for _, domain in self.attributes)

    @property
    def n_cells(self) -> int:
        n = 1
        for _, domain in self.attributes:
            n *= len(domain)
        return n

    def domain(self, attr: int) -> tuple[str, ...]:
        return self.attributes[attr][1]

    def attr_index(self, name: str) -> int:
        for i, (n, _) in enumerate(self.attributes):
            if n == name:
                return i
        raise ValidationError(f"unknown attribute {name!r}")

    def category_index(self, attr: int, label: str) -> int:
        try:
            return self.domain(attr).index(label)
        except ValueError:
            raise ValidationError(
                f"unknown category {label!r} for attribute {self.names[attr]!r}"
            ) from None


def encode_cell(schema: AttributeSchema, assignment: Sequence[int]) -> int:
    """Mixed-radix code of a full assignment (attribute 0 most significant)."""
    shape = schema.shape
    if len(assignment) != len(shape):
        raise ValidationError(
            f"assignment length {len(assignment)} != number of attributes {len(shape)}"
        )
    code = 0
    for a, d in zip(assignment, shape):
        if not 0 <= a < d:
            raise ValidationError(f"category index {a} out of range for domain size {d}")
        code = code * d + a
    return code


def decode_cell(schema: AttributeSchema, cell: int) -> tuple[int, ...]:
    """Inverse of :func:`encode_cell`."""
    if not 0 <= cell < schema.n_cells:
        raise ValidationError(f"cell index {cell} out of range")
    out = []
    for d in reversed(schema.shape):
        out.append(cell % d)
        cell //= d
    return tuple(reversed(out))


@dataclass(frozen=True)
class Pattern:
    """A subset of the attribute space fixing 1 to 3 attribute values.

    ``fixed`` is a tuple of ``(attribute index, category index)`` pairs
    sorted by attribute index.  The pattern's indicator function over cells
    is the feature associated with one atomic constraint.
    """

    fixed: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not 1 <= len(self.fixed) <= MAX_PATTERN_ARITY:
            raise ValidationError(f"pattern arity must be 1..3, got {len(self.fixed)}")
        attrs = [a for a, _ in self.fixed]
        if sorted(set(attrs)) != attrs:
            raise ValidationError("pattern attributes must be distinct and sorted")

    @classmethod
    def of(cls, fixed: Mapping[int, int]) -> "Pattern":
        return cls(tuple(sorted(fixed.items())))

    @property
    def arity(self) -> int:
        return len(self.fixed)

    @property
    def scope(self) -> tuple[int, ...]:
        return tuple(a for a, _ in self.fixed)

    @property
    def values(self) -> tuple[int, ...]:
        return tuple(v for _, v in self.fixed)

    def validate_for(self, schema: AttributeSchema) -> None:
        for a, v in self.fixed:
            if not 0 <= a < schema.k:
                raise ValidationError(f"pattern attribute index {a} out of range")
            if not 0 <= v < len(schema.domain(a)):
                raise ValidationError(
                    f"pattern category index {v} out of range for attribute {schema.names[a]!r}"
                )

    def matches(self, schema: AttributeSchema, cell: int) -> bool:
        assignment = decode_cell(schema, cell)
        return all(assignment[a] == v for a, v in self.fixed)

    def describe(self, schema: AttributeSchema) -> str:
        return ",".join(f"{schema.names[a]}={schema.domain(a)[v]}" for a, v in self.fixed)


@dataclass(frozen=True)
class MarginalTable:
    """Support-only empirical frequency table over a 1-3 attribute scope.

    ``cells`` maps observed category-index combinations (tuples aligned
    with ``scope``) to frequencies in (0, 1]; frequencies sum to 1.
    """

    scope: tuple[int, ...]
    cells: Mapping[tuple[int, ...], float]

    def __post_init__(self):
        if not 1 <= len(self.scope) <= MAX_PATTERN_ARITY:
            raise ValidationError("marginal scope must have 1..3 attributes")
        if len(set(self.scope)) != len(self.scope):
            raise ValidationError("marginal scope attributes must be distinct")
        total = sum(self.cells.values())
        if abs(total - 1.0) > MARGINAL_SUM_TOL:
            raise ValidationError(f"marginal frequencies sum to {total!r}, not 1")

    @property
    def support_size(self) -> int:
        """Number of category combinations observed at least once."""
        return len(self.cells)

    def to_dense(self, schema: AttributeSchema) -> np.ndarray:
        """Dense array over the scope's full Cartesian product (zeros off-support)."""
        shape = tuple(len(schema.domain(a)) for a in self.scope)
        out = np.zeros(shape)
        for combo, freq in self.cells.items():
            out[combo] = freq
        return out


def support_size(table: MarginalTable) -> int:
    return table.support_size


@dataclass(frozen=True, eq=False)
class Population:
    """A multiset of complete assignments as a sparse contingency table.

    ``cells`` holds distinct cell codes sorted ascending and ``counts`` the
    matching positive integer multiplicities; ``total`` is the population
    size N.  Instances are immutable and safe to share; compare with
    :meth:`equals`.
    """

    schema: AttributeSchema
    cells: np.ndarray
    counts: np.ndarray
    total: int = field(init=False)

    def equals(self, other: "Population") -> bool:
        return (
            self.schema == other.schema
            and np.array_equal(self.cells, other.cells)
            and np.array_equal(self.counts, other.counts)
        )

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.int64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if cells.shape != counts.shape or cells.ndim != 1:
            raise ValidationError("cells and counts must be 1-d arrays of equal length")
        if cells.size:
            if np.any(counts < 1):
                raise ValidationError("stored counts must all be >= 1")
            if np.any(np.diff(cells) <= 0):
                raise ValidationError("cells must be strictly increasing")
            if cells[0] < 0 or cells[-1] >= self.schema.n_cells:
                raise ValidationError("cell code out of range for schema")
        cells.flags.writeable = False
        counts.flags.writeable = False
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "total", int(counts.sum()))

    @classmethod
    def from_counts(cls, schema: AttributeSchema, counts: Mapping[int, int]) -> "Population":
        items = sorted(counts.items())
        return cls(
            schema,
            np.array([c for c, _ in items], dtype=np.int64),
            np.array([n for _, n in items], dtype=np.int64),
        )

    @classmethod
    def from_assignments(
        cls, schema: AttributeSchema, rows: Iterable[Sequence[int]]
    ) -> "Population":
        acc: dict[int, int] = {}
        for row in rows:
            code = encode_cell(schema, row)
            acc[code] = acc.get(code, 0) + 1
        return cls.from_counts(schema, acc)

    def coords(self) -> np.ndarray:
        """(K, n_support) array of category indices for the stored cells."""
        return np.array(np.unravel_index(self.cells, self.schema.shape))

    def count_of(self, cell: int) -> int:
        i = np.searchsorted(self.cells, cell)
        if i < len(self.cells) and self.cells[i] == cell:
            return int(self.counts[i])
        return 0

    def __len__(self) -> int:
        return self.total


def _require_nonempty(pop: Population, what: str) -> None:
    if pop.total == 0:
        raise ValidationError(f"{what} is undefined on an empty population")


def marginal(pop: Population, scope: Sequence[int]) -> MarginalTable:
    """Empirical frequency table of ``pop`` over a 1-3 attribute scope.

    Only combinations observed at least once are stored.
    """
    scope = tuple(scope)
    if not 1 <= len(scope) <= MAX_PATTERN_ARITY:
        raise ValidationError("scope must list 1..3 attributes")
    if len(set(scope)) != len(scope):
        raise ValidationError("scope attributes must be distinct")
    for a in scope:
        if not 0 <= a < pop.schema.k:
            raise ValidationError(f"scope attribute index {a} out of range")
    _require_nonempty(pop, "marginal")

    coords = pop.coords()
    shape = tuple(len(pop.schema.domain(a)) for a in scope)
    flat = np.ravel_multi_index(tuple(coords[a] for a in scope), shape)
    sums = np.bincount(flat, weights=pop.counts, minlength=int(np.prod(shape)))
    cells = {}
    for idx in np.flatnonzero(sums):
        combo = tuple(int(c) for c in np.unravel_index(idx, shape))
        cells[combo] = float(sums[idx]) / pop.total
    return MarginalTable(scope, cells)


def empirical_frequency(pop: Population, pattern: Pattern) -> float:
    """Fraction of individuals matching ``pattern``."""
    pattern.validate_for(pop.schema)
    _require_nonempty(pop, "empirical frequency")
    coords = pop.coords()
    mask = np.ones(len(pop.cells), dtype=bool)
    for a, v in pattern.fixed:
        mask &= coords[a] == v
    return float(pop.counts[mask].sum()) / pop.total


# ---------------------------------------------------------------------------
# Delimited-text ingestion and emission
# ---------------------------------------------------------------------------

COUNT_COLUMN = "__count"


def _detect_delimiter(header_line: str) -> str:
    return "\t" if "\t" in header_line else ","


def read_population_text(text: str, schema: AttributeSchema | None = None) -> Population:
    """Parse a delimited population document.

    First non-comment row holds attribute names; remaining rows are one
    individual each, or carry a multiplicity in a final ``__count`` column.
    Comma and tab delimiters are auto-detected from the header.  Domains
    are fixed as the observed values in order of first appearance unless a
    schema is supplied, in which case unseen categories are a hard error.
    """
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValidationError("population file has no header row")
    delim = _detect_delimiter(lines[0])
    reader = csv.reader(io.StringIO("\n".join(lines)), delimiter=delim)
    rows = list(reader)
    header = [h.strip() for h in rows[0]]
    counted = bool(header) and header[-1] == COUNT_COLUMN
    names = header[:-1] if counted else header
    if not names:
        raise ValidationError("population file header has no attribute columns")

    if schema is not None:
        if list(schema.names) != names:
            raise ValidationError(
                f"file attributes {names!r} do not match schema {list(schema.names)!r}"
            )
        lookup: list[dict[str, int]] = [
            {label: i for i, label in enumerate(schema.domain(a))} for a in range(schema.k)
        ]
    else:
        lookup = [{} for _ in names]

    body: list[tuple[tuple[int, ...], int]] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValidationError(
                f"row {lineno} has {len(row)} fields, expected {len(header)}"
            )
        if counted:
            raw = row[-1].strip()
            try:
                mult = int(raw)
            except ValueError:
                raise ValidationError(f"row {lineno}: bad {COUNT_COLUMN} value {raw!r}") from None
            if mult < 1:
                raise ValidationError(f"row {lineno}: {COUNT_COLUMN} must be >= 1, got {mult}")
            values = row[:-1]
        else:
            mult = 1
            values = row
        assignment = []
        for col, label in enumerate(values):
            label = label.strip()
            if label in lookup[col]:
                assignment.append(lookup[col][label])
            elif schema is None:
                lookup[col][label] = len(lookup[col])
                assignment.append(lookup[col][label])
            else:
                raise ValidationError(
                    f"row {lineno}: unseen category {label!r} for attribute {names[col]!r}"
                )
        body.append((tuple(assignment), mult))

    if schema is None:
        domains = []
        for name, seen in zip(names, lookup):
            ordered = sorted(seen, key=seen.get)
            domains.append((name, ordered))
        schema = AttributeSchema.from_domains(domains)

    acc: dict[int, int] = {}
    for assignment, mult in body:
        code = encode_cell(schema, assignment)
        acc[code] = acc.get(code, 0) + mult
    return Population.from_counts(schema, acc)


def read_population(path, schema: AttributeSchema | None = None) -> Population:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return read_population_text(fh.read(), schema)


def population_text(
    pop: Population, counted: bool = True, header_comments: Sequence[str] = ()
) -> str:
    """Serialize a population to the delimited format ingestion accepts.

    Counted form writes one row per occupied cell in canonical cell order
    with a ``__count`` column; uncounted form repeats rows per individual.
    """
    out = io.StringIO()
    for line in header_comments:
        out.write(f"# {line}\n")
    names = list(pop.schema.names)
    writer = csv.writer(out, delimiter=",", lineterminator="\n")
    writer.writerow(names + [COUNT_COLUMN] if counted else names)
    coords = pop.coords()
    for i in range(len(pop.cells)):
        labels = [pop.schema.domain(a)[coords[a, i]] for a in range(pop.schema.k)]
        if counted:
            writer.writerow(labels + [int(pop.counts[i])])
        else:
            for _ in range(int(pop.counts[i])):
                writer.writerow(labels)
    return out.getvalue()


def write_population(pop: Population, path, counted: bool = True,
                     header_comments: Sequence[str] = ()) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(population_text(pop, counted=counted, header_comments=header_comments))
