"""Internal dense-enumeration machinery.

Constraints are grouped by the attribute scope of their patterns; per-cell
feature sums and per-constraint masses are then computed with one reshape
plus broadcast (or one axis reduction) per scope instead of touching each
pattern cell set individually.  Duplicate patterns are supported: their
multipliers accumulate and their masses coincide.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .core import AttributeSchema, Pattern
from .errors import CapacityError

DEFAULT_ENUM_CAP = 2 ** 24


def scope_shape(schema: AttributeSchema, scope: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(len(schema.domain(a)) for a in scope)


def bcast_shape(schema: AttributeSchema, scope: tuple[int, ...]) -> tuple[int, ...]:
    """Shape that places a scope table for broadcasting against the full space."""
    return tuple(len(schema.domain(a)) if a in scope else 1 for a in range(schema.k))


def axes_complement(schema: AttributeSchema, scope: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(a for a in range(schema.k) if a not in scope)


def check_cap(schema: AttributeSchema, cap: int) -> None:
    if schema.n_cells > cap:
        raise CapacityError(
            f"attribute space has {schema.n_cells} cells, over the enumeration cap "
            f"{cap}; use Metropolis estimation or raise the cap"
        )


class _ScopeGroup:
    __slots__ = ("scope", "shape", "size", "bshape", "other_axes", "combos", "constraint_idx")

    def __init__(self, schema: AttributeSchema, scope: tuple[int, ...],
                 combos: list[int], constraint_idx: list[int]):
        self.scope = scope
        self.shape = scope_shape(schema, scope)
        self.size = math.prod(self.shape)
        self.bshape = bcast_shape(schema, scope)
        self.other_axes = axes_complement(schema, scope)
        self.combos = np.asarray(combos, dtype=np.int64)
        self.constraint_idx = np.asarray(constraint_idx, dtype=np.int64)


class ScopeLayout:
    """Scope-grouped incidence between patterns and the enumerated space."""

    def __init__(self, schema: AttributeSchema, patterns: Sequence[Pattern]):
        self.schema = schema
        self.m = len(patterns)
        grouped: dict[tuple[int, ...], tuple[list[int], list[int]]] = {}
        for j, pattern in enumerate(patterns):
            pattern.validate_for(schema)
            scope = pattern.scope
            shape = scope_shape(schema, scope)
            flat = 0
            for v, d in zip(pattern.values, shape):
                flat = flat * d + v
            combos, idx = grouped.setdefault(scope, ([], []))
            combos.append(flat)
            idx.append(j)
        self.groups = [
            _ScopeGroup(schema, scope, *grouped[scope]) for scope in sorted(grouped)
        ]

    def energies(self, lam: np.ndarray) -> np.ndarray:
        """Per-cell feature sums sum_j lam_j f_j(x), flat in canonical cell order."""
        ev = np.zeros(self.schema.shape)
        for g in self.groups:
            table = np.zeros(g.size)
            np.add.at(table, g.combos, lam[g.constraint_idx])
            ev += table.reshape(g.bshape)
        return ev.ravel()

    def masses(self, dense: np.ndarray) -> np.ndarray:
        """Per-constraint mass of a dense nonnegative cell vector."""
        out = np.empty(self.m)
        dv = dense.reshape(self.schema.shape)
        for g in self.groups:
            proj = dv.sum(axis=g.other_axes).ravel()
            out[g.constraint_idx] = proj[g.combos]
        return out

    def sparse_masses(self, cells: np.ndarray, weights: np.ndarray, total: float) -> np.ndarray:
        """Per-constraint frequency of a sparse (cells, weights) cell vector.

        Does not require enumerating the space, so it works over the cap.
        """
        coords = np.array(np.unravel_index(np.asarray(cells, dtype=np.int64),
                                           self.schema.shape))
        weights = np.asarray(weights, dtype=np.float64)
        out = np.empty(self.m)
        for g in self.groups:
            flat = np.ravel_multi_index(tuple(coords[a] for a in g.scope), g.shape)
            sums = np.bincount(flat, weights=weights, minlength=g.size)
            out[g.constraint_idx] = sums[g.combos]
        return out / total
