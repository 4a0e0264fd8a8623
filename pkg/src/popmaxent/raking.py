"""Generalized raking baseline over the enumerated attribute space.

Weights start uniform over all cells (or at a seed population's empirical
distribution) and constraints are processed sequentially: the cells
matching a constraint's pattern are multiplicatively rescaled by
target/mass so their weighted mass hits the target exactly, and the
renormalization to total mass 1 scales the complement by
(1 - target)/(1 - mass).  A full pass runs every constraint once in
constraint-set order; the procedure repeats for a fixed number of passes.

The inner loop batches consecutive same-scope constraints: within a scope
the patterns are disjoint, so the sequence of scalar rescale/renormalize
steps can be replayed exactly on per-combination masses and applied to the
big weight vector once per scope run.  This is algebraically identical to
the one-constraint-at-a-time update (the unit tests check it against a
naive reference).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._dense import DEFAULT_ENUM_CAP, bcast_shape, axes_complement, check_cap, scope_shape
from .core import AttributeSchema, Population
from .errors import UnmatchableConstraintError, ValidationError
from .extraction import ConstraintSet
from .sampling import draw_cells

DEFAULT_RAKE_ITERATIONS = 1000

MASS_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Normalized cell weights, the raking state after fitting."""

    schema: AttributeSchema
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (self.schema.n_cells,):
            raise ValidationError(
                f"weight vector length {w.shape} != cell count {self.schema.n_cells}"
            )
        if np.any(w < 0.0) or not np.isfinite(w).all():
            raise ValidationError("weights must be finite and nonnegative")
        if abs(float(w.sum()) - 1.0) > MASS_TOL:
            raise ValidationError(f"weights sum to {w.sum()!r}, not 1")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    def equals(self, other: "WeightVector") -> bool:
        return self.schema == other.schema and np.array_equal(self.weights, other.weights)


def _runs(constraints: ConstraintSet):
    """Consecutive same-scope runs of (flat combo, target, index) triples."""
    schema = constraints.schema
    runs = []
    current_scope = None
    for j, c in enumerate(constraints.constraints):
        scope = c.pattern.scope
        if scope != current_scope:
            shape = scope_shape(schema, scope)
            runs.append(
                dict(
                    scope=scope,
                    size=math.prod(shape),
                    bshape=bcast_shape(schema, scope),
                    other_axes=axes_complement(schema, scope),
                    items=[],
                )
            )
            current_scope = scope
        flat = 0
        for v, d in zip(c.pattern.values, scope_shape(schema, scope)):
            flat = flat * d + v
        runs[-1]["items"].append((flat, c.target, j))
    return runs


def _rake_array(
    constraints: ConstraintSet, iterations: int, start: np.ndarray, tol: float | None
) -> tuple[np.ndarray, int, float]:
    """Run raking passes in place on ``start``; returns (weights, passes, last max dev)."""
    schema = constraints.schema
    runs = _runs(constraints)
    wv = start.reshape(schema.shape)
    max_dev = math.inf
    passes = 0
    def apply(run, gfac, glob):
        fac = np.full(run["size"], glob)
        for flat, g in gfac.items():
            fac[flat] = g * glob
        np.multiply(wv, fac.reshape(run["bshape"]), out=wv)

    for _ in range(iterations):
        max_dev = 0.0
        for run in runs:
            proj = wv.sum(axis=run["other_axes"]).ravel()
            glob = 1.0
            gfac: dict[int, float] = {}
            for flat, target, j in run["items"]:
                mass = glob * gfac.get(flat, 1.0) * proj[flat]
                problem = None
                if mass <= 0.0:
                    problem = "zero current mass"
                elif mass >= 1.0 and target < 1.0:
                    problem = "all current mass (complement target unmatchable)"
                if problem is not None:
                    raise UnmatchableConstraintError(
                        j,
                        f"constraint {j} (pattern "
                        f"{constraints.constraints[j].pattern.describe(schema)}, "
                        f"target {target}) has {problem}",
                    )
                # rescale the pattern to its target, its complement to the rest
                up = target / mass
                down = (1.0 - target) / (1.0 - mass) if mass < 1.0 else 1.0
                if down == 0.0:
                    # target exactly 1: the complement dies, which cannot be
                    # folded into the running factors; apply and restart
                    apply(run, gfac, glob)
                    hard = np.zeros(run["size"])
                    hard[flat] = up
                    wv *= hard.reshape(run["bshape"])
                    proj = np.zeros(run["size"])
                    proj[flat] = 1.0
                    glob, gfac = 1.0, {}
                else:
                    gfac[flat] = gfac.get(flat, 1.0) * (up / down)
                    glob *= down
                dev = max(abs(up - 1.0), abs(down - 1.0))
                if dev > max_dev:
                    max_dev = dev
            apply(run, gfac, glob)
        wv /= wv.sum()  # guard float drift across many passes
        passes += 1
        if tol is not None and max_dev <= tol:
            break
    return start, passes, max_dev


def rake(
    constraints: ConstraintSet,
    iterations: int = DEFAULT_RAKE_ITERATIONS,
    base: Population | None = None,
    *,
    tol: float | None = None,
    enum_cap: int = DEFAULT_ENUM_CAP,
) -> WeightVector:
    """Sequential multiplicative reweighting toward the constraint targets.

    ``base`` switches the start from uniform-over-cells to the empirical
    distribution of a seed population (whose support must then intersect
    every pattern).  ``tol`` optionally stops early once a full pass leaves
    every constraint within ``tol`` of its target factor 1; by default all
    ``iterations`` passes run.

    Raises :class:`UnmatchableConstraintError` when a positive target meets
    zero current mass.
    """
    if iterations < 1:
        raise ValidationError(f"iterations must be >= 1, got {iterations}")
    schema = constraints.schema
    check_cap(schema, enum_cap)
    n = schema.n_cells
    if base is not None:
        if base.schema != schema:
            raise ValidationError("base population schema does not match constraints")
        if base.total == 0:
            raise ValidationError("base population is empty")
        w = np.zeros(n)
        w[base.cells] = base.counts / base.total
    else:
        w = np.full(n, 1.0 / n)
    w, _, _ = _rake_array(constraints, iterations, w, tol)
    return WeightVector(schema, w)


def sample_weighted(w: WeightVector, n: int, seed: int) -> Population:
    """n i.i.d. draws from the weight distribution as an integer population."""
    draws = draw_cells(w.weights, n, seed)
    counts = np.bincount(draws, minlength=w.weights.size)
    cells = np.flatnonzero(counts)
    return Population(w.schema, cells.astype(np.int64), counts[cells].astype(np.int64))
