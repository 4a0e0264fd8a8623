"""Tests for the raking baseline and weighted sampling.

Claims:
    - one update sets a single constraint exactly: uniform 2-cell space
      with target 0.7 becomes weights (0.7, 0.3)
    - satisfied constraints are a fixed point; zero-mass patterns raise
      an unmatchable error naming the constraint
    - the scope-batched inner loop reproduces the naive one-constraint-at-
      a-time reference; the pattern mass equals the target right after its
      own update; total mass returns to 1 after every pass
    - unary-only raking converges to the same product distribution the
      maximum-entropy fit reaches (shared oracle)
    - max unary residual is non-increasing across passes; weighted
      sampling concentrates and is seed-deterministic
"""

import numpy as np
import pytest

from popmaxent import (
    AttributeSchema,
    ConstraintSet,
    ExtractionBudget,
    Pattern,
    Population,
    UnmatchableConstraintError,
    ValidationError,
    WeightVector,
    extract_constraints,
    fit_hard,
    rake,
    sample_weighted,
)
from popmaxent.extraction import AtomicConstraint
from popmaxent.raking import _rake_array
from popmaxent.synthetic import mixture_population

from oracles import naive_rake


def schema_of(*sizes):
    return AttributeSchema.from_domains(
        (f"A{i}", tuple(f"c{j}" for j in range(d))) for i, d in enumerate(sizes)
    )


def cs_of(schema, items):
    return ConstraintSet(
        schema, tuple(AtomicConstraint(Pattern.of(f), t) for f, t in items)
    )


def tv(p, q):
    return 0.5 * float(np.abs(p - q).sum())


class TestRakeBasics:
    def test_single_constraint_one_step(self):
        s = AttributeSchema.from_domains([("A", ("x", "y"))])
        cs = cs_of(s, [({0: 0}, 0.7)])
        wv = rake(cs, iterations=1)
        assert np.allclose(wv.weights, [0.7, 0.3], atol=1e-15)

    def test_satisfied_base_is_fixed_point(self):
        s = schema_of(2, 2)
        base = Population.from_counts(s, {0: 1, 1: 1, 2: 1, 3: 1})
        cs = cs_of(s, [({0: 0}, 0.5), ({1: 1}, 0.5)])
        wv = rake(cs, iterations=50, base=base)
        assert np.allclose(wv.weights, 0.25, atol=1e-14)

    def test_zero_mass_pattern_raises_with_index(self):
        s = schema_of(3, 2)
        # base occupies A in {c0, c1} only; the A=c2 pattern is unmatchable
        base = Population.from_assignments(s, [(0, 0), (0, 1), (1, 0), (1, 1)])
        cs = cs_of(s, [({0: 0}, 0.4), ({0: 2}, 0.2)])
        with pytest.raises(UnmatchableConstraintError) as err:
            rake(cs, iterations=1, base=base)
        assert err.value.index == 1

    def test_all_mass_pattern_with_sub_one_target_raises(self):
        s = schema_of(2, 2)
        base = Population.from_counts(s, {0: 1, 1: 1})  # A=0 holds all mass
        with pytest.raises(UnmatchableConstraintError):
            rake(cs_of(s, [({0: 0}, 0.5)]), iterations=1, base=base)

    def test_iterations_must_be_positive(self):
        s = schema_of(2, 2)
        with pytest.raises(ValidationError):
            rake(cs_of(s, [({0: 0}, 0.5)]), iterations=0)

    def test_base_schema_must_match(self):
        s = schema_of(2, 2)
        other = Population.from_counts(schema_of(2, 3), {0: 1})
        with pytest.raises(ValidationError):
            rake(cs_of(s, [({0: 0}, 0.5)]), base=other)


class TestSequentialSemantics:
    def test_matches_naive_reference(self):
        rng = np.random.default_rng(31)
        s = schema_of(3, 2, 2)
        for trial in range(5):
            items = []
            # deliberately interleaved scopes, including a duplicate pattern
            for _ in range(rng.integers(2, 7)):
                arity = int(rng.integers(1, 4))
                attrs = sorted(rng.choice(3, size=arity, replace=False).tolist())
                fixed = {a: int(rng.integers(0, s.shape[a])) for a in attrs}
                items.append((fixed, float(rng.uniform(0.05, 0.6))))
            items.append(items[0])
            cs = cs_of(s, items)
            fast = rake(cs, iterations=4).weights
            ref = naive_rake(s, cs, iterations=4)
            assert np.allclose(fast, ref, rtol=1e-10, atol=1e-14)

    def test_mass_equals_target_right_after_update(self):
        s = schema_of(2, 2, 3)
        pop = mixture_population(3, 400, seed=3)
        cs = extract_constraints(pop, ExtractionBudget.full())
        cs = ConstraintSet(pop.schema, cs.constraints, cs.scopes)
        checks = []

        def after_update(j, w):
            c = cs.constraints[j]
            mask = np.array([c.pattern.matches(pop.schema, cell)
                             for cell in range(pop.schema.n_cells)])
            checks.append(abs(w[mask].sum() - c.target))

        naive_rake(pop.schema, cs, iterations=2, after_update=after_update)
        assert max(checks) < 1e-12

    def test_mass_conservation_each_pass(self):
        pop = mixture_population(3, 300, seed=5)
        cs = extract_constraints(pop, ExtractionBudget.full())
        n = pop.schema.n_cells
        w = np.full(n, 1.0 / n)
        for _ in range(5):
            w, _, _ = _rake_array(cs, 1, w, None)
            assert abs(w.sum() - 1.0) <= 1e-10


class TestFixedPoints:
    def test_unary_only_matches_maxent_product(self):
        pop = mixture_population(3, 600, seed=7)
        cs = extract_constraints(pop, ExtractionBudget())
        model, report = fit_hard(cs, tol=1e-10)
        assert report.converged
        wv = rake(cs, iterations=1000)
        assert tv(wv.weights, model.probabilities()) < 1e-8

    def test_unary_residual_non_increasing(self):
        pop = mixture_population(4, 500, seed=9)
        cs = extract_constraints(pop, ExtractionBudget())
        masks = [
            np.array([c.pattern.matches(pop.schema, cell)
                      for cell in range(pop.schema.n_cells)])
            for c in cs.constraints
        ]

        def residual(w):
            return max(abs(w[m].sum() - c.target) for m, c in zip(masks, cs.constraints))

        history = [residual(rake(cs, iterations=k).weights) for k in range(1, 8)]
        for earlier, later in zip(history, history[1:]):
            assert later <= earlier + 1e-15

    def test_early_stop_matches_full_run_at_fixed_point(self):
        pop = mixture_population(3, 300, seed=11)
        cs = extract_constraints(pop, ExtractionBudget())
        full = rake(cs, iterations=400)
        stopped = rake(cs, iterations=400, tol=1e-13)
        assert np.allclose(full.weights, stopped.weights, atol=1e-12)


class TestWeightVector:
    def test_must_sum_to_one(self):
        s = schema_of(2, 2)
        with pytest.raises(ValidationError):
            WeightVector(s, np.array([0.5, 0.2, 0.1, 0.1]))

    def test_rejects_negative(self):
        s = schema_of(2, 2)
        with pytest.raises(ValidationError):
            WeightVector(s, np.array([0.5, 0.6, -0.05, -0.05]))


class TestSampleWeighted:
    def test_uniform_concentration(self):
        s = schema_of(2, 2)
        wv = WeightVector(s, np.full(4, 0.25))
        pop = sample_weighted(wv, 400_000, seed=13)
        freqs = pop.counts / pop.total
        assert np.abs(freqs - 0.25).max() < 0.005

    def test_point_mass(self):
        s = schema_of(2, 2)
        wv = WeightVector(s, np.array([0.0, 1.0, 0.0, 0.0]))
        pop = sample_weighted(wv, 500, seed=1)
        assert pop.cells.tolist() == [1]
        assert pop.total == 500

    def test_seed_determinism(self):
        s = schema_of(3, 2)
        wv = WeightVector(s, np.array([0.1, 0.2, 0.3, 0.2, 0.1, 0.1]))
        a = sample_weighted(wv, 5000, seed=21)
        b = sample_weighted(wv, 5000, seed=21)
        assert a.equals(b)

    def test_skewed_weights_concentration(self):
        s = schema_of(2, 2)
        target = np.array([0.5, 0.3, 0.2, 0.0])
        wv = WeightVector(s, target)
        pop = sample_weighted(wv, 200_000, seed=8)
        freqs = np.zeros(4)
        freqs[pop.cells] = pop.counts / pop.total
        assert np.abs(freqs - target).max() < 0.005
        assert freqs[3] == 0.0  # zero-weight cell never drawn

    def test_size_must_be_positive(self):
        s = schema_of(2, 2)
        wv = WeightVector(s, np.full(4, 0.25))
        with pytest.raises(ValidationError):
            sample_weighted(wv, 0, seed=1)
