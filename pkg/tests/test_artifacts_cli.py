"""Tests for artifact serialization round-trips and the CLI surface.

Claims:
    - constraint problems, models, and weight vectors reload to equal
      in-memory values with matching digests, real values surviving
      bit-exactly through the 17-digit decimal encoding
    - identical invocations write identical bytes (no timestamps, wall
      times excluded from artifacts)
    - the CLI pipeline extract -> fit -> sample -> eval runs end to end,
      respects config-file/flag precedence, requires explicit seeds, and
      maps validation, non-convergence, and capacity errors to exit codes
      2, 3, and 4
"""

import json

import numpy as np
import pytest

from popmaxent import (
    ExtractionBudget,
    extract_constraints,
    fit_hard,
    rake,
    read_population,
    write_population,
)
from popmaxent.artifacts import (
    canonical_json,
    constraint_order_digest,
    constraints_digest,
    constraints_from_dict,
    constraints_to_dict,
    load_constraints,
    load_model,
    load_weights,
    save_constraints,
    save_model,
    save_weights,
    schema_digest,
)
from popmaxent.cli import main
from popmaxent.synthetic import mixture_population


@pytest.fixture()
def problem(tmp_path):
    pop = mixture_population(4, 900, seed=15)
    source = tmp_path / "source.csv"
    write_population(pop, source)
    return pop, source


class TestArtifacts:
    def test_constraints_roundtrip_and_digest(self, tmp_path, problem):
        pop, _ = problem
        cs = extract_constraints(pop, ExtractionBudget.full())
        path = tmp_path / "c.json"
        save_constraints(cs, path)
        back = load_constraints(path)
        assert back == cs
        assert constraints_digest(back) == constraints_digest(cs)
        assert schema_digest(back.schema) == schema_digest(cs.schema)

    def test_targets_survive_bit_exactly(self, problem):
        pop, _ = problem
        cs = extract_constraints(pop, ExtractionBudget.full())
        doc = constraints_to_dict(cs)
        back = constraints_from_dict(json.loads(canonical_json(doc)))
        for a, b in zip(cs.constraints, back.constraints):
            assert a.target == b.target

    def test_model_roundtrip(self, tmp_path, problem):
        pop, _ = problem
        cs = extract_constraints(pop, ExtractionBudget.full())
        model, report = fit_hard(cs)
        path = tmp_path / "m.json"
        save_model(model, path, report)
        back, back_report = load_model(path)
        assert np.array_equal(back.lam, model.lam)
        assert back.constraints == model.constraints
        assert back_report == report  # wall time excluded from comparison

    def test_weights_roundtrip(self, tmp_path, problem):
        pop, _ = problem
        cs = extract_constraints(pop, ExtractionBudget.full())
        wv = rake(cs, iterations=20)
        path = tmp_path / "w.json"
        save_weights(wv, path, cs)
        back = load_weights(path)
        assert back.equals(wv)
        doc = json.loads(path.read_text())
        assert doc["constraint_order_digest"] == constraint_order_digest(cs)

    def test_canonical_json_is_deterministic(self, problem):
        pop, _ = problem
        cs = extract_constraints(pop, ExtractionBudget.full())
        assert canonical_json(constraints_to_dict(cs)) == canonical_json(
            constraints_to_dict(cs)
        )

    def test_model_digest_mismatch_detected(self, tmp_path, problem):
        pop, _ = problem
        cs = extract_constraints(pop, ExtractionBudget.full())
        model, report = fit_hard(cs)
        path = tmp_path / "m.json"
        save_model(model, path, report)
        doc = json.loads(path.read_text())
        doc["constraints"]["constraints"][0]["target"] = "4.9999999999999994e-01"
        path.write_text(json.dumps(doc))
        from popmaxent import ValidationError

        with pytest.raises(ValidationError):
            load_model(path)


class TestCliPipeline:
    def test_end_to_end_roundtrip(self, tmp_path, problem, capsys):
        import time

        _, source = problem
        t0 = time.perf_counter()
        c = tmp_path / "problem.json"
        m = tmp_path / "model.json"
        p = tmp_path / "pop.csv"
        e = tmp_path / "eval.json"
        assert main(["extract", str(source), "--out", str(c)]) == 0
        assert main(["fit", str(c), "--out", str(m)]) == 0
        assert main(["sample", str(m), "--out", str(p), "-n", "20000", "--seed", "3"]) == 0
        assert main(["eval", str(p), "--constraints", str(c), "--out", str(e)]) == 0
        assert time.perf_counter() - t0 < 60
        out = capsys.readouterr().out
        assert "total    atomic constraints" in out
        assert "converged: True" in out
        doc = json.loads(e.read_text())
        assert doc["mre"] < 0.2
        # the sampled file reloads against the constraint schema
        cs = load_constraints(c)
        pop = read_population(p, schema=cs.schema)
        assert pop.total == 20000

    def test_identical_invocations_identical_bytes(self, tmp_path, problem, monkeypatch):
        # identical relative paths in two sibling directories: every byte,
        # provenance digests included, must match
        _, source = problem
        outputs = []
        for tag in ("a", "b"):
            workdir = tmp_path / tag
            workdir.mkdir()
            (workdir / "source.csv").write_bytes(source.read_bytes())
            monkeypatch.chdir(workdir)
            main(["extract", "source.csv", "--out", "c.json"])
            main(["fit", "c.json", "--out", "m.json"])
            main(["sample", "m.json", "--out", "p.csv", "-n", "500", "--seed", "9"])
            outputs.append(tuple((workdir / f).read_bytes()
                                 for f in ("c.json", "m.json", "p.csv")))
        assert outputs[0] == outputs[1]

    def test_sample_requires_seed(self, tmp_path, problem):
        _, source = problem
        c = tmp_path / "c.json"
        main(["extract", str(source), "--out", str(c)])
        m = tmp_path / "m.json"
        main(["fit", str(c), "--out", str(m)])
        with pytest.raises(SystemExit) as exc:
            main(["sample", str(m), "--out", str(tmp_path / "p.csv"), "-n", "10"])
        assert exc.value.code == 2

    def test_missing_file_exits_2(self, tmp_path):
        assert main(["fit", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "m.json")]) == 2

    def test_capacity_exits_4(self, tmp_path, problem):
        _, source = problem
        c = tmp_path / "c.json"
        main(["extract", str(source), "--out", str(c)])
        assert main(["fit", str(c), "--out", str(tmp_path / "m.json"),
                     "--enum-cap", "4"]) == 4

    def test_non_convergence_exits_3(self, tmp_path, problem):
        _, source = problem
        c = tmp_path / "c.json"
        main(["extract", str(source), "--out", str(c)])
        assert main(["fit", str(c), "--out", str(tmp_path / "m.json"),
                     "--iters", "1"]) == 3

    def test_soft_fit_cli(self, tmp_path, problem, capsys):
        _, source = problem
        c = tmp_path / "c.json"
        main(["extract", str(source), "--out", str(c)])
        m = tmp_path / "m.json"
        assert main(["fit", str(c), "--out", str(m), "--soft-beta", "1e6"]) == 0
        model, report = load_model(m)
        assert report.converged
        assert report.residual < 1e-3

    def test_soft_fit_weights_file(self, tmp_path, problem):
        _, source = problem
        c = tmp_path / "c.json"
        main(["extract", str(source), "--out", str(c)])
        cs = load_constraints(c)
        wfile = tmp_path / "w.txt"
        wfile.write_text("0.0\n" * cs.m)
        m = tmp_path / "m.json"
        assert main(["fit", str(c), "--out", str(m), "--soft-beta", "10",
                     "--weights", str(wfile)]) == 0
        model, _ = load_model(m)
        assert np.all(model.lam == 0.0)  # all constraints dropped -> uniform

    def test_metropolis_fit_cli(self, tmp_path, problem):
        _, source = problem
        c = tmp_path / "c.json"
        main(["extract", str(source), "--out", str(c), "--max-arity", "1"])
        m = tmp_path / "m.json"
        # tiny stochastic budget: runs, writes the model, honestly exits 3
        code = main(["fit", str(c), "--out", str(m), "--metropolis",
                     "--seed", "5", "--iters", "5", "--sweeps", "2000",
                     "--burn-in", "200"])
        assert code == 3
        model, report = load_model(m)
        assert model.lam.shape == (load_constraints(c).m,)
        assert not report.converged

    def test_metropolis_fit_requires_seed(self, tmp_path, problem):
        _, source = problem
        c = tmp_path / "c.json"
        main(["extract", str(source), "--out", str(c), "--max-arity", "1"])
        assert main(["fit", str(c), "--out", str(tmp_path / "m.json"),
                     "--metropolis"]) == 2

    def test_rake_defaults_to_1000_passes(self, tmp_path, problem):
        _, source = problem
        c = tmp_path / "c.json"
        main(["extract", str(source), "--out", str(c),
              "--max-arity", "1"])
        w = tmp_path / "w.json"
        assert main(["rake", str(c), "--out", str(w)]) == 0
        doc = json.loads(w.read_text())
        assert doc["provenance"]["config"]["iters"] == 1000

    def test_rake_with_sampling(self, tmp_path, problem):
        _, source = problem
        c = tmp_path / "c.json"
        main(["extract", str(source), "--out", str(c)])
        w = tmp_path / "w.json"
        p = tmp_path / "rp.csv"
        assert main(["rake", str(c), "--out", str(w), "--iters", "100",
                     "-n", "1000", "--seed", "4", "--population-out", str(p)]) == 0
        cs = load_constraints(c)
        pop = read_population(p, schema=cs.schema)
        assert pop.total == 1000

    def test_config_file_with_flag_precedence(self, tmp_path, problem):
        _, source = problem
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"max_arity": 1}))
        c1 = tmp_path / "c1.json"
        main(["extract", str(source), "--out", str(c1), "--config", str(cfg)])
        assert all(len(s["attrs"]) == 1 for s in json.loads(c1.read_text())["scopes"])
        c2 = tmp_path / "c2.json"
        main(["extract", str(source), "--out", str(c2), "--config", str(cfg),
              "--max-arity", "2"])
        arities = {len(s["attrs"]) for s in json.loads(c2.read_text())["scopes"]}
        assert arities == {1, 2}

    def test_budget_flags(self, tmp_path, problem):
        _, source = problem
        c = tmp_path / "c.json"
        main(["extract", str(source), "--out", str(c), "--n2", "2", "--n3", "1"])
        doc = json.loads(c.read_text())
        assert sum(len(s["attrs"]) == 2 for s in doc["scopes"]) == 2
        assert sum(len(s["attrs"]) == 3 for s in doc["scopes"]) == 1
        assert main(["extract", str(source), "--out", str(c),
                     "--n2", "2", "--rho2", "0.5"]) == 2

    def test_benchmark_cli(self, tmp_path, problem, capsys):
        _, source = problem
        c = tmp_path / "c.json"
        main(["extract", str(source), "--out", str(c)])
        out = tmp_path / "bench"
        assert main(["benchmark", "--problems", str(c), "--sizes", "100,500",
                     "--seeds", "1,2", "--rake-iterations", "50",
                     "--out-dir", str(out)]) == 0
        lines = [ln for ln in (out / "results.csv").read_text().splitlines()
                 if not ln.startswith("#")]
        assert len(lines) == 1 + 8  # header + 1 problem x 2 sizes x 2 methods x 2 seeds
        assert (out / "summary.csv").exists()

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
