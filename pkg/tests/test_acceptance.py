"""Acceptance criteria, one test per criterion, each at its stated tolerance.

Criteria 7-9 need the public Law School, Credit Default and Funding
Proposals CSVs. Point MONOFAIR_LAW_CSV, MONOFAIR_CREDIT_CSV and
MONOFAIR_FUNDING_CSV at them to run the reproductions; without them each
criterion runs its synthetic replacement (the threshold-rule property) and
the summary line says which path ran.
"""

import itertools
import json
import os
import time
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from monofair import cli
from monofair.bounds import (exact_expectations, exact_max_pair, fixture_b1,
                             fixture_b2, fixture_b3, run_theorem_suite)
from monofair.data import split
from monofair.experiments import EXPERIMENTS, run_experiment
from monofair.gam import (GamModel, TrainConfig, accuracy, init_model,
                          loss_and_gradient, train)
from monofair.isotonic import ScoreTable, pav, project_table
from monofair.metrics import (audit_monotonicity, average_violation_rf,
                              default_deltas, default_probes, max_one_sided_parity,
                              model_grouped_predictions, table_max_parity)
from monofair.synthetic import from_arrays, grouped_dataset, random_dataset, threshold_dataset
from oracles import grid_projection, monotone_grid, partition_projection, random_conditional

CRITERIA = {
    "test_c01_theorem_suites": "1  verify_lemma1 / lemma3_bound / lemma4_bound on >=1000 random cases, tol 1e-12, < 10 s",
    "test_c02_pav_oracle": "2  PAV vs brute-force L2 projection on >=10,000 grid instances",
    "test_c03_average_violation": "3  R after projection <= R; two-group corollary; b3 increase",
    "test_c04_counterexamples": "4  b1 violation exactly 6/5; b2 zero parity, violations of 1",
    "test_c05_gradient": "5  logistic gradient vs central differences within 1e-5 relative",
    "test_c06_feasibility": "6  constrained calibrators check_monotone = 0; audits clean",
    "test_c07_law_school": "7  Law School accuracies 94.89 / 94.97 +-1.0",
    "test_c08_credit_default": "8  Credit Default D=2 accuracies 81.55 / 81.60 +-1.0",
    "test_c09_funding": "9  Funding D=2 AUC 0.517 / 0.518 +-0.02; parity ordering",
    "test_c10_determinism": "10 byte-identical model and report files across runs",
}


def test_c01_theorem_suites():
    start = time.perf_counter()
    results = run_theorem_suite(1000, seed=2024)
    elapsed = time.perf_counter() - start
    for name, res in results.items():
        assert res.checks >= 1000, name
        assert res.ok, (name, res.failures[:3])
    assert elapsed < 10.0, f"suite took {elapsed:.1f} s"


def test_c02_pav_oracle():
    rng = np.random.Generator(np.random.PCG64(7))
    on_grid = 0
    for _ in range(10000):
        n = int(rng.integers(1, 7))
        v = rng.integers(0, 9, size=n) * 0.25
        fit = pav(v)
        # exact brute force: best monotone partition into pooled blocks
        np.testing.assert_allclose(fit, partition_projection(v), rtol=0, atol=1e-9)
        # grid brute force: nothing on the 0.25 grid is closer than pav
        u, cost = grid_projection(v)
        pav_cost = float(((fit - v) ** 2).sum())
        assert pav_cost <= cost + 1e-12
        if abs(pav_cost - cost) <= 1e-12:
            on_grid += 1
            np.testing.assert_allclose(fit, u, rtol=0, atol=1e-9)
        assert abs(fit.mean() - v.mean()) <= 1e-12
        w = rng.uniform(0.1, 5.0, size=n)
        fw = pav(v, w)
        assert abs(np.dot(w, fw) - np.dot(w, v)) <= 1e-12 * w.sum()
    assert monotone_grid(6).shape == (3003, 6)
    assert on_grid > 5000


def test_c03_average_violation():
    rng = np.random.Generator(np.random.PCG64(11))
    for _ in range(1000):
        n_x, n_z = int(rng.integers(1, 8)), int(rng.integers(2, 6))
        t = ScoreTable(tuple(range(n_x)), np.arange(n_z), rng.uniform(0, 2, size=(n_x, n_z)))
        cond = random_conditional(rng, n_x, n_z)
        assert average_violation_rf(project_table(t), cond) <= average_violation_rf(t, cond) + 1e-12
    for _ in range(1000):
        n_x = int(rng.integers(1, 8))
        t = ScoreTable(tuple(range(n_x)), [0, 1], rng.uniform(0, 2, size=(n_x, 2)))
        cond = random_conditional(rng, n_x, 2)
        assert table_max_parity(project_table(t), cond) <= table_max_parity(t, cond) + 1e-12
    case, _ = fixture_b3()
    t = case.score_table()
    proj = project_table(t)
    worst_before = exact_max_pair(exact_expectations(t.scores, case.conditional))[0]
    worst_after = exact_max_pair(exact_expectations(proj.scores, case.conditional))[0]
    assert len(case.z_support) > 2
    assert worst_after > worst_before
    assert average_violation_rf(proj, case.conditional) < average_violation_rf(t, case.conditional)


def test_c04_counterexamples():
    b1, _ = fixture_b1()
    assert (np.diff(b1.score, axis=1) >= 0).all()
    e = exact_expectations(b1.score, b1.conditional)
    assert e[b1.col(1)] - e[b1.col(2)] == Fraction(6, 5)
    assert exact_max_pair(e)[0] == Fraction(6, 5)

    b2, _ = fixture_b2()
    e = exact_expectations(b2.decision, b2.conditional)
    assert exact_max_pair(e)[0] == 0 and e[0] == e[1]
    t = b2.score_table("decision")
    for direction in ("increasing", "decreasing"):
        found = audit_monotonicity(t, "z", deltas=[1.0], direction=direction)
        assert found and all(v.magnitude == 1.0 for v in found)


def test_c05_gradient():
    ds = random_dataset(50, 3, seed=0, constraints=["none"] * 3, keypoints=10)
    rng = np.random.Generator(np.random.PCG64(5))
    base = init_model(ds, np.arange(50))
    model = GamModel(tuple(c.with_values(rng.normal(size=len(c))) for c in base.calibrators),
                     -0.4, "sigmoid", base.names)
    X, y = ds.values, ds.label
    _, g_bias, g_vals = loss_and_gradient(model, X, y)
    h = 1e-5

    def loss(m):
        return loss_and_gradient(m, X, y)[0]

    def with_bias(b):
        return GamModel(model.calibrators, b, model.link, model.names)

    analytic = [g_bias]
    numeric = [(loss(with_bias(model.bias + h)) - loss(with_bias(model.bias - h))) / (2 * h)]
    for d, cal in enumerate(model.calibrators):
        for i in range(len(cal)):
            vals = []
            for sign in (1, -1):
                v = cal.values.copy()
                v[i] += sign * h
                cals = list(model.calibrators)
                cals[d] = cal.with_values(v)
                vals.append(loss(GamModel(tuple(cals), model.bias, model.link, model.names)))
            numeric.append((vals[0] - vals[1]) / (2 * h))
            analytic.append(g_vals[d][i])
    analytic, numeric = np.array(analytic), np.array(numeric)
    assert analytic.size == 1 + sum(len(c) for c in model.calibrators)
    # relative to each coordinate, with a 1e-3 floor so exact zeros compare at 1e-8
    assert np.all(np.abs(analytic - numeric) <= 1e-5 * np.maximum(np.abs(analytic), 1e-3))


@given(n=st.integers(40, 250), d=st.integers(1, 4), seed=st.integers(0, 10**6),
       tags=st.lists(st.sampled_from(["none", "increasing", "decreasing"]),
                     min_size=4, max_size=4),
       batch=st.sampled_from([1, 16, 128]))
@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
def test_c06_feasibility(n, d, seed, tags, batch):
    ds = random_dataset(n, d, seed, tags[:d], keypoints=int(seed % 15) + 2)
    model, _ = train(ds, split(ds, seed), TrainConfig(epochs=3, minibatch_size=batch,
                                                     learning_rates=(0.1, 1.0, 10.0)))
    for name, tag in zip(model.names, tags):
        if tag == "none":
            continue
        assert model.monotonicity_violations()[name] == 0
        assert audit_monotonicity(model, name, default_probes(model, ds, name),
                                  default_deltas(model, name)) == []


def _synthetic_threshold_property(anti=False):
    ds = threshold_dataset(n=2000, seed=17, monotonicity="decreasing" if anti else "increasing",
                           anti=anti)
    parts = split(ds, 0)
    model, report = train(ds, parts, TrainConfig(epochs=50))
    y_val = ds.label[parts.validation_indices]
    constant = max(y_val.mean(), 1 - y_val.mean())
    assert accuracy(model, ds, parts.validation_indices) > constant
    assert model.monotonicity_violations() == {"x": 0.0}
    return model, report


def _real_or_none(env, record_property):
    path = os.environ.get(env)
    if path:
        record_property("path", f"dataset {path}")
    else:
        record_property("path", f"{env} unset; synthetic-threshold replacement")
    return path


def _check_reproduction(name, path, tolerance):
    exp = EXPERIMENTS[name]
    res = run_experiment(name, path, seed=0)
    key = "test_accuracy" if exp.metric == "accuracy" else "test_auc"
    for variant, ref in zip(("unconstrained", "constrained"), exp.reference):
        got = res["variants"][variant][key]
        assert abs(got - ref) <= tolerance, (variant, got, ref)
    assert all(v == 0 for v in res["variants"]["constrained"]["monotonicity_check"].values())
    return res


def test_c07_law_school(record_property):
    path = _real_or_none("MONOFAIR_LAW_CSV", record_property)
    if not path:
        _synthetic_threshold_property()
        return
    start = time.perf_counter()
    res = _check_reproduction("law", path, 0.01)
    assert res["variants"]["unconstrained"]["rows"] == 27234
    assert time.perf_counter() - start < 300


def test_c08_credit_default(record_property):
    path = _real_or_none("MONOFAIR_CREDIT_CSV", record_property)
    if not path:
        # mirrored rule under a decreasing constraint, so both directions are covered
        _synthetic_threshold_property(anti=True)
        return
    _check_reproduction("credit", path, 0.01)


def test_c09_funding(record_property):
    path = _real_or_none("MONOFAIR_FUNDING_CSV", record_property)
    if not path:
        _synthetic_threshold_property()
        ds = grouped_dataset(n=20000, seed=0)
        free = from_arrays(ds.values, ds.label, ds.names, ["none", "none"], 20, "z")
        parts = split(ds, 0)
        cfg = TrainConfig(epochs=30)
        mono, _ = train(ds, parts, cfg)
        base, _ = train(free, parts, cfg)
        v_mono = max_one_sided_parity(model_grouped_predictions(mono, ds, parts.test_indices))
        v_base = max_one_sided_parity(model_grouped_predictions(base, free, parts.test_indices))
        assert v_mono < v_base
        return
    res = _check_reproduction("funding", path, 0.02)
    ref_base, ref_mono = EXPERIMENTS["funding"].parity_reference
    soft = {v: res["variants"][v]["fairness"]["soft"]["max_one_sided_parity"]
            for v in ("unconstrained", "constrained")}
    assert soft["constrained"] < soft["unconstrained"]
    assert abs(soft["unconstrained"] - ref_base) <= 0.5 * ref_base
    assert abs(soft["constrained"] - ref_mono) <= 0.5 * ref_mono


def test_c10_determinism(tmp_path):
    ds = grouped_dataset(n=800, seed=3)
    csv = tmp_path / "g.csv"
    csv.write_text("z,reach,y\n" + "".join(
        f"{int(z)},{float(r)!r},{int(y)}\n" for (z, r), y in zip(ds.values, ds.label)))
    schema = tmp_path / "s.json"
    schema.write_text(json.dumps({"label": "y", "protected": "z",
                                  "columns": {"z": {"monotonicity": "increasing", "keypoints": 4},
                                              "reach": {"monotonicity": "increasing"}}}))
    outs = []
    for run in ("a", "b"):
        out = tmp_path / run
        common = ["--data", str(csv), "--schema", str(schema), "--out", str(out), "--seed", "3"]
        assert cli.main(["train", *common, "--epochs", "5"]) == 0
        assert cli.main(["audit", *common, "--model", str(out / "model.json"),
                         "--split", str(out / "split.json")]) == 0
        outs.append(out)
    files = ["model.json", "report.json", "split.json", "fairness_report.json",
             "fairness_report.csv", "violations.csv"]
    for name in files:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name
