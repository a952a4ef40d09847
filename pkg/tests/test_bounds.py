import itertools
import json
from fractions import Fraction

import numpy as np
import pytest

from monofair.bounds import (DiscreteCase, build_fixtures, case_from_dict,
                             case_to_dict, density_ratio_c, estimate_c_empirical,
                             exact_expectations, exact_max_pair, find_tradeoff_case,
                             fixture_b1, fixture_b2, fixture_b3, lemma3_bound,
                             lemma4_bound, random_case, run_theorem_suite,
                             verify_lemma1)
from monofair.errors import (AbsoluteContinuityError, MetricError, NumericError,
                             PreconditionError, VersionError)
from monofair.isotonic import project_table
from monofair.metrics import (audit_monotonicity, average_violation_rf,
                              table_max_parity)
from monofair.synthetic import from_arrays


def two_by_two(cond, score=None, decision=None, label=None):
    return DiscreteCase((0, 1), [0, 1], cond, score, decision, label)


def exact(x):
    return Fraction(float(x))


class TestDensityRatio:
    def test_identical(self):
        case = two_by_two([[0.3, 0.3], [0.7, 0.7]])
        assert density_ratio_c(case, 0, 1) == 1

    def test_skewed(self):
        case = two_by_two([[0.9, 0.1], [0.1, 0.9]])
        brute = max(a / b for a, b in [(0.9, 0.1), (0.1, 0.9)])
        assert density_ratio_c(case, 0, 1) == pytest.approx(brute) == pytest.approx(9)

    def test_absolute_continuity(self):
        case = two_by_two([[0.5, 0.0], [0.5, 1.0]])
        with pytest.raises(AbsoluteContinuityError) as err:
            density_ratio_c(case, 0, 1)
        assert err.value.witness == 0

    def test_case_validation(self):
        with pytest.raises(NumericError):
            two_by_two([[0.5, 0.5], [0.6, 0.5]])
        with pytest.raises(NumericError):
            two_by_two([[0.5, 0.5], [0.5, 0.5]], score=[[-1, 0], [0, 0]])


class TestLemma1:
    def test_identical_conditionals(self):
        case = two_by_two([[0.4, 0.4], [0.6, 0.6]], score=[[0.2, 0.5], [1.0, 1.0]])
        rep = verify_lemma1(case, 0, 1)
        assert rep.details["C"] == 1
        assert rep.satisfied
        assert rep.observed_value <= rep.details["expectation_k"]

    def test_non_monotone_rejected(self):
        case = two_by_two([[0.4, 0.4], [0.6, 0.6]], score=[[0.5, 0.2], [1.0, 1.0]])
        with pytest.raises(PreconditionError):
            verify_lemma1(case, 0, 1)

    def test_random_cases_exact(self, rng):
        for _ in range(300):
            case = random_case(rng)
            for j, k in itertools.combinations(case.z_support, 2):
                rep = verify_lemma1(case, j, k)
                assert rep.satisfied
                ij, ik = case.col(j), case.col(k)
                p, f = case.conditional, case.score
                e_j = sum(exact(f[r, ij]) * exact(p[r, ij]) for r in range(len(p)))
                e_k = sum(exact(f[r, ik]) * exact(p[r, ik]) for r in range(len(p)))
                c = max(exact(p[r, ij]) / exact(p[r, ik]) for r in range(len(p)) if p[r, ik] > 0)
                assert e_j <= c * e_k
                assert abs(float(e_j) - rep.observed_value) <= 1e-12

    def test_b1_tightness(self):
        case, _ = fixture_b1()
        for j, k in itertools.combinations(case.z_support, 2):
            rep = verify_lemma1(case, j, k)
            assert rep.satisfied
            e_k = rep.details["expectation_k"]
            if e_k == 0:
                continue
            needed = rep.observed_value / e_k
            if needed > 0:
                smaller = verify_lemma1(case, j, k, c=needed * (1 - 1e-6))
                assert not smaller.satisfied


class TestLemma3:
    def test_constant_decision(self):
        case = two_by_two([[0.2, 0.7], [0.8, 0.3]], decision=[[0.4, 0.4], [0.4, 0.4]])
        rep = lemma3_bound(case, 0, 1)
        assert rep.observed_value == pytest.approx(1)
        assert rep.bound_value == pytest.approx(1)
        assert rep.satisfied

    def test_empty_support(self):
        case = two_by_two([[0.5, 0.5], [0.5, 0.5]], decision=[[0, 0], [0, 0]])
        with pytest.raises(PreconditionError):
            lemma3_bound(case, 0, 1)

    def test_non_monotone_decision(self):
        case = two_by_two([[0.5, 0.5], [0.5, 0.5]], decision=[[0.9, 0.1], [0.5, 0.5]])
        with pytest.raises(PreconditionError):
            lemma3_bound(case, 0, 1)

    def test_random(self, rng):
        for _ in range(300):
            case = random_case(rng)
            for j, k in itertools.combinations(case.z_support, 2):
                rep = lemma3_bound(case, j, k)
                assert rep.satisfied
                assert rep.bound_value == pytest.approx(
                    rep.details["density_ratio"] * rep.details["inverse_accept_ratio"])

    def test_tradeoff_case(self):
        case, rep = find_tradeoff_case(seed=0)
        assert rep.details["density_ratio"] < 0.5
        assert rep.details["inverse_accept_ratio"] > 2
        assert rep.satisfied


class TestLemma4:
    def test_independent(self):
        case = two_by_two([[0.3, 0.6], [0.7, 0.4]], decision=np.full((2, 2), 0.5),
                          label=np.full((2, 2), 0.3))
        rep = lemma4_bound(case, 0, 1)
        assert rep.observed_value == pytest.approx(1)
        assert rep.bound_value == pytest.approx(1)

    def test_group_without_positives(self):
        case = two_by_two([[0.3, 0.6], [0.7, 0.4]], decision=np.full((2, 2), 0.5),
                          label=[[0.0, 0.3], [0.0, 0.3]])
        with pytest.raises(PreconditionError):
            lemma4_bound(case, 0, 1)

    def test_random(self, rng):
        for _ in range(300):
            case = random_case(rng)
            for j, k in itertools.combinations(case.z_support, 2):
                rep = lemma4_bound(case, j, k)
                assert rep.satisfied
                assert "proof_variant_bound" in rep.details

    def test_correlated_joint(self):
        # label and decision positively dependent within cells
        d = np.array([[0.3, 0.5], [0.6, 0.8]])
        lab = np.array([[0.4, 0.4], [0.5, 0.7]])
        both = np.minimum(d, lab)
        case = DiscreteCase((0, 1), [0, 1], [[0.5, 0.2], [0.5, 0.8]], None, d, lab, both)
        assert lemma4_bound(case, 0, 1).satisfied


class TestSuite:
    def test_suite_small(self):
        results = run_theorem_suite(50, seed=4)
        assert all(r.ok and r.checks > 0 for r in results.values())


class TestFixtures:
    def test_b1(self):
        case, expected = fixture_b1()
        f = case.score
        assert (np.diff(f, axis=1) >= 0).all()
        assert case.conditional[0, 1] == 0.9 and case.conditional[0, 2] == 0.1
        e = exact_expectations(f, case.conditional)
        value, a, b = exact_max_pair(e)
        assert value == Fraction(6, 5) == Fraction(expected["parity_violation"])
        assert (a, b) == (1, 2)
        assert e[1] - e[2] == Fraction(6, 5)

    def test_b2(self):
        case, expected = fixture_b2()
        e = exact_expectations(case.decision, case.conditional)
        assert e[0] == e[1]
        assert exact_max_pair(e)[0] == 0
        t = case.score_table("decision")
        inc = audit_monotonicity(t, "z", deltas=[1.0], direction="increasing")
        dec = audit_monotonicity(t, "z", deltas=[1.0], direction="decreasing")
        assert len(inc) == 2 and len(dec) == 2
        assert {v.magnitude for v in inc + dec} == {1.0}
        assert expected["increasing_violations"]["count"] == len(inc)

    def test_b3(self):
        case, expected = fixture_b3()
        t = case.score_table()
        proj = project_table(t)
        np.testing.assert_array_equal(proj.scores, expected["projection"])
        before = exact_max_pair(exact_expectations(t.scores, case.conditional))[0]
        after = exact_max_pair(exact_expectations(proj.scores, case.conditional))[0]
        assert before == Fraction(17, 20) and after == Fraction(6, 5)
        assert after > before
        assert (average_violation_rf(proj, case.conditional)
                < average_violation_rf(t, case.conditional))
        assert table_max_parity(proj, case.conditional) > table_max_parity(t, case.conditional)

    def test_b1_is_projection_of_b3(self):
        b1, _ = fixture_b1()
        b3, _ = fixture_b3()
        np.testing.assert_array_equal(project_table(b3.score_table()).scores, b1.score)

    @pytest.mark.slow
    def test_stored_fixtures_match_search(self):
        built = build_fixtures()
        for name, loader in (("b1", fixture_b1), ("b2", fixture_b2), ("b3", fixture_b3)):
            case, expected = loader()
            new_case, new_expected = built[name]
            assert case_to_dict(case, expected) == json.loads(
                json.dumps(case_to_dict(new_case, new_expected)))

    def test_case_round_trip_and_version(self):
        case, expected = fixture_b3()
        raw = json.loads(json.dumps(case_to_dict(case, expected)))
        back, back_expected = case_from_dict(raw)
        assert np.array_equal(back.score, case.score) and back_expected == expected
        raw["version"] = 7
        with pytest.raises(VersionError):
            case_from_dict(raw)


class TestEmpiricalC:
    def test_same_distribution(self):
        rng = np.random.Generator(np.random.PCG64(0))
        n = 10000
        z = rng.integers(0, 2, size=n)
        x = rng.normal(size=n)
        ds = from_arrays(np.column_stack([z, x]), np.zeros(n, int), ["z", "x"], protected="z")
        est = estimate_c_empirical(ds, 10, 0, 1)
        assert est.c <= 1.5
        assert not est.absolute_continuity_warning

    def test_three_to_one(self):
        rng = np.random.Generator(np.random.PCG64(1))
        n = 10000
        z = rng.integers(0, 2, size=n)
        x = (rng.uniform(size=n) < np.where(z == 0, 0.75, 0.25)).astype(float)
        ds = from_arrays(np.column_stack([z, x]), np.zeros(n, int), ["z", "x"], protected="z")
        est = estimate_c_empirical(ds, 2, 0, 1)
        assert abs(est.c - 3.0) <= 0.2

    def test_disjoint_without_smoothing(self):
        z = np.array([0] * 5 + [1] * 5)
        x = np.array([0.0] * 5 + [1.0] * 5)
        ds = from_arrays(np.column_stack([z, x]), np.zeros(10, int), ["z", "x"], protected="z")
        est = estimate_c_empirical(ds, 2, 0, 1, smoothing=0.0)
        assert est.c == np.inf
        assert est.absolute_continuity_warning

    def test_empty_group(self):
        ds = from_arrays(np.array([[0, 1.0], [0, 2.0]]), [0, 1], ["z", "x"], protected="z")
        with pytest.raises(MetricError):
            estimate_c_empirical(ds, 2, 0, 1)
