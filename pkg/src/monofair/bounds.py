"""Exact checks of the monotonicity/parity bounds on finite distributions.

Everything here works on a :class:`DiscreteCase`: finite supports for X and
Z, the conditional table ``P(X = x | Z = z)`` and optional score, decision and
label tables. Expectations are sums over the support (``math.fsum``), so the
checks are exact up to float rounding and never sampled.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Optional

import numpy as np

from monofair.errors import (AbsoluteContinuityError, MetricError, NumericError,
                             PreconditionError, SchemaError, VersionError)
from monofair.isotonic import ScoreTable

CASE_FORMAT = "monofair-case"
CASE_VERSION = 1
TOL = 1e-12


def _matrix(a, shape, name):
    if a is None:
        return None
    m = np.array(a, dtype=float)
    if m.shape != shape:
        raise SchemaError(f"{name} has shape {m.shape}, expected {shape}")
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class DiscreteCase:
    x_support: tuple
    z_support: np.ndarray
    conditional: np.ndarray
    score: Optional[np.ndarray] = None
    decision: Optional[np.ndarray] = None
    label: Optional[np.ndarray] = None
    joint_positive: Optional[np.ndarray] = None
    priors: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        z = np.array(self.z_support, dtype=float)
        if np.any(np.diff(z) <= 0):
            raise SchemaError("z_support must be strictly increasing")
        x = tuple(self.x_support)
        shape = (len(x), z.size)
        cond = _matrix(self.conditional, shape, "conditional")
        if (cond < 0).any() or np.any(np.abs(cond.sum(axis=0) - 1.0) > 1e-9):
            raise NumericError("each conditional column must be a distribution")
        score = _matrix(self.score, shape, "score")
        if score is not None and (score < 0).any():
            raise NumericError("scores must be non-negative")
        tables = {}
        for name in ("decision", "label", "joint_positive"):
            m = _matrix(getattr(self, name), shape, name)
            if m is not None and ((m < 0) | (m > 1)).any():
                raise NumericError(f"{name} probabilities must lie in [0, 1]")
            tables[name] = m
        jp = tables["joint_positive"]
        if jp is not None:
            d, lab = tables["decision"], tables["label"]
            if d is None or lab is None:
                raise SchemaError("joint_positive needs decision and label tables")
            if (jp > np.minimum(d, lab) + 1e-12).any() or \
                    (jp < np.maximum(0.0, d + lab - 1.0) - 1e-12).any():
                raise NumericError("joint_positive violates the Frechet bounds")
        priors = None
        if self.priors is not None:
            priors = np.array(self.priors, dtype=float)
            if priors.shape != (z.size,) or abs(priors.sum() - 1.0) > 1e-9:
                raise NumericError("priors must be a distribution over z_support")
        z.setflags(write=False)
        object.__setattr__(self, "x_support", x)
        object.__setattr__(self, "z_support", z)
        object.__setattr__(self, "conditional", cond)
        object.__setattr__(self, "score", score)
        for name, m in tables.items():
            object.__setattr__(self, name, m)
        object.__setattr__(self, "priors", priors)

    @property
    def positive_joint(self) -> np.ndarray:
        """``P(Y=1, Yhat=1 | x, z)``; defaults to conditional independence."""
        if self.joint_positive is not None:
            return self.joint_positive
        if self.decision is None or self.label is None:
            raise PreconditionError("case needs decision and label tables")
        return self.decision * self.label

    def score_table(self, which: str = "score") -> ScoreTable:
        m = getattr(self, which)
        if m is None:
            raise PreconditionError(f"case has no {which} table")
        return ScoreTable(self.x_support, self.z_support, m)

    def col(self, z) -> int:
        hits = np.flatnonzero(self.z_support == float(z))
        if hits.size == 0:
            raise SchemaError(f"z={z!r} is not in the support")
        return int(hits[0])

    def expectation(self, table: np.ndarray, z) -> float:
        i = self.col(z)
        return math.fsum(float(a) * float(b) for a, b in zip(table[:, i], self.conditional[:, i]))


@dataclass
class BoundReport:
    bound_value: float
    observed_value: float
    satisfied: bool
    witness: object
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"bound_value": self.bound_value, "observed_value": self.observed_value,
                "satisfied": self.satisfied, "witness": self.witness,
                "details": self.details}


def _report(bound, observed, witness, **details) -> BoundReport:
    return BoundReport(float(bound), float(observed), bool(observed <= bound + TOL),
                       witness, details)


def _ordered(case, j, k):
    if float(j) > float(k):
        raise PreconditionError(f"need j <= k, got j={j}, k={k}")
    return case.col(j), case.col(k)


def _density_ratio(case: DiscreteCase, j, k):
    ij, ik = case.col(j), case.col(k)
    pj, pk = case.conditional[:, ij], case.conditional[:, ik]
    for x, a, b in zip(case.x_support, pj, pk):
        if a > 0 and b == 0:
            raise AbsoluteContinuityError(
                f"P(X={x!r}|Z={j}) > 0 but P(X={x!r}|Z={k}) = 0", witness=x)
    support = np.flatnonzero(pk > 0)
    ratios = pj[support] / pk[support]
    best = int(np.argmax(ratios))
    return float(ratios[best]), case.x_support[support[best]]


def density_ratio_c(case: DiscreteCase, j, k) -> float:
    """Largest likelihood ratio ``P(X=x|Z=j) / P(X=x|Z=k)`` over the support of Z=k."""
    return _density_ratio(case, j, k)[0]


def verify_lemma1(case: DiscreteCase, j, k, c: Optional[float] = None) -> BoundReport:
    """Check ``E[f|Z=j] <= C * E[f|Z=k]`` for a score monotone between j and k.

    ``c`` overrides the density-ratio constant, which is how the bound's
    tightness is probed.
    """
    if case.score is None:
        raise PreconditionError("case has no score table")
    ij, ik = _ordered(case, j, k)
    f = case.score
    bad = np.flatnonzero(f[:, ij] > f[:, ik])
    if bad.size:
        x = case.x_support[bad[0]]
        raise PreconditionError(f"score is not monotone between z={j} and z={k} at x={x!r}",
                                witness=x)
    ratio, witness = _density_ratio(case, j, k)
    cval = ratio if c is None else float(c)
    e_j, e_k = case.expectation(f, j), case.expectation(f, k)
    return _report(cval * e_k, e_j, witness, C=cval, density_ratio=ratio,
                   expectation_j=e_j, expectation_k=e_k,
                   parity_violation=max(0.0, e_j - e_k))


def _rates(case, table, ij):
    return math.fsum(float(a) * float(b) for a, b in zip(table[:, ij], case.conditional[:, ij]))


def _check_decision_monotone(case, rows, ij, ik, j, k):
    d = case.decision
    bad = [r for r in rows if d[r, ij] > d[r, ik]]
    if bad:
        x = case.x_support[bad[0]]
        raise PreconditionError(f"decision is not monotone between z={j} and z={k} at x={x!r}",
                                witness=x)


def lemma3_bound(case: DiscreteCase, j, k) -> BoundReport:
    """Positive-rate ratio ``P(Yhat=1|j) / P(Yhat=1|k)`` against its likelihood-ratio bound.

    The bound is the infimum over the set S of x with positive joint mass
    ``p(x, Yhat=1 | z)`` for both groups of
    ``[p(x|j) / p(x|k)] * [p(x|Yhat=1,k) / p(x|Yhat=1,j)]``; both factors are
    itemised at the witness.
    """
    if case.decision is None:
        raise PreconditionError("case has no decision table")
    ij, ik = _ordered(case, j, k)
    p, d = case.conditional, case.decision
    joint = p * d
    S = [r for r in range(len(case.x_support)) if joint[r, ij] > 0 and joint[r, ik] > 0]
    if not S:
        raise PreconditionError("set S of x with positive joint mass is empty")
    _check_decision_monotone(case, S, ij, ik, j, k)
    rate_j, rate_k = _rates(case, d, ij), _rates(case, d, ik)
    best = None
    for r in S:
        first = p[r, ij] / p[r, ik]
        second = (joint[r, ik] / rate_k) / (joint[r, ij] / rate_j)
        value = first * second
        if best is None or value < best[0]:
            best = (value, r, first, second)
    value, r, first, second = best
    return _report(value, rate_j / rate_k, case.x_support[r],
                   density_ratio=first, inverse_accept_ratio=second,
                   positive_rate_j=rate_j, positive_rate_k=rate_k, support_size=len(S))


def lemma4_bound(case: DiscreteCase, j, k) -> BoundReport:
    """True-positive-rate ratio against ``inf_S c_j(x) / c_k(x)``.

    ``c_z(x) = p(x|z) P(Y=1|Yhat=1,z) / (p(x|Yhat=1,z) P(Y=1|z))``. The variant
    with ``p(x|Y=1,z)`` in the denominator is reported alongside in
    ``details`` and flagged when it differs.
    """
    if case.decision is None or case.label is None:
        raise PreconditionError("case needs decision and label tables")
    ij, ik = _ordered(case, j, k)
    p, d, lab = case.conditional, case.decision, case.label
    q = case.positive_joint
    stats = {}
    for z, i in ((j, ij), (k, ik)):
        pos = _rates(case, lab, i)
        acc = _rates(case, d, i)
        both = _rates(case, q, i)
        if pos <= 0:
            raise PreconditionError(f"group z={z} has no positive labels", witness=z)
        stats[i] = dict(pos=pos, acc=acc, both=both)
    S = [r for r in range(len(case.x_support))
         if p[r, ij] * q[r, ij] > 0 and p[r, ik] * q[r, ik] > 0]
    if not S:
        raise PreconditionError("set S of x with positive joint mass is empty")
    _check_decision_monotone(case, S, ij, ik, j, k)

    def c_stmt(r, i):
        s = stats[i]
        p_x_given_acc = p[r, i] * d[r, i] / s["acc"]
        return p[r, i] * (s["both"] / s["acc"]) / (p_x_given_acc * s["pos"])

    def c_proof(r, i):
        s = stats[i]
        p_x_given_pos = p[r, i] * lab[r, i] / s["pos"]
        if p_x_given_pos == 0:
            return math.inf
        return p[r, i] * (s["both"] / s["acc"]) / (p_x_given_pos * s["pos"])

    best = min(S, key=lambda r: c_stmt(r, ij) / c_stmt(r, ik))
    bound = c_stmt(best, ij) / c_stmt(best, ik)
    alt = []
    for r in S:
        a, b = c_proof(r, ij), c_proof(r, ik)
        if math.isfinite(a) and math.isfinite(b) and b > 0:
            alt.append(a / b)
    alt_bound = min(alt) if alt else math.nan
    tpr_j = stats[ij]["both"] / stats[ij]["pos"]
    tpr_k = stats[ik]["both"] / stats[ik]["pos"]
    if tpr_k == 0:
        raise PreconditionError(f"true-positive rate of z={k} is zero")
    differs = not (math.isclose(alt_bound, bound, rel_tol=1e-12, abs_tol=TOL))
    return _report(bound, tpr_j / tpr_k, case.x_support[best],
                   tpr_j=tpr_j, tpr_k=tpr_k, c_j=c_stmt(best, ij), c_k=c_stmt(best, ik),
                   proof_variant_bound=alt_bound, proof_variant_differs=differs,
                   proof_variant_satisfied=bool(tpr_j / tpr_k <= alt_bound + TOL)
                   if alt else None,
                   support_size=len(S))


# --- random instances -------------------------------------------------------

def random_case(rng: np.random.Generator, max_x: int = 8, max_z: int = 4,
                monotone: bool = True) -> DiscreteCase:
    """Small random case with every table populated.

    Conditionals are symmetric-Dirichlet columns; score and decision rows are
    sorted along z when ``monotone`` is set.
    """
    nx = int(rng.integers(1, max_x + 1))
    nz = int(rng.integers(2, max_z + 1))
    cond = rng.dirichlet(np.ones(nx), size=nz).T
    score = rng.uniform(0.0, 1.0, size=(nx, nz))
    decision = rng.uniform(0.0, 1.0, size=(nx, nz))
    if monotone:
        score.sort(axis=1)
        decision.sort(axis=1)
    label = rng.uniform(0.0, 1.0, size=(nx, nz))
    z = np.sort(rng.choice(np.arange(10), size=nz, replace=False)).astype(float)
    return DiscreteCase(tuple(range(nx)), z, cond, score, decision, label)


@dataclass
class SuiteResult:
    checks: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def run_theorem_suite(n_cases: int = 1000, seed: int = 0) -> dict:
    """Every lemma on every ordered pair of ``n_cases`` random monotone cases."""
    rng = np.random.Generator(np.random.PCG64(seed))
    results = {"lemma1": SuiteResult(), "lemma3": SuiteResult(), "lemma4": SuiteResult()}
    checks = (("lemma1", verify_lemma1), ("lemma3", lemma3_bound), ("lemma4", lemma4_bound))
    for n in range(n_cases):
        case = random_case(rng)
        for j, k in itertools.combinations(case.z_support, 2):
            for name, fn in checks:
                rep = fn(case, j, k)
                results[name].checks += 1
                if not rep.satisfied:
                    results[name].failures.append((n, float(j), float(k), rep))
    return results


def find_tradeoff_case(seed: int = 0, attempts: int = 100000):
    """Search for a case whose lemma-3 witness has a small density ratio
    (< 0.5) paired with a large inverse acceptance ratio (> 2)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    for _ in range(attempts):
        case = random_case(rng, max_x=4, max_z=2)
        j, k = case.z_support[0], case.z_support[1]
        try:
            rep = lemma3_bound(case, j, k)
        except PreconditionError:
            continue
        if rep.details["density_ratio"] < 0.5 and rep.details["inverse_accept_ratio"] > 2:
            return case, rep
    raise RuntimeError("no trade-off case found")


# --- fixtures ---------------------------------------------------------------

def case_to_dict(case: DiscreteCase, expected: Optional[dict] = None) -> dict:
    def mat(m):
        return None if m is None else m.tolist()
    out = {
        "format": CASE_FORMAT, "version": CASE_VERSION, "name": case.name,
        "x_support": list(case.x_support), "z_support": case.z_support.tolist(),
        "conditional": mat(case.conditional), "score": mat(case.score),
        "decision": mat(case.decision), "label": mat(case.label),
        "joint_positive": mat(case.joint_positive),
        "priors": None if case.priors is None else case.priors.tolist(),
    }
    if expected is not None:
        out["expected"] = expected
    return out


def case_from_dict(raw: dict):
    if raw.get("format") != CASE_FORMAT:
        raise SchemaError(f"not a {CASE_FORMAT} file")
    if raw.get("version") != CASE_VERSION:
        raise VersionError(f"unsupported case version {raw.get('version')!r}")
    try:
        case = DiscreteCase(tuple(raw["x_support"]), raw["z_support"], raw["conditional"],
                            raw.get("score"), raw.get("decision"), raw.get("label"),
                            raw.get("joint_positive"), raw.get("priors"),
                            raw.get("name", ""))
    except KeyError as exc:
        raise SchemaError(f"case file missing {exc}") from None
    return case, raw.get("expected", {})


def load_case(path):
    with open(path, encoding="utf-8") as fh:
        return case_from_dict(json.load(fh))


def save_case(case: DiscreteCase, path, expected: Optional[dict] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(case_to_dict(case, expected), fh, indent=1)
        fh.write("\n")


def _fixture(name: str):
    text = resources.files("monofair").joinpath("fixtures", f"{name}.json").read_text("utf-8")
    return case_from_dict(json.loads(text))


def fixture_b1():
    """Monotone score that still violates one-sided parity (Simpson's paradox)."""
    return _fixture("b1")


def fixture_b2():
    """Exact parity with decisions that flip 0 <-> 1 across groups at every height."""
    return _fixture("b2")


def fixture_b3():
    """Non-monotone score whose projection raises the worst pairwise violation."""
    return _fixture("b3")


def fixture(name: str):
    return {"b1": fixture_b1, "b2": fixture_b2, "b3": fixture_b3}[name]()


def exact_expectations(table, conditional) -> list:
    """``E[f|Z=z]`` per column in rational arithmetic (decimal inputs read exactly)."""
    t = [[Fraction(str(v)) for v in row] for row in np.asarray(table).tolist()]
    c = [[Fraction(str(v)) for v in row] for row in np.asarray(conditional).tolist()]
    return [sum(t[r][i] * c[r][i] for r in range(len(t))) for i in range(len(t[0]))]


def exact_max_pair(expectations) -> tuple:
    """``(violation, j_index, k_index)`` of the worst one-sided pair, exactly."""
    best = (Fraction(0), None, None)
    for a, b in itertools.combinations(range(len(expectations)), 2):
        v = expectations[a] - expectations[b]
        if v > best[0]:
            best = (v, a, b)
    return best


def _unique_worst(expectations):
    """Worst pair as in :func:`exact_max_pair`, or None when another pair ties it."""
    best = exact_max_pair(expectations)
    values = [expectations[a] - expectations[b]
              for a, b in itertools.combinations(range(len(expectations)), 2)]
    return best if values.count(best[0]) == 1 else None


def _pav_exact(row):
    blocks = []  # [sum, count]
    for v in row:
        blocks.append([Fraction(v), 1])
        while len(blocks) > 1 and blocks[-2][0] / blocks[-2][1] > blocks[-1][0] / blocks[-1][1]:
            s, n = blocks.pop()
            blocks[-1][0] += s
            blocks[-1][1] += n
    out = []
    for s, n in blocks:
        out.extend([s / n] * n)
    return tuple(out)


def search_projection_counterexample(step=Fraction(1, 4), top=Fraction(3)):
    """Brute-force search for the shared conditional, monotone table and its
    non-monotone preimage used by fixtures b1 and b3.

    Fixed: |X| = 2, z in {0,1,2,3}, P(X=0|Z=1) = 0.9, P(X=0|Z=2) = 0.1 and the
    monotone table's middle columns f(0,1) = f(0,2) = 1.5, f(1,1) = f(1,2) = 0.
    Searched: P(X=0|Z=0), P(X=0|Z=3) on a 0.1 grid, remaining monotone
    entries and all preimage rows on a ``step`` grid in [0, top]. Accepted
    solutions have the monotone table's unique worst pair equal to (1, 2) with
    value 6/5, the preimage's unique worst pair equal to (1, 2) with value 17/20, and a
    strictly larger average violation for the preimage. The first solution in
    lexicographic order is returned.
    """
    grid = [step * i for i in range(int(top / step) + 1)]
    tenth = [Fraction(i, 10) for i in range(1, 10)]
    preimages = {}
    for row in itertools.product(grid, repeat=4):
        preimages.setdefault(_pav_exact(row), []).append(row)
    mid0, mid1 = Fraction(3, 2), Fraction(0)
    target_mono, target_pre = Fraction(6, 5), Fraction(17, 20)

    for p0, p3 in itertools.product(tenth, tenth):
        cond = [[p0, Fraction(9, 10), Fraction(1, 10), p3],
                [1 - p0, Fraction(1, 10), Fraction(9, 10), 1 - p3]]

        def expect(rows):
            return [rows[0][i] * cond[0][i] + rows[1][i] * cond[1][i] for i in range(4)]

        for a0, a3, b3 in itertools.product(grid, grid, grid):
            if not (a0 <= mid0 <= a3 and mid1 <= b3):
                continue
            mono = ((a0, mid0, mid0, a3), (mid1, mid1, mid1, b3))
            worst = _unique_worst(expect(mono))
            if worst != (target_mono, 1, 2):
                continue
            r_mono = (expect(mono)[0] - expect(mono)[3]) / 4
            for r0 in preimages.get(mono[0], ()):
                for r1 in preimages.get(mono[1], ()):
                    pre = (r0, r1)
                    e = expect(pre)
                    if _unique_worst(e) != (target_pre, 1, 2):
                        continue
                    if (e[0] - e[3]) / 4 <= r_mono:
                        continue
                    return cond, mono, pre
    return None


def build_fixtures() -> dict:
    """Construct b1, b2 and b3 with their expected metrics."""
    found = search_projection_counterexample()
    if found is None:
        raise RuntimeError("projection counterexample search found nothing")
    cond, mono, pre = found
    cond_f = np.array(cond, dtype=float)
    z = [0.0, 1.0, 2.0, 3.0]

    def rf(table):
        e = exact_expectations(table, cond_f)
        return e, (e[0] - e[-1]) / len(e)

    e_mono, r_mono = rf(np.array(mono, dtype=float))
    e_pre, r_pre = rf(np.array(pre, dtype=float))
    b1 = DiscreteCase((0, 1), z, cond_f, np.array(mono, dtype=float), name="b1")
    b1_expected = {
        "pair": [1.0, 2.0],
        "parity_violation": "6/5",
        "max_parity_violation": "6/5",
        "expectations": [str(v) for v in e_mono],
        "z_monotone": True,
    }
    b3 = DiscreteCase((0, 1), z, cond_f, np.array(pre, dtype=float), name="b3")
    b3_expected = {
        "projection": np.array(mono, dtype=float).tolist(),
        "max_parity_violation": "17/20",
        "projected_max_parity_violation": "6/5",
        "average_violation": str(r_pre),
        "projected_average_violation": str(r_mono),
        "worst_pair": [1.0, 2.0],
    }
    # Heights in four equal-mass bins; z = 0 female, z = 1 male.
    heights = ("<5'4", "5'4-5'8", "5'8-6'0", ">6'0")
    accept = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    b2 = DiscreteCase(heights, [0.0, 1.0], np.full((4, 2), 0.25), accept.copy(),
                      accept.copy(), name="b2")
    b2_expected = {
        "parity_violation": "0",
        "density_ratio": "1",
        "increasing_violations": {"count": 2, "magnitude": 1.0,
                                  "at": list(heights[:2])},
        "decreasing_violations": {"count": 2, "magnitude": 1.0,
                                  "at": list(heights[2:])},
    }
    return {"b1": (b1, b1_expected), "b2": (b2, b2_expected), "b3": (b3, b3_expected)}


# --- empirical density ratio ------------------------------------------------

@dataclass
class EmpiricalC:
    c: float
    ratios: dict
    smoothing: float
    cells: int
    absolute_continuity_warning: bool


def _bin_codes(col: np.ndarray, bins: int) -> np.ndarray:
    uniq = np.unique(col)
    if uniq.size <= bins:
        return np.searchsorted(uniq, col)
    edges = np.unique(np.quantile(col, np.linspace(0, 1, bins + 1)[1:-1]))
    return np.searchsorted(edges, col, side="right")


def estimate_c_empirical(dataset, feature_bins: int, j, k,
                         smoothing: float = 0.5) -> EmpiricalC:
    """Histogram estimate of the largest ratio ``P(X in cell | j) / P(X in cell | k)``.

    Non-protected features are binned at pooled quantiles (columns with at
    most ``feature_bins`` distinct values keep one bin per value) and crossed
    into joint cells. Counts get ``smoothing`` added in every cell occupied by
    either group. The maximum runs over cells where group j was observed.
    This is an estimate, not a certificate.
    """
    if dataset.protected_column is None:
        raise SchemaError("dataset has no protected column")
    z = dataset.protected_values
    mask_j, mask_k = z == float(j), z == float(k)
    if not mask_j.any() or not mask_k.any():
        raise MetricError(f"empty group: j={j} has {mask_j.sum()} rows, "
                          f"k={k} has {mask_k.sum()} rows")
    feats = [c for c in range(len(dataset.columns)) if c != dataset.protected_column]
    keep = mask_j | mask_k
    codes = np.zeros(dataset.rows, dtype=np.int64)
    for c in feats:
        col_codes = np.zeros(dataset.rows, dtype=np.int64)
        col_codes[keep] = _bin_codes(dataset.values[keep, c], feature_bins)
        codes = codes * (feature_bins + 1) + col_codes
    cells, inverse = np.unique(codes[keep], return_inverse=True)
    zk = z[keep]
    count_j = np.bincount(inverse[zk == float(j)], minlength=cells.size).astype(float)
    count_k = np.bincount(inverse[zk == float(k)], minlength=cells.size).astype(float)
    denom_j = count_j.sum() + smoothing * cells.size
    denom_k = count_k.sum() + smoothing * cells.size
    pj = (count_j + smoothing) / denom_j
    pk = (count_k + smoothing) / denom_k
    observed = count_j > 0
    with np.errstate(divide="ignore"):
        ratio = np.where(pk > 0, pj / np.where(pk > 0, pk, 1.0), np.inf)
    warn = bool(np.any(observed & (count_k == 0)))
    c = float(ratio[observed].max())
    return EmpiricalC(c, {int(cell): float(r) for cell, r, o in zip(cells, ratio, observed) if o},
                      smoothing, int(cells.size), warn)
