import numpy as np
import pytest

from monofair.experiments import EXPERIMENTS, bundled_schema, run_experiment, unconstrained


def write(path, header, columns):
    rows = zip(*columns)
    path.write_text(",".join(header) + "\n"
                    + "".join(",".join(str(v) for v in r) + "\n" for r in rows))
    return path


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(0))


def test_bundled_schemas():
    for name in EXPERIMENTS:
        schema = bundled_schema(name)
        assert any(c.monotonicity != "none" for c in schema.columns)
        assert all(c.monotonicity == "none" for c in unconstrained(schema).columns)
    assert bundled_schema("funding").protected == "poverty_level"


def test_law_shape(tmp_path, rng):
    n = 300
    gpa = rng.uniform(2, 4, n).round(2)
    lsat = rng.uniform(10, 48, n).round(1)
    y = (rng.uniform(size=n) < 0.3 + 0.15 * (gpa - 2)).astype(int)
    path = write(tmp_path / "law.csv", ["ugpa", "lsat", "pass_bar"], [gpa, lsat, y])
    res = run_experiment("law", path, epochs=2)
    assert set(res["variants"]) == {"unconstrained", "constrained"}
    mono = res["variants"]["constrained"]
    assert all(v == 0 for v in mono["monotonicity_check"].values())
    assert "fairness" not in mono


def test_credit_categorical(tmp_path, rng):
    n = 300
    marriage = rng.integers(0, 4, n)
    pay = rng.integers(-2, 9, n)
    y = (rng.uniform(size=n) < 0.2 + 0.05 * np.clip(pay, 0, None)).astype(int)
    path = write(tmp_path / "credit.csv", ["MARRIAGE", "PAY_6", "default payment next month"],
                 [marriage, pay, y])
    res = run_experiment("credit", path, epochs=2)
    assert res["variants"]["constrained"]["monotonicity_check"]["PAY_6"] == 0
    assert "MARRIAGE=0" in res["variants"]["constrained"]["monotonicity_check"]


def test_funding_fairness(tmp_path, rng):
    n = 400
    pov = rng.integers(0, 4, n)
    reach = rng.integers(1, 200, n)
    y = (rng.uniform(size=n) < 0.1 + 0.1 * (pov == 3)).astype(int)
    path = write(tmp_path / "f.csv", ["poverty_level", "students_reached", "is_exciting"],
                 [pov, reach, y])
    res = run_experiment("funding", path, epochs=2)
    fair = res["variants"]["constrained"]["fairness"]
    assert set(fair) == {"decisions", "soft"}
    assert fair["soft"]["max_one_sided_parity"] >= 0
