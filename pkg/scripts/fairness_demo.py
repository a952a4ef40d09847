"""Walk-through on synthetic and bundled data.

1. Synthetic ordinal groups whose label rate dips at z = 2: an unconstrained
   GAM reproduces the dip, the monotone one cannot, and its one-sided parity
   violation drops.
2. Fixture b1: a z-monotone score that still violates one-sided parity by 6/5.
3. Fixture b3: projecting onto monotone-in-z tables lowers the average
   violation but raises the worst pair.
4. The random theorem suite.

    python scripts/fairness_demo.py [--n 20000] [--epochs 30] [--cases 1000]
"""

import argparse

from monofair.bounds import (exact_expectations, exact_max_pair, fixture_b1,
                             fixture_b3, run_theorem_suite, verify_lemma1)
from monofair.data import split
from monofair.gam import TrainConfig, auc, train
from monofair.isotonic import project_table
from monofair.metrics import (average_violation_rf, max_one_sided_equal_opportunity,
                              max_one_sided_parity, model_grouped_predictions)
from monofair.synthetic import from_arrays, grouped_dataset


def synthetic(n, epochs, seed):
    ds = grouped_dataset(n, seed)
    free = from_arrays(ds.values, ds.label, ds.names, ["none", "none"], 20, "z")
    parts = split(ds, seed)
    print("synthetic groups (test split)")
    for label, data in (("unconstrained", free), ("monotone", ds)):
        model, report = train(data, parts, TrainConfig(epochs=epochs, seed=seed))
        preds = model_grouped_predictions(model, data, parts.test_indices)
        soft = model_grouped_predictions(model, data, parts.test_indices, soft=True)
        print(f"  {label:13s} auc {auc(model, data, parts.test_indices):.4f}  "
              f"parity {max_one_sided_parity(preds):.4f}  "
              f"soft parity {max_one_sided_parity(soft):.4f}  "
              f"equal opp. {max_one_sided_equal_opportunity(preds):.4f}  "
              f"z calibrator {[round(float(v), 3) for v in model.calibrator('z').values]}")


def fixtures():
    b1, _ = fixture_b1()
    e = exact_expectations(b1.score, b1.conditional)
    value, a, b = exact_max_pair(e)
    print(f"b1: E[f|z] = {[str(v) for v in e]}; worst pair z={a} vs z={b}: {value}")
    rep = verify_lemma1(b1, 1, 2)
    print(f"    lemma 1 for (1, 2): {rep.observed_value:.3f} <= "
          f"C {rep.details['C']:.3f} * {rep.details['expectation_k']:.3f} "
          f"= {rep.bound_value:.3f}")
    b3, _ = fixture_b3()
    t = b3.score_table()
    p = project_table(t)
    for label, table in (("b3", t), ("projected", p)):
        worst = exact_max_pair(exact_expectations(table.scores, b3.conditional))[0]
        print(f"{label:>9s}: worst pair {worst}  average R "
              f"{average_violation_rf(table, b3.conditional):.4f}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=20000)
    parser.add_argument("--epochs", type=int, default=30)
    parser.add_argument("--cases", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    synthetic(args.n, args.epochs, args.seed)
    fixtures()
    for name, res in run_theorem_suite(args.cases, args.seed).items():
        print(f"{name}: {res.checks} checks, {len(res.failures)} failures")


if __name__ == "__main__":
    main()
