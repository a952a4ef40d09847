"""Unconstrained vs. monotone GAM on one of the public datasets.

The CSV must carry the columns named in the bundled schema (see
src/monofair/schemas/), or pass --schema with your own column names.
Poverty level for the funding data is expected as an integer 0..3.

    python scripts/reproduce.py law --data law_data.csv
    python scripts/reproduce.py funding --data projects.csv --epochs 20 --out funding.json
"""

import argparse
import json

from monofair.experiments import EXPERIMENTS, run_experiment


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("experiment", choices=sorted(EXPERIMENTS))
    parser.add_argument("--data", required=True)
    parser.add_argument("--schema", help="schema JSON overriding the bundled one")
    parser.add_argument("--epochs", type=int, help="default: per-experiment setting")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", help="write the results as JSON here")
    args = parser.parse_args()

    res = run_experiment(args.experiment, args.data, args.seed, args.epochs, args.schema)
    key = "test_accuracy" if res["metric"] == "accuracy" else "test_auc"
    print(f"{args.experiment}: {res['epochs']} epochs, seed {res['seed']}")
    for (variant, row), ref in zip(res["variants"].items(), res["reference"]):
        line = (f"  {variant:13s} train acc {row['train_accuracy']:.4f}  "
                f"test acc {row['test_accuracy']:.4f}  test auc {row['test_auc']:.4f}  "
                f"(reference {key} {ref})  lr {row['chosen_rate']:g}")
        if row["grid_extension_warning"]:
            line += "  [grid endpoint]"
        print(line)
        if "fairness" in row:
            for mode, vals in row["fairness"].items():
                eo = vals["max_one_sided_equal_opportunity"]
                print(f"    {mode:9s} max 1-s parity {vals['max_one_sided_parity']:.5f}"
                      + ("" if eo is None else f"  max 1-s equal opp. {eo:.5f}"))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(res, fh, indent=1, sort_keys=True)


if __name__ == "__main__":
    main()
