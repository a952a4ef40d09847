"""Constrained vs. unconstrained runs on the Law School, Credit Default and
Funding Proposals datasets.

The datasets are not bundled. Each experiment reads a user-supplied CSV whose
header matches the bundled schema (``monofair/schemas/<name>.json``), or a
schema given explicitly.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass
from importlib import resources
from typing import Optional

from monofair.data import Schema, load_csv, load_schema, split
from monofair.gam import TrainConfig, accuracy, auc, train
from monofair.metrics import (max_one_sided_equal_opportunity, max_one_sided_parity,
                              model_grouped_predictions)
from monofair.errors import MetricError


@dataclass(frozen=True)
class Experiment:
    name: str
    metric: str
    # reported (unconstrained, constrained) test values
    reference: tuple
    epochs: int = 1000
    # Published one-sided parity violations (unconstrained, constrained), if any.
    parity_reference: Optional[tuple] = None


EXPERIMENTS = {
    "law": Experiment("law", "accuracy", (0.9489, 0.9497)),
    "credit": Experiment("credit", "accuracy", (0.8155, 0.8160)),
    "funding": Experiment("funding", "auc", (0.517, 0.518), epochs=20,
                          parity_reference=(0.00704, 0.00017)),
}


def bundled_schema(name: str) -> Schema:
    text = resources.files("monofair").joinpath("schemas", f"{name}.json").read_text("utf-8")
    return Schema.from_dict(json.loads(text))


def unconstrained(schema: Schema) -> Schema:
    cols = tuple(dataclasses.replace(c, monotonicity="none") for c in schema.columns)
    return Schema(cols, schema.label, schema.protected)


def _fairness(model, dataset, idx, soft):
    preds = model_grouped_predictions(model, dataset, idx, soft=soft)
    out = {"max_one_sided_parity": max_one_sided_parity(preds)}
    try:
        out["max_one_sided_equal_opportunity"] = max_one_sided_equal_opportunity(preds)
    except MetricError:
        out["max_one_sided_equal_opportunity"] = None
    return out


def run_experiment(name: str, data_path, seed: int = 0, epochs: Optional[int] = None,
                   schema_path=None, drop_missing: bool = True) -> dict:
    """Train the unconstrained and constrained GAM on one dataset.

    Returns per-variant train/test accuracy and AUC, the chosen learning
    rate, the calibrators' monotonicity check and, when the schema names a
    protected column, one-sided parity / equal opportunity on the test split
    (thresholded decisions and mean-probability "soft" rates).
    """
    exp = EXPERIMENTS[name]
    constrained = load_schema(schema_path) if schema_path else bundled_schema(name)
    config = TrainConfig(epochs=epochs or exp.epochs, seed=seed)
    results = {"experiment": name, "metric": exp.metric, "epochs": config.epochs,
               "seed": seed, "reference": list(exp.reference), "variants": {}}
    parts = None
    for variant, schema in (("unconstrained", unconstrained(constrained)),
                            ("constrained", constrained)):
        dataset = load_csv(data_path, schema, drop_missing=drop_missing)
        parts = parts or split(dataset, seed)
        start = time.perf_counter()
        model, report = train(dataset, parts, config)
        row = {
            "rows": dataset.rows,
            "rows_dropped": dataset.n_dropped,
            "chosen_rate": report.chosen_rate,
            "grid_extension_warning": report.grid_extension_warning,
            "train_accuracy": accuracy(model, dataset, parts.train_indices),
            "test_accuracy": accuracy(model, dataset, parts.test_indices),
            "train_auc": auc(model, dataset, parts.train_indices),
            "test_auc": auc(model, dataset, parts.test_indices),
            "monotonicity_check": model.monotonicity_violations(),
            "seconds": time.perf_counter() - start,
        }
        if dataset.protected_column is not None:
            row["fairness"] = {
                "decisions": _fairness(model, dataset, parts.test_indices, soft=False),
                "soft": _fairness(model, dataset, parts.test_indices, soft=True),
            }
        results["variants"][variant] = row
    return results
