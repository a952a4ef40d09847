"""Monotone piecewise-linear GAMs and exact checks of how monotonicity bounds
one-sided statistical parity and equal opportunity."""

from monofair.bounds import (DiscreteCase, BoundReport, density_ratio_c, verify_lemma1,
                             lemma3_bound, lemma4_bound, fixture_b1, fixture_b2,
                             fixture_b3, estimate_c_empirical)
from monofair.calibrators import CalibratorCurve, check_monotone, grad_values
from monofair.data import ColumnSpec, Dataset, Schema, SplitAssignment, load_csv, \
    load_schema, quantile_keypoints, split
from monofair.gam import (GamModel, TrainConfig, accuracy, auc, load_model,
                          predict_proba, predict_score, save_model, train)
from monofair.isotonic import ScoreTable, pav, project_table
from monofair.metrics import (FairnessReport, GroupedPredictions, audit_monotonicity,
                              average_violation_rf, import_prediction_grid,
                              max_one_sided_equal_opportunity, max_one_sided_parity)

__version__ = "0.1.0"
