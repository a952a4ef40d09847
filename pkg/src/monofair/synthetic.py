"""Synthetic datasets with known structure, for tests and demo runs."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from monofair.data import ColumnSpec, Dataset


def from_arrays(X, y, names: Optional[Sequence[str]] = None,
                monotonicity: Optional[Sequence[str]] = None,
                keypoints: int = 20, protected: Optional[str] = None) -> Dataset:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    d = X.shape[1]
    names = list(names) if names is not None else [f"x{i}" for i in range(d)]
    monotonicity = list(monotonicity) if monotonicity is not None else ["none"] * d
    cols = []
    for i in range(d):
        kind = "boolean" if np.isin(X[:, i], (0.0, 1.0)).all() else "numeric"
        cols.append(ColumnSpec(names[i], kind, monotonicity[i], keypoints))
    prot = names.index(protected) if protected is not None else None
    return Dataset(tuple(cols), X, np.asarray(y, dtype=np.int64), prot)


def threshold_dataset(n: int = 500, seed: int = 0, monotonicity: str = "increasing",
                      anti: bool = False, keypoints: int = 20) -> Dataset:
    """One uniform feature; label is 1 exactly when the feature exceeds its
    median (below the median when ``anti``)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    x = rng.uniform(0.0, 1.0, size=n)
    med = np.median(x)
    y = (x < med) if anti else (x > med)
    return from_arrays(x[:, None], y.astype(int), ["x"], [monotonicity], keypoints)


def random_dataset(n: int, d: int, seed: int, constraints: Sequence[str],
                   keypoints: int = 10) -> Dataset:
    """Mixed numeric/boolean features with a noisy non-monotone label rule."""
    rng = np.random.Generator(np.random.PCG64(seed))
    X = rng.normal(size=(n, d))
    if d > 1:
        X[:, -1] = rng.integers(0, 2, size=n)
    logits = np.sin(2.0 * X).sum(axis=1) - 0.5 * X[:, 0] ** 2
    y = (rng.uniform(size=n) < 1.0 / (1.0 + np.exp(-logits))).astype(int)
    return from_arrays(X, y, [f"f{i}" for i in range(d)], constraints, keypoints)


def grouped_dataset(n: int = 4000, seed: int = 0) -> Dataset:
    """Ordinal group ``z`` in {0,1,2,3} plus one feature ``reach``.

    The label rate dips at z = 2 so an unconstrained fit is non-monotone in z,
    loosely mirroring the poverty-level pattern of the funding data.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    z = rng.integers(0, 4, size=n).astype(float)
    reach = rng.exponential(1.0, size=n)
    base = np.array([-0.6, -0.2, -1.2, 0.4])[z.astype(int)]
    logit = base + 0.8 * np.tanh(reach - 1.0)
    y = (rng.uniform(size=n) < 1.0 / (1.0 + np.exp(-logit))).astype(int)
    return from_arrays(np.column_stack([z, reach]), y, ["z", "reach"],
                       ["increasing", "increasing"], 20, protected="z")
