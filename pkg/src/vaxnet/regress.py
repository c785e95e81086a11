"""Incidence-from-characteristics regression: OLS, AIC, grouped CV, subsets."""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .fcd import TruncationParams, truncate
from .metrics import PREDICTOR_NAMES, predictor_values, village_characteristics
from .rngcore import derive_stream

N_PREDICTORS = len(PREDICTOR_NAMES)


@dataclass(frozen=True)
class RegressionDataset:
    """Run-level rows: incidence in percent plus per-network characteristics.

    All rows of one sample network share its characteristic values and its
    network_id; village_id groups networks that came from the same village.
    Rows whose characteristics contain an undefined value (assortativity on
    a degree-regular network) are dropped at construction and counted in
    n_excluded.
    """

    incidence: np.ndarray
    characteristics: np.ndarray
    network_ids: np.ndarray
    village_ids: np.ndarray
    n_excluded: int = 0
    standardization: Optional[Tuple[np.ndarray, np.ndarray]] = None

    def __post_init__(self):
        y = np.asarray(self.incidence, dtype=np.float64)
        x = np.asarray(self.characteristics, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != N_PREDICTORS:
            raise ValueError(f"characteristics must be (n, {N_PREDICTORS})")
        if len(y) != len(x):
            raise ValueError("incidence and characteristics length mismatch")
        if len(y) and (y.min() < 0.0 or y.max() > 100.0):
            raise ValueError("incidence must lie in [0, 100]")
        object.__setattr__(self, "incidence", y)
        object.__setattr__(self, "characteristics", x)
        object.__setattr__(self, "network_ids", np.asarray(self.network_ids))
        object.__setattr__(self, "village_ids", np.asarray(self.village_ids))

    @property
    def n_rows(self) -> int:
        return len(self.incidence)


def build_dataset(incidence, characteristics, network_ids, village_ids) -> RegressionDataset:
    """Assemble a dataset, dropping rows with undefined characteristics."""
    x = np.asarray(characteristics, dtype=np.float64)
    y = np.asarray(incidence, dtype=np.float64)
    keep = ~np.isnan(x).any(axis=1)
    return RegressionDataset(
        incidence=y[keep],
        characteristics=x[keep],
        network_ids=np.asarray(network_ids)[keep],
        village_ids=np.asarray(village_ids)[keep],
        n_excluded=int((~keep).sum()),
    )


@dataclass(frozen=True)
class ModelFit:
    predictor_set: Tuple[int, ...]
    predictor_names: Tuple[str, ...]
    coefficients: np.ndarray
    rss: float
    aic: float
    cv_rmse: float
    n_rows: int


def standardize(dataset: RegressionDataset) -> RegressionDataset:
    """Z-score every characteristic with pooled mean/SD; keep the stats."""
    x = dataset.characteristics
    mean = x.mean(axis=0)
    sd = x.std(axis=0)
    for j in range(N_PREDICTORS):
        if sd[j] == 0.0:
            raise ValueError(f"zero-variance characteristic: {PREDICTOR_NAMES[j]}")
    return replace(
        dataset,
        characteristics=(x - mean) / sd,
        standardization=(mean, sd),
    )


def _design(dataset: RegressionDataset, predictors: Sequence[int]) -> np.ndarray:
    cols = [np.ones(dataset.n_rows)]
    for j in predictors:
        cols.append(dataset.characteristics[:, j])
    return np.column_stack(cols)


def fit_ols(dataset: RegressionDataset, predictors: Sequence[int],
            cv_value: float = float("nan")) -> ModelFit:
    """Least squares with Gaussian AIC; the variance and intercept count
    toward the parameter total, so aic = n ln(rss/n) + 2 (p + 2)."""
    predictors = tuple(sorted(predictors))
    if any(j < 0 or j >= N_PREDICTORS for j in predictors):
        raise ValueError("predictor index out of range")
    n = dataset.n_rows
    p = len(predictors)
    if n <= p + 1:
        raise ValueError("not enough rows for the requested predictor set")
    xmat = _design(dataset, predictors)
    q, r = np.linalg.qr(xmat)
    diag = np.abs(np.diag(r))
    if diag.min() <= 1e-10 * max(diag.max(), 1.0):
        raise ValueError("rank-deficient design matrix")
    coef = np.linalg.solve(r, q.T @ dataset.incidence)
    resid = dataset.incidence - xmat @ coef
    rss = float(resid @ resid)
    aic = n * np.log(max(rss, 1e-300) / n) + 2.0 * (p + 2)
    return ModelFit(
        predictor_set=predictors,
        predictor_names=tuple(PREDICTOR_NAMES[j] for j in predictors),
        coefficients=coef,
        rss=rss,
        aic=float(aic),
        cv_rmse=cv_value,
        n_rows=n,
    )


def _fold_assignment(network_ids: np.ndarray, k_folds: int,
                     rng: np.random.Generator) -> Dict:
    """Map network id -> fold, shuffling the sorted distinct ids."""
    ids = np.unique(network_ids)
    if len(ids) < k_folds:
        raise ValueError("fewer distinct network ids than folds")
    order = rng.permutation(len(ids))
    assignment = {}
    for pos, idx in enumerate(order):
        assignment[ids[idx]] = pos % k_folds
    return assignment


def _cv_rmse_assigned(dataset: RegressionDataset, predictors: Sequence[int],
                      assignment: Dict, k_folds: int) -> float:
    folds = np.array([assignment[i] for i in dataset.network_ids])
    sq_sum = 0.0
    for f in range(k_folds):
        test = folds == f
        if not test.any():
            raise ValueError(f"fold {f} has no rows")
        train_ds = RegressionDataset(
            incidence=dataset.incidence[~test],
            characteristics=dataset.characteristics[~test],
            network_ids=dataset.network_ids[~test],
            village_ids=dataset.village_ids[~test],
        )
        fit = fit_ols(train_ds, predictors)
        xmat = _design(
            RegressionDataset(
                incidence=dataset.incidence[test],
                characteristics=dataset.characteristics[test],
                network_ids=dataset.network_ids[test],
                village_ids=dataset.village_ids[test],
            ),
            predictors,
        )
        err = dataset.incidence[test] - xmat @ fit.coefficients
        sq_sum += float(err @ err)
    return float(np.sqrt(sq_sum / dataset.n_rows))


def cv_rmse(dataset: RegressionDataset, predictors: Sequence[int],
            k_folds: int, rng: np.random.Generator) -> float:
    """Grouped k-fold RMSE; folds partition network ids, not rows."""
    assignment = _fold_assignment(dataset.network_ids, k_folds, rng)
    return _cv_rmse_assigned(dataset, tuple(sorted(predictors)), assignment, k_folds)


def subset_search(dataset: RegressionDataset, max_subset_size: int,
                  k_folds: int, rng: np.random.Generator) -> List[ModelFit]:
    """Fit the empty model, all subsets up to max_subset_size, and the full
    model, all under one shared fold assignment; sorted by cv_rmse."""
    if max_subset_size > N_PREDICTORS:
        raise ValueError("max_subset_size exceeds predictor count")
    assignment = _fold_assignment(dataset.network_ids, k_folds, rng)
    subsets = [()]
    for size in range(1, max_subset_size + 1):
        subsets.extend(combinations(range(N_PREDICTORS), size))
    full = tuple(range(N_PREDICTORS))
    if full not in subsets:
        subsets.append(full)
    fits = []
    for subset in subsets:
        value = _cv_rmse_assigned(dataset, subset, assignment, k_folds)
        fits.append(fit_ols(dataset, subset, cv_value=value))
    fits.sort(key=lambda f: f.cv_rmse)
    return fits


def dataset_from_graphs(graphs, incidence_by_network, network_ids,
                        village_ids) -> RegressionDataset:
    """Expand per-network incidence arrays to run-level rows with shared
    characteristics."""
    ys, xs, nids, vids = [], [], [], []
    for g, runs, nid, vid in zip(graphs, incidence_by_network, network_ids, village_ids):
        chars = village_characteristics(g).as_array()[1:]
        runs = np.asarray(runs, dtype=np.float64)
        ys.append(runs)
        xs.append(np.tile(chars, (len(runs), 1)))
        nids.extend([nid] * len(runs))
        vids.extend([vid] * len(runs))
    return build_dataset(
        np.concatenate(ys), np.vstack(xs), np.array(nids), np.array(vids)
    )


def fcd_prediction_sweep(graphs, incidence_by_network, network_ids, village_ids,
                         k_values: Sequence[int], predictors: Sequence[int],
                         k_folds: int, rng_seed: int) -> Dict[int, ModelFit]:
    """Refit the chosen model on characteristics of truncated graphs.

    Each graph is truncated once per K; the outcome stays the full-network
    incidence. Only the chosen predictors are recomputed on the truncated
    graphs (heavy truncation can degenerate the unused ones, e.g. collapse
    every median degree to the same value), and columns stay on their raw
    scale; CV predictions are scale-invariant. K large enough to keep every
    graph intact reproduces the full-network fit exactly.
    """
    out = {}
    predictors = tuple(sorted(predictors))
    for k in k_values:
        ys, xs, nids, vids = [], [], [], []
        for i, (g, runs, nid, vid) in enumerate(
            zip(graphs, incidence_by_network, network_ids, village_ids)
        ):
            tg = truncate(g, TruncationParams(k=k, rng_seed=int(
                derive_stream(rng_seed, ("fcd-sweep", k), ("graph", i)).integers(0, 2**63 - 1)
            )))
            chars = np.zeros(N_PREDICTORS)
            chars[list(predictors)] = predictor_values(tg, predictors)
            runs = np.asarray(runs, dtype=np.float64)
            ys.append(runs)
            xs.append(np.tile(chars, (len(runs), 1)))
            nids.extend([nid] * len(runs))
            vids.extend([vid] * len(runs))
        ds = build_dataset(
            np.concatenate(ys), np.vstack(xs), np.array(nids), np.array(vids)
        )
        fold_rng = derive_stream(rng_seed, ("fcd-sweep-folds", 0)).generator
        assignment = _fold_assignment(ds.network_ids, k_folds, fold_rng)
        value = _cv_rmse_assigned(ds, predictors, assignment, k_folds)
        out[k] = fit_ols(ds, predictors, cv_value=value)
    return out
