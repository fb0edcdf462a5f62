"""Random forest regression with out-of-bag cross-fitting."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from loguru import logger

from ..data import AugmentedCovariates, Experiment
from ..errors import DataValidationError, ModelFitError, OobCoverageError
from ..estimation import Imputations
from .base import FitReport, ForestParams, LearnerConfig, LearnerKind, learner

LEAF = -1


class RegressionTree:
    """CART regression tree on squared error.

    At each node `mtry` candidate columns are sampled without replacement. Thresholds are
    midpoints between consecutive distinct values; a split must strictly reduce the squared
    error and leave at least `min_leaf` rows on each side. Ties go to the lowest column index,
    then the lowest threshold.
    """

    def __init__(
        self,
        *,
        mtry: int,
        min_leaf: int = 5,
        max_depth: int | None = None,
        rng: np.random.Generator,
    ) -> None:
        self.mtry = mtry
        self.min_leaf = min_leaf
        self.max_depth = max_depth
        self._rng = rng
        self.feature = np.empty(0, dtype=np.intp)
        self.threshold = np.empty(0)
        self.left = np.empty(0, dtype=np.intp)
        self.right = np.empty(0, dtype=np.intp)
        self.value = np.empty(0)
        self.importance = np.empty(0)

    def fit(self, x: np.ndarray, y: np.ndarray) -> RegressionTree:
        n_features = x.shape[1]
        mtry = min(self.mtry, n_features)
        feature: list[int] = []
        threshold: list[float] = []
        left: list[int] = []
        right: list[int] = []
        value: list[float] = []
        importance = np.zeros(n_features)

        def new_node(rows: np.ndarray) -> int:
            feature.append(LEAF)
            threshold.append(np.nan)
            left.append(LEAF)
            right.append(LEAF)
            value.append(float(y[rows].mean()))
            return len(value) - 1

        stack = [(new_node(np.arange(y.size)), np.arange(y.size), 0)]
        while stack:
            node, rows, depth = stack.pop()
            if self.max_depth is not None and depth >= self.max_depth:
                continue
            split = self._best_split(x[rows], y[rows], mtry)
            if split is None:
                continue
            column, cut, gain = split
            goes_left = x[rows, column] <= cut
            left_rows, right_rows = rows[goes_left], rows[~goes_left]
            if left_rows.size == 0 or right_rows.size == 0:
                continue
            feature[node] = column
            threshold[node] = cut
            importance[column] += gain
            left[node] = new_node(left_rows)
            right[node] = new_node(right_rows)
            stack.append((right[node], right_rows, depth + 1))
            stack.append((left[node], left_rows, depth + 1))

        self.feature = np.asarray(feature, dtype=np.intp)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.intp)
        self.right = np.asarray(right, dtype=np.intp)
        self.value = np.asarray(value, dtype=float)
        self.importance = importance
        return self

    def _best_split(
        self, x: np.ndarray, y: np.ndarray, mtry: int
    ) -> tuple[int, float, float] | None:
        n = y.size
        if mtry == 0 or n < 2 * self.min_leaf:
            return None
        total = y.sum()
        parent_sse = float(((y - y.mean()) ** 2).sum())
        if parent_sse <= 0.0:
            return None

        candidates = np.sort(self._rng.choice(x.shape[1], size=mtry, replace=False))
        left_n = np.arange(1, n)
        size_ok = (left_n >= self.min_leaf) & (n - left_n >= self.min_leaf)
        best: tuple[int, float, float] | None = None
        best_gain = 1e-12 * parent_sse

        for column in candidates:
            order = np.argsort(x[:, column], kind="stable")
            xs = x[order, column]
            left_sum = np.cumsum(y[order])[:-1]
            valid = size_ok & (xs[1:] > xs[:-1])
            if not valid.any():
                continue
            right_sum = total - left_sum
            gain = left_sum**2 / left_n + right_sum**2 / (n - left_n) - total**2 / n
            gain = np.where(valid, gain, -np.inf)
            position = int(np.argmax(gain))
            if gain[position] > best_gain:
                best_gain = float(gain[position])
                cut = 0.5 * (xs[position] + xs[position + 1])
                best = (int(column), float(cut), best_gain)
        return best

    def predict(self, x: np.ndarray) -> np.ndarray:
        node = np.zeros(x.shape[0], dtype=np.intp)
        while True:
            active = np.flatnonzero(self.feature[node] != LEAF)
            if active.size == 0:
                return self.value[node]
            current = node[active]
            goes_left = x[active, self.feature[current]] <= self.threshold[current]
            node[active] = np.where(goes_left, self.left[current], self.right[current])


@dataclass(frozen=True, eq=False)
class Forest:
    """Bagged regression trees with the in-bag indicator of every training row."""

    trees: tuple[RegressionTree, ...]
    in_bag: np.ndarray  # (n_trees, n_rows) bool
    constant: float | None = None

    def predict(self, x: np.ndarray) -> np.ndarray:
        if self.constant is not None:
            return np.full(x.shape[0], self.constant)
        return np.mean([tree.predict(x) for tree in self.trees], axis=0)

    def oob_predict(self, x: np.ndarray, row_ids: np.ndarray | None = None) -> np.ndarray:
        """Average, for each training row, the trees that did not sample it.

        `x` holds one query row per training row (it may differ from the training features,
        e.g. with the treatment indicator flipped).
        """

        if self.constant is not None:
            return np.full(x.shape[0], self.constant)
        out_of_bag = ~self.in_bag
        coverage = out_of_bag.sum(axis=0)
        if (coverage == 0).any():
            missed = np.flatnonzero(coverage == 0)
            ids = tuple(str(row_ids[i]) for i in missed) if row_ids is not None else ()
            raise OobCoverageError(
                f"{missed.size} unit(s) were in-bag for every tree; increase n_trees",
                unit_ids=ids or tuple(str(i) for i in missed),
            )
        totals = np.zeros(x.shape[0])
        for tree, oob in zip(self.trees, out_of_bag, strict=True):
            rows = np.flatnonzero(oob)
            if rows.size:
                totals[rows] += tree.predict(x[rows])
        return totals / coverage

    def importance(self, n_columns: int) -> np.ndarray:
        if self.constant is not None or not self.trees:
            return np.zeros(n_columns)
        return np.sum([tree.importance for tree in self.trees], axis=0)


def fit_forest(x: np.ndarray, y: np.ndarray, params: ForestParams) -> Forest:
    """Grow `n_trees` trees on bootstrap resamples; tree t draws from seed + t."""

    if params.seed is None:
        raise DataValidationError("forest fitting requires a seed")
    n, n_columns = x.shape
    if n < 2:
        raise ModelFitError(f"a forest needs at least 2 rows, got {n}")
    if np.ptp(y) == 0.0:
        return Forest(trees=(), in_bag=np.zeros((0, n), dtype=bool), constant=float(y[0]))
    mtry = params.resolve_mtry(n_columns)
    seed = params.seed

    def grow(index: int) -> tuple[RegressionTree, np.ndarray]:
        rng = np.random.default_rng(seed + index)
        sample = rng.integers(0, n, size=n)
        in_bag = np.zeros(n, dtype=bool)
        in_bag[sample] = True
        tree = RegressionTree(
            mtry=mtry, min_leaf=params.min_leaf, max_depth=params.max_depth, rng=rng
        )
        return tree.fit(x[sample], y[sample]), in_bag

    if params.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=params.n_jobs) as pool:
            grown = list(pool.map(grow, range(params.n_trees)))
    else:
        grown = [grow(index) for index in range(params.n_trees)]

    trees = tuple(tree for tree, _ in grown)
    in_bag = np.vstack([mask for _, mask in grown])
    return Forest(trees=trees, in_bag=in_bag)


def _importance_report(raw: np.ndarray, names: tuple[str, ...]) -> dict[str, float] | None:
    total = raw.sum()
    if total <= 0.0:
        return None
    return {name: float(value / total) for name, value in zip(names, raw, strict=True)}


@learner(LearnerKind.RANDOM_FOREST)
def rf_impute(
    experiment: Experiment, x: AugmentedCovariates, config: LearnerConfig
) -> tuple[Imputations, FitReport]:
    """Cross-fitted imputations from random forests.

    Per arm: units in the fitted arm get the mean over trees for which they are out-of-bag,
    units of the other arm get the full-forest mean. Pooled: one forest on the covariates plus
    the treatment indicator; both potential outcomes of a unit come from its out-of-bag trees.
    """

    if x.n_rows != experiment.n:
        raise DataValidationError(
            f"design has {x.n_rows} rows but the experiment has {experiment.n} units"
        )
    params = config.rf
    ids = np.asarray(experiment.ids, dtype=object)
    z = experiment.z.astype(bool)
    matrix = x.matrix

    if not config.per_arm:
        z_column = z.astype(float)[:, None]
        forest = fit_forest(np.hstack([z_column, matrix]), experiment.y, params)
        y_hat_t = forest.oob_predict(np.hstack([np.ones_like(z_column), matrix]), ids)
        y_hat_c = forest.oob_predict(np.hstack([np.zeros_like(z_column), matrix]), ids)
        observed = np.where(z, y_hat_t, y_hat_c)
        raw = forest.importance(x.n_columns + 1)
        names = ("treatment", *x.column_names)
        report = FitReport(
            learner=config,
            mse={"pooled": float(np.mean((experiment.y - observed) ** 2))},
            importance=_importance_report(raw, names),
        )
        imputations = Imputations(y_hat_t=y_hat_t, y_hat_c=y_hat_c, cross_fitted=True)
        return imputations, report

    predictions = {True: np.empty(experiment.n), False: np.empty(experiment.n)}
    mse: dict[str, float] = {}
    raw = np.zeros(x.n_columns)
    for arm, label in ((True, "treated"), (False, "control")):
        own = np.flatnonzero(z == arm)
        other = np.flatnonzero(z != arm)
        if own.size < 2:
            raise ModelFitError(f"the {label} arm has {own.size} unit(s); at least 2 are needed")
        forest = fit_forest(matrix[own], experiment.y[own], params)
        predictions[arm][own] = forest.oob_predict(matrix[own], ids[own])
        predictions[arm][other] = forest.predict(matrix[other])
        mse[label] = float(np.mean((experiment.y[own] - predictions[arm][own]) ** 2))
        raw += forest.importance(x.n_columns)
        logger.debug(f"{label} forest: {params.n_trees} trees, oob mse={mse[label]:.4f}")

    report = FitReport(learner=config, mse=mse, importance=_importance_report(raw, x.column_names))
    imputations = Imputations(
        y_hat_t=predictions[True], y_hat_c=predictions[False], cross_fitted=True
    )
    return imputations, report
