"""Per-sensor random-forest regressors over correlated peer channels.

Each monitored sensor gets its own forest: peer channels are ranked by
absolute Pearson correlation on training data, the top k become the
feature set (the target itself is never a feature), and CART trees with
variance-reduction splits are fitted on bootstrap resamples. Forest
output is the mean of the per-tree leaf means, in normalized space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .domain import SensorCatalog, as_matrix
from .errors import (
    ConstantTargetError,
    EmptyDatasetError,
    EmptySamplesError,
    InvalidKError,
)
from .metrics import mean_absolute_error, r_squared

# Peer-feature counts that produced the best per-sensor estimators on the
# reference vehicle, keyed by catalog name; overridable per training run.
DEFAULT_FEATURE_COUNTS: dict[str, int] = {
    "manifold_air_temperature": 19,
    "manifold_pressure": 6,
    "stepper_rotation_rate": 3,
    "engine_speed": 5,
    "throttle_position_voltage": 4,
    "fuel_injection_time": 7,
    "throttle_position": 5,
    "engine_water_temperature": 18,
    "coil_charging_time": 2,
    "battery_voltage": 6,
    "vehicle_condition": 17,
    "upstream_oxygen_voltage": 17,
    "downstream_oxygen_voltage": 17,
    "vehicle_speed": 15,
    "engine_load": 9,
    "canister_purge": 2,
    "fan_status": 5,
    "ignition_advance_angle": 3,
    "move": 1,
    "strike": 19,
}
FALLBACK_FEATURE_COUNT = 6  # for catalogs with names outside the table


@dataclass
class TreeNode:
    """CART node: internal nodes route value <= threshold left, > right."""

    value: float  # mean target of the node's training samples
    feature: int = -1  # local feature index; -1 marks a leaf
    threshold: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass(frozen=True)
class ForestConfig:
    """Ensemble hyperparameters; defaults are conventional regression-forest settings.

    ``features_per_split=None`` resolves to ceil(k / 3) for a forest with
    k features; ``"all"`` tries every feature at every node. ``bootstrap=False``
    fits every tree on the full sample (useful for single-tree setups).
    """

    n_trees: int = 100
    max_depth: int = 12
    min_samples_leaf: int = 2
    features_per_split: Union[int, str, None] = None
    seed: int = 0
    bootstrap: bool = True

    def __post_init__(self) -> None:
        if self.n_trees < 1 or self.max_depth < 1 or self.min_samples_leaf < 1:
            raise ValueError("n_trees, max_depth, and min_samples_leaf must be >= 1")
        if isinstance(self.features_per_split, str) and self.features_per_split != "all":
            raise ValueError("features_per_split must be an int, 'all', or None")
        if isinstance(self.features_per_split, int) and self.features_per_split < 1:
            raise ValueError("features_per_split must be >= 1")


@dataclass(frozen=True)
class FlatTree:
    """Array form of one tree, used for batch prediction and serialization."""

    feature: np.ndarray  # int32; -1 at leaves
    threshold: np.ndarray  # float64
    left: np.ndarray  # int32 child indices; -1 at leaves
    right: np.ndarray
    value: np.ndarray  # float64 node means (leaf entries are the predictions)


def flatten_tree(root: TreeNode) -> FlatTree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def visit(node: TreeNode) -> int:
        idx = len(feature)
        feature.append(node.feature)
        threshold.append(node.threshold)
        left.append(-1)
        right.append(-1)
        value.append(node.value)
        if not node.is_leaf:
            left[idx] = visit(node.left)
            right[idx] = visit(node.right)
        return idx

    visit(root)
    return FlatTree(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        value=np.array(value, dtype=np.float64),
    )


def unflatten_tree(flat: FlatTree) -> TreeNode:
    def build(idx: int) -> TreeNode:
        node = TreeNode(
            value=float(flat.value[idx]),
            feature=int(flat.feature[idx]),
            threshold=float(flat.threshold[idx]),
        )
        if flat.feature[idx] >= 0:
            node.left = build(int(flat.left[idx]))
            node.right = build(int(flat.right[idx]))
        return node

    return build(0)


def _tree_predict_batch(flat: FlatTree, x: np.ndarray) -> np.ndarray:
    """Route every row of x (n, k_local) to its leaf value."""
    idx = np.zeros(x.shape[0], dtype=np.int64)
    active = flat.feature[idx] >= 0
    rows = np.arange(x.shape[0])
    while np.any(active):
        cur = idx[active]
        go_left = x[rows[active], flat.feature[cur]] <= flat.threshold[cur]
        idx[active] = np.where(go_left, flat.left[cur], flat.right[cur])
        active = flat.feature[idx] >= 0
    return flat.value[idx]


def _best_split(
    x: np.ndarray, y: np.ndarray, feature_ids: np.ndarray, min_samples_leaf: int
) -> tuple[float, int, float] | None:
    """Lowest-SSE split over candidate features, or None if no valid split.

    Candidate thresholds are midpoints between consecutive distinct sorted
    feature values. Ties break toward the earlier-tried feature and the
    lowest threshold.
    """
    n = y.shape[0]
    best: tuple[float, int, float] | None = None
    for f in feature_ids:
        order = np.argsort(x[:, f], kind="stable")
        xs = x[order, f]
        ys = y[order]
        # splittable positions: left part = ys[:i+1], requires a strict value step
        cut = np.flatnonzero(xs[:-1] < xs[1:])
        if cut.size == 0:
            continue
        n_left = cut + 1
        valid = (n_left >= min_samples_leaf) & (n - n_left >= min_samples_leaf)
        cut = cut[valid]
        if cut.size == 0:
            continue
        n_left = cut + 1
        n_right = n - n_left
        csum = np.cumsum(ys)
        csq = np.cumsum(ys * ys)
        sum_left = csum[cut]
        sq_left = csq[cut]
        sse = (sq_left - sum_left**2 / n_left) + (
            (csq[-1] - sq_left) - (csum[-1] - sum_left) ** 2 / n_right
        )
        j = int(np.argmin(sse))
        if best is None or sse[j] < best[0]:
            best = (float(sse[j]), int(f), float((xs[cut[j]] + xs[cut[j] + 1]) / 2.0))
    return best


def _grow(
    x: np.ndarray,
    y: np.ndarray,
    depth: int,
    max_depth: int,
    min_samples_leaf: int,
    features_per_split: int,
    rng: np.random.Generator,
) -> TreeNode:
    node = TreeNode(value=float(y.mean()))
    n = y.shape[0]
    if depth >= max_depth or n < 2 * min_samples_leaf or np.all(y == y[0]):
        return node
    n_features = x.shape[1]
    if features_per_split < n_features:
        feats = rng.choice(n_features, size=features_per_split, replace=False)
    else:
        feats = np.arange(n_features)
    best = _best_split(x, y, feats, min_samples_leaf)
    if best is None:
        return node
    _, node.feature, node.threshold = best
    mask = x[:, node.feature] <= node.threshold
    node.left = _grow(x[mask], y[mask], depth + 1, max_depth, min_samples_leaf, features_per_split, rng)
    node.right = _grow(x[~mask], y[~mask], depth + 1, max_depth, min_samples_leaf, features_per_split, rng)
    return node


def fit_tree(
    x,
    y,
    features_per_split: Union[int, str] = "all",
    max_depth: int = 12,
    min_samples_leaf: int = 1,
    seed: int = 0,
) -> TreeNode:
    """Greedy CART regression tree on (x, y) samples.

    Splits minimize the summed squared error of the two children; leaves
    predict the mean of their samples. Growth stops at max_depth, at
    min_samples_leaf, or on a zero-variance node.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if y.size == 0:
        raise EmptySamplesError("cannot fit a tree on zero samples")
    fps = x.shape[1] if features_per_split == "all" else int(features_per_split)
    if fps < 1:
        raise ValueError("features_per_split must be >= 1")
    rng = np.random.default_rng(seed)
    return _grow(x, y, 0, max_depth, min_samples_leaf, fps, rng)


def select_features(train, target: int, k: int) -> list[int]:
    """The k peer sensors most correlated with the target on training data.

    Ranking is by absolute Pearson correlation, ties broken by lower
    sensor id; constant peers count as correlation 0.
    """
    x = np.atleast_2d(as_matrix(train))
    if x.shape[0] == 0:
        raise EmptyDatasetError("select_features requires a non-empty dataset")
    n_sensors = x.shape[1]
    if not 1 <= k <= n_sensors - 1:
        raise InvalidKError(f"k must be in [1, {n_sensors - 1}], got {k}")
    centered = x - x.mean(axis=0)
    norms = np.sqrt(np.sum(centered**2, axis=0))
    yc = centered[:, target]
    y_norm = norms[target]
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = centered.T @ yc / np.where(norms * y_norm > 0, norms * y_norm, 1.0)
    corr = np.where((norms > 0) & (y_norm > 0), corr, 0.0)
    strength = np.abs(corr)
    strength[target] = -1.0  # the target is never its own feature
    order = np.lexsort((np.arange(n_sensors), -strength))
    return [int(i) for i in order[:k]]


@dataclass(frozen=True)
class ForestModel:
    """Trained forest for one target sensor."""

    target_sensor: int
    feature_ids: tuple[int, ...]
    trees: tuple[TreeNode, ...]
    config: ForestConfig
    flat_trees: tuple[FlatTree, ...] = field(compare=False, repr=False, default=())

    def __post_init__(self) -> None:
        if self.target_sensor in self.feature_ids:
            raise ValueError("target sensor must not appear among its own features")
        if not self.trees:
            raise ValueError("forest needs at least one tree")
        if not self.flat_trees:
            object.__setattr__(self, "flat_trees", tuple(flatten_tree(t) for t in self.trees))


def fit_forest(train, target: int, k: int, config: ForestConfig) -> ForestModel:
    """Select peer features, then fit n_trees CARTs on bootstrap resamples.

    Resample indices and per-node feature subsets derive deterministically
    from ``config.seed`` via one spawned stream per tree.
    """
    x = np.atleast_2d(as_matrix(train))
    if x.shape[0] == 0:
        raise EmptyDatasetError("fit_forest requires a non-empty dataset")
    feature_ids = select_features(x, target, k)
    if config.features_per_split is None:
        fps = math.ceil(k / 3)
    elif config.features_per_split == "all":
        fps = k
    else:
        fps = min(int(config.features_per_split), k)
    x_sel = x[:, feature_ids]
    y = x[:, target]
    n = x.shape[0]
    trees = []
    for child in np.random.SeedSequence(config.seed).spawn(config.n_trees):
        rng = np.random.default_rng(child)
        idx = rng.integers(0, n, size=n) if config.bootstrap else np.arange(n)
        trees.append(
            _grow(x_sel[idx], y[idx], 0, config.max_depth, config.min_samples_leaf, fps, rng)
        )
    return ForestModel(
        target_sensor=target,
        feature_ids=tuple(feature_ids),
        trees=tuple(trees),
        config=config,
    )


def predict(model: ForestModel, frame) -> float:
    """Mean of per-tree leaf predictions; reads only the model's peer features."""
    return float(predict_matrix(model, np.atleast_2d(as_matrix(frame)))[0])


def predict_matrix(model: ForestModel, x) -> np.ndarray:
    """Vectorized ``predict`` over the rows of a full-width frame matrix."""
    x = np.atleast_2d(as_matrix(x))
    x_sel = x[:, list(model.feature_ids)]
    total = np.zeros(x_sel.shape[0])
    for flat in model.flat_trees:
        total += _tree_predict_batch(flat, x_sel)
    return total / len(model.flat_trees)


@dataclass(frozen=True)
class ForestBank:
    """One forest per catalog sensor, in catalog order."""

    forests: tuple[ForestModel, ...]

    def __post_init__(self) -> None:
        targets = [f.target_sensor for f in self.forests]
        if targets != list(range(len(self.forests))):
            raise ValueError("bank must cover every sensor id exactly once, in order")

    def __getitem__(self, sensor_id: int) -> ForestModel:
        return self.forests[sensor_id]

    def __len__(self) -> int:
        return len(self.forests)


def default_feature_counts(catalog: SensorCatalog) -> dict[int, int]:
    """Per-sensor peer counts from the reference table, by catalog name."""
    return {
        s.id: DEFAULT_FEATURE_COUNTS.get(s.name, FALLBACK_FEATURE_COUNT) for s in catalog
    }


def fit_bank(train, feature_counts: Mapping[int, int], config: ForestConfig) -> ForestBank:
    """Fit one forest per sensor; tree seeds derive from config.seed and the target id."""
    x = np.atleast_2d(as_matrix(train))
    forests = []
    for target in range(x.shape[1]):
        cfg = ForestConfig(
            n_trees=config.n_trees,
            max_depth=config.max_depth,
            min_samples_leaf=config.min_samples_leaf,
            features_per_split=config.features_per_split,
            seed=config.seed + target,
            bootstrap=config.bootstrap,
        )
        forests.append(fit_forest(x, target, feature_counts[target], cfg))
    return ForestBank(tuple(forests))


@dataclass(frozen=True)
class BankScore:
    """Held-out quality of one sensor's forest; r2 is NaN for constant targets."""

    sensor_id: int
    mae: float
    r2: float
    k: int


def evaluate_bank(bank: ForestBank, test) -> list[BankScore]:
    """Per-sensor MAE and R^2 of the bank on held-out normalized data."""
    x = np.atleast_2d(as_matrix(test))
    if x.shape[0] == 0:
        raise EmptyDatasetError("evaluate_bank requires a non-empty dataset")
    scores = []
    for model in bank.forests:
        y = x[:, model.target_sensor]
        y_hat = predict_matrix(model, x)
        try:
            r2 = r_squared(y, y_hat)
        except ConstantTargetError:
            r2 = float("nan")
        scores.append(
            BankScore(
                sensor_id=model.target_sensor,
                mae=mean_absolute_error(y, y_hat),
                r2=r2,
                k=len(model.feature_ids),
            )
        )
    return scores
