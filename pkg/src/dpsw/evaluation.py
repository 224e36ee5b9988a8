"""Linear discriminant classification and stratified k-fold cross-validation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

DEFAULT_RIDGE = 1e-6


class ModelFitError(ValueError):
    pass


class StratificationError(ValueError):
    pass


@dataclass
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    class_names: Optional[list] = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim == 1:
            self.features = self.features[:, None]
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError(
                f"{self.features.shape[0]} feature rows but {self.labels.shape[0]} labels"
            )
        bad = ~np.isfinite(self.features).all(axis=1)
        if bad.any():
            raise ValueError(f"non-finite feature values in row {int(np.flatnonzero(bad)[0])}")

    @classmethod
    def from_labels(cls, features, labels: Sequence) -> "LabeledDataset":
        """Map arbitrary labels to class ids in sorted label order."""
        names = sorted(set(labels))
        ids = {name: i for i, name in enumerate(names)}
        return cls(features, np.array([ids[l] for l in labels]), names)

    @property
    def class_count(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0


@dataclass
class LDAModel:
    classes: np.ndarray
    means: np.ndarray     # (C, D)
    coef: np.ndarray      # (C, D), covariance^-1 @ mean_c
    intercept: np.ndarray  # (C,)

    def scores(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.coef.shape[1]:
            raise ValueError(f"expected {self.coef.shape[1]} features, got {x.shape[1]}")
        s = x @ self.coef.T + self.intercept
        return s[0] if single else s

    def predict(self, x: np.ndarray):
        s = np.atleast_2d(self.scores(x))
        # argmax returns the first maximum, i.e. the lowest class id on ties
        out = self.classes[np.argmax(s, axis=1)]
        return int(out[0]) if np.asarray(x).ndim == 1 else out


def fit_lda(features: np.ndarray, labels: np.ndarray, ridge: float = DEFAULT_RIDGE) -> LDAModel:
    """Shared-covariance Gaussian classifier with equal priors.

    ``ridge`` is relative: ``ridge * mean(diag(cov))`` is added to every
    diagonal entry of the pooled within-class covariance (``ridge`` itself
    when that mean is zero).
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(labels)
    classes = np.unique(y)
    if classes.size < 2:
        raise ModelFitError("LDA needs at least two classes")
    n, d = X.shape
    means = np.empty((classes.size, d))
    scatter = np.zeros((d, d))
    for i, c in enumerate(classes):
        Xc = X[y == c]
        if Xc.shape[0] < 2:
            raise ModelFitError(f"class {c.item()!r} has fewer than two training samples")
        means[i] = Xc.mean(axis=0)
        centered = Xc - means[i]
        scatter += centered.T @ centered
    cov = scatter / (n - classes.size)
    if ridge < 0:
        raise ModelFitError("ridge must be >= 0")
    if ridge > 0:
        scale = float(np.mean(np.diag(cov)))
        cov[np.diag_indices_from(cov)] += ridge * (scale if scale > 0 else 1.0)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ModelFitError("within-class covariance is singular; use a positive ridge") from None
    # cov^-1 @ means.T via two triangular solves
    z = np.linalg.solve(chol, means.T)
    coef = np.linalg.solve(chol.T, z).T
    intercept = -0.5 * np.einsum("cd,cd->c", coef, means)
    return LDAModel(classes, means, coef, intercept)


def stratified_folds(labels: np.ndarray, folds: int, seed: int) -> np.ndarray:
    """Fold id per sample. Each class is shuffled and dealt round-robin,
    continuing from the fold where the previous class stopped."""
    labels = np.asarray(labels)
    if folds < 2:
        raise StratificationError(f"need at least 2 folds, got {folds}")
    rng = np.random.default_rng(seed)
    assign = np.empty(labels.size, dtype=np.int64)
    offset = 0
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if idx.size < folds:
            raise StratificationError(
                f"class {c.item()!r} has {idx.size} samples, fewer than {folds} folds"
            )
        idx = rng.permutation(idx)
        assign[idx] = (offset + np.arange(idx.size)) % folds
        offset = (offset + idx.size) % folds
    return assign


@dataclass
class CvReport:
    ccr_mean: float
    ccr_std: float
    per_fold: list
    confusion: list
    config: dict = field(default_factory=dict)
    classes: Optional[list] = None

    @property
    def total_ccr(self) -> float:
        conf = np.asarray(self.confusion)
        return 100.0 * np.trace(conf) / conf.sum()

    def summary(self) -> str:
        return f"CCR: {self.ccr_mean:.2f} (± {self.ccr_std:.2f})"

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def cross_validate(data: LabeledDataset, folds: int = 10, seed: int = 0, ridge: float = DEFAULT_RIDGE,
                   config: Optional[dict] = None) -> CvReport:
    """CCR mean and sample standard deviation over stratified folds, in percent."""
    n_cls = data.class_count
    sizes = np.bincount(data.labels, minlength=n_cls)
    if data.class_names is not None and folds >= 2 and sizes.min() < folds:
        c = int(np.argmin(sizes))
        raise StratificationError(
            f"class {data.class_names[c]!r} has {sizes[c]} samples, fewer than {folds} folds"
        )
    assign = stratified_folds(data.labels, folds, seed)
    confusion = np.zeros((n_cls, n_cls), dtype=np.int64)
    per_fold = []
    for f in range(folds):
        test = assign == f
        model = fit_lda(data.features[~test], data.labels[~test], ridge)
        pred = model.predict(data.features[test])
        truth = data.labels[test]
        np.add.at(confusion, (truth, pred), 1)
        per_fold.append(100.0 * float(np.mean(pred == truth)))
    acc = np.array(per_fold)
    return CvReport(
        ccr_mean=float(acc.mean()),
        ccr_std=float(acc.std(ddof=1)),
        per_fold=per_fold,
        confusion=confusion.tolist(),
        config=dict(config or {}, folds=folds, seed=seed, ridge=ridge),
        classes=list(data.class_names) if data.class_names is not None else None,
    )
