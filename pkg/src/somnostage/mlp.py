"""From-scratch multilayer perceptron for sleep stage classification.

Every non-input layer applies a logistic sigmoid. Training is classical
backpropagation with online (per-example) gradient descent on the squared
error E = 1/2 * sum((output - target)^2), one-hot targets, and early
stopping at the minimum of a validation error curve. Cross-validation is
realized as independent stratified resamples, not disjoint folds.

No learning framework is used anywhere in this module; the arithmetic is
the point.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .dataset import CLASSIFIER_STAGES, stage_from_name, stratified_split_indices
from .metrics import ConfusionMatrix

MODEL_FORMAT_NAME = "SOMNO-MLP"
MODEL_FORMAT_VERSION = 1


def sigmoid(x) -> np.ndarray:
    """Logistic function 1 / (1 + exp(-x)), saturating gracefully at the
    float64 limits for very large |x|."""
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


@dataclass
class Mlp:
    """Network parameters: one weight matrix and bias vector per non-input
    layer. weights[l] has shape (layer_sizes[l+1], layer_sizes[l])."""

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ValueError(f"need >= 2 layers of size >= 1, got {sizes}")
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ValueError("one weight matrix and bias vector per non-input layer")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (sizes[l + 1], sizes[l]) or b.shape != (sizes[l + 1],):
                raise ValueError(
                    f"layer {l}: weight shape {w.shape} / bias shape {b.shape} "
                    f"inconsistent with sizes {sizes}"
                )
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {l}: non-finite parameters")
        self.layer_sizes = sizes

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]

    def copy(self) -> "Mlp":
        return Mlp(
            self.layer_sizes,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )


def _init_arrays(layer_sizes, rng):
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes, layer_sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def init_mlp(layer_sizes, seed: int) -> Mlp:
    """Fresh network: weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]
    from a seeded generator, biases zero. Deterministic given seed."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise ValueError(f"need >= 2 layers of size >= 1, got {sizes}")
    weights, biases = _init_arrays(sizes, np.random.default_rng(seed))
    return Mlp(sizes, weights, biases)


def _forward_layers(weights, biases, x):
    activations = [x]
    for w, b in zip(weights, biases):
        x = sigmoid(w @ x + b)
        activations.append(x)
    return activations


def forward(mlp: Mlp, x) -> list[np.ndarray]:
    """All layer activations for one input, input first, output last.

    Intermediate activations are what backpropagation consumes. Outputs lie
    strictly in (0, 1).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (mlp.input_size,):
        raise ValueError(f"input shape {x.shape} != ({mlp.input_size},)")
    if not np.isfinite(x).all():
        raise ValueError("input contains non-finite values")
    return _forward_layers(mlp.weights, mlp.biases, x)


def _step(mlp: Mlp, x, target, learning_rate: float) -> float:
    """One backpropagation update in place; returns the pre-update loss.

    Deltas for layer l-1 are computed from the pre-update weights of layer
    l, as the exact gradient requires. This is the training hot path (one
    call per example per epoch), hence the in-place ufunc style; the
    arithmetic matches ``sigmoid``/``forward`` operation for operation.
    """
    weights, biases = mlp.weights, mlp.biases
    activations = [np.asarray(x, dtype=np.float64)]
    a = activations[0]
    for w, b in zip(weights, biases):
        z = w @ a
        z += b
        np.negative(z, out=z)
        np.exp(z, out=z)
        z += 1.0
        np.reciprocal(z, out=z)  # a = 1 / (1 + exp(-(w @ a + b)))
        a = z
        activations.append(a)
    err = a - target
    loss = 0.5 * float(err @ err)
    delta = err * a
    delta *= 1.0 - a
    for l in range(len(weights) - 1, -1, -1):
        prev = activations[l]
        w = weights[l]
        if l > 0:
            next_delta = delta @ w  # == w.T @ delta, pre-update weights
            next_delta *= prev
            next_delta *= 1.0 - prev
        w -= learning_rate * np.outer(delta, prev)
        biases[l] -= learning_rate * delta
        if l > 0:
            delta = next_delta
    return loss


def train_step(mlp: Mlp, x, target, learning_rate: float) -> float:
    """Single online gradient-descent update on one example.

    ``target`` must be one-hot over the output layer. Updates every weight
    and bias by the exact gradient of E = 1/2 * sum((output - target)^2)
    and returns the loss before the update.
    """
    x = np.asarray(x, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if x.shape != (mlp.input_size,):
        raise ValueError(f"input shape {x.shape} != ({mlp.input_size},)")
    if target.shape != (mlp.output_size,):
        raise ValueError(f"target shape {target.shape} != ({mlp.output_size},)")
    if not np.isfinite(x).all():
        raise ValueError("input contains non-finite values")
    if not (np.isin(target, (0.0, 1.0)).all() and target.sum() == 1.0):
        raise ValueError("target must be one-hot (entries in {0, 1}, exactly one 1)")
    return _step(mlp, x, target, learning_rate)


def _batch_outputs(mlp: Mlp, X) -> np.ndarray:
    out = X
    for w, b in zip(mlp.weights, mlp.biases):
        out = sigmoid(out @ w.T + b)
    return out


def _mean_loss(mlp: Mlp, X, targets) -> float:
    """Mean over examples of 1/2 * sum((output - target)^2)."""
    err = _batch_outputs(mlp, X) - targets
    return 0.5 * float(np.mean(np.sum(err * err, axis=1)))


def _one_hot(labels, n_outputs: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= n_outputs):
        raise ValueError(
            f"labels must lie in [0, {n_outputs}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    targets = np.zeros((labels.size, n_outputs))
    targets[np.arange(labels.size), labels] = 1.0
    return targets


def _as_xy(data):
    """Accept a LabeledDataset or an (features, labels) pair."""
    if hasattr(data, "features") and hasattr(data, "stages"):
        return np.asarray(data.features, dtype=np.float64), np.asarray(data.stages)
    features, labels = data
    return np.asarray(features, dtype=np.float64), np.asarray(labels, dtype=np.int64)


@dataclass(frozen=True)
class TrainConfig:
    """Knobs for one training run.

    ``patience`` counts validation checks without a new minimum before
    stopping. Defaults are tuned only to make the synthetic-data
    demonstrations work out of the box; every value is overridable.
    """

    learning_rate: float = 0.2
    max_epochs: int = 300
    patience: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass(frozen=True)
class TrainReport:
    """Error curves from one training run.

    ``best_epoch`` is the 0-based index into the curves where the recorded
    validation error is minimal; the returned model snapshot is from that
    epoch even when training continued past it.
    """

    train_errors: tuple[float, ...]
    validation_errors: tuple[float, ...]
    best_epoch: int

    def __post_init__(self):
        if len(self.train_errors) != len(self.validation_errors) or not self.train_errors:
            raise ValueError("need matching non-empty error curves")
        if not 0 <= self.best_epoch < len(self.validation_errors):
            raise ValueError(f"best_epoch {self.best_epoch} out of range")
        if self.validation_errors[self.best_epoch] != min(self.validation_errors):
            raise ValueError("best_epoch must attain the minimum validation error")

    @property
    def epochs_run(self) -> int:
        return len(self.train_errors)

    @property
    def best_validation_error(self) -> float:
        return self.validation_errors[self.best_epoch]


def fit(train, validation, layer_sizes, config: TrainConfig = TrainConfig()):
    """Train a fresh network with early stopping; returns (Mlp, TrainReport).

    Per training epoch: shuffle the training rows with the seeded generator,
    apply one online update per row, then record the mean train and
    validation loss. Stops after ``patience`` epochs without a new validation
    minimum, or at ``max_epochs``. The returned model is the snapshot from
    the best epoch. Initialization matches ``init_mlp(layer_sizes,
    config.seed)`` exactly.
    """
    X_train, y_train = _as_xy(train)
    X_val, y_val = _as_xy(validation)
    sizes = tuple(int(s) for s in layer_sizes)
    if X_train.shape[0] == 0 or X_val.shape[0] == 0:
        raise ValueError("train and validation sets must be non-empty")
    for name, X in (("train", X_train), ("validation", X_val)):
        if X.ndim != 2 or X.shape[1] != sizes[0]:
            raise ValueError(f"{name} feature width != input layer size {sizes[0]}")
    targets_train = _one_hot(y_train, sizes[-1])
    targets_val = _one_hot(y_val, sizes[-1])

    rng = np.random.default_rng(config.seed)
    weights, biases = _init_arrays(sizes, rng)
    mlp = Mlp(sizes, weights, biases)

    train_errors, val_errors = [], []
    best = mlp.copy()
    best_epoch = 0
    best_val = np.inf
    n = X_train.shape[0]
    for epoch in range(config.max_epochs):
        for i in rng.permutation(n):
            _step(mlp, X_train[i], targets_train[i], config.learning_rate)
        train_errors.append(_mean_loss(mlp, X_train, targets_train))
        val = _mean_loss(mlp, X_val, targets_val)
        val_errors.append(val)
        if val < best_val:
            best_val = val
            best_epoch = epoch
            best = mlp.copy()
        if epoch - best_epoch >= config.patience:
            break
    report = TrainReport(tuple(train_errors), tuple(val_errors), best_epoch)
    return best, report


def predict(mlp: Mlp, features) -> np.ndarray | int:
    """Index of the most active output neuron; exact ties resolve to the
    lowest index.

    For stage networks the six outputs follow the fixed order (Awake, S1,
    S2, S3, S4, REM), so the index is the SleepStage value. A single feature
    vector yields an int, a matrix yields an int array.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        if features.shape != (mlp.input_size,):
            raise ValueError(f"feature width {features.shape} != ({mlp.input_size},)")
        return int(np.argmax(_batch_outputs(mlp, features[None, :])[0]))
    if features.ndim != 2 or features.shape[1] != mlp.input_size:
        raise ValueError(f"feature width != input layer size {mlp.input_size}")
    return np.argmax(_batch_outputs(mlp, features), axis=1)


@dataclass(frozen=True)
class CvReport:
    """Repetition accuracies plus a confusion matrix pooled over every
    validation prediction of every repetition."""

    accuracies: tuple[float, ...]
    confusion: ConfusionMatrix

    def __post_init__(self):
        if not self.accuracies:
            raise ValueError("need at least one repetition")

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))


def cross_validate(
    dataset,
    layer_sizes,
    config: TrainConfig = TrainConfig(),
    repetitions: int = 10,
    train_fraction: float = 0.8,
) -> CvReport:
    """Repeated stratified-resample validation.

    Repetition r (1-based) splits and trains with seed ``config.seed + r``,
    fits on the train side, and scores the held-out side. Resamples are
    independent draws, not disjoint folds.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    X, y = _as_xy(dataset)
    accuracies = []
    actual_all, predicted_all = [], []
    for r in range(1, repetitions + 1):
        seed = config.seed + r
        train_rows, val_rows = stratified_split_indices(y, train_fraction, seed)
        model, _ = fit(
            (X[train_rows], y[train_rows]),
            (X[val_rows], y[val_rows]),
            layer_sizes,
            dataclasses.replace(config, seed=seed),
        )
        predicted = predict(model, X[val_rows])
        accuracies.append(float(np.mean(predicted == y[val_rows])))
        actual_all.append(y[val_rows])
        predicted_all.append(predicted)
    confusion = ConfusionMatrix.from_labels(
        np.concatenate(actual_all), np.concatenate(predicted_all)
    )
    return CvReport(tuple(accuracies), confusion)


def format_model(mlp: Mlp) -> str:
    """Render a stage classifier as line-oriented text.

    Line 1 names the format and version, line 2 the layer sizes, line 3 the
    six stage names in output order; then one line per output neuron of each
    layer transition: bias first, then its weight row, at 17 significant
    digits so parameters round-trip exactly.
    """
    if mlp.output_size != len(CLASSIFIER_STAGES):
        raise ValueError(
            f"model files hold stage classifiers with {len(CLASSIFIER_STAGES)} outputs, "
            f"got {mlp.output_size}"
        )
    lines = [
        f"{MODEL_FORMAT_NAME} {MODEL_FORMAT_VERSION}",
        " ".join(str(s) for s in mlp.layer_sizes),
        " ".join(stage.display for stage in CLASSIFIER_STAGES),
    ]
    for w, b in zip(mlp.weights, mlp.biases):
        for neuron in range(w.shape[0]):
            row = [b[neuron], *w[neuron]]
            lines.append(" ".join(format(v, ".17g") for v in row))
    return "\n".join(lines) + "\n"


def parse_model(text: str) -> Mlp:
    """Inverse of ``format_model``; rejects unknown format versions."""
    lines = text.splitlines()
    if len(lines) < 4:
        raise ValueError("model file too short")
    head = lines[0].split()
    if len(head) != 2 or head[0] != MODEL_FORMAT_NAME:
        raise ValueError(f"line 1: not a {MODEL_FORMAT_NAME} model file")
    if head[1] != str(MODEL_FORMAT_VERSION):
        raise ValueError(f"line 1: unsupported model format version {head[1]!r}")
    try:
        sizes = tuple(int(s) for s in lines[1].split())
    except ValueError:
        raise ValueError("line 2: layer sizes must be integers") from None
    names = lines[2].split()
    expected_names = [stage.display for stage in CLASSIFIER_STAGES]
    if names != expected_names:
        raise ValueError(f"line 3: expected stage names {' '.join(expected_names)!r}")
    if len(sizes) < 2 or sizes[-1] != len(CLASSIFIER_STAGES):
        raise ValueError(f"line 2: bad layer sizes {sizes}")

    weights, biases = [], []
    lineno = 3
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        w = np.zeros((fan_out, fan_in))
        b = np.zeros(fan_out)
        for neuron in range(fan_out):
            if lineno >= len(lines):
                raise ValueError(f"line {lineno + 1}: model file truncated")
            parts = lines[lineno].split()
            if len(parts) != fan_in + 1:
                raise ValueError(
                    f"line {lineno + 1}: expected {fan_in + 1} values, got {len(parts)}"
                )
            try:
                values = [float(p) for p in parts]
            except ValueError:
                raise ValueError(f"line {lineno + 1}: non-numeric parameter") from None
            b[neuron] = values[0]
            w[neuron] = values[1:]
            lineno += 1
        weights.append(w)
        biases.append(b)
    if any(line.strip() for line in lines[lineno:]):
        raise ValueError(f"line {lineno + 1}: trailing content after parameters")
    return Mlp(sizes, weights, biases)


def write_model(path, mlp: Mlp) -> None:
    Path(path).write_text(format_model(mlp))


def read_model(path) -> Mlp:
    return parse_model(Path(path).read_text())


class MlpClassifier(ClassifierMixin, BaseEstimator):
    """Estimator-style wrapper around the functional training core.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int
        Sizes of the hidden layers; the input width comes from X and the
        output width from ``n_outputs``.
    learning_rate, max_epochs, patience, seed
        See ``TrainConfig``.
    validation_fraction : float
        Share of the training rows held out (stratified) for early stopping
        when ``fit`` is not given an explicit validation set.
    n_outputs : int or None
        Output layer width; None infers max(y) + 1.
    """

    def __init__(
        self,
        hidden_layer_sizes=(6,),
        learning_rate=0.2,
        max_epochs=300,
        patience=50,
        validation_fraction=0.2,
        n_outputs=None,
        seed=0,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.learning_rate = learning_rate
        self.max_epochs = max_epochs
        self.patience = patience
        self.validation_fraction = validation_fraction
        self.n_outputs = n_outputs
        self.seed = seed

    def _config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            max_epochs=self.max_epochs,
            patience=self.patience,
            seed=self.seed,
        )

    def fit(self, X, y, validation=None):
        """Train on (X, y); carves a stratified validation split from the
        rows unless one is passed explicitly as an (X, y) pair."""
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError("X must be (n_rows, n_features) with one label per row")
        n_outputs = self.n_outputs if self.n_outputs is not None else int(y.max()) + 1
        if validation is None:
            if not 0.0 < self.validation_fraction < 1.0:
                raise ValueError("validation_fraction must lie strictly in (0, 1)")
            train_rows, val_rows = stratified_split_indices(
                y, 1.0 - self.validation_fraction, self.seed
            )
            train, validation = (X[train_rows], y[train_rows]), (X[val_rows], y[val_rows])
        else:
            train = (X, y)
        sizes = (X.shape[1], *self.hidden_layer_sizes, n_outputs)
        self.model_, self.report_ = fit(train, validation, sizes, self._config())
        self.classes_ = np.arange(n_outputs)
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("X must be 2-D")
        return predict(self.model_, X)
