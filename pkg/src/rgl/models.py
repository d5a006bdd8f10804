"""Rectifier networks with analytic gradients, SGD training and gradient checks.

A :class:`Classifier` is a stack of affine layers with ReLU between them;
a single layer is the affine model. With one output the network is a
binary classifier whose signed score ``f`` is read as the logit pair
``(0, f)``: class index 0 is label -1 and index 1 is label +1.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, ParameterError, TrainingError
from .io import atomic_write_bytes, load_tensor, save_tensor
from .rng import RngStream


class Classifier:
    def __init__(self, weights, biases):
        if len(weights) != len(biases) or not weights:
            raise ParameterError("need one bias per weight matrix and at least one layer")
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64).reshape(-1) for b in biases]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or w.shape[0] != b.shape[0]:
                raise ParameterError(f"layer {i}: weight {w.shape} and bias {b.shape} disagree")
            if i and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ParameterError(f"layer {i}: input width {w.shape[1]} != "
                                     f"previous output {self.weights[i - 1].shape[0]}")

    # -- construction --------------------------------------------------------

    @classmethod
    def affine(cls, w, b=0.0):
        w = np.atleast_2d(np.asarray(w, dtype=np.float64))
        return cls([w], [np.atleast_1d(np.asarray(b, dtype=np.float64))])

    @classmethod
    def mlp(cls, input_dim: int, hidden: list[int], outputs: int, rng: RngStream,
            init_scale: float = 1.0):
        """Uniform fan-in initialisation ``U(-s/sqrt(fan_in), s/sqrt(fan_in))``."""
        sizes = [input_dim, *hidden, outputs]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = init_scale / np.sqrt(fan_in)
            weights.append(rng.uniform((fan_out, fan_in), -bound, bound))
            biases.append(rng.uniform(fan_out, -bound, bound))
        return cls(weights, biases)

    def copy(self):
        return Classifier([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    # -- shape ---------------------------------------------------------------

    @property
    def kind(self):
        return "affine" if len(self.weights) == 1 else "mlp"

    @property
    def input_dim(self):
        return self.weights[0].shape[1]

    @property
    def n_outputs(self):
        return self.weights[-1].shape[0]

    @property
    def binary(self):
        return self.n_outputs == 1

    @property
    def n_classes(self):
        return 2 if self.binary else self.n_outputs

    def labels(self):
        return (-1, 1) if self.binary else tuple(range(self.n_outputs))

    # -- forward / backward -----------------------------------------------------

    def _check(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.input_dim:
            raise ParameterError(f"input dimension {x.shape[-1]} != model dimension {self.input_dim}")
        return x

    def forward(self, x):
        """Return the list of layer inputs and the pre-activations (for backprop)."""
        acts, pre = [x], []
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w.T + b
            pre.append(z)
            if i < last:
                h = np.maximum(z, 0.0)
                acts.append(h)
        return acts, pre

    def logits(self, x) -> np.ndarray:
        """Raw network outputs; ``(n_outputs,)`` for one input, ``(N, n_outputs)`` for a batch."""
        x = self._check(x)
        return self.forward(x)[1][-1]

    def scores(self, x) -> np.ndarray:
        """Per-class scores; binary networks expand to ``(0, f)``."""
        out = self.logits(x)
        if self.binary:
            return np.concatenate([np.zeros_like(out), out], axis=-1)
        return out

    def class_index(self, x):
        """Argmax class index, ties to the lowest index."""
        return np.argmax(self.scores(x), axis=-1)

    def decision(self, x):
        idx = self.class_index(x)
        if self.binary:
            return np.where(idx == 1, 1, -1) if np.ndim(idx) else (1 if idx == 1 else -1)
        return idx

    def _input_grad(self, x, upstream):
        acts, pre = self.forward(x)
        g = upstream
        for i in range(len(self.weights) - 1, -1, -1):
            if i < len(self.weights) - 1:
                g = g * (pre[i] > 0)
            g = g @ self.weights[i]
        return g

    def output_gradient(self, x, k: int) -> np.ndarray:
        """Gradient of raw output ``k`` with respect to a single input."""
        x = self._check(x)
        up = np.zeros(self.n_outputs)
        up[k] = 1.0
        return self._input_grad(x, up)

    def class_gradient(self, x, k: int) -> np.ndarray:
        """Gradient of the score of class index ``k``.

        For binary networks index 0 is the constant-zero logit.
        """
        if not 0 <= k < self.n_classes:
            raise ParameterError(f"class index {k} out of range [0, {self.n_classes})")
        if self.binary:
            if k == 0:
                return np.zeros(self.input_dim)
            return self.output_gradient(x, 0)
        return self.output_gradient(x, k)

    def score_jacobian(self, x) -> np.ndarray:
        """``(n_classes, D)`` gradients of every class score."""
        x = self._check(x)
        if self.binary:
            return np.vstack([np.zeros(self.input_dim), self._input_grad(x, np.ones(1))])
        return self._input_grad(x, np.eye(self.n_outputs))

    def param_grads(self, x, upstream):
        """Gradients of ``sum(upstream * logits)`` w.r.t. all weights and biases."""
        acts, pre = self.forward(x)
        gw, gb = [None] * len(self.weights), [None] * len(self.weights)
        g = upstream
        for i in range(len(self.weights) - 1, -1, -1):
            if i < len(self.weights) - 1:
                g = g * (pre[i] > 0)
            gw[i] = g.T @ acts[i]
            gb[i] = g.sum(axis=0)
            if i:
                g = g @ self.weights[i]
        return gw, gb

    def preactivations(self, x):
        """Hidden pre-activations (kink locations) for one input."""
        return self.forward(self._check(x))[1][:-1]


# -- training -------------------------------------------------------------------

def _loss_and_upstream(model, logits, y):
    """Mean loss and d(loss)/d(logits) for a batch."""
    n = logits.shape[0]
    if model.binary:
        margin = y * logits[:, 0]
        loss = np.mean(np.logaddexp(0.0, -margin))
        # d/df log(1 + exp(-y f)) = -y sigmoid(-y f)
        sig = 0.5 * (1.0 + np.tanh(-0.5 * margin))
        return loss, (-y * sig)[:, None] / n
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = -np.mean(logp[np.arange(n), y])
    p = np.exp(logp)
    p[np.arange(n), y] -= 1.0
    return loss, p / n


def accuracy(model, x, y) -> float:
    return float(np.mean(model.decision(x) == y))


@dataclass
class TrainReport:
    model: Classifier
    epoch_losses: list = field(default_factory=list)
    train_accuracy: float = 0.0


def train(model: Classifier, x, y, rng: RngStream, *, epochs: int = 500, lr_max: float = 0.1,
          batch_size: int = 128, standardize: bool = False) -> TrainReport:
    """Plain SGD with shuffled mini-batches and a learning rate decaying linearly to 0.

    Binary networks use the logistic loss on labels in {-1, +1}; multiclass
    networks use softmax cross-entropy on integer labels. The input model
    is not modified.

    ``standardize`` trains on ``(x - mean) / rms`` with a per-coordinate
    mean and one global scale (so rotations of the data commute with it),
    then folds the map into the first layer. The initial weights act on
    standardized inputs; the returned model takes raw inputs either way.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ParameterError(f"data of shape {x.shape} does not match input dimension {model.input_dim}")
    if batch_size < 1:
        raise ParameterError(f"batch size must be >= 1, got {batch_size}")
    if model.binary:
        y = y.astype(np.float64)
    else:
        y = y.astype(np.int64)
    model = model.copy()
    raw = x
    if standardize:
        mu = x.mean(axis=0)
        scale = float(np.sqrt(np.mean((x - mu) ** 2))) or 1.0
        x = (x - mu) / scale
    n = x.shape[0]
    steps_per_epoch = -(-n // batch_size)
    total = epochs * steps_per_epoch
    step = 0
    report = TrainReport(model)
    for epoch in range(epochs):
        order = np.argsort(rng.uniform(n), kind="stable")
        running = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            xb = x[idx]
            acts, pre = model.forward(xb)
            loss, up = _loss_and_upstream(model, pre[-1], y[idx])
            if not np.isfinite(loss):
                raise TrainingError("loss became non-finite", epoch)
            running += loss * len(idx)
            gw, gb = model.param_grads(xb, up)
            lr = lr_max * (1.0 - step / total)
            for i in range(len(model.weights)):
                model.weights[i] -= lr * gw[i]
                model.biases[i] -= lr * gb[i]
            step += 1
        report.epoch_losses.append(running / n)
    if not all(np.all(np.isfinite(w)) for w in model.weights):
        raise TrainingError("weights became non-finite", epochs - 1)
    if standardize:
        model.weights[0] = model.weights[0] / scale
        model.biases[0] = model.biases[0] - model.weights[0] @ mu
    report.train_accuracy = accuracy(model, raw, y if not model.binary else y.astype(int))
    return report


def full_batch_loss(model, x, y) -> float:
    y = np.asarray(y, dtype=np.float64 if model.binary else np.int64)
    return float(_loss_and_upstream(model, model.logits(x), y)[0])


# -- gradient verification ---------------------------------------------------------

@dataclass
class GradCheckReport:
    passed: bool
    max_relative_error: float
    checked: int
    skipped: int


def grad_check(model: Classifier, points: int, tolerance: float, rng: RngStream, *,
               step: float = 1e-4, kink_tol: float = 1e-6, scale: float = 1.0,
               gradient=None) -> GradCheckReport:
    """Compare analytic class-score gradients with central differences.

    ``gradient(model, x, k)`` overrides the analytic path (for mutation
    tests). The error at a point is ``|num - g| / max(|num|, |g|)`` over
    whole gradient vectors, so tiny components do not amplify rounding
    noise. Points with a pre-activation within ``kink_tol`` of zero are
    skipped, as are coordinates whose difference stencil crosses a kink.
    """
    if tolerance <= 0:
        raise ParameterError(f"tolerance must be positive, got {tolerance}")
    gradient = gradient or (lambda m, x, k: m.class_gradient(x, k))
    worst, checked, skipped = 0.0, 0, 0
    while checked < points:
        x = rng.normal(model.input_dim, scale=scale)
        pre = model.preactivations(x)
        if pre and min(np.abs(z).min() for z in pre) < kink_tol:
            skipped += 1
            continue
        pattern = [z > 0 for z in pre]
        e = step * np.eye(model.input_dim)
        plus_pre = model.forward(x + e)[1]
        minus_pre = model.forward(x - e)[1]
        clean = np.ones(model.input_dim, dtype=bool)
        for zp, zm, p in zip(plus_pre[:-1], minus_pre[:-1], pattern):
            clean &= np.all((zp > 0) == p, axis=1) & np.all((zm > 0) == p, axis=1)
        s_plus = model.scores(x + e)
        s_minus = model.scores(x - e)
        for k in range(model.n_classes):
            g = gradient(model, x, k)[clean]
            num = ((s_plus[:, k] - s_minus[:, k]) / (2 * step))[clean]
            denom = max(np.linalg.norm(num), np.linalg.norm(g), 1e-12)
            worst = max(worst, float(np.linalg.norm(num - g)) / denom)
        checked += 1
    return GradCheckReport(worst < tolerance, worst, checked, skipped)


# -- checkpoints ----------------------------------------------------------------------

def save_model(model: Classifier, directory):
    """Write one MRTK tensor per weight/bias plus ``model.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    layers = []
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        wf, bf = f"layer{i}_weight.mrtk", f"layer{i}_bias.mrtk"
        save_tensor(directory / wf, w)
        save_tensor(directory / bf, b)
        layers.append({"weight": wf, "weight_shape": list(w.shape), "bias": bf,
                       "bias_shape": list(b.shape)})
    manifest = {"architecture": model.kind, "activation": "relu", "input_dim": model.input_dim,
                "n_outputs": model.n_outputs, "layers": layers}
    atomic_write_bytes(directory / "model.json", json.dumps(manifest, indent=2).encode())


def load_model(directory) -> Classifier:
    directory = Path(directory)
    try:
        manifest = json.loads((directory / "model.json").read_text())
        weights, biases = [], []
        for layer in manifest["layers"]:
            w = load_tensor(directory / layer["weight"]).astype(np.float64)
            b = load_tensor(directory / layer["bias"]).astype(np.float64)
            if list(w.shape) != layer["weight_shape"] or list(b.shape) != layer["bias_shape"]:
                raise FormatError(f"{directory}: tensor shapes disagree with model.json")
            weights.append(w)
            biases.append(b)
    except (KeyError, json.JSONDecodeError) as exc:
        raise FormatError(f"{directory}: malformed model.json ({exc})") from None
    return Classifier(weights, biases)
