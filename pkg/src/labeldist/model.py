"""Small trainable MLP classifier with dropout.

This is the substrate the estimation methods run on: deterministic and
stochastic (dropout-active) forward passes, mini-batch gradient-descent
training with dev-accuracy snapshot selection, analytic backprop gradients,
and a central-finite-difference gradient check.

Dropout is the inverted variant: at stochastic time each hidden unit is
zeroed with probability ``dropout_rate`` and the survivors are scaled by
``1 / (1 - dropout_rate)``, so deterministic inference needs no rescaling.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from labeldist.seeding import derive_rng


class Objective(enum.Enum):
    HARD_CROSS_ENTROPY = "hard_cross_entropy"
    SOFT_KL = "soft_kl"


@dataclass(frozen=True)
class MlpConfig:
    input_dim: int
    hidden_dims: tuple[int, ...] = (32,)
    n_classes: int = 3
    dropout_rate: float = 0.1
    init_seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden_dims", tuple(int(d) for d in self.hidden_dims))
        if self.input_dim < 1 or self.n_classes < 2 or any(d < 1 for d in self.hidden_dims):
            raise ValueError(f"layer dimensions must be positive, got {self}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout rate must lie in [0, 1), got {self.dropout_rate!r}")

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_dims, self.n_classes)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    epochs: int = 30
    batch_size: int = 32
    objective: Objective = Objective.HARD_CROSS_ENTROPY
    shuffle_seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError(f"training hyper-parameters must be positive, got {self}")


@dataclass(frozen=True)
class ModelParams:
    """Per-layer weight matrices (fan_in x fan_out) and bias vectors.

    Arrays are frozen read-only at construction; training returns new
    instances, so params can be shared freely across threads.
    """

    config: MlpConfig
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    trained: bool = False

    def __post_init__(self) -> None:
        dims = self.config.layer_dims
        expected = list(zip(dims[:-1], dims[1:]))
        if len(self.weights) != len(expected) or len(self.biases) != len(expected):
            raise ValueError(f"expected {len(expected)} layers, got {len(self.weights)} weight matrices")
        for w, b, (fan_in, fan_out) in zip(self.weights, self.biases, expected):
            if w.shape != (fan_in, fan_out) or b.shape != (fan_out,):
                raise ValueError(
                    f"layer shape mismatch: weight {w.shape}, bias {b.shape}, expected {(fan_in, fan_out)}"
                )
        for arr in (*self.weights, *self.biases):
            arr.flags.writeable = False

    @property
    def n_layers(self) -> int:
        return len(self.weights)


def init(config: MlpConfig) -> ModelParams:
    """Draw weights from a zero-mean uniform fan-in-scaled distribution."""
    rng = derive_rng(config.init_seed, "mlp-init")
    weights = []
    biases = []
    dims = config.layer_dims
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ModelParams(config=config, weights=tuple(weights), biases=tuple(biases))


def _check_input(config: MlpConfig, x: Sequence[float] | np.ndarray) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != config.input_dim:
        raise ValueError(f"expected input of width {config.input_dim}, got shape {np.asarray(x).shape}")
    return arr, single


def _forward_arrays(
    weights: Sequence[np.ndarray],
    biases: Sequence[np.ndarray],
    x: np.ndarray,
    masks: Sequence[np.ndarray] | None = None,
) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray]]:
    """Returns (logits, per-layer inputs, hidden pre-activations).

    ``masks`` holds one inverted-dropout mask per hidden layer (already
    scaled by 1/(1-rate)); ``None`` selects the deterministic path.
    """
    activations = [x]
    pre_acts = []
    h = x
    for layer in range(len(weights) - 1):
        z = h @ weights[layer] + biases[layer]
        pre_acts.append(z)
        h = np.maximum(z, 0.0)
        if masks is not None:
            h = h * masks[layer]
        activations.append(h)
    logits = h @ weights[-1] + biases[-1]
    return logits, activations, pre_acts


def _dropout_masks(config: MlpConfig, n: int, rng: np.random.Generator) -> list[np.ndarray]:
    rate = config.dropout_rate
    masks = []
    for width in config.hidden_dims:
        if rate == 0.0:
            masks.append(np.ones((n, width)))
        else:
            keep = rng.random((n, width)) >= rate
            masks.append(keep / (1.0 - rate))
    return masks


def forward_deterministic(params: ModelParams, x: Sequence[float] | np.ndarray) -> np.ndarray:
    """Logits with dropout inactive; a pure function of (params, x)."""
    x2d, single = _check_input(params.config, x)
    logits, _, _ = _forward_arrays(params.weights, params.biases, x2d)
    return logits[0] if single else logits


def forward_stochastic(params: ModelParams, x: Sequence[float] | np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Logits with dropout active at the configured rate, deterministic given ``rng``."""
    x2d, single = _check_input(params.config, x)
    masks = _dropout_masks(params.config, x2d.shape[0], rng)
    logits, _, _ = _forward_arrays(params.weights, params.biases, x2d, masks)
    return logits[0] if single else logits


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _cross_entropy(logits: np.ndarray, targets: np.ndarray) -> float:
    """Mean cross-entropy -sum(t * log p) per row. For one-hot targets this is
    the NLL; for soft targets it equals KL(target || p) plus the constant
    target entropy, so both objectives share one loss surface."""
    return float(-np.sum(targets * _log_softmax(logits)) / logits.shape[0])


def _backprop(
    weights: Sequence[np.ndarray],
    biases: Sequence[np.ndarray],
    x: np.ndarray,
    targets: np.ndarray,
    masks: Sequence[np.ndarray] | None,
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    logits, activations, pre_acts = _forward_arrays(weights, biases, x, masks)
    n = x.shape[0]
    loss = _cross_entropy(logits, targets)
    probs = np.exp(_log_softmax(logits))
    # d(-sum t log p)/dz = p * sum(t) - t; sum(t) is 1 for distributions but
    # the general form keeps degenerate targets (e.g. all-zero) well-defined.
    delta = (probs * targets.sum(axis=1, keepdims=True) - targets) / n
    n_layers = len(weights)
    grads_w: list[np.ndarray] = [np.empty(0)] * n_layers
    grads_b: list[np.ndarray] = [np.empty(0)] * n_layers
    for layer in range(n_layers - 1, -1, -1):
        grads_w[layer] = activations[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = delta @ weights[layer].T
            if masks is not None:
                delta = delta * masks[layer - 1]
            delta = delta * (pre_acts[layer - 1] > 0.0)
    return loss, grads_w, grads_b


def _as_target_matrix(targets: np.ndarray, objective: Objective, n_classes: int) -> np.ndarray:
    targets = np.asarray(targets)
    if objective is Objective.HARD_CROSS_ENTROPY:
        if targets.ndim != 1 or not np.issubdtype(targets.dtype, np.integer):
            raise ValueError("hard_cross_entropy expects a 1-d integer label vector")
        if targets.min() < 0 or targets.max() >= n_classes:
            raise ValueError(f"labels must lie in [0, {n_classes}), got range [{targets.min()}, {targets.max()}]")
        onehot = np.zeros((len(targets), n_classes))
        onehot[np.arange(len(targets)), targets] = 1.0
        return onehot
    if targets.ndim != 2 or targets.shape[1] != n_classes:
        raise ValueError(f"soft_kl expects an (n, {n_classes}) target matrix, got shape {targets.shape}")
    return targets.astype(np.float64)


@dataclass(frozen=True)
class TrainResult:
    params: ModelParams
    loss_trace: tuple[float, ...]
    dev_accuracy_trace: tuple[float, ...]
    best_epoch: int


def train(
    params: ModelParams,
    x: np.ndarray,
    targets: np.ndarray,
    cfg: TrainConfig,
    dev_x: np.ndarray,
    dev_labels: np.ndarray,
) -> TrainResult:
    """Mini-batch gradient descent with dropout active.

    Records the mean training loss per epoch and returns the parameter
    snapshot from the epoch with the highest dev accuracy (earliest epoch on
    ties). Fully deterministic given (init_seed, shuffle_seed, data).
    """
    x, _ = _check_input(params.config, x)
    dev_x, _ = _check_input(params.config, dev_x)
    dev_labels = np.asarray(dev_labels)
    if len(dev_labels) != dev_x.shape[0] or len(dev_labels) < 1:
        raise ValueError("dev set must be non-empty with one label per row")
    target_matrix = _as_target_matrix(targets, cfg.objective, params.config.n_classes)
    if target_matrix.shape[0] != x.shape[0]:
        raise ValueError(f"got {x.shape[0]} inputs but {target_matrix.shape[0]} targets")

    weights = [w.copy() for w in params.weights]
    biases = [b.copy() for b in params.biases]
    n = x.shape[0]

    loss_trace = []
    dev_trace = []
    best_epoch = -1
    best_acc = -1.0
    best_snapshot: tuple[list[np.ndarray], list[np.ndarray]] | None = None

    for epoch in range(cfg.epochs):
        perm = derive_rng(cfg.shuffle_seed, "shuffle", epoch).permutation(n)
        dropout_rng = derive_rng(cfg.shuffle_seed, "dropout", epoch)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            batch_idx = perm[start : start + cfg.batch_size]
            masks = _dropout_masks(params.config, len(batch_idx), dropout_rng)
            loss, grads_w, grads_b = _backprop(weights, biases, x[batch_idx], target_matrix[batch_idx], masks)
            epoch_loss += loss * len(batch_idx)
            for layer in range(len(weights)):
                weights[layer] -= cfg.learning_rate * grads_w[layer]
                biases[layer] -= cfg.learning_rate * grads_b[layer]
        loss_trace.append(epoch_loss / n)

        dev_logits, _, _ = _forward_arrays(weights, biases, dev_x)
        acc = float(np.mean(np.argmax(dev_logits, axis=1) == dev_labels))
        dev_trace.append(acc)
        if acc > best_acc:
            best_acc = acc
            best_epoch = epoch
            best_snapshot = ([w.copy() for w in weights], [b.copy() for b in biases])

    assert best_snapshot is not None
    best_params = ModelParams(
        config=params.config,
        weights=tuple(best_snapshot[0]),
        biases=tuple(best_snapshot[1]),
        trained=True,
    )
    return TrainResult(
        params=best_params,
        loss_trace=tuple(loss_trace),
        dev_accuracy_trace=tuple(dev_trace),
        best_epoch=best_epoch,
    )


def grad_check(
    params: ModelParams,
    x: Sequence[float] | np.ndarray,
    target: int | Sequence[float] | np.ndarray,
    objective: Objective = Objective.HARD_CROSS_ENTROPY,
    step: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-finite-difference
    gradients over all parameters (dropout inactive)."""
    x2d, _ = _check_input(params.config, x)
    if objective is Objective.HARD_CROSS_ENTROPY:
        target_matrix = _as_target_matrix(np.asarray([int(target)]), objective, params.config.n_classes)
    else:
        target_matrix = np.asarray(target, dtype=np.float64)[None, :]
        if target_matrix.shape[1] != params.config.n_classes:
            raise ValueError(f"soft target must have {params.config.n_classes} entries")

    weights = [w.copy() for w in params.weights]
    biases = [b.copy() for b in params.biases]
    _, grads_w, grads_b = _backprop(weights, biases, x2d, target_matrix, masks=None)
    analytic = grads_w + grads_b

    def loss_now() -> float:
        logits, _, _ = _forward_arrays(weights, biases, x2d)
        return _cross_entropy(logits, target_matrix)

    max_rel = 0.0
    arrays = weights + biases
    for idx, arr in enumerate(arrays):
        grad_flat = analytic[idx].reshape(-1)
        flat = arr.reshape(-1)
        for j in range(flat.size):
            original = flat[j]
            flat[j] = original + step
            loss_plus = loss_now()
            flat[j] = original - step
            loss_minus = loss_now()
            flat[j] = original
            numeric = (loss_plus - loss_minus) / (2.0 * step)
            denom = max(abs(grad_flat[j]), abs(numeric), 1e-8)
            max_rel = max(max_rel, abs(grad_flat[j] - numeric) / denom)
    return max_rel


def save_params(path: Path | str, params: ModelParams) -> None:
    payload = {
        "config": {
            "input_dim": params.config.input_dim,
            "hidden_dims": list(params.config.hidden_dims),
            "n_classes": params.config.n_classes,
            "dropout_rate": params.config.dropout_rate,
            "init_seed": params.config.init_seed,
        },
        "trained": params.trained,
        "weights": [w.tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
    }
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_params(path: Path | str) -> ModelParams:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    cfg = payload["config"]
    config = MlpConfig(
        input_dim=cfg["input_dim"],
        hidden_dims=tuple(cfg["hidden_dims"]),
        n_classes=cfg["n_classes"],
        dropout_rate=cfg["dropout_rate"],
        init_seed=cfg["init_seed"],
    )
    weights = tuple(np.asarray(w, dtype=np.float64) for w in payload["weights"])
    biases = tuple(np.asarray(b, dtype=np.float64) for b in payload["biases"])
    return ModelParams(config=config, weights=weights, biases=biases, trained=payload["trained"])
