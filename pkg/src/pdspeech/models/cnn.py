"""The Mel-spectrogram CNN classifier: architecture, training, fine-tuning.

The network consumes one 80x41 log-Mel spectrogram of a 160 ms transition
segment and emits two-class logits. Four conv blocks (conv, dropout, relu,
2x2 max pool) widen channels 4 -> 8 -> 16 -> 32 while pooling 80x41 down
to 5x2, then three dense layers (320 -> 128 -> 64 -> 2) classify. With the
defaults that is 55618 learnable parameters.

Training is plain mini-batch Adam on softmax cross-entropy. Fine-tuning
re-trains all layers from a donor model's weights at a reduced learning
rate, with input normalization recomputed on the new data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pdspeech.nn.layers import Conv2d, Dense, Dropout, Flatten, MaxPool2d, Relu, Sequential
from pdspeech.nn.loss import softmax, softmax_xent, softmax_xent_grad
from pdspeech.nn.optim import adam_step, init_adam
from pdspeech.nn.tensor import Tensor


@dataclass(frozen=True)
class CnnArchitecture:
    """Structural hyperparameters of the spectrogram classifier."""

    input_shape: tuple[int, int, int] = (1, 80, 41)
    conv_channels: tuple[int, ...] = (4, 8, 16, 32)
    dense_sizes: tuple[int, ...] = (128, 64)
    n_classes: int = 2
    kernel_size: int = 3
    conv_dropout: float = 0.25
    dense_dropout: float = 0.5

    def __post_init__(self):
        if len(self.input_shape) != 3 or any(d < 1 for d in self.input_shape):
            raise ValueError(f"bad input_shape {self.input_shape}")
        if not self.conv_channels or any(c < 1 for c in self.conv_channels):
            raise ValueError(f"bad conv_channels {self.conv_channels}")
        if not self.dense_sizes or any(d < 1 for d in self.dense_sizes):
            raise ValueError(f"bad dense_sizes {self.dense_sizes}")
        if self.n_classes < 2:
            raise ValueError("n_classes must be >= 2")
        h, w = self.spatial_chain()[-1]
        if h < 1 or w < 1:
            raise ValueError(
                f"input {self.input_shape[1]}x{self.input_shape[2]} pools away to "
                f"nothing after {len(self.conv_channels)} blocks"
            )

    def spatial_chain(self) -> list[tuple[int, int]]:
        """Spatial size after each conv block (pooling floors odd sizes)."""
        h, w = self.input_shape[1], self.input_shape[2]
        chain = []
        for _ in self.conv_channels:
            h, w = h // 2, w // 2
            chain.append((h, w))
        return chain

    @property
    def flat_size(self) -> int:
        h, w = self.spatial_chain()[-1]
        return self.conv_channels[-1] * h * w

    def to_dict(self) -> dict:
        return {
            "input_shape": list(self.input_shape),
            "conv_channels": list(self.conv_channels),
            "dense_sizes": list(self.dense_sizes),
            "n_classes": self.n_classes,
            "kernel_size": self.kernel_size,
            "conv_dropout": self.conv_dropout,
            "dense_dropout": self.dense_dropout,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CnnArchitecture":
        return cls(
            input_shape=tuple(d["input_shape"]),
            conv_channels=tuple(d["conv_channels"]),
            dense_sizes=tuple(d["dense_sizes"]),
            n_classes=int(d["n_classes"]),
            kernel_size=int(d["kernel_size"]),
            conv_dropout=float(d["conv_dropout"]),
            dense_dropout=float(d["dense_dropout"]),
        )


@dataclass(frozen=True)
class TrainConfig:
    """Optimization hyperparameters for training and fine-tuning."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 64
    epochs: int = 30
    finetune_epochs: int = 10
    finetune_lr_scale: float = 0.1

    def __post_init__(self):
        if self.lr <= 0 or self.epsilon <= 0:
            raise ValueError("lr and epsilon must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0 or self.finetune_epochs < 0:
            raise ValueError("epoch counts must be >= 0")
        if self.finetune_lr_scale <= 0:
            raise ValueError("finetune_lr_scale must be positive")


class PdCnn:
    """The spectrogram classifier: a layer stack plus input normalization."""

    def __init__(self, arch: CnnArchitecture = CnnArchitecture(), seed: int = 0,
                 dtype=np.float32):
        self.arch = arch
        self.dtype = dtype
        self.norm_stats: tuple[float, float] = (0.0, 1.0)
        rng = np.random.default_rng(seed)
        layers: list = []
        in_ch = arch.input_shape[0]
        for out_ch in arch.conv_channels:
            layers += [
                Conv2d(in_ch, out_ch, rng, kernel_size=arch.kernel_size, dtype=dtype),
                Dropout(arch.conv_dropout),
                Relu(),
                MaxPool2d(2),
            ]
            in_ch = out_ch
        layers.append(Flatten())
        width = arch.flat_size
        for dense_width in arch.dense_sizes:
            layers += [
                Dense(width, dense_width, rng, dtype=dtype),
                Dropout(arch.dense_dropout),
                Relu(),
            ]
            width = dense_width
        layers.append(Dense(width, arch.n_classes, rng, dtype=dtype))
        self.net = Sequential(layers)

    def parameters(self) -> list[Tensor]:
        return self.net.params()

    def param_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def load_parameters(self, arrays: list[np.ndarray]) -> None:
        """Overwrite all parameters in order, validating shapes."""
        params = self.parameters()
        if len(arrays) != len(params):
            raise ValueError(f"expected {len(params)} parameter arrays, got {len(arrays)}")
        for p, a in zip(params, arrays):
            a = np.asarray(a)
            if a.shape != p.data.shape:
                raise ValueError(f"parameter shape {a.shape} != expected {p.data.shape}")
            p.data = a.astype(self.dtype, copy=True)

    def _normalize(self, spectrograms: np.ndarray) -> np.ndarray:
        mean, std = self.norm_stats
        x = (np.asarray(spectrograms, dtype=self.dtype) - mean) / std
        return x[:, None, :, :]

    def forward_logits(self, x: np.ndarray, train: bool = False,
                       rng: np.random.Generator | None = None) -> np.ndarray:
        return self.net.forward(x, train=train, rng=rng)

    def predict_proba(self, spectrograms: np.ndarray, batch_size: int = 256) -> np.ndarray:
        """Class posteriors for raw (unnormalized) spectrograms, [N, n_classes]."""
        spectrograms = np.asarray(spectrograms)
        if spectrograms.ndim != 3 or spectrograms.shape[1:] != self.arch.input_shape[1:]:
            raise ValueError(
                f"expected [N, {self.arch.input_shape[1]}, {self.arch.input_shape[2]}] "
                f"spectrograms, got {spectrograms.shape}"
            )
        chunks = []
        for lo in range(0, spectrograms.shape[0], batch_size):
            x = self._normalize(spectrograms[lo : lo + batch_size])
            chunks.append(softmax(self.forward_logits(x, train=False)))
        return np.concatenate(chunks, axis=0)

    def clone(self) -> "PdCnn":
        """Deep copy: same architecture, independent parameter arrays."""
        twin = PdCnn(self.arch, seed=0, dtype=self.dtype)
        twin.load_parameters([p.data for p in self.parameters()])
        twin.norm_stats = self.norm_stats
        return twin


def _validate_training_data(data: np.ndarray, labels: np.ndarray,
                            arch: CnnArchitecture) -> tuple[np.ndarray, np.ndarray]:
    data = np.asarray(data)
    labels = np.asarray(labels)
    if data.ndim != 3 or data.shape[1:] != arch.input_shape[1:]:
        raise ValueError(
            f"expected [N, {arch.input_shape[1]}, {arch.input_shape[2]}] inputs, "
            f"got {data.shape}"
        )
    if labels.shape != (data.shape[0],):
        raise ValueError(f"labels shape {labels.shape} does not match {data.shape[0]} inputs")
    labels = labels.astype(np.int64)
    present = np.unique(labels)
    if present.min() < 0 or present.max() >= arch.n_classes:
        raise ValueError(f"labels must be in 0..{arch.n_classes - 1}, got {present}")
    if present.size < 2:
        raise ValueError("training data must contain at least two classes")
    if not np.all(np.isfinite(data)):
        raise ValueError("training data contains non-finite values")
    return data, labels


def _run_epochs(model: PdCnn, data: np.ndarray, labels: np.ndarray,
                config: TrainConfig, rng: np.random.Generator, lr: float,
                epochs: int) -> list[dict]:
    params = model.parameters()
    state = init_adam(params, lr=lr, beta1=config.beta1, beta2=config.beta2,
                      epsilon=config.epsilon)
    n = data.shape[0]
    log: list[dict] = []
    for epoch in range(epochs):
        perm = rng.permutation(n)
        loss_sum = 0.0
        correct = 0
        for lo in range(0, n, config.batch_size):
            idx = perm[lo : lo + config.batch_size]
            x = model._normalize(data[idx])
            y = labels[idx]
            logits = model.forward_logits(x, train=True, rng=rng)
            loss, probs = softmax_xent(logits, y)
            if not np.isfinite(loss):
                raise RuntimeError(f"training diverged: non-finite loss at epoch {epoch}")
            model.net.zero_grad()
            model.net.backward(softmax_xent_grad(probs, y).astype(model.dtype))
            adam_step(params, [p.grad for p in params], state)
            loss_sum += loss * idx.size
            correct += int((probs.argmax(axis=1) == y).sum())
        log.append(
            {
                "epoch": epoch,
                "mean_loss": loss_sum / n,
                "train_acc": correct / n,
            }
        )
    return log


def train_cnn(data: np.ndarray, labels: np.ndarray,
              config: TrainConfig = TrainConfig(), seed: int = 0,
              arch: CnnArchitecture = CnnArchitecture()) -> tuple[PdCnn, list[dict]]:
    """Train a classifier from scratch on [N, 80, 41] spectrograms.

    Inputs are standardized by the training set's global mean and standard
    deviation (stored on the model for inference). One seeded generator
    drives init, shuffling, and dropout, so a given (data, config, seed)
    always produces the same model. Returns the model and a per-epoch log
    of mean loss and training accuracy.
    """
    data, labels = _validate_training_data(data, labels, arch)
    rng = np.random.default_rng(seed)
    model = PdCnn(arch, seed=seed)
    mean = float(data.mean())
    std = float(data.std())
    model.norm_stats = (mean, std if std > 1e-8 else 1.0)
    log = _run_epochs(model, data, labels, config, rng, config.lr, config.epochs)
    return model, log


def finetune_cnn(base: PdCnn, data: np.ndarray, labels: np.ndarray,
                 config: TrainConfig = TrainConfig(), seed: int = 0,
                 epochs: int | None = None) -> tuple[PdCnn, list[dict]]:
    """Adapt a trained model to new data.

    All layers stay trainable; the learning rate is config.lr scaled down
    by config.finetune_lr_scale. Input normalization is recomputed on the
    new data. With epochs=0 the returned model's parameters are exactly the
    donor's (only the normalization changes). The donor model is never
    mutated.
    """
    data, labels = _validate_training_data(data, labels, base.arch)
    if epochs is None:
        epochs = config.finetune_epochs
    rng = np.random.default_rng(seed)
    model = base.clone()
    mean = float(data.mean())
    std = float(data.std())
    model.norm_stats = (mean, std if std > 1e-8 else 1.0)
    log = _run_epochs(model, data, labels, config, rng,
                      config.lr * config.finetune_lr_scale, epochs)
    return model, log
