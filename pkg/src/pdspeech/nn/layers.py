"""Layers with explicit forward/backward passes.

All layers take batched inputs: [N, C, H, W] for the image-like layers and
[N, F] for Dense. forward() caches what backward() needs; backward()
returns the gradient with respect to the input and accumulates parameter
gradients into each Tensor's .grad. Calling backward before forward is an
error. Convolution is implemented as im2col + matmul so the heavy lifting
runs inside BLAS.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from pdspeech.nn.tensor import Tensor


def kaiming_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int,
                    dtype=np.float32) -> np.ndarray:
    """He-style uniform init: U(-b, b) with b = sqrt(6 / fan_in)."""
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Layer:
    """Base class: parameterless identity-ish interface."""

    def params(self) -> list[Tensor]:
        return []

    def forward(self, x: np.ndarray, train: bool = False,
                rng: np.random.Generator | None = None) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _require_cache(self, cache, name: str):
        if cache is None:
            raise RuntimeError(f"{name}.backward called before forward")
        return cache


class Conv2d(Layer):
    """2-D convolution (cross-correlation), stride 1, `same` zero padding.

    weight: [out_channels, in_channels, k, k], bias: [out_channels].
    Output spatial size equals input size for odd k with pad (k-1)/2.
    """

    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator,
                 kernel_size: int = 3, dtype=np.float32):
        if kernel_size % 2 != 1:
            raise ValueError("kernel_size must be odd for same-padding")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.k = kernel_size
        self.pad = (kernel_size - 1) // 2
        fan_in = in_channels * kernel_size * kernel_size
        self.weight = Tensor(
            kaiming_uniform(rng, (out_channels, in_channels, kernel_size, kernel_size),
                            fan_in, dtype)
        )
        self.bias = Tensor(np.zeros(out_channels, dtype=dtype))
        self._cache = None

    def params(self) -> list[Tensor]:
        return [self.weight, self.bias]

    def forward(self, x, train=False, rng=None):
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise ValueError(
                f"Conv2d expected [N, {self.in_channels}, H, W], got {x.shape}"
            )
        x = x.astype(self.weight.data.dtype, copy=False)
        n, _, h, w = x.shape
        xp = np.pad(x, ((0, 0), (0, 0), (self.pad, self.pad), (self.pad, self.pad)))
        # [N, C, H, W, k, k] windows -> rows of the im2col matrix
        windows = sliding_window_view(xp, (self.k, self.k), axis=(2, 3))
        cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * h * w, -1)
        w_flat = self.weight.data.reshape(self.out_channels, -1)
        out = cols @ w_flat.T + self.bias.data
        out = out.reshape(n, h, w, self.out_channels).transpose(0, 3, 1, 2)
        self._cache = (cols, (n, h, w))
        return np.ascontiguousarray(out)

    def backward(self, dout):
        cols, (n, h, w) = self._require_cache(self._cache, "Conv2d")
        if dout.shape != (n, self.out_channels, h, w):
            raise ValueError(f"Conv2d backward got {dout.shape}, expected "
                             f"{(n, self.out_channels, h, w)}")
        dout = dout.astype(self.weight.data.dtype, copy=False)
        dflat = dout.transpose(0, 2, 3, 1).reshape(n * h * w, self.out_channels)
        self.weight.add_grad((dflat.T @ cols).reshape(self.weight.shape))
        self.bias.add_grad(dout.sum(axis=(0, 2, 3)))

        dcols = dflat @ self.weight.data.reshape(self.out_channels, -1)
        dcols = dcols.reshape(n, h, w, self.in_channels, self.k, self.k)
        dcols = dcols.transpose(0, 3, 4, 5, 1, 2)  # [N, C, k, k, H, W]
        dxp = np.zeros((n, self.in_channels, h + 2 * self.pad, w + 2 * self.pad),
                       dtype=dout.dtype)
        for i in range(self.k):
            for j in range(self.k):
                dxp[:, :, i : i + h, j : j + w] += dcols[:, :, i, j]
        if self.pad:
            return dxp[:, :, self.pad : -self.pad, self.pad : -self.pad]
        return dxp


class MaxPool2d(Layer):
    """2x2 max pooling, stride 2, floor semantics (trailing row/col dropped).

    Gradient routes to exactly one argmax cell per window even under ties
    (the first maximum in block scan order wins).
    """

    def __init__(self, pool: int = 2):
        if pool < 1:
            raise ValueError("pool must be >= 1")
        self.pool = pool
        self._cache = None

    def forward(self, x, train=False, rng=None):
        if x.ndim != 4:
            raise ValueError(f"MaxPool2d expected [N, C, H, W], got {x.shape}")
        p = self.pool
        n, c, h, w = x.shape
        h2, w2 = h // p, w // p
        if h2 == 0 or w2 == 0:
            raise ValueError(f"input {h}x{w} smaller than pool {p}x{p}")
        blocks = (
            x[:, :, : h2 * p, : w2 * p]
            .reshape(n, c, h2, p, w2, p)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, h2, w2, p * p)
        )
        idx = blocks.argmax(axis=-1)
        out = np.take_along_axis(blocks, idx[..., None], axis=-1)[..., 0]
        self._cache = (idx, x.shape, x.dtype)
        return out

    def backward(self, dout):
        idx, x_shape, dtype = self._require_cache(self._cache, "MaxPool2d")
        p = self.pool
        n, c, h, w = x_shape
        h2, w2 = h // p, w // p
        if dout.shape != (n, c, h2, w2):
            raise ValueError(f"MaxPool2d backward got {dout.shape}, expected "
                             f"{(n, c, h2, w2)}")
        dblocks = np.zeros((n, c, h2, w2, p * p), dtype=dtype)
        np.put_along_axis(dblocks, idx[..., None], dout[..., None].astype(dtype), axis=-1)
        dx = np.zeros(x_shape, dtype=dtype)
        dx[:, :, : h2 * p, : w2 * p] = (
            dblocks.reshape(n, c, h2, w2, p, p)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, h2 * p, w2 * p)
        )
        return dx


class Dense(Layer):
    """Affine layer: out = x @ weight.T + bias; weight is [out, in]."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator,
                 dtype=np.float32):
        self.in_features = in_features
        self.out_features = out_features
        self.weight = Tensor(kaiming_uniform(rng, (out_features, in_features),
                                             in_features, dtype))
        self.bias = Tensor(np.zeros(out_features, dtype=dtype))
        self._cache = None

    def params(self) -> list[Tensor]:
        return [self.weight, self.bias]

    def forward(self, x, train=False, rng=None):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ValueError(f"Dense expected [N, {self.in_features}], got {x.shape}")
        x = x.astype(self.weight.data.dtype, copy=False)
        self._cache = x
        return x @ self.weight.data.T + self.bias.data

    def backward(self, dout):
        x = self._require_cache(self._cache, "Dense")
        if dout.shape != (x.shape[0], self.out_features):
            raise ValueError(f"Dense backward got {dout.shape}, expected "
                             f"{(x.shape[0], self.out_features)}")
        dout = dout.astype(self.weight.data.dtype, copy=False)
        self.weight.add_grad(dout.T @ x)
        self.bias.add_grad(dout.sum(axis=0))
        return dout @ self.weight.data


class Relu(Layer):
    def __init__(self):
        self._cache = None

    def forward(self, x, train=False, rng=None):
        self._cache = x > 0
        return np.where(self._cache, x, 0)

    def backward(self, dout):
        mask = self._require_cache(self._cache, "Relu")
        return np.where(mask, dout, 0)


class Dropout(Layer):
    """Inverted dropout: scaling happens at train time.

    Evaluation mode is an exact identity and consumes no randomness; the
    same holds for rate 0, so gradient checks can run the training path
    deterministically.
    """

    _IDENTITY = object()  # marks a pass-through forward (eval or rate 0)

    def __init__(self, rate: float):
        if not (0.0 <= rate < 1.0):
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self._cache = None

    def forward(self, x, train=False, rng=None):
        if not train or self.rate == 0.0:
            self._cache = self._IDENTITY
            return x
        if rng is None:
            raise ValueError("Dropout in train mode needs an rng")
        keep = 1.0 - self.rate
        mask = (rng.random(x.shape) < keep).astype(x.dtype) / keep
        self._cache = mask
        return x * mask

    def backward(self, dout):
        cache = self._require_cache(self._cache, "Dropout")
        if cache is self._IDENTITY:
            return dout
        return dout * cache


class Flatten(Layer):
    def __init__(self):
        self._cache = None

    def forward(self, x, train=False, rng=None):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        shape = self._require_cache(self._cache, "Flatten")
        return dout.reshape(shape)


class Sequential(Layer):
    """A layer stack applied in order; backward runs the exact reverse."""

    def __init__(self, layers: list[Layer]):
        self.layers = list(layers)

    def params(self) -> list[Tensor]:
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def forward(self, x, train=False, rng=None):
        for layer in self.layers:
            x = layer.forward(x, train=train, rng=rng)
        return x

    def backward(self, dout):
        for layer in reversed(self.layers):
            dout = layer.backward(dout)
        return dout

    def zero_grad(self) -> None:
        for p in self.params():
            p.zero_grad()
