"""Dense 1D layer library with hand-derived backward passes.

All tensors are numpy float64 arrays shaped (batch, channels, time) unless
noted otherwise. Each layer caches whatever its backward pass needs during
forward; calling backward without a prior forward raises ``RuntimeError``.
Parameter values are only ever mutated by an optimizer — forward/backward
touch gradients exclusively.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class Param:
    """A trainable tensor slot with a same-shaped gradient slot."""

    __slots__ = ("value", "grad", "trainable")

    def __init__(self, value: np.ndarray, trainable: bool = True):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.trainable = trainable

    def zero_grad(self):
        self.grad.fill(0.0)


class Layer:
    """Base class: forward/backward pair plus named parameter slots."""

    def params(self) -> dict:
        return {}

    def zero_grad(self):
        for p in self.params().values():
            p.zero_grad()

    def forward(self, x, mode="train"):
        raise NotImplementedError

    def backward(self, grad_out):
        raise NotImplementedError


def _require_cache(cache, name):
    if cache is None:
        raise RuntimeError(f"{name}.backward called without a forward cache")
    return cache


class Conv1d(Layer):
    """Cross-correlation with zero padding.

    Output length is floor((T + 2*pad - K) / stride) + 1.
    """

    def __init__(self, in_ch, out_ch, kernel, stride=1, pad=0, rng=None):
        self.in_ch = in_ch
        self.out_ch = out_ch
        self.kernel = kernel
        self.stride = stride
        self.pad = pad
        if rng is None:
            rng = np.random.default_rng(0)
        bound = math.sqrt(6.0 / (in_ch * kernel))
        self.w = Param(rng.uniform(-bound, bound, size=(out_ch, in_ch, kernel)))
        self.b = Param(np.zeros(out_ch))
        self._cache = None

    def params(self):
        return {"w": self.w, "b": self.b}

    def forward(self, x, mode="train"):
        if x.shape[1] != self.in_ch:
            raise ValueError(
                f"conv1d: input has {x.shape[1]} channels, weights expect {self.in_ch}"
            )
        if x.shape[2] + 2 * self.pad < self.kernel:
            raise ValueError("conv1d: padded input shorter than kernel")
        xp = np.pad(x, ((0, 0), (0, 0), (self.pad, self.pad))) if self.pad else x
        cols = sliding_window_view(xp, self.kernel, axis=2)[:, :, :: self.stride]
        # per-example matmul keeps the reduction order independent of batch
        # size, so eval outputs are bit-identical however windows are batched
        flat = np.ascontiguousarray(cols.transpose(0, 2, 1, 3)).reshape(
            cols.shape[0], cols.shape[2], -1
        )
        w2 = self.w.value.reshape(self.out_ch, -1).T
        out = (flat @ w2).transpose(0, 2, 1) + self.b.value[None, :, None]
        self._cache = (x.shape, xp, cols)
        return out

    def backward(self, grad_out):
        x_shape, xp, cols = _require_cache(self._cache, "Conv1d")
        self.w.grad += np.einsum("bot,bctk->ock", grad_out, cols, optimize=True)
        self.b.grad += grad_out.sum(axis=(0, 2))
        grad_xp = np.zeros_like(xp)
        t_out = grad_out.shape[2]
        for k in range(self.kernel):
            # xp index hit by output position t and tap k is t*stride + k
            contrib = np.einsum(
                "bot,oc->bct", grad_out, self.w.value[:, :, k], optimize=True
            )
            grad_xp[:, :, k : k + self.stride * t_out : self.stride] += contrib
        if self.pad:
            grad_x = grad_xp[:, :, self.pad : grad_xp.shape[2] - self.pad]
        else:
            grad_x = grad_xp
        return grad_x


class BatchNorm1d(Layer):
    """Per-channel batch normalization over the (batch, time) axes."""

    def __init__(self, channels, eps=1e-5, momentum=0.1):
        self.channels = channels
        self.eps = eps
        self.momentum = momentum
        self.gamma = Param(np.ones(channels))
        self.beta = Param(np.zeros(channels))
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self._cache = None

    def params(self):
        return {"gamma": self.gamma, "beta": self.beta}

    def forward(self, x, mode="train"):
        if mode == "train":
            n = x.shape[0] * x.shape[2]
            if n < 2:
                raise ValueError("batchnorm train mode needs at least 2 samples per channel")
            mean = x.mean(axis=(0, 2))
            var = x.var(axis=(0, 2))
            self.running_mean = (
                (1 - self.momentum) * self.running_mean + self.momentum * mean
            )
            self.running_var = (
                (1 - self.momentum) * self.running_var + self.momentum * var
            )
        else:
            mean = self.running_mean
            var = self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean[None, :, None]) * inv_std[None, :, None]
        out = self.gamma.value[None, :, None] * xhat + self.beta.value[None, :, None]
        self._cache = (xhat, inv_std, mode)
        return out

    def backward(self, grad_out):
        xhat, inv_std, mode = _require_cache(self._cache, "BatchNorm1d")
        self.gamma.grad += (grad_out * xhat).sum(axis=(0, 2))
        self.beta.grad += grad_out.sum(axis=(0, 2))
        g = grad_out * self.gamma.value[None, :, None]
        if mode != "train":
            return g * inv_std[None, :, None]
        n = grad_out.shape[0] * grad_out.shape[2]
        # full batch-statistics gradient
        sum_g = g.sum(axis=(0, 2), keepdims=True)
        sum_gx = (g * xhat).sum(axis=(0, 2), keepdims=True)
        return (inv_std[None, :, None] / n) * (n * g - sum_g - xhat * sum_gx)


class LeakyReLU(Layer):
    def __init__(self, slope=0.01):
        self.slope = slope
        self._cache = None

    def forward(self, x, mode="train"):
        mask = x > 0
        self._cache = mask
        return np.where(mask, x, self.slope * x)

    def backward(self, grad_out):
        mask = _require_cache(self._cache, "LeakyReLU")
        return np.where(mask, grad_out, self.slope * grad_out)


class Sigmoid(Layer):
    def __init__(self):
        self._cache = None

    def forward(self, x, mode="train"):
        out = 1.0 / (1.0 + np.exp(-x))
        self._cache = out
        return out

    def backward(self, grad_out):
        out = _require_cache(self._cache, "Sigmoid")
        return grad_out * out * (1.0 - out)


class MaxPool1d(Layer):
    def __init__(self, window, stride=None):
        self.window = window
        self.stride = stride if stride is not None else window
        self._cache = None

    def forward(self, x, mode="train"):
        if x.shape[2] < self.window:
            raise ValueError("maxpool1d: input shorter than pooling window")
        cols = sliding_window_view(x, self.window, axis=2)[:, :, :: self.stride]
        idx = cols.argmax(axis=3)
        out = np.take_along_axis(cols, idx[..., None], axis=3)[..., 0]
        self._cache = (x.shape, idx)
        return out

    def backward(self, grad_out):
        x_shape, idx = _require_cache(self._cache, "MaxPool1d")
        b, c, t_out = grad_out.shape
        grad_x = np.zeros(x_shape)
        starts = np.arange(t_out) * self.stride
        pos = starts[None, None, :] + idx  # (B, C, T')
        bi = np.arange(b)[:, None, None]
        ci = np.arange(c)[None, :, None]
        np.add.at(grad_x, (bi, ci, pos), grad_out)
        return grad_x


class AvgPool1d(Layer):
    def __init__(self, window, stride=None):
        self.window = window
        self.stride = stride if stride is not None else window
        self._cache = None

    def forward(self, x, mode="train"):
        if x.shape[2] < self.window:
            raise ValueError("avgpool1d: input shorter than pooling window")
        cols = sliding_window_view(x, self.window, axis=2)[:, :, :: self.stride]
        self._cache = x.shape
        return cols.mean(axis=3)

    def backward(self, grad_out):
        x_shape = _require_cache(self._cache, "AvgPool1d")
        grad_x = np.zeros(x_shape)
        share = grad_out / self.window
        t_out = grad_out.shape[2]
        for k in range(self.window):
            grad_x[:, :, k : k + self.stride * t_out : self.stride] += share
        return grad_x


class Upsample1d(Layer):
    """Nearest-neighbor temporal upsampling by an integer factor."""

    def __init__(self, factor):
        self.factor = factor

    def forward(self, x, mode="train"):
        return np.repeat(x, self.factor, axis=2)

    def backward(self, grad_out):
        b, c, t = grad_out.shape
        return grad_out.reshape(b, c, t // self.factor, self.factor).sum(axis=3)


class Linear(Layer):
    """Affine map on (batch, features) inputs."""

    def __init__(self, in_features, out_features, rng=None):
        if rng is None:
            rng = np.random.default_rng(0)
        bound = math.sqrt(6.0 / in_features)
        self.w = Param(rng.uniform(-bound, bound, size=(in_features, out_features)))
        self.b = Param(np.zeros(out_features))
        self._cache = None

    def params(self):
        return {"w": self.w, "b": self.b}

    def forward(self, x, mode="train"):
        if x.shape[1] != self.w.value.shape[0]:
            raise ValueError("linear: feature dimension mismatch")
        self._cache = x
        # (B,1,F)@(F,O): per-example reduction, bit-stable across batch sizes
        return (x[:, None, :] @ self.w.value)[:, 0, :] + self.b.value

    def backward(self, grad_out):
        x = _require_cache(self._cache, "Linear")
        self.w.grad += x.T @ grad_out
        self.b.grad += grad_out.sum(axis=0)
        return grad_out @ self.w.value.T


class SEBlock(Layer):
    """Squeeze-and-excitation channel gating.

    Squeeze is the per-channel temporal mean; the excitation MLP is
    C -> C/r -> C with a leaky-ReLU hidden layer and a sigmoid gate.
    """

    def __init__(self, channels, reduction=4, slope=0.01, rng=None):
        hidden = max(1, channels // reduction)
        self.channels = channels
        self.fc1 = Linear(channels, hidden, rng=rng)
        self.act = LeakyReLU(slope)
        self.fc2 = Linear(hidden, channels, rng=rng)
        self.gate = Sigmoid()
        self._cache = None

    def params(self):
        out = {}
        for prefix, layer in (("fc1", self.fc1), ("fc2", self.fc2)):
            for name, p in layer.params().items():
                out[f"{prefix}.{name}"] = p
        return out

    def forward(self, x, mode="train"):
        squeeze = x.mean(axis=2)
        g = self.gate.forward(
            self.fc2.forward(self.act.forward(self.fc1.forward(squeeze, mode), mode), mode),
            mode,
        )
        self._cache = (x, g)
        return x * g[:, :, None]

    def backward(self, grad_out):
        x, g = _require_cache(self._cache, "SEBlock")
        grad_x = grad_out * g[:, :, None]
        grad_g = (grad_out * x).sum(axis=2)
        grad_s = self.fc1.backward(
            self.act.backward(self.fc2.backward(self.gate.backward(grad_g)))
        )
        grad_x += grad_s[:, :, None] / x.shape[2]
        return grad_x


class PPMBlock(Layer):
    """Pyramid pooling over a temporal feature map.

    Average pools at window/stride 8, 4, 2, reduces each pooled map to
    ``reduce_ch`` channels with a 1-tap convolution, upsamples back to the
    input length, and concatenates with the input along channels.
    """

    POOL_SIZES = (8, 4, 2)

    def __init__(self, channels, reduce_ch=16, rng=None):
        self.channels = channels
        self.reduce_ch = reduce_ch
        self.pools = [AvgPool1d(s, s) for s in self.POOL_SIZES]
        self.reducers = [Conv1d(channels, reduce_ch, 1, rng=rng) for _ in self.POOL_SIZES]
        self._cache = None

    @property
    def out_channels(self):
        return self.channels + len(self.POOL_SIZES) * self.reduce_ch

    def params(self):
        out = {}
        for i, conv in enumerate(self.reducers):
            for name, p in conv.params().items():
                out[f"reduce{i}.{name}"] = p
        return out

    def forward(self, x, mode="train"):
        t = x.shape[2]
        if t % max(self.POOL_SIZES) != 0:
            raise ValueError(f"ppm_block: temporal length {t} not divisible by 8")
        branches = [x]
        for pool, conv, size in zip(self.pools, self.reducers, self.POOL_SIZES):
            pooled = conv.forward(pool.forward(x, mode), mode)
            branches.append(np.repeat(pooled, t // pooled.shape[2], axis=2))
        self._cache = (x.shape, t)
        return np.concatenate(branches, axis=1)

    def backward(self, grad_out):
        x_shape, t = _require_cache(self._cache, "PPMBlock")
        grad_x = grad_out[:, : self.channels].copy()
        offset = self.channels
        for pool, conv, size in zip(self.pools, self.reducers, self.POOL_SIZES):
            g = grad_out[:, offset : offset + self.reduce_ch]
            offset += self.reduce_ch
            pooled_t = t // size
            factor = t // pooled_t
            b, c = g.shape[0], g.shape[1]
            g_pooled = g.reshape(b, c, pooled_t, factor).sum(axis=3)
            grad_x += pool.backward(conv.backward(g_pooled))
        return grad_x
