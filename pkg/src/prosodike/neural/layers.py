"""Minimal numpy layer kit with hand-written backward passes.

Every layer keeps what its backward pass needs from the last ``forward``
call, accumulates parameter gradients into ``grads`` and returns the
gradient w.r.t. its input.  Activations are ``(batch, time, channels)``;
``mask`` is ``(batch, time)`` with True on real (non-padding) positions.
"""

from __future__ import annotations

import math

import numpy as np


class Layer:
    def __init__(self) -> None:
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def add_param(self, name: str, value: np.ndarray) -> None:
        self.params[name] = value
        self.grads[name] = np.zeros_like(value)

    def zero_grad(self) -> None:
        for g in self.grads.values():
            g.fill(0.0)


def _uniform(rng: np.random.Generator, fan_in: int, fan_out: int, shape: tuple[int, ...]) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Embedding(Layer):
    def __init__(self, num: int, dim: int, rng: np.random.Generator):
        super().__init__()
        self.add_param("table", rng.normal(0.0, 1.0 / math.sqrt(dim), size=(num, dim)))

    def forward(self, ids: np.ndarray) -> np.ndarray:
        ids = np.asarray(ids)
        n = self.params["table"].shape[0]
        if ids.size and (ids.min() < 0 or ids.max() >= n):
            raise IndexError(f"id out of range for vocabulary of {n}")
        self._ids = ids
        return self.params["table"][ids]

    def backward(self, dy: np.ndarray) -> None:
        np.add.at(self.grads["table"], self._ids, dy)


class Linear(Layer):
    def __init__(self, cin: int, cout: int, rng: np.random.Generator, zero: bool = False):
        super().__init__()
        w = np.zeros((cin, cout)) if zero else _uniform(rng, cin, cout, (cin, cout))
        self.add_param("weight", w)
        self.add_param("bias", np.zeros(cout))

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return x @ self.params["weight"] + self.params["bias"]

    def backward(self, dy: np.ndarray) -> np.ndarray:
        cin, cout = self.params["weight"].shape
        self.grads["weight"] += self._x.reshape(-1, cin).T @ dy.reshape(-1, cout)
        self.grads["bias"] += dy.reshape(-1, cout).sum(axis=0)
        return dy @ self.params["weight"].T


class Conv1d(Layer):
    """'Same'-padded 1-D convolution; padded positions are zeroed first."""

    def __init__(self, cin: int, cout: int, kernel: int, rng: np.random.Generator):
        super().__init__()
        if kernel % 2 != 1:
            raise ValueError("kernel size must be odd")
        self.kernel = kernel
        self.cin = cin
        self.add_param("weight", _uniform(rng, kernel * cin, cout, (kernel * cin, cout)))
        self.add_param("bias", np.zeros(cout))

    def forward(self, x: np.ndarray, mask: np.ndarray) -> np.ndarray:
        b, t, c = x.shape
        half = self.kernel // 2
        xm = x * mask[..., None]
        xp = np.pad(xm, ((0, 0), (half, half), (0, 0)))
        cols = np.concatenate([xp[:, j:j + t] for j in range(self.kernel)], axis=2)
        self._cols, self._mask, self._t = cols, mask, t
        return cols @ self.params["weight"] + self.params["bias"]

    def backward(self, dy: np.ndarray) -> np.ndarray:
        k, c, t = self.kernel, self.cin, self._t
        half = k // 2
        cout = dy.shape[-1]
        self.grads["weight"] += self._cols.reshape(-1, k * c).T @ dy.reshape(-1, cout)
        self.grads["bias"] += dy.reshape(-1, cout).sum(axis=0)
        dcols = dy @ self.params["weight"].T
        dxp = np.zeros((dy.shape[0], t + 2 * half, c))
        for j in range(k):
            dxp[:, j:j + t] += dcols[..., j * c:(j + 1) * c]
        return dxp[:, half:half + t] * self._mask[..., None]


class ReLU(Layer):
    def forward(self, x: np.ndarray) -> np.ndarray:
        self._on = x > 0
        return np.where(self._on, x, 0.0)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return dy * self._on


class LayerNorm(Layer):
    def __init__(self, dim: int, eps: float = 1e-6):
        super().__init__()
        self.eps = eps
        self.add_param("gain", np.ones(dim))
        self.add_param("bias", np.zeros(dim))

    def forward(self, x: np.ndarray) -> np.ndarray:
        mu = x.mean(axis=-1, keepdims=True)
        var = x.var(axis=-1, keepdims=True)
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mu) * inv
        self._xhat, self._inv = xhat, inv
        return xhat * self.params["gain"] + self.params["bias"]

    def backward(self, dy: np.ndarray) -> np.ndarray:
        d = dy.shape[-1]
        xhat, inv = self._xhat, self._inv
        self.grads["gain"] += (dy * xhat).reshape(-1, d).sum(axis=0)
        self.grads["bias"] += dy.reshape(-1, d).sum(axis=0)
        dxhat = dy * self.params["gain"]
        return inv / d * (
            d * dxhat
            - dxhat.sum(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True)
        )


class Dropout(Layer):
    """Inverted dropout.  ``training`` is toggled by the owning model."""

    def __init__(self, rate: float, rng: np.random.Generator):
        super().__init__()
        if not 0 <= rate < 1:
            raise ValueError("dropout rate must lie in [0, 1)")
        self.rate = rate
        self.rng = rng
        self.training = False
        self.fixed_mask: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        if self.fixed_mask is not None:
            keep = self.fixed_mask
        elif self.training and self.rate > 0:
            keep = self.rng.random(x.shape) >= self.rate
        else:
            self._scale = None
            return x
        self._scale = keep / (1.0 - self.rate)
        return x * self._scale

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return dy if self._scale is None else dy * self._scale


class SelfAttention(Layer):
    """Single-head scaled dot-product self-attention with key padding mask."""

    def __init__(self, dim: int, rng: np.random.Generator):
        super().__init__()
        for name in ("wq", "wk", "wv", "wo"):
            self.add_param(name, _uniform(rng, dim, dim, (dim, dim)))
        self.dim = dim

    def forward(self, x: np.ndarray, mask: np.ndarray) -> np.ndarray:
        p = self.params
        q, k, v = x @ p["wq"], x @ p["wk"], x @ p["wv"]
        scores = q @ k.transpose(0, 2, 1) / math.sqrt(self.dim)
        scores = np.where(mask[:, None, :], scores, -1e30)
        scores = scores - scores.max(axis=-1, keepdims=True)
        a = np.exp(scores)
        a = a / a.sum(axis=-1, keepdims=True)
        o = a @ v
        self._cache = (x, q, k, v, a, o)
        return o @ p["wo"]

    def backward(self, dy: np.ndarray) -> np.ndarray:
        p, g = self.params, self.grads
        x, q, k, v, a, o = self._cache
        d = self.dim
        g["wo"] += o.reshape(-1, d).T @ dy.reshape(-1, d)
        do = dy @ p["wo"].T
        da = do @ v.transpose(0, 2, 1)
        dv = a.transpose(0, 2, 1) @ do
        ds = a * (da - (da * a).sum(axis=-1, keepdims=True)) / math.sqrt(d)
        dq = ds @ k
        dk = ds.transpose(0, 2, 1) @ q
        xf = x.reshape(-1, d)
        g["wq"] += xf.T @ dq.reshape(-1, d)
        g["wk"] += xf.T @ dk.reshape(-1, d)
        g["wv"] += xf.T @ dv.reshape(-1, d)
        return dq @ p["wq"].T + dk @ p["wk"].T + dv @ p["wv"].T


class Simplex(Layer):
    """Convex combination of the last axis; weights are ``softmax(logits)``."""

    def __init__(self, n: int = 3):
        super().__init__()
        self.add_param("logits", np.zeros(n))

    @property
    def weights(self) -> np.ndarray:
        z = self.params["logits"] - self.params["logits"].max()
        e = np.exp(z)
        return e / e.sum()

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        self._w = self.weights
        return x @ self._w[:, None]

    def backward(self, dy: np.ndarray) -> np.ndarray:
        w = self._w
        gw = (dy * self._x).reshape(-1, len(w)).sum(axis=0)
        self.grads["logits"] += w * (gw - w @ gw)
        return dy * w


def positional_encoding(length: int, dim: int) -> np.ndarray:
    pos = np.arange(length)[:, None]
    i = np.arange(dim)[None, :]
    angle = pos / np.power(10000.0, (2 * (i // 2)) / dim)
    return np.where(i % 2 == 0, np.sin(angle), np.cos(angle))


def masked_mse(pred: np.ndarray, target: np.ndarray, mask: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error over unmasked positions; returns ``(loss, dloss/dpred)``."""
    m = mask[..., None].astype(float)
    count = m.sum() * pred.shape[-1]
    diff = (pred - target) * m
    return float((diff ** 2).sum() / count), 2.0 * diff / count
