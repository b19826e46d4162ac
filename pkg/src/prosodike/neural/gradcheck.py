"""Central finite-difference checks for the layer kit and the full model."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import layers as L
from .model import PredictorModel, TrainBatch


def rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """``|a - n| / max(|a|, |n|)`` over the whole tensor; 0 when both vanish."""
    denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
    return 0.0 if denom == 0 else float(np.linalg.norm(analytic - numeric) / denom)


def numeric_grad(
    f: Callable[[], float],
    x: np.ndarray,
    h: float = 1e-4,
    pattern: Callable[[], bytes] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Central differences of scalar ``f`` w.r.t. every entry of ``x`` (in place).

    Returns ``(grad, smooth)``.  When ``pattern`` is given it is read after
    each evaluation; entries whose two probes see different patterns (a ReLU
    switched) are marked non-smooth, since a difference quotient across a
    kink does not estimate the derivative.
    """
    g = np.zeros_like(x)
    smooth = np.ones(x.shape, dtype=bool)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + h
        fp = f()
        pp = pattern() if pattern else None
        x[i] = old - h
        fm = f()
        pm = pattern() if pattern else None
        x[i] = old
        g[i] = (fp - fm) / (2 * h)
        smooth[i] = pp == pm
    return g, smooth


def check_layer(
    layer: L.Layer,
    forward: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray | None,
    rng: np.random.Generator,
    h: float = 1e-4,
) -> dict[str, float]:
    """Check ``layer``'s parameter gradients (and the input gradient when
    ``x`` is a float array) for the loss ``sum(forward(x) * R)``."""
    probe = rng.standard_normal(forward(x).shape)

    def loss() -> float:
        return float(np.sum(forward(x) * probe))

    layer.zero_grad()
    forward(x)
    dx = layer.backward(probe)
    out = {}
    for name, p in layer.params.items():
        out[name] = rel_error(layer.grads[name].copy(), numeric_grad(loss, p, h)[0])
    if dx is not None and x is not None and np.issubdtype(np.asarray(x).dtype, np.floating):
        out["input"] = rel_error(dx, numeric_grad(loss, x, h)[0])
    return out


def check_all_layers(seed: int = 0, h: float = 1e-4) -> dict[str, dict[str, float]]:
    """Relative errors for every layer type on small pinned inputs."""
    rng = np.random.default_rng(seed)
    b, t, c = 2, 5, 4
    mask = np.ones((b, t), dtype=bool)
    mask[1, 3:] = False
    x = rng.standard_normal((b, t, c))
    res = {}

    emb = L.Embedding(7, c, rng)
    ids = rng.integers(0, 7, size=(b, t))
    res["embedding"] = check_layer(emb, lambda _: emb.forward(ids), None, rng, h)

    lin = L.Linear(c, 3, rng)
    res["linear"] = check_layer(lin, lin.forward, x, rng, h)

    conv = L.Conv1d(c, 3, 3, rng)
    res["conv1d"] = check_layer(conv, lambda z: conv.forward(z, mask), x, rng, h)

    ln = L.LayerNorm(c)
    ln.params["gain"][:] = rng.uniform(0.5, 1.5, c)
    ln.params["bias"][:] = rng.standard_normal(c)
    res["layernorm"] = check_layer(ln, ln.forward, x, rng, h)

    att = L.SelfAttention(c, rng)
    res["attention"] = check_layer(att, lambda z: att.forward(z, mask), x, rng, h)

    sx = L.Simplex(3)
    sx.params["logits"][:] = rng.standard_normal(3)
    res["simplex"] = check_layer(sx, sx.forward, rng.standard_normal((b, t, 3)), rng, h)

    relu = L.ReLU()
    xr = x + np.sign(x) * 0.1  # keep away from the kink
    res["relu"] = check_layer(relu, relu.forward, xr, rng, h)

    drop = L.Dropout(0.5, rng)
    drop.fixed_mask = rng.random(x.shape) >= 0.5
    res["dropout"] = check_layer(drop, drop.forward, x, rng, h)
    return res


@dataclass(frozen=True)
class ModelCheck:
    errors: dict[str, float]  # per parameter tensor, over its smooth entries
    skipped: dict[str, int]  # entries whose probes crossed a ReLU kink

    @property
    def max_error(self) -> float:
        return max(self.errors.values())


def check_model(model: PredictorModel, batch: TrainBatch, h: float = 1e-4) -> ModelCheck:
    """Relative error of every parameter tensor for the teacher-forced loss.

    Dropout is switched off so the loss is a deterministic function.
    Entries whose finite-difference probes flip a ReLU are left out.
    """
    model.set_training(False)
    model.loss_and_grads(batch)
    analytic = {k: v.copy() for k, v in model.gradients().items()}
    relus = model.relus()

    def loss() -> float:
        return model.loss_and_grads(batch)["total"]

    def pattern() -> bytes:
        return b"".join(np.packbits(r._on[batch.mask]).tobytes() for r in relus)

    errors, skipped = {}, {}
    for k, p in model.parameters().items():
        g, smooth = numeric_grad(loss, p, h, pattern)
        errors[k] = rel_error(analytic[k][smooth], g[smooth])
        skipped[k] = int((~smooth).sum())
    return ModelCheck(errors, skipped)
