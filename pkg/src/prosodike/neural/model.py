"""Toy hierarchical prosody predictor.

Phone ids are encoded (embedding + sinusoidal positions, conv blocks,
optional self-attention).  Emphasis heads predict per-phone emphasis
features from the encodings; the prosody heads (log-duration, log-pitch,
energy) see the encodings together with the emphasis features.  During
training the prosody heads receive the ground-truth emphasis.

Units
-----
Emphasis values outside the model are in normalized feature units.  The
emphasis heads predict ``value / scale`` and are rescaled on the way out;
the prosody heads see ``(value - mean) / scale``.  Prosody targets are
standardized per stream; :func:`infer` maps them back to frames, Hz and dB.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from ..cwt import interpolated_log_pitch
from ..datamodel import FEATURE_NAMES, AlignedUtterance, EmphasisFeatures, WordSpan
from .layers import (
    Conv1d,
    Dropout,
    Embedding,
    LayerNorm,
    Linear,
    ReLU,
    SelfAttention,
    Simplex,
    masked_mse,
    positional_encoding,
)

MODES = ("variance", "wavelet", "combined")
STREAMS = ("duration", "pitch", "energy")
CHECKPOINT_FORMAT = "prosodike-predictor/1"


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int = 0  # filled from the training corpus when 0
    dim: int = 32
    encoder_blocks: int = 2
    kernel: int = 3
    attention: bool = True
    predictor_layers: int = 2
    dropout: float = 0.2
    bins: int = 32
    mode: str = "wavelet"
    seed: int = 0
    learning_rate: float = 1e-2
    momentum: float = 0.9
    steps: int = 2000
    batch_size: int = 16
    loss_weights: dict[str, float] = field(
        default_factory=lambda: {"emphasis": 1.0, "duration": 1.0, "pitch": 1.0, "energy": 1.0}
    )

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ModelError(f"mode must be one of {MODES}, got {self.mode!r}")
        for name in ("dim", "encoder_blocks", "kernel", "predictor_layers", "bins", "batch_size"):
            if getattr(self, name) <= 0:
                raise ModelError(f"{name} must be positive")
        if self.vocab_size < 0 or self.steps < 0:
            raise ModelError("vocab_size and steps must be non-negative")
        if not 0 <= self.dropout < 1:
            raise ModelError("dropout must lie in [0, 1)")
        if self.kernel % 2 != 1:
            raise ModelError("kernel must be odd")
        unknown = set(self.loss_weights) - {"emphasis", *STREAMS}
        if unknown:
            raise ModelError(f"unknown loss weight keys: {sorted(unknown)}")
        weights = {"emphasis": 1.0, "duration": 1.0, "pitch": 1.0, "energy": 1.0}
        weights.update({k: float(v) for k, v in self.loss_weights.items()})
        object.__setattr__(self, "loss_weights", weights)

    @property
    def emphasis_heads(self) -> int:
        return {"variance": 2, "wavelet": 1, "combined": 3}[self.mode]

    @property
    def emphasis_dim(self) -> int:
        """Width of the emphasis vector seen by the prosody heads."""
        return 2 if self.mode == "variance" else 1

    def replace(self, **changes: Any) -> "ModelConfig":
        d = asdict(self)
        d.update(changes)
        return ModelConfig(**d)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ModelConfig":
        return cls(**d)


def feature_columns(mode: str) -> tuple[str, ...]:
    return {"variance": FEATURE_NAMES[:2], "wavelet": FEATURE_NAMES[2:], "combined": FEATURE_NAMES}[mode]


# ---------------------------------------------------------------------------
# blocks
# ---------------------------------------------------------------------------


class ConvBlock:
    def __init__(self, cin: int, cout: int, kernel: int, dropout: float, rng: np.random.Generator, drng):
        self.conv = Conv1d(cin, cout, kernel, rng)
        self.relu = ReLU()
        self.norm = LayerNorm(cout)
        self.drop = Dropout(dropout, drng)

    def layers(self):
        return [("conv", self.conv), ("norm", self.norm)]

    def forward(self, x, mask):
        return self.drop.forward(self.norm.forward(self.relu.forward(self.conv.forward(x, mask))))

    def backward(self, dy):
        return self.conv.backward(self.relu.backward(self.norm.backward(self.drop.backward(dy))))


class AttentionBlock:
    def __init__(self, dim: int, dropout: float, rng, drng):
        self.attn = SelfAttention(dim, rng)
        self.drop = Dropout(dropout, drng)
        self.norm = LayerNorm(dim)

    def layers(self):
        return [("attn", self.attn), ("norm", self.norm)]

    def forward(self, x, mask):
        return self.norm.forward(x + self.drop.forward(self.attn.forward(x, mask)))

    def backward(self, dy):
        d = self.norm.backward(dy)
        return d + self.attn.backward(self.drop.backward(d))


class Encoder:
    def __init__(self, cfg: ModelConfig, rng, drng):
        self.embed = Embedding(cfg.vocab_size, cfg.dim, rng)
        self.blocks = [ConvBlock(cfg.dim, cfg.dim, cfg.kernel, cfg.dropout, rng, drng) for _ in range(cfg.encoder_blocks)]
        self.attn = AttentionBlock(cfg.dim, cfg.dropout, rng, drng) if cfg.attention else None

    def layers(self):
        out = [("embed", self.embed)]
        for i, b in enumerate(self.blocks):
            out += [(f"block{i}.{n}", l) for n, l in b.layers()]
        if self.attn is not None:
            out += [(f"attn.{n}", l) for n, l in self.attn.layers()]
        return out

    def forward(self, ids, mask):
        x = self.embed.forward(ids) + positional_encoding(ids.shape[1], self.embed.params["table"].shape[1])
        for b in self.blocks:
            x = b.forward(x, mask)
        if self.attn is not None:
            x = self.attn.forward(x, mask)
        return x

    def backward(self, dy):
        if self.attn is not None:
            dy = self.attn.backward(dy)
        for b in reversed(self.blocks):
            dy = b.backward(dy)
        self.embed.backward(dy)


class EmphasisHead:
    """Conv stack followed by a linear projection to one value per phone."""

    def __init__(self, cfg: ModelConfig, rng, drng):
        self.blocks = [ConvBlock(cfg.dim, cfg.dim, cfg.kernel, cfg.dropout, rng, drng) for _ in range(cfg.predictor_layers)]
        self.out = Linear(cfg.dim, 1, rng)

    def layers(self):
        out = []
        for i, b in enumerate(self.blocks):
            out += [(f"block{i}.{n}", l) for n, l in b.layers()]
        return out + [("out", self.out)]

    def forward(self, enc, mask):
        x = enc
        for b in self.blocks:
            x = b.forward(x, mask)
        return self.out.forward(x)

    def backward(self, dy):
        d = self.out.backward(dy)
        for b in reversed(self.blocks):
            d = b.backward(d)
        return d


class ProsodyHead:
    """Conv stack over the encodings; the emphasis vector joins afterwards.

    Joining after the convolutions keeps the emphasis of one phone from
    reaching its neighbours' predictions.
    """

    def __init__(self, cfg: ModelConfig, rng, drng):
        self.blocks = [ConvBlock(cfg.dim, cfg.dim, cfg.kernel, cfg.dropout, rng, drng) for _ in range(cfg.predictor_layers)]
        self.fc1 = Linear(cfg.dim + cfg.emphasis_dim, cfg.dim, rng)
        self.relu = ReLU()
        self.fc2 = Linear(cfg.dim, 1, rng)
        self.dim = cfg.dim

    def layers(self):
        out = []
        for i, b in enumerate(self.blocks):
            out += [(f"block{i}.{n}", l) for n, l in b.layers()]
        return out + [("fc1", self.fc1), ("fc2", self.fc2)]

    def forward(self, enc, emph, mask):
        x = enc
        for b in self.blocks:
            x = b.forward(x, mask)
        z = np.concatenate([x, emph], axis=-1)
        return self.fc2.forward(self.relu.forward(self.fc1.forward(z)))

    def backward(self, dy):
        dz = self.fc1.backward(self.relu.backward(self.fc2.backward(dy)))
        d, demph = dz[..., :self.dim], dz[..., self.dim:]
        for b in reversed(self.blocks):
            d = b.backward(d)
        return d, demph


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------


@dataclass
class Normalization:
    emph_mean: list[float]  # per emphasis head, feature units
    emph_scale: list[float]
    input_mean: list[float]  # per prosody-head emphasis input
    input_scale: list[float]
    target_mean: list[float]  # duration (log frames), pitch (log Hz), energy (dB)
    target_scale: list[float]

    @classmethod
    def identity(cls, cfg: ModelConfig) -> "Normalization":
        h, e = cfg.emphasis_heads, cfg.emphasis_dim
        return cls([0.0] * h, [1.0] * h, [0.0] * e, [1.0] * e, [0.0] * 3, [1.0] * 3)


class PredictorModel:
    def __init__(self, config: ModelConfig, vocab: Sequence[str] | None = None):
        if vocab is not None:
            if config.vocab_size not in (0, len(vocab)):
                raise ModelError("vocab_size disagrees with the vocabulary")
            config = config.replace(vocab_size=len(vocab))
        if config.vocab_size <= 0:
            raise ModelError("vocab_size must be positive")
        self.config = config
        self.vocab = list(vocab) if vocab is not None else [str(i) for i in range(config.vocab_size)]
        self.step = 0
        seeds = np.random.SeedSequence(config.seed).spawn(3)
        rng = np.random.default_rng(seeds[0])
        self.dropout_rng = np.random.default_rng(seeds[1])
        self.batch_rng = np.random.default_rng(seeds[2])
        drng = self.dropout_rng

        self.encoder = Encoder(config, rng, drng)
        self.emphasis = [EmphasisHead(config, rng, drng) for _ in range(config.emphasis_heads)]
        self.simplex = Simplex(3) if config.mode == "combined" else None
        self.prosody = {s: ProsodyHead(config, rng, drng) for s in STREAMS}
        self.pitch_embed = Embedding(config.bins, config.dim, rng)
        self.energy_embed = Embedding(config.bins, config.dim, rng)
        self.pitch_range = (0.0, 1.0)
        self.energy_range = (0.0, 1.0)
        self.norm = Normalization.identity(config)
        self._velocity: dict[str, np.ndarray] = {}

    # -- bookkeeping ---------------------------------------------------------

    def named_layers(self) -> list[tuple[str, Any]]:
        out = [(f"encoder.{n}", l) for n, l in self.encoder.layers()]
        for i, h in enumerate(self.emphasis):
            out += [(f"emphasis{i}.{n}", l) for n, l in h.layers()]
        if self.simplex is not None:
            out.append(("simplex", self.simplex))
        for s, h in self.prosody.items():
            out += [(f"{s}.{n}", l) for n, l in h.layers()]
        out += [("pitch_embed", self.pitch_embed), ("energy_embed", self.energy_embed)]
        return out

    def parameters(self) -> dict[str, np.ndarray]:
        return {f"{n}.{p}": v for n, l in self.named_layers() for p, v in l.params.items()}

    def gradients(self) -> dict[str, np.ndarray]:
        return {f"{n}.{p}": v for n, l in self.named_layers() for p, v in l.grads.items()}

    def zero_grad(self) -> None:
        for _, l in self.named_layers():
            l.zero_grad()

    def dropouts(self) -> list[Dropout]:
        drops = [b.drop for b in self.encoder.blocks]
        if self.encoder.attn is not None:
            drops.append(self.encoder.attn.drop)
        for h in [*self.emphasis, *self.prosody.values()]:
            drops += [b.drop for b in h.blocks]
        return drops

    def relus(self) -> list[ReLU]:
        out = [b.relu for b in self.encoder.blocks]
        for h in [*self.emphasis, *self.prosody.values()]:
            out += [b.relu for b in h.blocks]
        return out + [h.relu for h in self.prosody.values()]

    def set_training(self, on: bool) -> None:
        for d in self.dropouts():
            d.training = on

    def encode_labels(self, labels: Sequence[str]) -> np.ndarray:
        index = {lab: i for i, lab in enumerate(self.vocab)}
        try:
            return np.array([index[lab] for lab in labels], dtype=int)
        except KeyError as exc:
            raise ModelError(f"phone {exc.args[0]!r} is not in the model vocabulary") from None

    @property
    def simplex_weights(self) -> np.ndarray | None:
        return None if self.simplex is None else self.simplex.weights

    # -- forward pieces ------------------------------------------------------

    def encode(self, ids: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
        ids = np.asarray(ids)
        if mask is None:
            mask = np.ones(ids.shape, dtype=bool)
        return self.encoder.forward(ids, mask)

    def emphasis_heads_forward(self, enc: np.ndarray, mask: np.ndarray) -> np.ndarray:
        """Per-head outputs in the heads' scaled units, ``(B, T, heads)``."""
        return np.concatenate([h.forward(enc, mask) for h in self.emphasis], axis=-1)

    def predict_emphasis(self, enc: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
        """Per-phone emphasis in feature units: 2 values (variance) or 1."""
        if mask is None:
            mask = np.ones(enc.shape[:2], dtype=bool)
        raw = self.emphasis_heads_forward(enc, mask) * np.asarray(self.norm.emph_scale) + np.asarray(self.norm.emph_mean)
        if self.simplex is not None:
            return self.simplex.forward(raw)
        return raw

    def emphasis_input(self, emph: np.ndarray) -> np.ndarray:
        return (emph - np.asarray(self.norm.input_mean)) / np.asarray(self.norm.input_scale)

    def predict_prosody(self, enc: np.ndarray, emph: np.ndarray, mask: np.ndarray | None = None) -> tuple[np.ndarray, ...]:
        """Standardized ``(log-duration, log-pitch, energy)``, each ``(B, T, 1)``."""
        emph = np.asarray(emph, dtype=float)
        if emph.shape[-1] != self.config.emphasis_dim or emph.shape[:-1] != enc.shape[:-1]:
            raise ModelError(
                f"emphasis shape {emph.shape} does not match encodings {enc.shape[:-1]} "
                f"with {self.config.emphasis_dim} feature(s)"
            )
        if mask is None:
            mask = np.ones(enc.shape[:2], dtype=bool)
        e_in = self.emphasis_input(emph)
        return tuple(self.prosody[s].forward(enc, e_in, mask) for s in STREAMS)

    # -- training step -------------------------------------------------------

    def loss_and_grads(self, batch: "TrainBatch") -> dict[str, float]:
        """Teacher-forced loss; gradients are accumulated into the layers."""
        cfg, norm = self.config, self.norm
        w = cfg.loss_weights
        mask = batch.mask
        self.zero_grad()
        enc = self.encoder.forward(batch.ids, mask)

        heads = self.emphasis_heads_forward(enc, mask)
        target = (batch.emphasis - np.asarray(norm.emph_mean)) / np.asarray(norm.emph_scale)
        loss_e, d_heads = masked_mse(heads, target, mask)
        # one MSE per head, summed, so each head learns as fast as a lone one
        n_heads = heads.shape[-1]
        losses = {"emphasis": loss_e * n_heads}
        d_heads = d_heads * (n_heads * w["emphasis"])

        if self.simplex is not None:
            gt = self.simplex.forward(batch.emphasis)
        else:
            gt = batch.emphasis
        e_in = self.emphasis_input(gt)

        d_enc = np.zeros_like(enc)
        d_ein = np.zeros_like(e_in)
        for k, s in enumerate(STREAMS):
            pred = self.prosody[s].forward(enc, e_in, mask)
            loss, dp = masked_mse(pred, batch.targets[..., k:k + 1], mask)
            losses[s] = loss
            de, dein = self.prosody[s].backward(dp * w[s])
            d_enc += de
            d_ein += dein
        if self.simplex is not None:
            self.simplex.backward(d_ein / np.asarray(norm.input_scale))
        for i, h in enumerate(self.emphasis):
            d_enc += h.backward(d_heads[..., i:i + 1])
        self.encoder.backward(d_enc)
        losses["total"] = sum(w[k] * losses[k] for k in ("emphasis", *STREAMS))
        return losses

    def sgd_step(self) -> None:
        lr, mu = self.config.learning_rate, self.config.momentum
        for n, l in self.named_layers():
            for p, g in l.grads.items():
                key = f"{n}.{p}"
                v = self._velocity.get(key)
                v = g.copy() if v is None else mu * v + g
                self._velocity[key] = v
                l.params[p] -= lr * v
        self.step += 1

    # -- persistence ---------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": CHECKPOINT_FORMAT,
            "config": self.config.to_dict(),
            "seed": self.config.seed,
            "step": self.step,
            "vocab": list(self.vocab),
            "normalization": asdict(self.norm),
            "pitch_range": list(self.pitch_range),
            "energy_range": list(self.energy_range),
            "params": {k: v.tolist() for k, v in self.parameters().items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=None, separators=(",", ":")) + "\n"

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "PredictorModel":
        if d.get("format") != CHECKPOINT_FORMAT:
            raise ModelError(f"unsupported checkpoint format {d.get('format')!r}")
        model = cls(ModelConfig.from_dict(d["config"]), d["vocab"])
        model.step = int(d["step"])
        model.norm = Normalization(**d["normalization"])
        model.pitch_range = tuple(d["pitch_range"])
        model.energy_range = tuple(d["energy_range"])
        params = model.parameters()
        if set(params) != set(d["params"]):
            raise ModelError("checkpoint parameters do not match the configuration")
        for k, v in params.items():
            arr = np.asarray(d["params"][k], dtype=float)
            if arr.shape != v.shape:
                raise ModelError(f"parameter {k} has shape {arr.shape}, expected {v.shape}")
            v[...] = arr
        return model

    @classmethod
    def from_json(cls, text: str) -> "PredictorModel":
        return cls.from_dict(json.loads(text))


def save_checkpoint(model: PredictorModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model.to_json())


def load_checkpoint(path) -> PredictorModel:
    with open(path, encoding="utf-8") as fh:
        return PredictorModel.from_json(fh.read())


# ---------------------------------------------------------------------------
# module-level operations on single utterances
# ---------------------------------------------------------------------------


def _batched(ids) -> np.ndarray:
    ids = np.asarray(ids, dtype=int)
    return ids[None, :] if ids.ndim == 1 else ids


def encode(ids, model: PredictorModel) -> np.ndarray:
    """Per-phone encodings ``(T, dim)`` for a single id sequence."""
    return model.encode(_batched(ids))[0]


def predict_emphasis(encodings: np.ndarray, model: PredictorModel) -> np.ndarray:
    return model.predict_emphasis(encodings[None])[0]


def predict_prosody(encodings: np.ndarray, emphasis: np.ndarray, model: PredictorModel) -> tuple[np.ndarray, ...]:
    emphasis = np.asarray(emphasis, dtype=float)
    if emphasis.ndim == 1:
        emphasis = emphasis[:, None]
    return tuple(p[0] for p in model.predict_prosody(encodings[None], emphasis[None]))


def quantize(values, num_bins: int, value_range: tuple[float, float]) -> np.ndarray:
    lo, hi = value_range
    if not lo < hi:
        raise ModelError("quantization range needs min < max")
    v = np.asarray(values, dtype=float)
    bins = np.floor((v - lo) / (hi - lo) * num_bins)
    return np.clip(bins, 0, num_bins - 1).astype(int)


def quantize_embed(values, num_bins: int, value_range: tuple[float, float], table: np.ndarray) -> np.ndarray:
    return np.asarray(table)[quantize(values, num_bins, value_range)]


def length_regulate(vectors: np.ndarray, counts) -> np.ndarray:
    counts = np.asarray(counts)
    if counts.size and (counts.min() < 0 or not np.all(counts == np.round(counts))):
        raise ModelError("frame counts must be non-negative integers")
    return np.repeat(np.asarray(vectors), counts.astype(int), axis=0)


# ---------------------------------------------------------------------------
# training data
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Example:
    ids: np.ndarray  # (T,)
    emphasis: np.ndarray  # (T, heads) feature units, word value on each of its phones
    targets: np.ndarray  # (T, 3) log frames, log Hz, dB


@dataclass(frozen=True, eq=False)
class TrainBatch:
    ids: np.ndarray  # (B, T)
    mask: np.ndarray  # (B, T)
    emphasis: np.ndarray  # (B, T, heads)
    targets: np.ndarray  # (B, T, 3) standardized


def phone_targets(utt: AlignedUtterance) -> np.ndarray:
    """Per phone: log frame count, mean interpolated log-pitch, mean energy."""
    lp = interpolated_log_pitch(utt)
    out = np.empty((len(utt.phones), 3))
    for i, p in enumerate(utt.phones):
        sl = slice(p.start_frame, p.end_frame)
        out[i] = (math.log(p.num_frames), lp[sl].mean(), utt.energy_db[sl].mean())
    return out


def phone_emphasis(words: Sequence[WordSpan], num_phones: int, word_values: np.ndarray) -> np.ndarray:
    """Broadcast ``words x k`` values onto phones; phones outside words get 0."""
    word_values = np.asarray(word_values, dtype=float).reshape(len(words), -1)
    out = np.zeros((num_phones, word_values.shape[1]))
    for w, row in zip(words, word_values):
        out[w.phone_start:w.phone_end] = row
    return out


def make_examples(
    model: PredictorModel, corpus: Sequence[AlignedUtterance], features: Sequence[EmphasisFeatures]
) -> list[Example]:
    by_id = {f.utterance_id: f for f in features}
    cols = feature_columns(model.config.mode)
    out = []
    for utt in corpus:
        f = by_id.get(utt.id)
        if f is None:
            raise ModelError(f"no emphasis features for utterance {utt.id!r}")
        if f.raw:
            raise ModelError("emphasis targets must be normalized features")
        values = np.stack([f.column(c) for c in cols], axis=1)
        out.append(Example(
            ids=model.encode_labels([p.label for p in utt.phones]),
            emphasis=phone_emphasis(utt.words, len(utt.phones), values),
            targets=phone_targets(utt),
        ))
    return out


def collate(examples: Sequence[Example], norm: Normalization) -> TrainBatch:
    t = max(len(e.ids) for e in examples)
    b = len(examples)
    heads = examples[0].emphasis.shape[1]
    ids = np.zeros((b, t), dtype=int)
    mask = np.zeros((b, t), dtype=bool)
    emph = np.zeros((b, t, heads))
    targets = np.zeros((b, t, 3))
    mean, scale = np.asarray(norm.target_mean), np.asarray(norm.target_scale)
    for i, e in enumerate(examples):
        n = len(e.ids)
        ids[i, :n] = e.ids
        mask[i, :n] = True
        emph[i, :n] = e.emphasis
        targets[i, :n] = (e.targets - mean) / scale
    return TrainBatch(ids, mask, emph, targets)


def _safe_std(x: np.ndarray) -> float:
    s = float(np.std(x))
    return s if s > 1e-12 else 1.0


def fit_normalization(model: PredictorModel, examples: Sequence[Example]) -> None:
    emph = np.concatenate([e.emphasis for e in examples])
    targets = np.concatenate([e.targets for e in examples])
    scale = [_safe_std(emph[:, j]) for j in range(emph.shape[1])]
    mean = [float(emph[:, j].mean()) for j in range(emph.shape[1])]
    if model.config.mode == "combined":
        c = emph.mean(axis=1)  # simplex output at its uniform starting point
        in_mean, in_scale = [float(c.mean())], [_safe_std(c)]
    else:
        in_mean, in_scale = mean, scale
    model.norm = Normalization(
        emph_mean=mean,
        emph_scale=scale,
        input_mean=in_mean,
        input_scale=in_scale,
        target_mean=[float(v) for v in targets.mean(axis=0)],
        target_scale=[_safe_std(targets[:, j]) for j in range(3)],
    )
    lp, en = targets[:, 1], targets[:, 2]
    model.pitch_range = (float(lp.min()), float(lp.max()) if lp.max() > lp.min() else float(lp.min()) + 1.0)
    model.energy_range = (float(en.min()), float(en.max()) if en.max() > en.min() else float(en.min()) + 1.0)


def build_vocab(corpus: Sequence[AlignedUtterance]) -> list[str]:
    return sorted({p.label for u in corpus for p in u.phones})


def train(
    corpus: Sequence[AlignedUtterance],
    features: Sequence[EmphasisFeatures],
    config: ModelConfig = ModelConfig(),
    vocab: Sequence[str] | None = None,
    log=None,
) -> tuple[PredictorModel, list[dict[str, float]]]:
    """Teacher-forced training with momentum SGD.

    Each step draws a batch without replacement from the corpus.  The loss
    history row for step ``k`` is the batch loss before the ``k``-th update.
    """
    if not corpus:
        raise ModelError("cannot train on an empty corpus")
    model = PredictorModel(config.replace(vocab_size=0), list(vocab) if vocab else build_vocab(corpus))
    examples = make_examples(model, corpus, features)
    fit_normalization(model, examples)
    history: list[dict[str, float]] = []
    bs = min(config.batch_size, len(examples))
    model.set_training(True)
    for step in range(config.steps):
        idx = np.sort(model.batch_rng.choice(len(examples), size=bs, replace=False))
        losses = model.loss_and_grads(collate([examples[i] for i in idx], model.norm))
        history.append({"step": step, **losses})
        if not math.isfinite(losses["total"]):
            raise FloatingPointError(f"loss became non-finite at step {step}")
        model.sgd_step()
        if log is not None and (step % 100 == 0 or step == config.steps - 1):
            log(f"step {step} loss {losses['total']:.4f}")
    model.set_training(False)
    return model, history


def history_csv(history: Sequence[dict[str, float]]) -> str:
    cols = ["step", "total", "emphasis", *STREAMS]
    lines = [",".join(cols)]
    for row in history:
        lines.append(",".join([str(int(row["step"]))] + [repr(float(row[c])) for c in cols[1:]]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# inference
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class InferenceResult:
    emphasis: np.ndarray  # (T, E) as predicted
    emphasis_used: np.ndarray  # (T, E) after the directive
    log_duration: np.ndarray  # (T,) log frames
    duration: np.ndarray  # (T,) frames, continuous
    duration_frames: np.ndarray  # (T,) rounded, >= 1
    log_pitch: np.ndarray  # (T,) log Hz
    pitch_hz: np.ndarray
    energy_db: np.ndarray

    def to_dict(self) -> dict[str, list]:
        return {k: np.asarray(getattr(self, k)).tolist() for k in self.__dataclass_fields__}


def infer(
    ids,
    model: PredictorModel,
    words: Sequence[WordSpan] | None = None,
    directive=None,
) -> InferenceResult:
    """Hierarchical inference: encodings -> emphasis (+ bias) -> prosody."""
    from ..control import apply_bias

    model.set_training(False)
    enc = model.encode(_batched(ids))
    emph = model.predict_emphasis(enc)[0]
    used = emph
    if directive is not None:
        if words is None:
            raise ModelError("a directive needs the utterance's word spans")
        used = apply_bias(emph, words, directive)
    std = model.predict_prosody(enc, used[None])
    mean, scale = model.norm.target_mean, model.norm.target_scale
    log_dur, log_pitch, energy = (std[k][0, :, 0] * scale[k] + mean[k] for k in range(3))
    dur = np.exp(log_dur)
    return InferenceResult(
        emphasis=emph,
        emphasis_used=used,
        log_duration=log_dur,
        duration=dur,
        duration_frames=np.maximum(1, np.round(dur)).astype(int),
        log_pitch=log_pitch,
        pitch_hz=np.exp(log_pitch),
        energy_db=energy,
    )


def decoder_input(ids, model: PredictorModel, result: InferenceResult) -> np.ndarray:
    """Frame-rate decoder input: encodings plus quantized pitch/energy
    embeddings, upsampled by the predicted durations."""
    enc = encode(ids, model)
    x = enc + quantize_embed(result.log_pitch, model.config.bins, model.pitch_range, model.pitch_embed.params["table"])
    x = x + quantize_embed(result.energy_db, model.config.bins, model.energy_range, model.energy_embed.params["table"])
    return length_regulate(x, result.duration_frames)
