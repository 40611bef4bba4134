"""Triplet margin loss, its analytic gradients, and the mini-batch Adam
training loop for the subword encoder.

The loss over one (anchor, positive, negative) triplet of pooled vectors is

    loss = max(|Va - Vp| - |Va - Vn| + margin, 0)

with Euclidean norms.  Training minimises the batch mean; ranking later
uses cosine similarity, which is a deliberate asymmetry, not a bug.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .embedder import SubwordEmbedder
from .errors import DimensionMismatch, EmptyDataset
from .rng import SplitMix64
from .triplets import TripletDataset

# Below this distance the direction (Va-Vx)/|Va-Vx| is numerically
# meaningless; the subgradient contribution is defined as zero.
_DISTANCE_EPS = 1e-12


@dataclass
class TrainConfig:
    """Hyperparameters of the triplet training loop.

    The 2e-5 learning rate is the transformer-scale default; toy-scale
    experiments on the subword encoder want something like 1e-3.
    """

    margin: float = 0.1
    epochs: int = 5
    batch_size: int = 32
    learning_rate: float = 2e-5
    warmup_fraction: float = 0.10
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.margin <= 0:
            raise ValueError("margin must be positive")
        if not 0.0 <= self.warmup_fraction <= 1.0:
            raise ValueError("warmup_fraction must lie in [0, 1]")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    dev_loss: float | None


@dataclass
class TrainHistory:
    epochs: list[EpochStats] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.epochs)


def _check_dims(*vectors: np.ndarray) -> None:
    shapes = {v.shape for v in vectors}
    if len(shapes) != 1:
        raise DimensionMismatch(f"triplet vectors differ in shape: {shapes}")


def triplet_loss(
    va: np.ndarray, vp: np.ndarray, vn: np.ndarray, margin: float = 0.1
) -> float:
    va, vp, vn = (np.asarray(v, dtype=np.float64) for v in (va, vp, vn))
    _check_dims(va, vp, vn)
    d_pos = float(np.linalg.norm(va - vp))
    d_neg = float(np.linalg.norm(va - vn))
    return max(d_pos - d_neg + margin, 0.0)


def triplet_loss_gradients(
    va: np.ndarray, vp: np.ndarray, vn: np.ndarray, margin: float = 0.1
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of the loss w.r.t. the three pooled vectors.

    In the flat region (loss == 0) all three are zero; a distance below
    1e-12 contributes zero (the subgradient at the non-differentiable
    point).
    """
    va, vp, vn = (np.asarray(v, dtype=np.float64) for v in (va, vp, vn))
    _check_dims(va, vp, vn)
    diff_p = va - vp
    diff_n = va - vn
    d_pos = float(np.linalg.norm(diff_p))
    d_neg = float(np.linalg.norm(diff_n))
    zero = np.zeros_like(va)
    if d_pos - d_neg + margin <= 0.0:
        return zero, zero.copy(), zero.copy()
    d_vp = -diff_p / d_pos if d_pos >= _DISTANCE_EPS else zero.copy()
    d_vn = diff_n / d_neg if d_neg >= _DISTANCE_EPS else zero.copy()
    d_va = -d_vp - d_vn
    return d_va, d_vp, d_vn


def _dataset_loss(model: SubwordEmbedder, dataset: TripletDataset, margin: float) -> float:
    total = 0.0
    for entry in dataset.entries:
        total += triplet_loss(
            model.embed(entry.anchor),
            model.embed(entry.positive),
            model.embed(entry.negative),
            margin,
        )
    return total / len(dataset.entries)


def train(
    model: SubwordEmbedder,
    train_set: TripletDataset,
    dev_set: TripletDataset | None = None,
    cfg: TrainConfig = TrainConfig(),
) -> tuple[SubwordEmbedder, TrainHistory]:
    """Run mini-batch Adam over the embedding table, in place.

    Pooled-vector gradients route back to each touched table row as
    (pooled gradient / feature count of that text); the batch gradient is
    the mean over its examples.  The learning rate ramps linearly from 0
    over the first ``warmup_fraction`` of all steps, then stays constant.
    Per-epoch mean train loss and dev loss land in the returned history.
    Everything is deterministic given ``cfg.seed``.
    """
    if not train_set.entries:
        raise EmptyDataset("training set is empty")
    history = TrainHistory()
    if cfg.epochs == 0:
        return model, history

    rng = SplitMix64(cfg.seed)
    n = len(train_set.entries)
    n_batches = math.ceil(n / cfg.batch_size)
    total_steps = cfg.epochs * n_batches
    warmup_steps = math.floor(cfg.warmup_fraction * total_steps)

    m = np.zeros_like(model.table)
    v = np.zeros_like(model.table)
    grad = np.zeros_like(model.table)
    step = 0

    # Feature bags never change during training; warm the cache once.
    bags: dict[str, np.ndarray] = {}
    for entry in train_set.entries:
        for text in (entry.anchor, entry.positive, entry.negative):
            if text not in bags:
                bags[text] = model.features(text)

    for epoch in range(1, cfg.epochs + 1):
        order = list(range(n))
        rng.shuffle(order)
        epoch_loss = 0.0
        for b in range(n_batches):
            batch = order[b * cfg.batch_size:(b + 1) * cfg.batch_size]
            grad.fill(0.0)
            for idx in batch:
                entry = train_set.entries[idx]
                fa = bags[entry.anchor]
                fp = bags[entry.positive]
                fn = bags[entry.negative]
                va = model.table[fa].mean(axis=0) if fa.size else np.zeros(model.dim)
                vp = model.table[fp].mean(axis=0) if fp.size else np.zeros(model.dim)
                vn = model.table[fn].mean(axis=0) if fn.size else np.zeros(model.dim)
                epoch_loss += triplet_loss(va, vp, vn, cfg.margin)
                d_va, d_vp, d_vn = triplet_loss_gradients(va, vp, vn, cfg.margin)
                for ids, dv in ((fa, d_va), (fp, d_vp), (fn, d_vn)):
                    if ids.size:
                        np.add.at(grad, ids, dv / ids.size)
            grad /= len(batch)

            step += 1
            lr = cfg.learning_rate
            if warmup_steps > 0 and step <= warmup_steps:
                lr *= step / warmup_steps
            m *= cfg.adam_beta1
            m += (1.0 - cfg.adam_beta1) * grad
            v *= cfg.adam_beta2
            v += (1.0 - cfg.adam_beta2) * np.square(grad)
            m_hat = m / (1.0 - cfg.adam_beta1 ** step)
            v_hat = v / (1.0 - cfg.adam_beta2 ** step)
            model.table -= lr * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)

        dev_loss = None
        if dev_set is not None and dev_set.entries:
            dev_loss = _dataset_loss(model, dev_set, cfg.margin)
        history.epochs.append(
            EpochStats(epoch=epoch, train_loss=epoch_loss / n, dev_loss=dev_loss)
        )
    return model, history
