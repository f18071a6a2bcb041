"""Mini-batch Adam training with teacher forcing."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingDiverged
from .model import (HyperParams, Model, encode_example, forward, init_params, loss_and_grads,
                    make_batch)
from .vocab import Vocab, build_vocab

log = logging.getLogger(__name__)

CLIP_NORM = 5.0


@dataclass
class TrainReport:
    losses: list
    model: Model
    seed: int
    val_losses: list = field(default_factory=list)


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1 - self.b1 ** self.t
        c2 = 1 - self.b2 ** self.t
        for k in sorted(params):
            g = grads[k]
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def clip_grads(grads, max_norm=CLIP_NORM):
    total = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return total


def _batches(encoded, batch_size):
    return [make_batch(encoded[i:i + batch_size]) for i in range(0, len(encoded), batch_size)]


def mean_loss(model: Model, examples) -> float:
    """Token-weighted mean cross-entropy without dropout."""
    enc = [encode_example(model.vocab, model.hyper, t, c) for t, c in examples]
    total = tokens = 0.0
    for b in _batches(enc, model.hyper.batch_size):
        loss, _ = forward(model.params, b)
        n = b.tmask.sum()
        total += loss * n
        tokens += n
    return total / tokens


def train(train_set, val_set, hyper: HyperParams, vocab: Vocab | None = None,
          progress=None) -> TrainReport:
    """Train on ``(target tokens, contexts)`` pairs.

    Everything random (init, shuffling, dropout) derives from ``hyper.seed``.
    ``progress`` is called as ``progress(epoch, loss)`` after each epoch.
    """
    train_set = list(train_set)
    if not train_set:
        raise ValueError("training set is empty")
    vocab = vocab or build_vocab(train_set)
    params = init_params(hyper, vocab)
    model = Model(hyper, vocab, params)
    encoded = [encode_example(vocab, hyper, t, c) for t, c in train_set]
    rng = np.random.default_rng(hyper.seed + 1)
    opt = Adam(params, hyper.learning_rate)
    losses, val_losses = [], []
    for epoch in range(hyper.epochs):
        order = rng.permutation(len(encoded))
        total = tokens = 0.0
        for start in range(0, len(order), hyper.batch_size):
            batch = make_batch([encoded[i] for i in order[start:start + hyper.batch_size]])
            loss, grads = loss_and_grads(params, batch, hyper.dropout_keep, rng)
            if not math.isfinite(loss):
                raise TrainingDiverged(
                    f"loss became {loss} in epoch {epoch + 1}; "
                    f"try a learning rate below {hyper.learning_rate:g}")
            clip_grads(grads)
            opt.step(params, grads)
            n = batch.tmask.sum()
            total += loss * n
            tokens += n
        losses.append(total / tokens)
        if val_set:
            val_losses.append(mean_loss(model, val_set))
        log.info("epoch %d loss %.4f", epoch + 1, losses[-1])
        if progress is not None:
            progress(epoch + 1, losses[-1])
    return TrainReport(losses, model, hyper.seed, val_losses)
