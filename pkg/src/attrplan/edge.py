"""Learned edge detector ED(rho, delta): probability that rho -> rho + delta is feasible."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import AttributeSpace, DimensionError, encode
from .nn import LOGISTIC, Adam, Mlp, logistic_loss

EPS = 1e-6
POSITIVE, NEGATIVE = 1, 0


@dataclass(frozen=True)
class TransitionSample:
    rho: tuple
    delta: tuple
    label: int
    weight: float = 1.0


class Ring:
    """Fixed-capacity FIFO with O(1) random access; oldest entry is evicted."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.items: list = []
        self.head = 0

    def append(self, item) -> None:
        if len(self.items) < self.capacity:
            self.items.append(item)
        else:
            self.items[self.head] = item
            self.head = (self.head + 1) % self.capacity

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, i):
        return self.items[(self.head + i) % len(self.items)]

    def __iter__(self):
        for i in range(len(self.items)):
            yield self[i]


class EdgeDetector:
    def __init__(self, space: AttributeSpace, hidden: int = 128, capacity: int = 50_000,
                 lr: float = 1e-3, rng: np.random.Generator | None = None):
        self.space = space
        self.capacity = capacity
        self.mlp = Mlp(2 * space.encoding_size, 1, LOGISTIC, hidden, rng=rng, out_scale=0.01)
        self.opt = Adam(lr=lr)
        self.queues = {POSITIVE: Ring(capacity), NEGATIVE: Ring(capacity)}
        self.pushed = {POSITIVE: 0, NEGATIVE: 0}

    def inputs(self, rho, delta) -> np.ndarray:
        if len(rho) != len(self.space) or len(delta) != len(self.space):
            raise DimensionError("rho/delta arity does not match the attribute space")
        return np.concatenate([encode(self.space, rho), encode(self.space, delta)])

    def predict(self, rho, delta) -> float:
        p = float(self.mlp.forward(self.inputs(rho, delta))[0])
        return min(max(p, EPS), 1.0 - EPS)

    def predict_many(self, rho, deltas) -> np.ndarray:
        """ED(rho, d) for every d in ``deltas`` in a single forward pass."""
        if len(deltas) == 0:
            return np.zeros(0)
        x = np.stack([self.inputs(rho, d) for d in deltas])
        return np.clip(self.mlp.forward(x)[:, 0], EPS, 1.0 - EPS)

    def push_label(self, sample: TransitionSample) -> None:
        if len(sample.delta) != len(self.space):
            raise DimensionError("delta arity does not match the attribute space")
        self.queues[sample.label].append((sample, self.inputs(sample.rho, sample.delta)))
        self.pushed[sample.label] += 1

    def sample_batch(self, batch_size: int, rng: np.random.Generator):
        """Class-balanced batch drawn with replacement: ceil(b/2) positives."""
        n_pos = (batch_size + 1) // 2
        out = []
        for label, n in ((POSITIVE, n_pos), (NEGATIVE, batch_size - n_pos)):
            q = self.queues[label]
            idx = rng.integers(len(q), size=n)
            out.extend(q[i][0] for i in idx)
        return out

    def train_batch(self, batch_size: int, rng: np.random.Generator) -> float:
        """One optimizer step on a balanced minibatch; returns the pre-step loss.

        Returns NaN (and does nothing) while either queue is empty.
        """
        if not self.queues[POSITIVE] or not self.queues[NEGATIVE]:
            return float("nan")
        n_pos = (batch_size + 1) // 2
        rows = []
        for label, n in ((POSITIVE, n_pos), (NEGATIVE, batch_size - n_pos)):
            q = self.queues[label]
            rows.extend(q[i] for i in rng.integers(len(q), size=n))
        x = np.stack([r[1] for r in rows])
        y = np.array([r[0].label for r in rows], dtype=float)
        w = np.array([r[0].weight for r in rows], dtype=float)
        return self._step(x, y, w)

    def fit(self, batch) -> float:
        """One optimizer step on an explicit list of samples."""
        x = np.stack([self.inputs(s.rho, s.delta) for s in batch])
        y = np.array([s.label for s in batch], dtype=float)
        w = np.array([s.weight for s in batch], dtype=float)
        return self._step(x, y, w)

    def _step(self, x, y, w) -> float:
        z, cache = self.mlp.logits(x, cache=True)
        loss, g = logistic_loss(z, y, w)
        self.opt.step(self.mlp, self.mlp.backward(cache, g))
        return loss


class OracleEdge:
    """Stand-in detector backed by a ground-truth admissibility test."""

    def __init__(self, admissible, p_true: float = 0.99, p_false: float = 0.01):
        self.admissible = admissible
        self.p_true, self.p_false = p_true, p_false

    @classmethod
    def for_env(cls, env, p_true: float = 0.99, p_false: float = 0.01) -> "OracleEdge":
        """Admissible iff ``delta`` is among the env's oracle deltas at ``rho``."""
        if hasattr(env, "matches_oracle"):
            def ok(rho, d):
                return env.matches_oracle(d, env.oracle_admissible_deltas(rho))
        else:
            def ok(rho, d):
                return tuple(d) in set(map(tuple, env.oracle_admissible_deltas(rho)))
        return cls(ok, p_true, p_false)

    def predict(self, rho, delta) -> float:
        return self.p_true if self.admissible(rho, delta) else self.p_false

    def predict_many(self, rho, deltas) -> np.ndarray:
        return np.array([self.predict(rho, d) for d in deltas])
