"""A small numpy MLP (two tanh hidden layers) with analytic gradients and Adam."""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

SOFTMAX = "softmax"
LOGISTIC = "logistic"
LINEAR = "linear"
HEADS = (SOFTMAX, LOGISTIC, LINEAR)

CHECKPOINT_VERSION = 1
PARAM_NAMES = ("W1", "b1", "W2", "b2", "W3", "b3")


class Mlp:
    """input -> hidden -> hidden -> output, tanh activations, task head on top.

    ``forward`` accepts a single vector or a batch (rows). Outputs are
    probabilities for the softmax and logistic heads, raw values otherwise.
    """

    def __init__(self, n_in: int, n_out: int, head: str = LINEAR, hidden: int = 128,
                 rng: np.random.Generator | None = None, out_scale: float = 0.01):
        if head not in HEADS:
            raise ValueError(f"unknown head {head!r}")
        self.n_in, self.n_out, self.head, self.hidden = n_in, n_out, head, hidden
        self.params: dict[str, np.ndarray] = {}
        if rng is None:
            for name, shape in self.shapes().items():
                self.params[name] = np.zeros(shape)
        else:
            self.params["W1"] = rng.normal(0.0, 1.0 / np.sqrt(n_in), (n_in, hidden))
            self.params["b1"] = np.zeros(hidden)
            self.params["W2"] = rng.normal(0.0, 1.0 / np.sqrt(hidden), (hidden, hidden))
            self.params["b2"] = np.zeros(hidden)
            self.params["W3"] = rng.normal(0.0, out_scale / np.sqrt(hidden), (hidden, n_out))
            self.params["b3"] = np.zeros(n_out)

    def shapes(self) -> dict[str, tuple]:
        h = self.hidden
        return {"W1": (self.n_in, h), "b1": (h,), "W2": (h, h), "b2": (h,),
                "W3": (h, self.n_out), "b3": (self.n_out,)}

    def copy(self) -> "Mlp":
        m = Mlp(self.n_in, self.n_out, self.head, self.hidden)
        m.params = {k: v.copy() for k, v in self.params.items()}
        return m

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n_in:
            raise ValueError(f"input arity {x.shape[-1]} != {self.n_in}")
        return x

    def logits(self, x: np.ndarray, cache: bool = False):
        x = self._check_input(x)
        p = self.params
        h1 = np.tanh(x @ p["W1"] + p["b1"])
        h2 = np.tanh(h1 @ p["W2"] + p["b2"])
        z = h2 @ p["W3"] + p["b3"]
        if cache:
            return z, (x, h1, h2)
        return z

    def forward(self, x: np.ndarray) -> np.ndarray:
        return apply_head(self.head, self.logits(x))

    __call__ = forward

    def backward(self, cache, grad_logits: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients of the loss with respect to every parameter.

        ``grad_logits`` is dL/dz for the pre-head outputs ``z`` (same shape as
        the logits that produced ``cache``). Batch gradients are summed.
        """
        x, h1, h2 = cache
        g = np.asarray(grad_logits, dtype=float)
        if g.shape[-1] != self.n_out or g.shape[:-1] != h2.shape[:-1]:
            raise ValueError("grad_logits shape does not match the forward pass")
        if x.ndim == 1:
            x, h1, h2, g = x[None], h1[None], h2[None], g[None]
        p = self.params
        grads = {"W3": h2.T @ g, "b3": g.sum(0)}
        d2 = (g @ p["W3"].T) * (1.0 - h2 ** 2)
        grads["W2"] = h1.T @ d2
        grads["b2"] = d2.sum(0)
        d1 = (d2 @ p["W2"].T) * (1.0 - h1 ** 2)
        grads["W1"] = x.T @ d1
        grads["b1"] = d1.sum(0)
        return grads

    def save(self, path_or_file) -> None:
        np.savez(path_or_file, **checkpoint_arrays(self))

    @classmethod
    def load(cls, path_or_file) -> "Mlp":
        with np.load(path_or_file) as z:
            return from_checkpoint_arrays(dict(z))

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        self.save(buf)
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Mlp":
        return cls.load(io.BytesIO(data))


def checkpoint_arrays(model: Mlp, prefix: str = "") -> dict[str, np.ndarray]:
    out = {prefix + "version": np.array(CHECKPOINT_VERSION),
           prefix + "meta": np.array([model.n_in, model.n_out, model.hidden]),
           prefix + "head": np.array(model.head)}
    for k in PARAM_NAMES:
        out[prefix + k] = model.params[k]
    return out


def from_checkpoint_arrays(arrays: dict, prefix: str = "") -> Mlp:
    version = int(arrays[prefix + "version"])
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    n_in, n_out, hidden = (int(v) for v in arrays[prefix + "meta"])
    m = Mlp(n_in, n_out, str(arrays[prefix + "head"]), hidden)
    for k in PARAM_NAMES:
        a = np.array(arrays[prefix + k], dtype=float)
        if a.shape != m.params[k].shape:
            raise ValueError(f"bad shape for {k}: {a.shape}")
        m.params[k] = a
    return m


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def apply_head(head: str, z: np.ndarray) -> np.ndarray:
    if head == SOFTMAX:
        return softmax(z)
    if head == LOGISTIC:
        return sigmoid(z)
    return z


# Losses return (mean loss, dL/dlogits). They are what the gradient checker and
# the training code differentiate through.

def logistic_loss(z: np.ndarray, labels: np.ndarray, weights: np.ndarray | None = None):
    z = np.asarray(z, dtype=float).reshape(len(labels), -1)[:, 0]
    y = np.asarray(labels, dtype=float)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    n = len(y)
    # log(1 + e^z) - y z, written stably
    loss = np.logaddexp(0.0, z) - y * z
    grad = (sigmoid(z) - y) * w / n
    return float((loss * w).sum() / n), grad[:, None]


def softmax_xent_loss(z: np.ndarray, actions: np.ndarray, weights: np.ndarray | None = None):
    """Weighted negative log-likelihood. With advantages as weights this is the
    score-function (policy gradient) surrogate."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    a = np.asarray(actions, dtype=int)
    w = np.ones(len(a)) if weights is None else np.asarray(weights, dtype=float)
    n = len(a)
    zs = z - z.max(axis=1, keepdims=True)
    logp = zs - np.log(np.exp(zs).sum(axis=1, keepdims=True))
    loss = -(w * logp[np.arange(n), a]).sum() / n
    p = np.exp(logp)
    grad = p.copy()
    grad[np.arange(n), a] -= 1.0
    grad *= (w / n)[:, None]
    return float(loss), grad


def entropy_bonus(z: np.ndarray):
    """Mean entropy of softmax(z) and its gradient with respect to z."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    n = len(z)
    zs = z - z.max(axis=1, keepdims=True)
    logp = zs - np.log(np.exp(zs).sum(axis=1, keepdims=True))
    p = np.exp(logp)
    ent = -(p * logp).sum(axis=1)
    # dH/dz_k = -p_k (log p_k + H)
    grad = -p * (logp + ent[:, None]) / n
    return float(ent.mean()), grad


def mse_loss(z: np.ndarray, targets: np.ndarray):
    z = np.atleast_2d(np.asarray(z, dtype=float))
    t = np.atleast_2d(np.asarray(targets, dtype=float))
    n = len(z)
    r = z - t
    return float((r ** 2).sum() / n), 2.0 * r / n


@dataclass
class Adam:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, model: Mlp, grads: dict[str, np.ndarray], max_norm: float | None = None) -> Mlp:
        """In-place parameter update; returns the model for chaining."""
        for k, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise FloatingPointError(f"non-finite gradient for {k}")
        if max_norm is not None:
            norm = np.sqrt(sum(float((g ** 2).sum()) for g in grads.values()))
            if norm > max_norm:
                grads = {k: g * (max_norm / norm) for k, g in grads.items()}
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for k, g in grads.items():
            if k not in self.m:
                self.m[k] = np.zeros_like(g)
                self.v[k] = np.zeros_like(g)
            self.m[k] = b1 * self.m[k] + (1.0 - b1) * g
            self.v[k] = b2 * self.v[k] + (1.0 - b2) * g * g
            model.params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)
        return model

    def state_arrays(self, prefix: str = "") -> dict[str, np.ndarray]:
        out = {prefix + "t": np.array(self.t), prefix + "lr": np.array(self.lr)}
        for k in self.m:
            out[prefix + "m_" + k] = self.m[k]
            out[prefix + "v_" + k] = self.v[k]
        return out

    def load_state_arrays(self, arrays: dict, prefix: str = "") -> None:
        self.t = int(arrays[prefix + "t"])
        self.lr = float(arrays[prefix + "lr"])
        self.m, self.v = {}, {}
        for k in PARAM_NAMES:
            if prefix + "m_" + k in arrays:
                self.m[k] = np.array(arrays[prefix + "m_" + k])
                self.v[k] = np.array(arrays[prefix + "v_" + k])


def sample_categorical(probs, rng: np.random.Generator) -> int:
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or len(p) == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-6:
        raise ValueError("probs must be a valid distribution")
    c = np.cumsum(p)
    i = int(np.searchsorted(c, rng.random() * c[-1], side="right"))
    return min(i, len(p) - 1)


def finite_difference_grads(model: Mlp, loss_fn, eps: float = 1e-5) -> dict[str, np.ndarray]:
    """Central-difference gradient of ``loss_fn(model)`` for every parameter."""
    out = {}
    for k, w in model.params.items():
        g = np.zeros_like(w)
        flat, gflat = w.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + eps
            lp = loss_fn(model)
            flat[i] = old - eps
            lm = loss_fn(model)
            flat[i] = old
            gflat[i] = (lp - lm) / (2 * eps)
        out[k] = g
    return out


def max_relative_error(a: dict, b: dict, floor: float = 1e-8) -> float:
    worst = 0.0
    for k in a:
        num = np.abs(a[k] - b[k])
        den = np.maximum(np.abs(a[k]) + np.abs(b[k]), floor)
        worst = max(worst, float((num / den).max()))
    return worst
