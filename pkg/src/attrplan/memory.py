"""Non-parametric memory: per-coordinate visit counts and the transition buffer."""
from __future__ import annotations

from collections import Counter

from .algebra import AttributeSpace, compose, quantize, quantize_delta


class MarginalCounts:
    """One histogram per attribute coordinate, keyed by quantized value."""

    def __init__(self, space: AttributeSpace):
        self.space = space
        self.counts = [Counter() for _ in space.blocks]
        self.total = 0

    def record_visit(self, rho) -> None:
        for c, v in zip(self.counts, quantize(self.space, rho)):
            c[v] += 1
        self.total += 1

    def marginal(self, k: int, value) -> int:
        """Count of the (already quantized) value ``value`` on coordinate ``k``."""
        return self.counts[k].get(value, 0)

    def marginals_of(self, rho) -> list[int]:
        return [c.get(v, 0) for c, v in zip(self.counts, quantize(self.space, rho))]

    def to_dict(self) -> dict:
        return {"total": self.total,
                "counts": [[[k, n] for k, n in sorted(c.items())] for c in self.counts]}

    @classmethod
    def from_dict(cls, space: AttributeSpace, d: dict) -> "MarginalCounts":
        m = cls(space)
        m.total = d["total"]
        m.counts = [Counter({k: n for k, n in c}) for c in d["counts"]]
        return m


class TransitionBuffer:
    """Distinct observed deltas (deduplicated on the quantization grid)."""

    def __init__(self, space: AttributeSpace):
        self.space = space
        self.deltas: list[tuple] = []
        self._keys: set = set()

    def __len__(self) -> int:
        return len(self.deltas)

    def __iter__(self):
        return iter(self.deltas)

    def __contains__(self, delta) -> bool:
        return quantize_delta(self.space, delta) in self._keys

    def insert_transition(self, delta) -> bool:
        if self.space.is_zero(delta):
            return False
        key = quantize_delta(self.space, delta)
        if key in self._keys:
            return False
        self._keys.add(key)
        self.deltas.append(tuple(delta))
        return True

    def to_list(self) -> list:
        return [list(d) for d in self.deltas]

    @classmethod
    def from_list(cls, space: AttributeSpace, deltas) -> "TransitionBuffer":
        b = cls(space)
        for d in deltas:
            b.insert_transition(tuple(d))
        return b


class Memory:
    def __init__(self, space: AttributeSpace):
        self.space = space
        self.expl = MarginalCounts(space)
        self.exec = MarginalCounts(space)
        self.buffer = TransitionBuffer(space)

    def to_dict(self) -> dict:
        return {"expl": self.expl.to_dict(), "exec": self.exec.to_dict(),
                "buffer": self.buffer.to_list()}

    @classmethod
    def from_dict(cls, space: AttributeSpace, d: dict) -> "Memory":
        m = cls(space)
        m.expl = MarginalCounts.from_dict(space, d["expl"])
        m.exec = MarginalCounts.from_dict(space, d["exec"])
        m.buffer = TransitionBuffer.from_list(space, d["buffer"])
        return m


def feasible_set(buffer: TransitionBuffer, ed, rho, p0: float) -> list[tuple]:
    """Buffer deltas composable at ``rho`` whose edge probability exceeds ``p0``."""
    cands = [d for d in buffer if compose(buffer.space, rho, d) is not None]
    if not cands:
        return []
    probs = ed.predict_many(rho, cands)
    return [d for d, p in zip(cands, probs) if p > p0]
