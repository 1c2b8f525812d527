"""Structured attribute spaces built as products of elementary groups and monoids.

An :class:`AttributeSpace` is an ordered list of :class:`GroupBlock` objects.
Attribute values and deltas are plain tuples with one entry per block, so they
are hashable and can be used directly as dictionary keys.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

NAT = "nat"
INT = "int"
REAL = "real"
MODQ = "modq"
KINDS = (NAT, INT, REAL, MODQ)

DEFAULT_BINS = 20
DEFAULT_SCALE = 10.0


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class GroupBlock:
    kind: str
    q: int = 0
    bins: int = DEFAULT_BINS
    range_hint: Optional[tuple[float, float]] = None
    scale: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown block kind {self.kind!r}")
        if self.kind == MODQ and self.q < 2:
            raise ValueError("ModQ block needs q >= 2")
        if self.bins < 1:
            raise ValueError("bins must be >= 1")
        if self.range_hint is not None:
            lo, hi = self.range_hint
            if not lo < hi:
                raise ValueError("range_hint needs lo < hi")
            object.__setattr__(self, "range_hint", (float(lo), float(hi)))

    @property
    def width(self) -> int:
        """Number of reals this block contributes to an encoding."""
        return 2 if self.kind == MODQ else 1

    @property
    def encode_scale(self) -> float:
        if self.scale is not None:
            return float(self.scale)
        if self.range_hint is not None:
            return self.range_hint[1] - self.range_hint[0]
        return DEFAULT_SCALE

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == MODQ:
            d["q"] = self.q
        if self.kind == REAL:
            d["bins"] = self.bins
        if self.range_hint is not None:
            d["range_hint"] = list(self.range_hint)
        if self.scale is not None:
            d["scale"] = self.scale
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GroupBlock":
        rh = d.get("range_hint")
        return cls(kind=d["kind"], q=d.get("q", 0), bins=d.get("bins", DEFAULT_BINS),
                   range_hint=tuple(rh) if rh is not None else None, scale=d.get("scale"))


def Nat(**kw) -> GroupBlock:
    return GroupBlock(NAT, **kw)


def Int(**kw) -> GroupBlock:
    return GroupBlock(INT, **kw)


def Real(lo: float, hi: float, bins: int = DEFAULT_BINS, **kw) -> GroupBlock:
    return GroupBlock(REAL, bins=bins, range_hint=(lo, hi), **kw)


def ModQ(q: int, **kw) -> GroupBlock:
    return GroupBlock(MODQ, q=q, **kw)


@dataclass(frozen=True)
class AttributeSpace:
    blocks: tuple[GroupBlock, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if len(self.blocks) < 1:
            raise ValueError("an attribute space needs at least one block")

    def __len__(self) -> int:
        return len(self.blocks)

    @property
    def encoding_size(self) -> int:
        return sum(b.width for b in self.blocks)

    def zero(self) -> tuple:
        return tuple(0.0 if b.kind == REAL else 0 for b in self.blocks)

    def is_zero(self, delta: Sequence) -> bool:
        return all(v == 0 for v in delta)

    def to_list(self) -> list[dict]:
        return [b.to_dict() for b in self.blocks]

    @classmethod
    def from_list(cls, blocks: list[dict]) -> "AttributeSpace":
        return cls(tuple(GroupBlock.from_dict(b) for b in blocks))


def _check(space: AttributeSpace, *vals: Sequence) -> None:
    for v in vals:
        if len(v) != len(space.blocks):
            raise DimensionError(f"expected {len(space.blocks)} coordinates, got {len(v)}")


def compose(space: AttributeSpace, rho: Sequence, delta: Sequence) -> Optional[tuple]:
    """Apply ``delta`` to ``rho`` coordinate-wise.

    Returns ``None`` when a natural-number coordinate would go negative;
    ModQ coordinates wrap around.
    """
    _check(space, rho, delta)
    out = []
    for b, r, d in zip(space.blocks, rho, delta):
        if b.kind == MODQ:
            out.append((int(r) + int(d)) % b.q)
        elif b.kind == REAL:
            out.append(float(r) + float(d))
        else:
            v = int(r) + int(d)
            if b.kind == NAT and v < 0:
                return None
            out.append(v)
    return tuple(out)


def diff(space: AttributeSpace, rho1: Sequence, rho0: Sequence) -> tuple:
    """The delta taking ``rho0`` to ``rho1`` (``rho1 + rho0^{-1}``)."""
    _check(space, rho1, rho0)
    out = []
    for b, a, c in zip(space.blocks, rho1, rho0):
        if b.kind == MODQ:
            out.append((int(a) - int(c)) % b.q)
        elif b.kind == REAL:
            out.append(float(a) - float(c))
        else:
            out.append(int(a) - int(c))
    return tuple(out)


def encode(space: AttributeSpace, value: Sequence) -> np.ndarray:
    """Real-vector featurization of a value or delta.

    Numeric coordinates are divided by the block scale; ModQ coordinates are
    embedded on the circle as ``(sin 2pi v/q, cos 2pi v/q)``.
    """
    _check(space, value)
    out = np.empty(space.encoding_size)
    i = 0
    for b, v in zip(space.blocks, value):
        if b.kind == MODQ:
            t = 2.0 * math.pi * (int(v) % b.q) / b.q
            out[i] = math.sin(t)
            out[i + 1] = math.cos(t)
            i += 2
        else:
            out[i] = float(v) / b.encode_scale
            i += 1
    return out


def encode_many(space: AttributeSpace, values: Sequence[Sequence]) -> np.ndarray:
    if len(values) == 0:
        return np.zeros((0, space.encoding_size))
    return np.stack([encode(space, v) for v in values])


def _real_bin(b: GroupBlock, v: float) -> int:
    if b.range_hint is None:
        raise ValueError("Real block needs range_hint to be quantized")
    lo, hi = b.range_hint
    k = math.floor((float(v) - lo) / (hi - lo) * b.bins)
    return min(max(k, 0), b.bins - 1)


def quantize(space: AttributeSpace, rho: Sequence) -> tuple:
    """Integer bin index per coordinate; Real coordinates are binned and clamped."""
    _check(space, rho)
    return tuple(_real_bin(b, v) if b.kind == REAL else int(v)
                 for b, v in zip(space.blocks, rho))


def quantize_delta(space: AttributeSpace, delta: Sequence) -> tuple:
    """Bin a delta on the same grid spacing used for values (no clamping)."""
    _check(space, delta)
    out = []
    for b, v in zip(space.blocks, delta):
        if b.kind == REAL:
            if b.range_hint is None:
                raise ValueError("Real block needs range_hint to be quantized")
            w = (b.range_hint[1] - b.range_hint[0]) / b.bins
            out.append(math.floor(float(v) / w))
        else:
            out.append(int(v))
    return tuple(out)


def output_arity(space: AttributeSpace) -> int:
    return space.encoding_size


def regressor_loss(space: AttributeSpace, y: Sequence[float], rho: Sequence) -> tuple[float, tuple]:
    """Per-coordinate regression loss of a raw output ``y`` against ``rho``.

    Squared error for numeric blocks; ``1 - <u/|u|, e^{2 pi i rho/q}>`` for
    ModQ blocks. Also returns the decoded attribute value.
    """
    _check(space, rho)
    y = np.asarray(y, dtype=float)
    if y.shape != (space.encoding_size,):
        raise DimensionError(f"expected output of size {space.encoding_size}, got {y.shape}")
    loss = 0.0
    decoded = []
    i = 0
    for b, r in zip(space.blocks, rho):
        if b.kind == MODQ:
            u = y[i:i + 2]
            i += 2
            n = float(np.hypot(u[0], u[1]))
            u = u / n if n > 0 else np.array([0.0, 1.0])
            t = 2.0 * math.pi * int(r) / b.q
            loss += 1.0 - (u[0] * math.sin(t) + u[1] * math.cos(t))
            theta = math.atan2(u[0], u[1])
            decoded.append(int(round(theta * b.q / (2.0 * math.pi))) % b.q)
        else:
            v = float(y[i])
            i += 1
            loss += (v - float(r)) ** 2
            if b.kind == REAL:
                decoded.append(v)
            elif b.kind == NAT:
                decoded.append(max(int(round(v)), 0))
            else:
                decoded.append(int(round(v)))
    return float(loss), tuple(decoded)
