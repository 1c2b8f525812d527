"""Target-transition proposals for training the execution policy."""
from __future__ import annotations

import numpy as np

from .algebra import compose
from .memory import Memory, feasible_set


def gamma_weight(memory: Memory, rho, delta) -> float:
    """min_k expl_k(target) / (1 + min_k exec_k(target)) at target = rho + delta."""
    target = compose(memory.space, rho, delta)
    if target is None:
        raise ValueError("delta is not composable at rho")
    num = min(memory.expl.marginals_of(target))
    den = 1 + min(memory.exec.marginals_of(target))
    return num / den


def proposal_distribution(memory: Memory, ed, rho, s0: float, p0: float):
    """The filtered candidates and the mixture probabilities over them."""
    cands = feasible_set(memory.buffer, ed, rho, p0)
    if not cands:
        return [], np.zeros(0)
    n = len(cands)
    uniform = np.full(n, 1.0 / n)
    g = np.array([gamma_weight(memory, rho, d) for d in cands])
    weighted = g / g.sum() if g.sum() > 0 else uniform
    return cands, s0 * uniform + (1.0 - s0) * weighted


def propose(memory: Memory, ed, rho, s0: float, p0: float, rng: np.random.Generator):
    """Draw a target delta, or None when nothing in the buffer passes the filter.

    With probability ``s0`` the draw is uniform over the filtered buffer,
    otherwise proportional to the gamma weight (uniform if every weight is 0).
    """
    if not 0.0 <= s0 <= 1.0:
        raise ValueError("s0 must lie in [0, 1]")
    cands = feasible_set(memory.buffer, ed, rho, p0)
    if not cands:
        return None
    if rng.random() < s0:
        return cands[int(rng.integers(len(cands)))]
    g = np.array([gamma_weight(memory, rho, d) for d in cands])
    if g.sum() <= 0:
        return cands[int(rng.integers(len(cands)))]
    c = np.cumsum(g)
    i = int(np.searchsorted(c, rng.random() * c[-1], side="right"))
    return cands[min(i, len(cands) - 1)]
