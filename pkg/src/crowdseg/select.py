"""Batch selection strategies over the pool of unannotated images.

Strategies:
  entropy  rank by mean per-pixel binary entropy, most uncertain first
  margin   rank by mean |p - 0.5|, smallest (most uncertain) first
  random   seeded uniform draw without replacement

The random draw uses a fixed 64-bit linear congruential generator
(state = state * 6364136223846793005 + 1442695040888963407 mod 2^64,
seeded directly with the caller's seed) driving a partial Fisher-Yates
shuffle of the pool sorted by image id. Pure integer arithmetic, so
batches reproduce across runs and platforms. See docs/protocol.md.

Images without a probability map rank after all scored images so one
failed pre-segmentation never blocks a batch. All ties break ascending
by image id.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import UnknownStrategy
from .vision import ProbabilityMap

STRATEGIES = ("random", "entropy", "margin")

_LCG_MUL = 6364136223846793005
_LCG_ADD = 1442695040888963407
_LCG_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class CandidateScore:
    image_id: str
    score: float
    strategy: str

    def __post_init__(self):
        if not np.isfinite(self.score):
            raise ValueError("score must be finite")


@dataclass(frozen=True)
class StrategySpec:
    name: str
    k: int
    seed: int | None = None

    def __post_init__(self):
        if self.name not in STRATEGIES:
            raise UnknownStrategy(f"unknown strategy {self.name!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.name == "random":
            if self.seed is None:
                raise ValueError("random strategy requires a seed")
            if not 0 <= self.seed < 2**64:
                raise ValueError("seed must fit in 64 bits")


def score_entropy(pmap: ProbabilityMap) -> float:
    """Mean binary entropy in nats; H(0) = H(1) = 0 by continuity."""
    p = pmap.values
    out = np.zeros_like(p)
    interior = (p > 0.0) & (p < 1.0)
    pi = p[interior]
    out[interior] = -pi * np.log(pi) - (1.0 - pi) * np.log(1.0 - pi)
    return float(out.mean())


def score_margin(pmap: ProbabilityMap) -> float:
    """Mean |p - 0.5|; lower means more uncertain."""
    return float(np.abs(pmap.values - 0.5).mean())


class Lcg:
    """The fixed 64-bit linear congruential generator for random batches."""

    def __init__(self, seed: int):
        self.state = seed & _LCG_MASK

    def next(self) -> int:
        self.state = (self.state * _LCG_MUL + _LCG_ADD) & _LCG_MASK
        return self.state


def _random_batch(ids: list[str], k: int, seed: int) -> list[str]:
    gen = Lcg(seed)
    pool = sorted(ids)
    n = len(pool)
    take = min(k, n)
    for i in range(take):
        j = i + gen.next() % (n - i)
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:take]


def next_batch(
    pool: Sequence[tuple[str, ProbabilityMap | None]],
    spec: StrategySpec,
) -> list[str]:
    """Pick the next ids to annotate; size min(k, |pool|), no duplicates."""
    if not pool:
        return []
    ids = [image_id for image_id, _ in pool]
    if len(set(ids)) != len(ids):
        raise ValueError("pool contains duplicate image ids")

    if spec.name == "random":
        return _random_batch(ids, spec.k, spec.seed)

    scorer = score_entropy if spec.name == "entropy" else score_margin
    scored: list[tuple[float, str]] = []
    unscored: list[str] = []
    for image_id, pmap in pool:
        if pmap is None:
            unscored.append(image_id)
        else:
            scored.append((scorer(pmap), image_id))

    if spec.name == "entropy":
        scored.sort(key=lambda t: (-t[0], t[1]))
    else:
        scored.sort(key=lambda t: (t[0], t[1]))
    ranked = [image_id for _, image_id in scored] + sorted(unscored)
    return ranked[:min(spec.k, len(ranked))]
