"""A-posteriori selection among non-dominated structures (MMD and MTD rankings)."""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from evolution_core import ArchiveEntry, Genome, ObjectiveVector, non_dominated_filter
from exceptions import ArgumentError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PreferenceSpec:
    """Objective importance ranks (1 = most important) and preference intensity"""

    ranks: Tuple[int, ...] = (1, 2)
    intensity: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        if sorted(self.ranks) != list(range(1, len(self.ranks) + 1)):
            raise ArgumentError(f"objective ranks must be a permutation of 1..m, got {self.ranks}")
        if not 1.0 <= self.intensity <= 9.0:
            raise ArgumentError(f"preference intensity must lie in [1, 9], got {self.intensity}")


@dataclass(frozen=True)
class WeightVector:
    w: Tuple[float, ...]
    raw: Tuple[float, ...] = ()

    def __post_init__(self):
        if any(v < 0 for v in self.w) or abs(sum(self.w) - 1.0) > 1e-9:
            raise ArgumentError(f"weights must be non-negative and sum to 1, got {self.w}")


def preference_weights(spec: PreferenceSpec, m: int = None) -> WeightVector:
    """Geometric-mean weights of the multiplicative preference matrix.

    a_ij = I ** ((O_j - O_i) / (m - 1)); w_i = (prod_j a_ij) ** (1/m), normalised.
    """
    m = len(spec.ranks) if m is None else m
    if m < 2:
        raise ArgumentError("preference weights need at least two objectives")
    if len(spec.ranks) != m:
        raise ArgumentError(f"{len(spec.ranks)} ranks given for {m} objectives")

    ranks = np.asarray(spec.ranks, dtype=float)
    exponents = (ranks[None, :] - ranks[:, None]) / (m - 1)
    relation = spec.intensity ** exponents
    raw = np.prod(relation, axis=1) ** (1.0 / m)
    weights = raw / raw.sum()
    return WeightVector(tuple(float(v) for v in weights), tuple(float(v) for v in raw))


@dataclass(frozen=True)
class RankedEntry:
    entry: ArchiveEntry
    score: float

    @property
    def objectives(self) -> ObjectiveVector:
        return self.entry.objectives


@dataclass
class RankedFront:
    method: str
    entries: List[RankedEntry] = field(default_factory=list)

    @property
    def score_name(self) -> str:
        return "mmd_d" if self.method == "mmd" else "mtd_r"

    def top(self, n: int = 5) -> List[RankedEntry]:
        return self.entries[:n]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "rank": list(range(1, len(self.entries) + 1)),
                "xi": [r.objectives.xi for r in self.entries],
                "nmse": [r.objectives.nmse for r in self.entries],
                self.score_name: [r.score for r in self.entries],
                "bits": [str(r.entry.genome) for r in self.entries],
            }
        )


FrontInput = Sequence[Union[ArchiveEntry, ObjectiveVector]]


def _as_entries(front: FrontInput) -> List[ArchiveEntry]:
    entries = []
    for item in front:
        if isinstance(item, ArchiveEntry):
            entries.append(item)
        else:
            # bare objective vectors get a unique placeholder genome
            entries.append(ArchiveEntry(Genome(len(entries).to_bytes(4, "big")), item))
    filtered = non_dominated_filter(entries)
    if len(filtered) < len(entries):
        logger.warning(f"ranker dropped {len(entries) - len(filtered)} dominated or duplicate entries")
    return filtered


def _tie_key(entry: ArchiveEntry) -> Tuple:
    return (entry.objectives.xi, entry.objectives.nmse, entry.genome.bits)


def mmd_rank(front: FrontInput) -> RankedFront:
    """Ascending normalised Manhattan distance to the ideal point"""
    entries = _as_entries(front)
    if not entries:
        raise ArgumentError("cannot rank an empty front")

    points = np.array([e.objectives.point for e in entries], dtype=float)
    lower, upper = points.min(axis=0), points.max(axis=0)
    span = upper - lower
    scaled = np.divide(points - lower, span, out=np.zeros_like(points), where=span > 0)
    scores = scaled.sum(axis=1)

    ranked = sorted(zip(entries, scores), key=lambda es: (es[1], _tie_key(es[0])))
    return RankedFront("mmd", [RankedEntry(e, float(s)) for e, s in ranked])


def mtd_rank(front: FrontInput, weights: WeightVector) -> RankedFront:
    """Descending weighted geometric aggregate of per-objective tournament wins"""
    if len(front) < 2:
        raise ArgumentError("tournament ranking needs at least two structures")
    entries = _as_entries(front)
    if len(entries) == 1:
        return RankedFront("mtd", [RankedEntry(entries[0], 1.0)])

    points = np.array([e.objectives.point for e in entries], dtype=float)
    n, m = points.shape
    if len(weights.w) != m:
        raise ArgumentError(f"{len(weights.w)} weights for {m} objectives")

    wins = (points[None, :, :] > points[:, None, :]).sum(axis=1) / (n - 1)
    scores = []
    for row in wins:
        product = 1.0
        for t, w in zip(row, weights.w):
            product *= t ** w
        scores.append(math.pow(product, 1.0 / m))

    ranked = sorted(zip(entries, scores), key=lambda es: (-es[1], _tie_key(es[0])))
    return RankedFront("mtd", [RankedEntry(e, float(s)) for e, s in ranked])
