"""
Comparison of approximate Pareto sets in the (J1, J2) plane: set coverage,
coverage difference, normalised hypervolume and hypervolume ratio.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from evolution_core import ParetoArchive, point_dominates
from exceptions import ArgumentError

logger = logging.getLogger(__name__)

REFERENCE_MARGIN = 0.1

Point = Tuple[float, float]


@dataclass(frozen=True)
class FrontSnapshot:
    points: Tuple[Point, ...]
    label: str = ""

    def __post_init__(self):
        points = tuple((float(a), float(b)) for a, b in self.points)
        if not all(np.isfinite(p).all() for p in points):
            raise ArgumentError(f"front {self.label!r} contains non-finite objective values")
        object.__setattr__(self, "points", points)

    @classmethod
    def from_archive(cls, archive: ParetoArchive, label: str = "") -> "FrontSnapshot":
        return cls(tuple(archive.points()), label)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class ReferencePoint:
    r: Point = (1.0 + REFERENCE_MARGIN, 1.0 + REFERENCE_MARGIN)


@dataclass(frozen=True)
class ObjectiveBounds:
    """Per-objective min and max used for min-max normalisation"""

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    @classmethod
    def of(cls, fronts: Sequence[FrontSnapshot]) -> "ObjectiveBounds":
        points = np.array([p for f in fronts for p in f.points], dtype=float)
        if points.size == 0:
            raise ArgumentError("cannot bound an empty set of fronts")
        return cls(tuple(points.min(axis=0)), tuple(points.max(axis=0)))

    def normalize(self, front: FrontSnapshot) -> FrontSnapshot:
        if not front.points:
            return front
        points = np.asarray(front.points, dtype=float)
        lower = np.asarray(self.lower)
        span = np.asarray(self.upper) - lower
        scaled = np.divide(points - lower, span, out=np.zeros_like(points), where=span > 0)
        return FrontSnapshot(tuple(map(tuple, scaled)), front.label)


def coverage(a: FrontSnapshot, b: FrontSnapshot) -> float:
    """Fraction of B's points dominated by at least one point of A"""
    if not b.points:
        raise ArgumentError("coverage is undefined for an empty second set")
    covered = sum(1 for q in b.points if any(point_dominates(p, q) for p in a.points))
    return covered / len(b.points)


def delta_coverage(a: FrontSnapshot, b: FrontSnapshot) -> float:
    return coverage(a, b) - coverage(b, a)


def normalize_and_reference(
    fronts: Sequence[FrontSnapshot],
    margin: float = REFERENCE_MARGIN,
) -> Tuple[List[FrontSnapshot], ReferencePoint]:
    """Min-max normalise over the union of ``fronts``; reference at 1 + margin"""
    bounds = ObjectiveBounds.of(fronts)
    return [bounds.normalize(f) for f in fronts], ReferencePoint((1.0 + margin, 1.0 + margin))


def hypervolume(front: FrontSnapshot, reference: ReferencePoint) -> float:
    """Exact 2-D dominated area by a sweep over J1"""
    r1, r2 = reference.r
    inside = sorted({p for p in front.points if p[0] <= r1 and p[1] <= r2})
    volume = 0.0
    best_j2 = r2
    sweep = []
    # sorted by J1 then J2, so a point survives iff it improves the best J2 so far
    for p in inside:
        if p[1] < best_j2:
            sweep.append(p)
            best_j2 = p[1]
    for i, (x, y) in enumerate(sweep):
        next_x = sweep[i + 1][0] if i + 1 < len(sweep) else r1
        volume += (next_x - x) * (r2 - y)
    return volume


def hv_ratio(
    front: FrontSnapshot,
    ideal_front: FrontSnapshot,
    bounds: Optional[ObjectiveBounds] = None,
    reference: Optional[ReferencePoint] = None,
) -> float:
    """HV(front) / HV(ideal_front), both normalised against the same bounds.

    Without explicit bounds the union of the two fronts is used.
    """
    bounds = bounds or ObjectiveBounds.of([front, ideal_front])
    reference = reference or ReferencePoint()
    ideal = hypervolume(bounds.normalize(ideal_front), reference)
    if ideal <= 0:
        raise ArgumentError("ideal front has zero hypervolume")
    return hypervolume(bounds.normalize(front), reference) / ideal


@dataclass
class DominanceOrdering:
    """Pairwise 'better than' relations from coverage differences, chained if total"""

    relations: List[Tuple[str, str]] = field(default_factory=list)
    chain: Optional[List[str]] = None
    deltas: Dict[Tuple[str, str], float] = field(default_factory=dict)

    def __str__(self) -> str:
        if self.chain:
            return " ⪯ ".join(self.chain)
        return "; ".join(f"{a} ⪯ {b}" for a, b in self.relations) or "no ordering"


def dominance_ordering(fronts: Sequence[FrontSnapshot]) -> DominanceOrdering:
    """Order labelled fronts by the sign of each pairwise coverage difference"""
    labels = [f.label for f in fronts]
    if len(set(labels)) != len(labels):
        raise ArgumentError("fronts need distinct labels to be ordered")

    ordering = DominanceOrdering()
    wins = {label: 0 for label in labels}
    for a, b in combinations(fronts, 2):
        delta = delta_coverage(a, b)
        ordering.deltas[(a.label, b.label)] = delta
        if delta > 0:
            ordering.relations.append((a.label, b.label))
            wins[a.label] += 1
        elif delta < 0:
            ordering.relations.append((b.label, a.label))
            wins[b.label] += 1

    n = len(labels)
    candidate = sorted(labels, key=lambda label: -wins[label])
    if len(ordering.relations) == n * (n - 1) // 2 and all(
        wins[label] == n - 1 - position for position, label in enumerate(candidate)
    ):
        ordering.chain = candidate
    return ordering
