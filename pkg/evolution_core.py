"""
Binary structure encoding, the goal-penalised objective pair, Pareto
dominance, the shared reproduction operators and the non-dominated archive.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from exceptions import ArgumentError, DegenerateDataError
from narx_model import (
    NMSE_SENTINEL,
    Dataset,
    ModelSet,
    Term,
    estimate_parameters,
    validation_nmse,
)

logger = logging.getLogger(__name__)

PENALTY_FACTOR = 10.0


@dataclass(frozen=True)
class Genome:
    """Bit vector over a model set; one byte (0 or 1) per locus"""

    bits: bytes

    @classmethod
    def from_array(cls, array: Sequence[int]) -> "Genome":
        return cls((np.asarray(array) != 0).astype(np.uint8).tobytes())

    @classmethod
    def from_string(cls, text: str) -> "Genome":
        if set(text) - {"0", "1"}:
            raise ArgumentError(f"genome string must contain only 0/1, got {text!r}")
        return cls(bytes(int(c) for c in text))

    @classmethod
    def from_indices(cls, indices: Iterable[int], length: int) -> "Genome":
        array = np.zeros(length, dtype=np.uint8)
        array[list(indices)] = 1
        return cls.from_array(array)

    def as_array(self) -> np.ndarray:
        return np.frombuffer(self.bits, dtype=np.uint8)

    @property
    def length(self) -> int:
        return len(self.bits)

    @property
    def cardinality(self) -> int:
        return sum(self.bits)

    def indices(self) -> List[int]:
        return [i for i, b in enumerate(self.bits) if b]

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)


@dataclass(frozen=True)
class GoalPoint:
    """Upper limits (xi_lim, nmse_lim) of the region of interest"""

    xi_lim: int = 20
    nmse_lim: float = 30.0

    def __post_init__(self):
        if int(self.xi_lim) < 1:
            raise ArgumentError(f"xi_lim must be >= 1, got {self.xi_lim}")
        if not self.nmse_lim > 0:
            raise ArgumentError(f"nmse_lim must be > 0, got {self.nmse_lim}")


def goal_penalty(xi: int, nmse: float, goal: GoalPoint) -> float:
    """10 * (excess NMSE over its limit + excess cardinality over its limit)"""
    return PENALTY_FACTOR * (max(0.0, nmse - goal.nmse_lim) + max(0, xi - goal.xi_lim))


@dataclass(frozen=True)
class ObjectiveVector:
    xi: int
    nmse: float
    penalty: float = 0.0

    @classmethod
    def penalized(cls, xi: int, nmse: float, goal: GoalPoint) -> "ObjectiveVector":
        return cls(int(xi), float(nmse), goal_penalty(xi, nmse, goal))

    @property
    def j1(self) -> float:
        return self.xi + self.penalty

    @property
    def j2(self) -> float:
        return self.nmse + self.penalty

    @property
    def point(self) -> Tuple[float, float]:
        return (self.j1, self.j2)


def point_dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """Minimisation dominance: no worse everywhere, strictly better somewhere"""
    strictly = False
    for x, y in zip(a, b):
        if x > y:
            return False
        if x < y:
            strictly = True
    return strictly


def dominates(a: ObjectiveVector, b: ObjectiveVector) -> bool:
    return point_dominates(a.point, b.point)


@dataclass(frozen=True)
class ArchiveEntry:
    genome: Genome
    objectives: ObjectiveVector

    def to_dict(self) -> Dict:
        return {
            "bits": str(self.genome),
            "xi": self.objectives.xi,
            "nmse": self.objectives.nmse,
            "j1": self.objectives.j1,
            "j2": self.objectives.j2,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ArchiveEntry":
        xi = int(data["xi"])
        penalty = float(data.get("j1", xi)) - xi
        return cls(Genome.from_string(data["bits"]), ObjectiveVector(xi, float(data["nmse"]), penalty))


class ParetoArchive:
    """Mutually non-dominated (genome, objectives) pairs with distinct genomes"""

    def __init__(self, capacity: Optional[int] = None):
        self.entries: List[ArchiveEntry] = []
        self.capacity = capacity
        self.evaluations = 0
        self.generations = 0
        self._genomes = set()

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[ArchiveEntry]:
        return iter(self.entries)

    def __contains__(self, genome: Genome) -> bool:
        return genome in self._genomes

    def insert(self, entry: ArchiveEntry) -> bool:
        """Add ``entry`` unless dominated or already present; evict what it dominates"""
        if entry.genome in self._genomes:
            return False
        for member in self.entries:
            if dominates(member.objectives, entry.objectives):
                return False
        survivors = [m for m in self.entries if not dominates(entry.objectives, m.objectives)]
        for member in self.entries:
            if member not in survivors:
                self._genomes.discard(member.genome)
        survivors.append(entry)
        self.entries = survivors
        self._genomes.add(entry.genome)
        return True

    def replace_entries(self, entries: Sequence[ArchiveEntry]):
        self.entries = list(entries)
        self._genomes = {e.genome for e in self.entries}

    def sorted_entries(self) -> List[ArchiveEntry]:
        return sorted(self.entries, key=lambda e: (e.objectives.xi, e.objectives.nmse, e.genome.bits))

    def points(self) -> List[Tuple[float, float]]:
        return [e.objectives.point for e in self.entries]

    @classmethod
    def from_entries(cls, entries: Iterable[ArchiveEntry], capacity: Optional[int] = None) -> "ParetoArchive":
        archive = cls(capacity)
        for entry in entries:
            archive.insert(entry)
        return archive

    @classmethod
    def pooled(cls, archives: Sequence["ParetoArchive"]) -> "ParetoArchive":
        """Global non-dominated set over several runs, inserted in run order"""
        pooled = cls.from_entries(e for archive in archives for e in archive.sorted_entries())
        pooled.evaluations = sum(a.evaluations for a in archives)
        return pooled


def archive_insert(archive: ParetoArchive, entry: ArchiveEntry) -> ParetoArchive:
    archive.insert(entry)
    return archive


def non_dominated_filter(entries: Sequence[ArchiveEntry]) -> List[ArchiveEntry]:
    """Entries not dominated by any other entry; first occurrence of a genome kept"""
    seen = set()
    kept = []
    for entry in entries:
        if entry.genome in seen:
            continue
        if any(dominates(other.objectives, entry.objectives) for other in entries):
            continue
        seen.add(entry.genome)
        kept.append(entry)
    return kept


def decode(genome: Genome, model_set: ModelSet) -> List[Term]:
    if genome.length != model_set.size:
        raise ArgumentError(f"genome length {genome.length} does not match model set size {model_set.size}")
    return [model_set.terms[i] for i in genome.indices()]


def evaluate(
    genome: Genome,
    model_set: ModelSet,
    data: Dataset,
    goal: GoalPoint,
    free_run: bool = True,
) -> ObjectiveVector:
    """Fit the decoded structure and score it against the goal point"""
    structure = decode(genome, model_set)
    if not structure:
        raise ArgumentError("cannot evaluate an empty genome")

    try:
        model = estimate_parameters(data, structure, model_set=model_set)
        error = validation_nmse(model, data, free_run=free_run)
    except (ArgumentError, DegenerateDataError, np.linalg.LinAlgError, FloatingPointError) as e:
        logger.debug(f"evaluation of {genome} fell back to the NMSE sentinel: {e}")
        error = NMSE_SENTINEL
    return ObjectiveVector.penalized(len(structure), error, goal)


class StructureEvaluator:
    """Evaluates genomes against one dataset with a bit-keyed objective cache.

    Only genomes not seen before count as function evaluations.
    """

    def __init__(self, model_set: ModelSet, data: Dataset, goal: GoalPoint, free_run: bool = True):
        self.model_set = model_set
        self.data = data
        self.goal = goal
        self.free_run = free_run
        self.cache: Dict[bytes, ObjectiveVector] = {}
        self.evaluations = 0
        self.hits = 0

    def is_cached(self, genome: Genome) -> bool:
        return genome.bits in self.cache

    def __call__(self, genome: Genome) -> ObjectiveVector:
        cached = self.cache.get(genome.bits)
        if cached is not None:
            self.hits += 1
            return cached
        objectives = evaluate(genome, self.model_set, self.data, self.goal, self.free_run)
        self.cache[genome.bits] = objectives
        self.evaluations += 1
        return objectives

    def entry(self, genome: Genome) -> ArchiveEntry:
        return ArchiveEntry(genome, self(genome))


def random_genome(length: int, max_cardinality: int, rng: np.random.Generator) -> Genome:
    """Sparse initial genome: cardinality uniform on [1, min(max_cardinality, length)]"""
    upper = max(1, min(max_cardinality, length))
    xi = int(rng.integers(1, upper + 1))
    positions = rng.choice(length, size=xi, replace=False)
    return Genome.from_indices(positions, length)


def uniform_crossover(p: Genome, q: Genome, p_c: float, rng: np.random.Generator) -> Tuple[Genome, Genome]:
    if p.length != q.length:
        raise ArgumentError("parents differ in length")
    if rng.random() >= p_c:
        return p, q
    a, b = p.as_array(), q.as_array()
    swap = rng.random(p.length) < 0.5
    return Genome.from_array(np.where(swap, b, a)), Genome.from_array(np.where(swap, a, b))


def single_point_crossover(
    p: Genome,
    q: Genome,
    p_c: float,
    rng: np.random.Generator,
    cut: Optional[int] = None,
) -> Tuple[Genome, Genome]:
    """Swap suffixes after a cut drawn uniformly from [1, n-1]"""
    if p.length != q.length:
        raise ArgumentError("parents differ in length")
    if p.length < 2 or rng.random() >= p_c:
        return p, q
    if cut is None:
        cut = int(rng.integers(1, p.length))
    if not 1 <= cut <= p.length - 1:
        raise ArgumentError(f"cut must lie in [1, {p.length - 1}], got {cut}")
    return Genome(p.bits[:cut] + q.bits[cut:]), Genome(q.bits[:cut] + p.bits[cut:])


def flip_bit_mutation(g: Genome, p_m: float, rng: np.random.Generator) -> Genome:
    """Independent bit flips; an all-zero result gets one random bit set"""
    array = g.as_array().copy()
    flips = rng.random(g.length) < p_m
    array[flips] ^= 1
    if not array.any():
        array[int(rng.integers(g.length))] = 1
    return Genome.from_array(array)


CROSSOVERS = {
    "uniform": uniform_crossover,
    "single_point": single_point_crossover,
}


def reproduce(
    p: Genome,
    q: Genome,
    p_c: float,
    p_m: float,
    crossover: str,
    rng: np.random.Generator,
) -> Tuple[Genome, Genome]:
    """Crossover followed by flip-bit mutation of both offspring"""
    child_a, child_b = CROSSOVERS[crossover](p, q, p_c, rng)
    return flip_bit_mutation(child_a, p_m, rng), flip_bit_mutation(child_b, p_m, rng)
