"""
Polynomial NARX models: candidate-term enumeration, regressor matrices,
least-squares estimation, one-step and free-run simulation, NMSE.

A term is a product of lagged output and input samples, e.g.
``y(k-2)*u(k-2)``; the empty product is the constant term ``1``.
"""

import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations_with_replacement
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from exceptions import ArgumentError, DegenerateDataError

logger = logging.getLogger(__name__)

DIVERGENCE_BOUND = 1e8
NMSE_SENTINEL = 1e6

_FACTOR_RE = re.compile(r"^\s*([yu])\(k-(\d+)\)(?:\^(\d+))?\s*$")


class Signal(str, Enum):
    OUTPUT = "output"
    INPUT = "input"

    @property
    def symbol(self) -> str:
        return "y" if self is Signal.OUTPUT else "u"

    @property
    def order(self) -> int:
        # outputs sort before inputs
        return 0 if self is Signal.OUTPUT else 1


Factor = Tuple[Signal, int]


def _factor_key(factor: Factor) -> Tuple[int, int]:
    return (factor[0].order, factor[1])


@dataclass(frozen=True)
class Term:
    """Monomial in lagged outputs and inputs, factors kept in canonical order"""

    factors: Tuple[Factor, ...] = ()

    def __post_init__(self):
        canonical = []
        for signal, lag in self.factors:
            signal = Signal(signal)
            lag = int(lag)
            if lag < 1:
                raise ArgumentError(f"lag must be a positive integer, got {lag}")
            canonical.append((signal, lag))
        object.__setattr__(self, "factors", tuple(sorted(canonical, key=_factor_key)))

    @classmethod
    def constant(cls) -> "Term":
        return cls(())

    @classmethod
    def parse(cls, text: str) -> "Term":
        """Parse ``1``, ``y(k-1)``, ``y(k-2)*u(k-2)^2`` and the like"""
        text = text.strip().replace("−", "-")
        if text == "1":
            return cls.constant()
        factors: List[Factor] = []
        for chunk in text.split("*"):
            match = _FACTOR_RE.match(chunk)
            if not match:
                raise ArgumentError(f"cannot parse term factor {chunk!r} in {text!r}")
            signal = Signal.OUTPUT if match.group(1) == "y" else Signal.INPUT
            power = int(match.group(3) or 1)
            factors.extend([(signal, int(match.group(2)))] * power)
        return cls(tuple(factors))

    @property
    def degree(self) -> int:
        return len(self.factors)

    @property
    def is_constant(self) -> bool:
        return not self.factors

    @property
    def max_lag(self) -> int:
        return max((lag for _, lag in self.factors), default=0)

    def max_signal_lag(self, signal: Signal) -> int:
        return max((lag for s, lag in self.factors if s is signal), default=0)

    def linear_lag(self, signal: Signal) -> Optional[int]:
        """Lag of a degree-one term on ``signal``, else None"""
        if self.degree == 1 and self.factors[0][0] is signal:
            return self.factors[0][1]
        return None

    def sort_key(self) -> Tuple:
        return (self.degree, tuple(_factor_key(f) for f in self.factors))

    def __str__(self) -> str:
        if self.is_constant:
            return "1"
        parts = []
        i = 0
        while i < len(self.factors):
            j = i
            while j < len(self.factors) and self.factors[j] == self.factors[i]:
                j += 1
            signal, lag = self.factors[i]
            power = j - i
            parts.append(f"{signal.symbol}(k-{lag})" + (f"^{power}" if power > 1 else ""))
            i = j
        return "*".join(parts)

    def to_dict(self) -> Dict:
        return {"factors": [{"signal": s.value, "lag": lag} for s, lag in self.factors]}

    @classmethod
    def from_dict(cls, data: Dict) -> "Term":
        return cls(tuple((Signal(f["signal"]), int(f["lag"])) for f in data.get("factors", [])))


def term_count(n_u: int, n_y: int, n_l: int) -> int:
    """Closed form of the candidate-term count: C(n_u + n_y + n_l, n_l)"""
    total, n_m = 1, 1
    for m in range(1, n_l + 1):
        n_m = n_m * (n_y + n_u + m - 1) // m
        total += n_m
    return total


@dataclass(frozen=True)
class ModelSet:
    """Ordered dictionary of candidate terms"""

    terms: Tuple[Term, ...]
    n_u: int
    n_y: int
    n_l: int

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if len(set(self.terms)) != len(self.terms):
            raise ArgumentError("model set terms must be pairwise distinct")

    @classmethod
    def from_terms(cls, terms: Iterable[Term]) -> "ModelSet":
        """Custom candidate set; bounds are inferred from the terms"""
        terms = tuple(terms)
        if not terms:
            raise ArgumentError("model set needs at least one term")
        return cls(
            terms=terms,
            n_u=max(t.max_signal_lag(Signal.INPUT) for t in terms),
            n_y=max(t.max_signal_lag(Signal.OUTPUT) for t in terms),
            n_l=max(t.degree for t in terms),
        )

    @property
    def size(self) -> int:
        return len(self.terms)

    @property
    def max_lag(self) -> int:
        return max(self.n_u, self.n_y)

    def index_of(self, term: Term) -> int:
        return self.terms.index(term)

    def to_dict(self) -> Dict:
        return {"n_u": self.n_u, "n_y": self.n_y, "n_l": self.n_l, "terms": [str(t) for t in self.terms]}

    @classmethod
    def from_dict(cls, data: Dict) -> "ModelSet":
        return cls(tuple(Term.parse(t) for t in data["terms"]), int(data["n_u"]), int(data["n_y"]), int(data["n_l"]))


def generate_model_set(n_u: int, n_y: int, n_l: int) -> ModelSet:
    """All monomials of degree <= n_l over y(k-1..n_y), u(k-1..n_u), constant first"""
    if n_u < 0 or n_y < 0 or n_l < 1 or n_u + n_y < 1:
        raise ArgumentError(f"invalid model-set bounds n_u={n_u}, n_y={n_y}, n_l={n_l}")

    variables = [(Signal.OUTPUT, lag) for lag in range(1, n_y + 1)]
    variables += [(Signal.INPUT, lag) for lag in range(1, n_u + 1)]

    terms = []
    for degree in range(n_l + 1):
        for combo in combinations_with_replacement(variables, degree):
            terms.append(Term(combo))

    model_set = ModelSet(tuple(terms), n_u, n_y, n_l)
    logger.debug(f"generated model set ({n_u}, {n_y}, {n_l}) with {model_set.size} terms")
    return model_set


@dataclass(frozen=True, eq=False)
class Dataset:
    """Input/output record split into estimation and validation partitions"""

    u: np.ndarray
    y: np.ndarray
    estimation_len: int
    name: str = "data"

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        y = np.array(self.y, dtype=float)
        if u.ndim != 1 or y.ndim != 1 or len(u) != len(y):
            raise ArgumentError(f"u and y must be 1-D sequences of equal length, got {u.shape} and {y.shape}")
        if not 0 < self.estimation_len < len(y):
            raise ArgumentError(f"estimation_len must lie in (0, {len(y)}), got {self.estimation_len}")
        u.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "estimation_len", int(self.estimation_len))

    @property
    def n_samples(self) -> int:
        return len(self.y)

    def estimation_rows(self, max_lag: int) -> range:
        return range(max_lag, self.estimation_len)

    def validation_rows(self, max_lag: int) -> range:
        # the validation partition is treated as its own record, primed by its first max_lag samples
        return range(self.estimation_len + max_lag, self.n_samples)

    def signal(self, signal: Signal) -> np.ndarray:
        return self.y if signal is Signal.OUTPUT else self.u


@dataclass(frozen=True, eq=False)
class EstimatedModel:
    structure: Tuple[Term, ...]
    coefficients: np.ndarray
    max_lag: int
    source_model_set: Optional[ModelSet] = field(default=None, compare=False, repr=False)
    degenerate: bool = False

    def __post_init__(self):
        coefficients = np.array(self.coefficients, dtype=float).reshape(-1)
        object.__setattr__(self, "structure", tuple(self.structure))
        if len(coefficients) != len(self.structure):
            raise ArgumentError("structure and coefficients differ in length")
        if not np.all(np.isfinite(coefficients)):
            raise ArgumentError("coefficients must be finite")
        object.__setattr__(self, "coefficients", coefficients)

    @property
    def cardinality(self) -> int:
        return len(self.structure)

    def describe(self) -> str:
        if not self.structure:
            return "y(k) = 0"
        parts = [f"{c:+.6g}*{t}" if not t.is_constant else f"{c:+.6g}" for t, c in zip(self.structure, self.coefficients)]
        return "y(k) = " + " ".join(parts)


@dataclass(frozen=True, eq=False)
class Prediction:
    """Simulated output over a row range; divergent runs are NaN past the stop"""

    values: np.ndarray
    rows: range
    divergent: bool = False


def _check_rows(data: Dataset, k_range: range, required_lag: int):
    if k_range.step != 1:
        raise ArgumentError("row range must have unit step")
    if k_range.start < required_lag:
        raise ArgumentError(f"row range starts at {k_range.start} but terms need lag {required_lag}")
    if k_range.stop > data.n_samples or k_range.stop <= k_range.start:
        raise ArgumentError(f"row range {k_range.start}..{k_range.stop} outside data of length {data.n_samples}")


def build_regressor(data: Dataset, structure: Sequence[Term], k_range: range) -> np.ndarray:
    """Rows are time indices in ``k_range``, columns are term products"""
    required = max((t.max_lag for t in structure), default=0)
    _check_rows(data, k_range, required)

    k = np.arange(k_range.start, k_range.stop)
    phi = np.ones((len(k), len(structure)))
    for j, term in enumerate(structure):
        for signal, lag in term.factors:
            phi[:, j] *= data.signal(signal)[k - lag]
    return phi


def _fit_lag(structure: Sequence[Term], model_set: Optional[ModelSet], max_lag: Optional[int]) -> int:
    if max_lag is not None:
        return int(max_lag)
    if model_set is not None:
        return model_set.max_lag
    return max((t.max_lag for t in structure), default=0)


def estimate_parameters(
    data: Dataset,
    structure: Sequence[Term],
    model_set: Optional[ModelSet] = None,
    max_lag: Optional[int] = None,
) -> EstimatedModel:
    """Least-squares coefficients over the estimation partition.

    Rows start at the model-set maximum lag when a model set is given, so
    every structure drawn from the same set is fitted on the same samples.
    ``numpy.linalg.lstsq`` solves through the SVD with the default cutoff
    max(M, N) * eps * s_max, so collinear columns get a minimum-norm solution.
    """
    structure = tuple(structure)
    if not structure:
        raise ArgumentError("cannot estimate an empty structure")

    lag = _fit_lag(structure, model_set, max_lag)
    rows = data.estimation_rows(lag)
    if len(rows) < len(structure):
        raise ArgumentError(f"{len(rows)} estimation rows for {len(structure)} terms")

    phi = build_regressor(data, structure, rows)
    target = data.y[rows.start:rows.stop]
    theta, _, rank, _ = np.linalg.lstsq(phi, target, rcond=None)
    if rank < len(structure):
        logger.debug(f"rank-deficient regressor: rank {rank} for {len(structure)} terms")

    return EstimatedModel(structure, theta, lag, source_model_set=model_set)


def simulate_one_step(model: EstimatedModel, data: Dataset, k_range: Optional[range] = None) -> np.ndarray:
    """One-step-ahead prediction from measured lagged y and u"""
    if k_range is None:
        k_range = range(model.max_lag, data.n_samples)
    if not model.structure:
        _check_rows(data, k_range, 0)
        return np.zeros(len(k_range))
    return build_regressor(data, model.structure, k_range) @ model.coefficients


def simulate_free_run(model: EstimatedModel, data: Dataset, k_range: Optional[range] = None) -> Prediction:
    """Model-predicted output: output lags read earlier predictions.

    Samples before ``k_range.start`` are primed from the measured output.
    Simulation stops once |y_hat| exceeds the divergence bound or turns
    non-finite; the remaining values are NaN.
    """
    if k_range is None:
        k_range = data.validation_rows(model.max_lag)
    required = max((t.max_lag for t in model.structure), default=0)
    _check_rows(data, k_range, required)

    start, stop = k_range.start, k_range.stop
    k = np.arange(start, stop)

    # input-only products never change during the run
    base = np.zeros(len(k))
    recurrent = []
    for term, coef in zip(model.structure, model.coefficients):
        exo = np.full(len(k), coef)
        lags = []
        for signal, lag in term.factors:
            if signal is Signal.INPUT:
                exo = exo * data.u[k - lag]
            else:
                lags.append(lag)
        if lags:
            recurrent.append((exo.tolist(), lags))
        else:
            base += exo

    y_hat = data.y.tolist()
    out = np.full(len(k), np.nan)
    base = base.tolist()
    divergent = False
    for i in range(len(k)):
        kk = start + i
        value = base[i]
        for exo, lags in recurrent:
            prod = exo[i]
            for lag in lags:
                prod *= y_hat[kk - lag]
            value += prod
        if not math.isfinite(value) or abs(value) > DIVERGENCE_BOUND:
            divergent = True
            break
        y_hat[kk] = value
        out[i] = value

    if divergent:
        logger.debug(f"free-run simulation diverged at k={start + i}")
    return Prediction(out, k_range, divergent)


def nmse(y: Sequence[float], y_hat: Sequence[float], divergent: bool = False) -> float:
    """100 * sqrt(sum (y - y_hat)^2 / sum (y - mean y)^2), in percent"""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape or y.ndim != 1 or len(y) < 2:
        raise ArgumentError(f"nmse needs equal-length sequences of at least 2 samples, got {y.shape} and {y_hat.shape}")
    denominator = np.sum((y - y.mean()) ** 2)
    if denominator == 0.0:
        raise DegenerateDataError("reference output is constant; NMSE undefined")
    if divergent or not np.all(np.isfinite(y_hat)):
        return NMSE_SENTINEL
    return float(100.0 * math.sqrt(np.sum((y - y_hat) ** 2) / denominator))


def validation_nmse(model: EstimatedModel, data: Dataset, free_run: bool = True) -> float:
    """NMSE of the model on the validation partition"""
    rows = data.validation_rows(model.max_lag)
    measured = data.y[rows.start:rows.stop]
    if free_run:
        prediction = simulate_free_run(model, data, rows)
        return nmse(measured, prediction.values, prediction.divergent)
    return nmse(measured, simulate_one_step(model, data, rows))


def model_to_dict(model: EstimatedModel) -> Dict:
    return {
        "terms": [t.to_dict() for t in model.structure],
        "coefficients": [float(c) for c in model.coefficients],
        "max_lag": model.max_lag,
        "degenerate": model.degenerate,
        "equation": model.describe(),
    }


def model_from_dict(data: Dict) -> EstimatedModel:
    structure = tuple(Term.from_dict(t) for t in data["terms"])
    max_lag = data.get("max_lag", max((t.max_lag for t in structure), default=0))
    return EstimatedModel(structure, data["coefficients"], int(max_lag), degenerate=bool(data.get("degenerate", False)))
