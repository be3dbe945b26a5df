"""
Identification data for the benchmark systems.

Discrete systems S1..S7 iterate their published difference equations with
seeded excitation and additive equation noise. The Duffing oscillator is
integrated with classical RK4 under a zero-order-hold input. External data
come in through ``load_csv``.

Random streams use ``numpy.random.Philox`` (counter-based), seeded per
(system, run) through ``derive_seed``.
"""

import hashlib
import logging
import math
import re
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from exceptions import ArgumentError, DataParseError, IntegrationError
from narx_model import Dataset, ModelSet, Signal, Term, generate_model_set

logger = logging.getLogger(__name__)

WARMUP_SAMPLES = 50


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


def derive_seed(master: int, *parts: Union[str, int]) -> int:
    """64-bit stream seed from a master seed and labels such as (system, cell, run)"""
    key = ":".join(str(p) for p in (master, *parts))
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big")


class NoiseSpec(BaseModel):
    """White uniform noise WUN(low, high) or white Gaussian noise WGN(mean, variance)"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["WUN", "WGN"]
    low: float = 0.0
    high: float = 1.0
    mean: float = 0.0
    variance: float = 0.0
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _check_bounds(self):
        if self.kind == "WUN" and not self.low < self.high:
            raise ValueError(f"WUN needs low < high, got ({self.low}, {self.high})")
        if self.kind == "WGN" and self.variance < 0:
            raise ValueError(f"WGN variance must be >= 0, got {self.variance}")
        return self

    @classmethod
    def wun(cls, low: float, high: float, seed: Optional[int] = None) -> "NoiseSpec":
        return cls(kind="WUN", low=low, high=high, seed=seed)

    @classmethod
    def wgn(cls, mean: float, variance: float, seed: Optional[int] = None) -> "NoiseSpec":
        return cls(kind="WGN", mean=mean, variance=variance, seed=seed)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "WUN":
            return rng.uniform(self.low, self.high, size=n)
        if self.variance == 0:
            return np.full(n, self.mean)
        return rng.normal(self.mean, math.sqrt(self.variance), size=n)

    def __str__(self) -> str:
        if self.kind == "WUN":
            return f"WUN({self.low:g}, {self.high:g})"
        return f"WGN({self.mean:g}, {self.variance:g})"


class SystemSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    id: str
    terms: List[Tuple[str, float]] = Field(default_factory=list)
    input: NoiseSpec = NoiseSpec.wun(0.0, 1.0)
    noise: NoiseSpec = NoiseSpec.wgn(0.0, 0.0)
    n_samples: int = Field(1000, gt=2)
    estimation_len: int = Field(700, gt=0)
    warmup: int = Field(WARMUP_SAMPLES, ge=0)
    model_set: Tuple[int, int, int] = (4, 4, 3)
    seed: int = 0
    # continuous-time Duffing parameters
    fs: Optional[float] = None
    omega_n: Optional[float] = None
    zeta: Optional[float] = None
    epsilon: Optional[float] = None
    substeps: int = Field(10, ge=10)

    @model_validator(mode="after")
    def _check_system(self):
        if self.estimation_len >= self.n_samples:
            raise ValueError("estimation_len must be smaller than n_samples")
        if self.id == "duffing":
            if self.omega_n is None or self.omega_n <= 0:
                raise ValueError("duffing needs omega_n > 0")
            if self.zeta is None or self.zeta < 0:
                raise ValueError("duffing needs zeta >= 0")
            if self.fs is None or self.fs <= 0:
                raise ValueError("duffing needs a positive sampling rate fs")
        for text, _ in self.terms:
            Term.parse(text)
        return self

    @property
    def is_discrete(self) -> bool:
        return bool(self.terms) and self.id != "duffing"

    def true_structure(self) -> List[Term]:
        """Published terms in model-set order"""
        terms = [Term.parse(text) for text, _ in self.terms]
        return sorted(terms, key=Term.sort_key)

    def coefficient_map(self) -> Dict[Term, float]:
        return {Term.parse(text): coef for text, coef in self.terms}

    def build_model_set(self) -> ModelSet:
        n_u, n_y, n_l = self.model_set
        return generate_model_set(n_u, n_y, n_l)


_S1_TERMS = [
    ("y(k-1)^3", 0.2),
    ("y(k-1)*u(k-1)", 0.7),
    ("u(k-2)^2", 0.6),
    ("y(k-2)*u(k-2)^2", -0.7),
    ("y(k-2)", -0.5),
]

_S7_TERMS = [
    ("u(k-1)", 0.8833), ("u(k-2)", 0.0393), ("u(k-3)", 0.8546),
    ("u(k-1)^2", 0.8528), ("u(k-1)*u(k-2)", 0.7582), ("u(k-1)*u(k-3)", 0.1750),
    ("u(k-2)^2", 0.0864), ("u(k-2)*u(k-3)", 0.4916), ("u(k-3)^2", 0.0711),
    ("y(k-1)", -0.0375), ("y(k-2)", -0.0598), ("y(k-3)", -0.0370), ("y(k-4)", -0.0468),
    ("y(k-1)^2", -0.0476), ("y(k-1)*y(k-2)", -0.0781), ("y(k-1)*y(k-3)", -0.0189),
    ("y(k-1)*y(k-4)", -0.0626), ("y(k-2)^2", -0.0221), ("y(k-2)*y(k-3)", -0.0617),
    ("y(k-2)*y(k-4)", -0.0378), ("y(k-3)^2", -0.0041), ("y(k-3)*y(k-4)", -0.0543),
    ("y(k-4)^2", -0.0603),
]

SYSTEMS: Dict[str, Dict] = {
    "S1": {
        "terms": _S1_TERMS,
        "input": NoiseSpec.wun(-1.0, 1.0),
        "noise": NoiseSpec.wgn(0.0, 0.004),
    },
    "S2": {
        "terms": [("1", 0.5), ("y(k-1)", 0.5), ("u(k-2)", 0.8), ("u(k-1)^2", 1.0), ("y(k-2)^2", -0.05)],
        "input": NoiseSpec.wun(0.0, 1.0),
        "noise": NoiseSpec.wgn(0.0, 0.05),
    },
    "S3": {
        "terms": [("y(k-1)", 0.8), ("u(k-1)", 0.4), ("u(k-1)^2", 0.4), ("u(k-1)^3", 0.4)],
        "input": NoiseSpec.wgn(0.0, 1.0),
        "noise": NoiseSpec.wgn(0.0, 0.33 ** 2),
    },
    "S4": {
        "terms": [
            ("y(k-1)", 0.1586), ("u(k-1)", 0.6777), ("y(k-2)^2", 0.3037),
            ("y(k-2)*u(k-1)^2", -0.2566), ("u(k-3)^3", -0.0339),
        ],
        "input": NoiseSpec.wun(0.0, 1.0),
        "noise": NoiseSpec.wgn(0.0, 0.002),
    },
    "S5": {
        "terms": [("y(k-1)*u(k-1)", 0.7), ("y(k-2)", -0.5), ("u(k-2)^2", 0.6), ("y(k-2)*u(k-2)^2", -0.7)],
        "input": NoiseSpec.wun(-1.0, 1.0),
        "noise": NoiseSpec.wgn(0.0, 0.004),
    },
    "S6": {
        "terms": [("y(k-1)", 0.5), ("u(k-1)", 0.3), ("y(k-1)*u(k-1)", 0.3), ("u(k-1)^2", 0.5)],
        "input": NoiseSpec.wun(0.0, 1.0),
        "noise": NoiseSpec.wgn(0.0, 0.002),
    },
    "S7": {
        "terms": _S7_TERMS,
        "input": NoiseSpec.wun(0.0, 1.0),
        "noise": NoiseSpec.wgn(0.0, 0.01 ** 2),
        "model_set": (5, 5, 3),
    },
    "duffing": {
        "input": NoiseSpec.wun(0.0, 1.0),
        "noise": NoiseSpec.wgn(0.0, 0.0),
        "fs": 500.0,
        "omega_n": 45.0 * math.pi,
        "zeta": 0.01,
        "epsilon": 3.0,
        "model_set": (5, 5, 3),
    },
    # stand-in for measured wave-force records: S1 dynamics on a longer record
    "wave": {
        "terms": _S1_TERMS,
        "input": NoiseSpec.wun(-1.0, 1.0),
        "noise": NoiseSpec.wgn(0.0, 0.004),
        "n_samples": 1400,
        "estimation_len": 1000,
    },
}


def system_spec(system_id: str, **overrides) -> SystemSpec:
    """Published defaults for a system id, with optional field overrides"""
    if system_id not in SYSTEMS:
        raise ArgumentError(f"unknown system id {system_id!r}; expected one of {sorted(SYSTEMS)}")
    fields = dict(SYSTEMS[system_id], id=system_id)
    fields.update({k: v for k, v in overrides.items() if v is not None})
    return SystemSpec(**fields)


def _streams(spec: SystemSpec) -> Tuple[np.random.Generator, np.random.Generator]:
    input_seed = spec.input.seed if spec.input.seed is not None else derive_seed(spec.seed, spec.id, "input")
    noise_seed = spec.noise.seed if spec.noise.seed is not None else derive_seed(spec.seed, spec.id, "noise")
    return make_rng(input_seed), make_rng(noise_seed)


def simulate_discrete(spec: SystemSpec) -> Dataset:
    """Iterate the difference equation from zero initial lags, drop the warm-up"""
    if spec.id not in SYSTEMS and not spec.terms:
        raise ArgumentError(f"unknown discrete system {spec.id!r}")
    if not spec.is_discrete:
        raise ArgumentError(f"system {spec.id!r} is not a discrete difference equation")

    compiled = []
    for text, coef in spec.terms:
        term = Term.parse(text)
        compiled.append((coef, [(s is Signal.OUTPUT, lag) for s, lag in term.factors]))
    pad = max(Term.parse(text).max_lag for text, _ in spec.terms)

    total = spec.warmup + spec.n_samples
    input_rng, noise_rng = _streams(spec)
    u = np.concatenate([np.zeros(pad), spec.input.sample(total, input_rng)])
    e = np.concatenate([np.zeros(pad), spec.noise.sample(total, noise_rng)])

    u_list = u.tolist()
    y = [0.0] * (pad + total)
    for k in range(pad, pad + total):
        value = e[k]
        for coef, factors in compiled:
            prod = coef
            for is_output, lag in factors:
                prod *= y[k - lag] if is_output else u_list[k - lag]
            value += prod
        if not math.isfinite(value):
            raise IntegrationError(f"system {spec.id} produced a non-finite output at sample {k - pad}")
        y[k] = value

    start = pad + spec.warmup
    logger.debug(f"simulated {spec.id}: {spec.n_samples} samples, input {spec.input}, noise {spec.noise}")
    return Dataset(u[start:], np.array(y[start:]), spec.estimation_len, spec.id)


def integrate_duffing(
    u: np.ndarray,
    fs: float,
    omega_n: float,
    zeta: float,
    epsilon: float,
    substeps: int = 10,
) -> np.ndarray:
    """RK4 integration of y'' + 2*zeta*wn*y' + wn^2*y + wn^2*eps*y^3 = u.

    ``u`` is held constant over each sampling interval; the returned output
    is the displacement at the sample instants, starting from rest.
    """
    if substeps < 1:
        raise ArgumentError("substeps must be positive")
    h = 1.0 / (fs * substeps)
    c = 2.0 * zeta * omega_n
    k2 = omega_n * omega_n

    def accel(pos: float, vel: float, force: float) -> float:
        return force - c * vel - k2 * pos - k2 * epsilon * pos * pos * pos

    u_list = np.asarray(u, dtype=float).tolist()
    out = np.zeros(len(u_list))
    pos, vel = 0.0, 0.0
    for k, force in enumerate(u_list):
        out[k] = pos
        for _ in range(substeps):
            a1 = accel(pos, vel, force)
            p2, v2 = pos + 0.5 * h * vel, vel + 0.5 * h * a1
            a2 = accel(p2, v2, force)
            p3, v3 = pos + 0.5 * h * v2, vel + 0.5 * h * a2
            a3 = accel(p3, v3, force)
            p4, v4 = pos + h * v3, vel + h * a3
            a4 = accel(p4, v4, force)
            pos += h / 6.0 * (vel + 2.0 * v2 + 2.0 * v3 + v4)
            vel += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        if not (math.isfinite(pos) and math.isfinite(vel)):
            raise IntegrationError(f"Duffing state became non-finite after sample {k}")
    return out


def simulate_duffing(spec: SystemSpec) -> Dataset:
    if spec.id != "duffing":
        raise ArgumentError(f"simulate_duffing needs the duffing system, got {spec.id!r}")

    total = spec.warmup + spec.n_samples
    input_rng, noise_rng = _streams(spec)
    u = spec.input.sample(total, input_rng)
    y = integrate_duffing(u, spec.fs, spec.omega_n, spec.zeta, spec.epsilon or 0.0, spec.substeps)
    y = y + spec.noise.sample(total, noise_rng)

    logger.debug(f"integrated duffing: {spec.n_samples} samples at {spec.fs:g} Hz")
    return Dataset(u[spec.warmup:], y[spec.warmup:], spec.estimation_len, spec.id)


def generate_dataset(spec: SystemSpec) -> Dataset:
    if spec.id == "duffing":
        return simulate_duffing(spec)
    return simulate_discrete(spec)


def _default_estimation_len(n: int) -> int:
    return min(n - 1, max(1, round(0.7 * n)))


def load_csv(path: Union[str, Path], estimation_len: Optional[int] = None, name: Optional[str] = None) -> Dataset:
    """Read a ``u,y`` CSV; malformed rows raise DataParseError with the file line"""
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise DataParseError(str(e), int(match.group(1)) if match else None) from e
    except pd.errors.EmptyDataError as e:
        raise DataParseError("file is empty", 1) from e

    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in ("u", "y") if c not in frame.columns]
    if missing:
        raise DataParseError(f"missing column(s) {missing}; header must be u,y", 1)

    values = {}
    for column in ("u", "y"):
        numeric = pd.to_numeric(frame[column].str.strip(), errors="coerce")
        bad = np.flatnonzero(numeric.isna().to_numpy())
        if len(bad):
            row = int(bad[0])
            raise DataParseError(f"non-numeric {column} value {frame[column].iloc[row]!r}", row + 2)
        # str -> float through Python float() keeps the written digits exact
        values[column] = frame[column].str.strip().astype(float).to_numpy()

    n = len(frame)
    if n < 2:
        raise DataParseError("need at least two samples", n + 1)
    if estimation_len is None:
        estimation_len = _default_estimation_len(n)
    logger.info(f"loaded {n} samples from {path}")
    return Dataset(values["u"], values["y"], estimation_len, name or path.stem)


def write_csv(data: Dataset, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({"u": data.u, "y": data.y}).to_csv(path, index=False)
    return path
