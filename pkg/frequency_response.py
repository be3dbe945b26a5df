"""
First-order frequency response of identified NARX models.

Harmonic probing at order one keeps only the linear terms, so H1 is the
transfer function of the linear subsystem:

    H1(e^jw) = sum_i b_i e^(-jwi) / (1 - sum_i a_i e^(-jwi))

with a_i the coefficients of y(k-i) and b_i those of u(k-i).
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import signal

from narx_model import EstimatedModel, Signal, Term

logger = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 2048


@dataclass(frozen=True, eq=False)
class LinearFRF:
    frequencies: np.ndarray
    response: np.ndarray
    fs: float
    degenerate: bool = False

    @property
    def magnitude_db(self) -> np.ndarray:
        return 20.0 * np.log10(np.maximum(np.abs(self.response), 1e-300))

    def peak_frequency(self) -> float:
        return float(self.frequencies[int(np.argmax(np.abs(self.response)))])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "f_hz": self.frequencies,
                "re": self.response.real,
                "im": self.response.imag,
                "mag_db": self.magnitude_db,
            }
        )


def linear_polynomials(model: EstimatedModel) -> Tuple[np.ndarray, np.ndarray]:
    """Numerator b = [0, b1, b2, ...] and denominator a = [1, -a1, -a2, ...] in z^-1"""
    a_coef: Dict[int, float] = {}
    b_coef: Dict[int, float] = {}
    for term, coef in zip(model.structure, model.coefficients):
        lag = term.linear_lag(Signal.OUTPUT)
        if lag is not None:
            a_coef[lag] = a_coef.get(lag, 0.0) + coef
        lag = term.linear_lag(Signal.INPUT)
        if lag is not None:
            b_coef[lag] = b_coef.get(lag, 0.0) + coef

    numerator = np.zeros(max(b_coef, default=0) + 1)
    for lag, coef in b_coef.items():
        numerator[lag] = coef
    denominator = np.zeros(max(a_coef, default=0) + 1)
    denominator[0] = 1.0
    for lag, coef in a_coef.items():
        denominator[lag] = -coef
    return numerator, denominator


def linear_frf(
    model: EstimatedModel,
    fs: float,
    frequencies: Optional[Sequence[float]] = None,
) -> LinearFRF:
    """H1 on a frequency grid in Hz (default: 2048 points over [0, fs/2])"""
    if frequencies is None:
        frequencies = np.linspace(0.0, fs / 2.0, DEFAULT_GRID_POINTS)
    frequencies = np.asarray(frequencies, dtype=float)

    numerator, denominator = linear_polynomials(model)
    if not np.any(numerator):
        logger.warning("model has no linear input term; first-order response is identically zero")
        return LinearFRF(frequencies, np.zeros(len(frequencies), dtype=complex), fs, degenerate=True)

    _, response = signal.freqz(numerator, denominator, worN=2.0 * np.pi * frequencies / fs)
    return LinearFRF(frequencies, response, fs)


def resonance_from_poles(model: EstimatedModel, fs: float) -> Optional[float]:
    """Frequency of the dominant complex-conjugate pole pair, or None for real poles only"""
    _, denominator = linear_polynomials(model)
    if len(denominator) < 3:
        return None
    poles = np.roots(denominator)
    complex_poles = [p for p in poles if p.imag > 1e-12]
    if not complex_poles:
        return None
    dominant = max(complex_poles, key=abs)
    return float(abs(np.angle(dominant)) * fs / (2.0 * math.pi))


_DUFFING_LINEAR = [
    ("y(k-1)", 1.9152),
    ("y(k-2)", -0.99436),
    ("u(k-1)", 1.983e-6),
    ("u(k-2)", 1.9792e-6),
]

_DUFFING_NONLINEAR = {
    "md1": [("y(k-1)^3", -0.23154)],
    "md2": [("y(k-1)^3", -0.22981), ("y(k-3)^3", -3.4686e-3)],
    "md3": [("y(k-1)^3", -0.25637), ("y(k-3)*y(k-1)^2", 5.4467e-2), ("y(k-1)*y(k-3)^2", -3.191e-2)],
}


def duffing_reference_models() -> Dict[str, EstimatedModel]:
    """Published Duffing models sharing one linear part (fs = 500 Hz)"""
    models = {}
    for name, nonlinear in _DUFFING_NONLINEAR.items():
        terms = _DUFFING_LINEAR + nonlinear
        structure = [Term.parse(text) for text, _ in terms]
        models[name] = EstimatedModel(structure, [c for _, c in terms], max(t.max_lag for t in structure))
    return models
