"""
Post-search analysis of identified structures: coefficient significance
refinement, exact/over/under-fitting labels against a known structure and
information criteria for auditing the goal point.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from evolution_core import ParetoArchive, decode
from exceptions import ArgumentError
from narx_model import Dataset, EstimatedModel, ModelSet, Term, build_regressor, estimate_parameters

logger = logging.getLogger(__name__)

RSS_FLOOR = 1e-300
# residual scale floor relative to the output RMS, so exact fits still yield finite t-statistics
RELATIVE_NOISE_FLOOR = 1e-10


class OutcomeLabel(str, Enum):
    EXACT_FITTING = "exact_fitting"
    OVER_FITTING = "over_fitting"
    UNDER_FITTING_1 = "under_fitting_1"
    UNDER_FITTING_2 = "under_fitting_2"


def _t_statistics(phi: np.ndarray, target: np.ndarray):
    theta, _, _, _ = np.linalg.lstsq(phi, target, rcond=None)
    rows, p = phi.shape
    residual = target - phi @ theta
    sigma2 = float(residual @ residual) / (rows - p)
    floor = (RELATIVE_NOISE_FLOOR * math.sqrt(float(np.mean(target ** 2)))) ** 2
    sigma2 = max(sigma2, floor)
    covariance = sigma2 * np.linalg.pinv(phi.T @ phi)
    se = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, np.abs(theta) / se, np.inf)
    return theta, t


def refine_structure(model: EstimatedModel, data: Dataset, alpha: float = 0.05) -> EstimatedModel:
    """Backward elimination of the least significant term until all pass a two-sided t-test"""
    if not 0 < alpha < 1:
        raise ArgumentError(f"alpha must lie in (0, 1), got {alpha}")

    structure = list(model.structure)
    rows = data.estimation_rows(model.max_lag)
    target = data.y[rows.start:rows.stop]
    if len(rows) <= len(structure):
        raise ArgumentError(f"{len(rows)} estimation rows cannot test {len(structure)} coefficients")

    theta = np.asarray(model.coefficients)
    while structure:
        phi = build_regressor(data, structure, rows)
        theta, t = _t_statistics(phi, target)
        critical = stats.t.ppf(1.0 - alpha / 2.0, df=len(rows) - len(structure))
        weakest = int(np.argmin(t))
        if t[weakest] >= critical:
            break
        logger.debug(f"refinement drops {structure[weakest]} (|t| = {t[weakest]:.3g} < {critical:.3g})")
        del structure[weakest]

    if not structure:
        return EstimatedModel((), [], model.max_lag, model.source_model_set, degenerate=True)
    return EstimatedModel(tuple(structure), theta, model.max_lag, model.source_model_set)


def classify_outcome(structure: Iterable[Term], truth: Iterable[Term]) -> OutcomeLabel:
    found, true = set(structure), set(truth)
    if found == true:
        return OutcomeLabel.EXACT_FITTING
    if found > true:
        return OutcomeLabel.OVER_FITTING
    if found < true:
        return OutcomeLabel.UNDER_FITTING_1
    return OutcomeLabel.UNDER_FITTING_2


@dataclass
class OutcomeRow:
    bits: str
    refined: List[Term]
    label: OutcomeLabel


@dataclass
class OutcomeTable:
    counts: Dict[OutcomeLabel, int] = field(default_factory=lambda: {label: 0 for label in OutcomeLabel})
    rows: List[OutcomeRow] = field(default_factory=list)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def to_frame(self) -> pd.DataFrame:
        labels = [label.value for label in OutcomeLabel] + ["total"]
        counts = [self.counts[label] for label in OutcomeLabel] + [self.total]
        return pd.DataFrame({"label": labels, "count": counts})


def refine_archive_entry(structure: Sequence[Term], data: Dataset, model_set: ModelSet, alpha: float) -> EstimatedModel:
    model = estimate_parameters(data, structure, model_set=model_set)
    return refine_structure(model, data, alpha)


def outcome_table(
    archive: ParetoArchive,
    truth: Sequence[Term],
    data: Dataset,
    model_set: ModelSet,
    alpha: float = 0.05,
) -> OutcomeTable:
    """Refine every archived structure, then count outcome labels"""
    table = OutcomeTable()
    for entry in archive.sorted_entries():
        refined = refine_archive_entry(decode(entry.genome, model_set), data, model_set, alpha)
        label = classify_outcome(refined.structure, truth)
        table.counts[label] += 1
        table.rows.append(OutcomeRow(str(entry.genome), list(refined.structure), label))
    logger.info(f"outcome table over {table.total} structures: " + ", ".join(f"{k.value}={v}" for k, v in table.counts.items()))
    return table


@dataclass(frozen=True)
class CriteriaRow:
    xi: int
    bic: float
    lilc: float
    bits: str = ""


def criteria_from_rss(rss: float, rows: int, xi: int) -> Tuple[float, float]:
    """(BIC, LILC) from the one-step residual sum of squares over ``rows`` samples"""
    fit = rows * math.log(max(rss, RSS_FLOOR) / rows)
    return fit + xi * math.log(rows), fit + 2.0 * xi * math.log(math.log(rows))


def information_criteria(
    archive: ParetoArchive,
    data: Dataset,
    model_set: ModelSet,
) -> List[CriteriaRow]:
    """BIC and LILC per archived structure, ordered by cardinality"""
    result = []
    for entry in archive.sorted_entries():
        structure = decode(entry.genome, model_set)
        model = estimate_parameters(data, structure, model_set=model_set)
        rows = data.estimation_rows(model.max_lag)
        residual = data.y[rows.start:rows.stop] - build_regressor(data, structure, rows) @ model.coefficients
        bic, lilc = criteria_from_rss(float(residual @ residual), len(rows), len(structure))
        result.append(CriteriaRow(len(structure), bic, lilc, str(entry.genome)))
    return result


def criteria_frame(rows: Sequence[CriteriaRow]) -> pd.DataFrame:
    return pd.DataFrame({"xi": [r.xi for r in rows], "bic": [r.bic for r in rows], "lilc": [r.lilc for r in rows]})
