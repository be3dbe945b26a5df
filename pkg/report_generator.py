import logging
from typing import Dict, List, Optional, Sequence

from decision_maker import RankedFront
from evolution_core import ParetoArchive, decode
from narx_model import ModelSet
from outcome_analyzer import CriteriaRow, OutcomeTable

logger = logging.getLogger(__name__)

TOP_N = 5


class ReportGenerator:
    """Markdown summaries of a structure-selection search"""

    def __init__(self, model_set: ModelSet):
        self.model_set = model_set

    def generate_search_summary(
        self,
        label: str,
        settings: Dict,
        runs: Sequence[ParetoArchive],
        pooled: ParetoArchive,
        rankings: Dict[str, RankedFront],
        outcomes: Optional[OutcomeTable] = None,
        criteria: Optional[List[CriteriaRow]] = None,
    ) -> str:
        """Complete search report; contains no timestamps so reruns compare equal"""
        evaluations = sum(a.evaluations for a in runs)

        report = f"""# STRUCTURE SELECTION REPORT
## Data: {label}

---

## RUN SUMMARY

**Algorithm:** {settings.get('algorithm', 'unknown')}
**Independent Runs:** {len(runs)}
**Function Evaluations:** {evaluations}
**Model Set:** {self.model_set.size} candidate terms (n_u={self.model_set.n_u}, n_y={self.model_set.n_y}, n_l={self.model_set.n_l})
**Goal Point:** xi <= {settings.get('xi_lim')}, NMSE <= {settings.get('nmse_lim')}%
**Pooled Non-dominated Structures:** {len(pooled)}

| Run | Archive Size | Evaluations | Generations |
|-----|--------------|-------------|-------------|
"""
        for i, archive in enumerate(runs, 1):
            report += f"| {i} | {len(archive)} | {archive.evaluations} | {archive.generations} |\n"

        for method, ranked in rankings.items():
            report += f"\n---\n\n## TOP {TOP_N} STRUCTURES ({method.upper()})\n\n"
            report += self._ranking_section(ranked)

        if outcomes is not None:
            report += "\n---\n\n## SEARCH OUTCOMES AFTER REFINEMENT\n\n"
            report += "| Outcome | Count |\n|---------|-------|\n"
            for outcome, count in outcomes.counts.items():
                report += f"| {outcome.value.replace('_', ' ')} | {count} |\n"
            report += f"| total | {outcomes.total} |\n"

        if criteria:
            report += "\n---\n\n## INFORMATION CRITERIA\n\n"
            report += "| xi | BIC | LILC |\n|----|-----|------|\n"
            for row in criteria:
                report += f"| {row.xi} | {row.bic:.2f} | {row.lilc:.2f} |\n"
            best_bic = min(criteria, key=lambda r: r.bic)
            best_lilc = min(criteria, key=lambda r: r.lilc)
            report += f"\nBIC minimum at xi = {best_bic.xi}; LILC minimum at xi = {best_lilc.xi}.\n"

        return report

    def _ranking_section(self, ranked: RankedFront) -> str:
        section = ""
        for i, item in enumerate(ranked.top(TOP_N), 1):
            terms = decode(item.entry.genome, self.model_set)
            section += f"{i}. **xi = {item.objectives.xi}, NMSE = {item.objectives.nmse:.4g}%** ({ranked.score_name} = {item.score:.4g})\n"
            section += f"   - Terms: {', '.join(str(t) for t in terms)}\n"
        return section or "No structures to rank.\n"
