"""
Search results and their rendering.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from src.searchspace import Architecture, format_arch
from src.supernet import EvalRecord

logger = logging.getLogger(__name__)


@dataclass
class SearchReport:
    """
    Outcome of one search run.

    `budget` holds planned_evals, supernet_evals (unique architectures
    evaluated), reused_evals and gbdt_predictions. `timings` is the only
    field that varies between identical runs.
    """
    method: str
    best_arch: Architecture
    best_val_loss: float
    initial_records: List[EvalRecord]
    reevaluated_records: List[EvalRecord]
    budget: Dict[str, int]
    seed: int
    mean_val_loss: Optional[float] = None
    predicted: List[float] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def records(self) -> List[EvalRecord]:
        return self.initial_records + self.reevaluated_records

    def to_dict(self, include_timings: bool = True) -> Dict[str, Any]:
        data = {
            "version": 1,
            "method": self.method,
            "seed": self.seed,
            "best_arch": format_arch(self.best_arch),
            "best_val_loss": self.best_val_loss,
            "mean_val_loss": self.mean_val_loss,
            "budget": dict(self.budget),
            "initial_records": [r.to_dict() for r in self.initial_records],
            "reevaluated_records": [r.to_dict() for r in self.reevaluated_records],
            "predicted": list(self.predicted),
        }
        if include_timings:
            data["timings"] = dict(self.timings)
        return data


def render_search_report(report: SearchReport) -> str:
    """Human-readable summary of a search run."""
    lines = ["=" * 60, f"{report.method.upper()} SEARCH REPORT (seed {report.seed})", "=" * 60, ""]
    lines.append(f"  Best architecture: {format_arch(report.best_arch)}")
    lines.append(f"  Best val loss: {report.best_val_loss:.6f}")
    if report.mean_val_loss is not None:
        lines.append(f"  Mean val loss: {report.mean_val_loss:.6f}")
    if report.initial_records:
        best_initial = min(r.val_loss for r in report.initial_records)
        lines.append(f"  Best initial val loss: {best_initial:.6f}")

    lines += ["", "BUDGET:", "-" * 60]
    for key, value in report.budget.items():
        lines.append(f"  {key.replace('_', ' ').title()}: {value}")

    if report.timings:
        lines += ["", "PHASE TIMINGS:", "-" * 60]
        for phase, seconds in report.timings.items():
            lines.append(f"  {phase}: {seconds:.2f}s")
    lines += ["", "=" * 60]
    return "\n".join(lines)
