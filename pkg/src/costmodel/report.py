"""
Per-component cost records and their JSON / text renderings.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from .config import MacsQuery

logger = logging.getLogger(__name__)

CONVENTIONS = [
    "1 MAC = one multiply-accumulate; linear L x I -> O costs L*I*O",
    "dense conv costs L*K*I*O, separable conv L*(K*I + I*O)",
    "MHSA costs 4*L*d^2 + 2*L^2*d; softmax, normalization and activations cost 0",
    "encoder and duration predictor priced at input length; decoder and mel projection at output length",
    "bias and LayerNorm parameters counted unless disabled in the model config",
    "core totals exclude auxiliary pitch/energy bin embeddings; positional encodings are parameter-free",
]


@dataclass
class ComponentCost:
    """One row of a cost table. Unmeasured quantities stay None."""
    name: str
    params: Optional[int] = None
    macs: Optional[int] = None
    rtf: Optional[float] = None
    auxiliary: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "params": self.params, "macs": self.macs,
                "rtf": self.rtf, "auxiliary": self.auxiliary}


@dataclass
class CostBreakdown:
    """Cost table of one model: components, totals and the accounting conventions used."""
    model: str
    components: List[ComponentCost] = field(default_factory=list)
    query: Optional[MacsQuery] = None
    conventions: List[str] = field(default_factory=lambda: list(CONVENTIONS))
    repetitions: Optional[int] = None
    # Alternative totals under other conventions, e.g. pitch priced at phoneme level
    alternatives: Dict[str, int] = field(default_factory=dict)

    def component(self, name: str) -> ComponentCost:
        for comp in self.components:
            if comp.name == name:
                return comp
        raise KeyError(f"No component named '{name}' in breakdown of {self.model}")

    def core(self) -> List[ComponentCost]:
        return [c for c in self.components if not c.auxiliary]

    @property
    def totals(self) -> Dict[str, Any]:
        """Sums over components; a metric is None when no component measured it."""
        def total(rows, attr):
            values = [getattr(c, attr) for c in rows if getattr(c, attr) is not None]
            return sum(values) if values else None

        return {
            "params": total(self.core(), "params"),
            "params_with_auxiliaries": total(self.components, "params"),
            "macs": total(self.core(), "macs"),
            "macs_with_auxiliaries": total(self.components, "macs"),
            "rtf": total(self.components, "rtf"),
        }

    def merge(self, other: "CostBreakdown") -> "CostBreakdown":
        """Fill unmeasured columns of this breakdown from `other` (matched by component name)."""
        by_name = {c.name: c for c in other.components}
        merged = []
        for comp in self.components:
            peer = by_name.get(comp.name)
            if peer is None:
                merged.append(comp)
                continue
            merged.append(ComponentCost(
                name=comp.name,
                params=comp.params if comp.params is not None else peer.params,
                macs=comp.macs if comp.macs is not None else peer.macs,
                rtf=comp.rtf if comp.rtf is not None else peer.rtf,
                auxiliary=comp.auxiliary,
            ))
        names = {c.name for c in self.components}
        merged.extend(c for c in other.components if c.name not in names)
        return CostBreakdown(
            model=self.model,
            components=merged,
            query=self.query or other.query,
            conventions=self.conventions,
            repetitions=self.repetitions if self.repetitions is not None else other.repetitions,
            alternatives={**other.alternatives, **self.alternatives},
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": 1,
            "model": self.model,
            "components": [c.to_dict() for c in self.components],
            "totals": self.totals,
            "alternatives": dict(self.alternatives),
            "query": self.query.to_dict() if self.query else None,
            "repetitions": self.repetitions,
            "conventions": list(self.conventions),
        }


def _fmt_params(n: Optional[int]) -> str:
    return "-" if n is None else f"{n / 1e6:.2f}M"


def _fmt_macs(n: Optional[int]) -> str:
    return "-" if n is None else f"{n / 1e9:.3f}G"


def _fmt_rtf(r: Optional[float]) -> str:
    return "-" if r is None else f"{r:.2e}"


def render_table(breakdown: CostBreakdown) -> str:
    """Render a profiling table: one row per component plus core and auxiliary totals."""
    width = max([len(c.name) for c in breakdown.components] + [26]) + 2
    lines = [f"Model: {breakdown.model}"]
    if breakdown.query is not None:
        q = breakdown.query
        lines.append(f"Lengths: input {q.input_length}, output {q.output_length} "
                     f"({q.audio_seconds:.3f} s of audio)")
    lines.append(f"{'Component':<{width}}{'#Params':>12}{'MACs':>12}{'RTF':>12}")
    lines.append("-" * (width + 36))
    for c in breakdown.components:
        label = f"{c.name} (aux)" if c.auxiliary else c.name
        lines.append(f"{label:<{width}}{_fmt_params(c.params):>12}{_fmt_macs(c.macs):>12}{_fmt_rtf(c.rtf):>12}")
    lines.append("-" * (width + 36))
    t = breakdown.totals
    lines.append(f"{'Total (core)':<{width}}{_fmt_params(t['params']):>12}{_fmt_macs(t['macs']):>12}"
                 f"{_fmt_rtf(t['rtf']):>12}")
    lines.append(f"{'Total (with auxiliaries)':<{width}}{_fmt_params(t['params_with_auxiliaries']):>12}"
                 f"{_fmt_macs(t['macs_with_auxiliaries']):>12}{'':>12}")
    for label, value in breakdown.alternatives.items():
        lines.append(f"  alternative {label}: {_fmt_macs(value)}")
    if breakdown.repetitions is not None:
        lines.append(f"  RTF = median over {breakdown.repetitions} runs / audio seconds")
    lines.append("Conventions:")
    lines.extend(f"  - {note}" for note in breakdown.conventions)
    return "\n".join(lines)


def render_comparison(rows: List[CostBreakdown]) -> str:
    """Side-by-side totals of several models."""
    width = max([len(b.model) for b in rows] + [10]) + 2
    lines = [f"{'Model':<{width}}{'#Params':>12}{'+aux':>12}{'MACs':>12}{'RTF':>12}",
             "-" * (width + 48)]
    for b in rows:
        t = b.totals
        lines.append(f"{b.model:<{width}}{_fmt_params(t['params']):>12}"
                     f"{_fmt_params(t['params_with_auxiliaries']):>12}{_fmt_macs(t['macs']):>12}"
                     f"{_fmt_rtf(t['rtf']):>12}")
    return "\n".join(lines)
