"""Multiply-accumulate counter threaded through kernel forward passes."""

from collections import defaultdict
from typing import Dict, Optional

import numpy as np


class MacCounter:
    """
    Counts multiply-accumulates at every product site of a forward pass.

    Counts are derived from the operand shapes actually multiplied, so they
    serve as an independent check of the analytical cost model.
    """

    def __init__(self):
        self.total = 0
        self.by_scope: Dict[str, int] = defaultdict(int)
        self._scope: Optional[str] = None

    def add(self, macs: int) -> None:
        self.total += int(macs)
        if self._scope is not None:
            self.by_scope[self._scope] += int(macs)

    def scope(self, name: Optional[str]) -> None:
        """Attribute subsequent counts to a named component (None to stop)."""
        self._scope = name


def matmul(a: np.ndarray, b: np.ndarray, counter: Optional[MacCounter] = None) -> np.ndarray:
    """`a @ b`, charging prod(a.shape[:-1]) * a.shape[-1] * b.shape[-1] MACs."""
    if counter is not None:
        counter.add(int(np.prod(a.shape[:-1])) * a.shape[-1] * b.shape[-1])
    return a @ b
