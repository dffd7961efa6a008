from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EstimateSummary:
    est: float
    sd: float
    cv: float | None  # None when est == 0
    se: float
    n: int
    n_errors: int = 0

    @classmethod
    def from_values(cls, values: np.ndarray, n_errors: int = 0) -> "EstimateSummary":
        values = np.ascontiguousarray(values, dtype=float)
        n = values.size
        if n == 0:
            raise ValueError("cannot summarise an empty replicate set")
        est = float(np.mean(values))
        sd = float(np.std(values, ddof=1)) if n > 1 else 0.0
        cv = sd / est if est > 0 else None
        return cls(est=est, sd=sd, cv=cv, se=sd / math.sqrt(n), n=n, n_errors=n_errors)
