"""Diagonal random-effect variances with structural zero/infinite limits.

Each coefficient's variance ``d_i`` is stored as a float where ``0.0`` stands
for the limit ``d_i -> 0`` and ``math.inf`` for ``d_i -> inf``.  The criteria
never feed these sentinels into a matrix inverse; they drop or un-penalize the
corresponding rows instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ZERO = 0.0
INF = math.inf

_ZERO_WORDS = {"zero", "0"}
_INF_WORDS = {"inf", "infinite", "infinity"}


@dataclass(frozen=True)
class TaggedCovariance:
    """Diagonal ``D = diag(d_1, ..., d_p)`` with Zero / Finite / Infinite entries."""

    entries: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.entries)
        if not vals:
            raise ValueError("covariance needs at least one entry")
        for v in vals:
            if math.isnan(v) or v < 0:
                raise ValueError(f"variance entries must be 0, positive or inf; got {v!r}")
        object.__setattr__(self, "entries", vals)

    @classmethod
    def parse(cls, text: str) -> "TaggedCovariance":
        """Parse ``"zero,inf,2.5"``-style comma lists."""
        out = []
        for tok in text.split(","):
            tok = tok.strip().lower()
            if tok in _ZERO_WORDS:
                out.append(ZERO)
            elif tok in _INF_WORDS:
                out.append(INF)
            else:
                try:
                    v = float(tok)
                except ValueError:
                    raise ValueError(f"cannot parse variance tag {tok!r}") from None
                if not (v > 0 and math.isfinite(v)):
                    raise ValueError(f"numeric variance must be finite and > 0, got {tok!r}")
                out.append(v)
        return cls(tuple(out))

    @classmethod
    def finite(cls, values) -> "TaggedCovariance":
        vals = tuple(float(v) for v in values)
        if not all(0 < v < INF for v in vals):
            raise ValueError(f"finite variances must be positive and finite, got {vals}")
        return cls(vals)

    @property
    def p(self) -> int:
        return len(self.entries)

    @property
    def values(self) -> np.ndarray:
        return np.array(self.entries)

    @property
    def zero_mask(self) -> np.ndarray:
        return self.values == 0

    @property
    def infinite_mask(self) -> np.ndarray:
        return np.isinf(self.values)

    @property
    def finite_mask(self) -> np.ndarray:
        v = self.values
        return (v > 0) & np.isfinite(v)

    @property
    def all_finite(self) -> bool:
        return bool(np.all(self.finite_mask))

    def tags(self) -> tuple[str, ...]:
        return tuple("zero" if v == 0 else "inf" if math.isinf(v) else "finite" for v in self.entries)

    def replace(self, zero=None, infinite=None) -> "TaggedCovariance":
        """Swap Zero/Infinite tags for numbers (``None`` leaves them alone)."""
        out = []
        for v in self.entries:
            if v == 0 and zero is not None:
                v = zero
            elif math.isinf(v) and infinite is not None:
                v = infinite
            out.append(v)
        return TaggedCovariance(tuple(out))

    def __str__(self):
        return ",".join(
            "zero" if v == 0 else "inf" if math.isinf(v) else f"{v:.9g}" for v in self.entries
        )
