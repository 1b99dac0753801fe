"""Output constraint intervals and their tightened variants.

A constraint set is a (possibly half-open) interval on the scalar output,
together with an interior anchor point. Tightening shrinks every finite
bound toward the anchor by a factor (1 - eps); with anchor 0 this is plain
scaling of the interval by (1 - eps). An additive-margin variant is provided
for configurations where a fixed safety margin is easier to reason about
than a scale factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError

__all__ = ["ConstraintSet", "contains", "tighten", "tighten_margin", "validate_epsilon"]


def validate_epsilon(eps: float) -> float:
    """Check eps is in the open interval (0, 1) and return it."""
    if not (0.0 < eps < 1.0):
        raise ConfigError(f"epsilon must lie strictly inside (0, 1), got {eps}")
    return float(eps)


def _scalar_bound(name: str, value) -> float:
    # unwraps numpy scalars and size-1 arrays; anything wider is a caller bug
    # that would otherwise surface as a broadcast shape error far downstream
    try:
        return float(value.item() if hasattr(value, "item") else value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a real scalar, got {value!r}") from exc


@dataclass(frozen=True)
class ConstraintSet:
    """Closed output interval [lower, upper] with an interior anchor.

    Either bound may be infinite, but not both; the anchor must lie strictly
    between the bounds. Membership is inclusive at finite bounds.
    """

    lower: float
    upper: float
    anchor: float = 0.0

    def __post_init__(self):
        for name in ("lower", "upper", "anchor"):
            object.__setattr__(self, name, _scalar_bound(name, getattr(self, name)))
        lo, hi, a = self.lower, self.upper, self.anchor
        if math.isnan(lo) or math.isnan(hi) or math.isnan(a):
            raise ConfigError("constraint bounds and anchor must not be NaN")
        if not lo < hi:
            raise ConfigError(f"constraint requires lower < upper, got [{lo}, {hi}]")
        if math.isinf(lo) and math.isinf(hi):
            raise ConfigError("at least one constraint bound must be finite")
        if not (lo < a < hi):
            raise ConfigError(f"anchor {a} must lie strictly inside ({lo}, {hi})")

    def contains(self, y: float) -> bool:
        """True iff lower <= y <= upper. NaN is never contained."""
        if math.isnan(y):
            return False
        return self.lower <= y <= self.upper

    def margin(self, y: float) -> float:
        """Signed distance from y to the nearest bound (positive inside)."""
        return min(y - self.lower, self.upper - y)


def contains(cset: ConstraintSet, y: float) -> bool:
    """Membership check; see :meth:`ConstraintSet.contains`."""
    return cset.contains(y)


def tighten(cset: ConstraintSet, eps: float) -> ConstraintSet:
    """Shrink each finite bound toward the anchor by a factor (1 - eps).

    new_bound = anchor + (1 - eps) * (bound - anchor). Infinite bounds are
    unchanged, and the anchor is preserved.
    """
    validate_epsilon(eps)
    scale = 1.0 - eps
    a = cset.anchor
    lo = cset.lower if math.isinf(cset.lower) else a + scale * (cset.lower - a)
    hi = cset.upper if math.isinf(cset.upper) else a + scale * (cset.upper - a)
    return ConstraintSet(lo, hi, a)


def tighten_margin(cset: ConstraintSet, delta: float) -> ConstraintSet:
    """Move each finite bound toward the anchor by a fixed margin delta."""
    if not (delta >= 0.0) or math.isnan(delta):
        raise ConfigError(f"tightening margin must be >= 0, got {delta}")
    if delta == 0.0:
        return cset
    lo = cset.lower if math.isinf(cset.lower) else cset.lower + delta
    hi = cset.upper if math.isinf(cset.upper) else cset.upper - delta
    if not (lo < cset.anchor < hi):
        raise ConfigError(
            f"margin {delta} empties the constraint set [{cset.lower}, {cset.upper}]"
        )
    return ConstraintSet(lo, hi, cset.anchor)
