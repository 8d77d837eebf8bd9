"""Piecewise polynomial functions of time, exact to evaluate and integrate.

Pieces are cubic-or-lower polynomials in the global time variable. The
function is defined on [0, inf): piece i applies on
[breakpoints[i], breakpoints[i+1]) and the last piece extends beyond the
final breakpoint. Closed-form integrals and exact suprema (via critical
points) keep these usable both as model inputs (intensity, premium and
discount densities) and as oracles in tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

__all__ = ["PiecewisePolyFn"]

_MAX_DEGREE = 3


def _quad_roots(a: float, b: float, c: float) -> list[float]:
    """Real roots of a*x^2 + b*x + c, handling degenerate leading terms."""
    if a == 0.0:
        if b == 0.0:
            return []
        return [-c / b]
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return []
    s = math.sqrt(disc)
    return [(-b - s) / (2.0 * a), (-b + s) / (2.0 * a)]


@dataclass(frozen=True)
class PiecewisePolyFn:
    """Piecewise polynomial with ascending breakpoints starting at 0."""

    breakpoints: tuple[float, ...]
    pieces: tuple[tuple[float, float, float, float], ...]
    _prefix: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        pc = []
        for coefs in self.pieces:
            c = tuple(float(x) for x in coefs)
            if not 1 <= len(c) <= _MAX_DEGREE + 1:
                raise ValueError("each piece takes 1 to 4 coefficients")
            pc.append(c + (0.0,) * (_MAX_DEGREE + 1 - len(c)))
        if len(bp) == 0 or len(bp) != len(pc):
            raise ValueError("need one piece per breakpoint")
        if bp[0] != 0.0:
            raise ValueError("first breakpoint must be 0")
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if not all(math.isfinite(b) for b in bp):
            raise ValueError("breakpoints must be finite")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "pieces", tuple(pc))
        # prefix[i] = integral of the function over [0, breakpoints[i]]
        prefix = [0.0]
        for i in range(len(bp) - 1):
            prefix.append(prefix[-1] + self._piece_integral(i, bp[i], bp[i + 1]))
        object.__setattr__(self, "_prefix", tuple(prefix))

    @classmethod
    def constant(cls, value: float) -> "PiecewisePolyFn":
        return cls((0.0,), ((float(value),),))

    @classmethod
    def zero(cls) -> "PiecewisePolyFn":
        return cls.constant(0.0)

    # -- evaluation ------------------------------------------------------

    def _index(self, t: float) -> int:
        lo, hi = 0, len(self.breakpoints) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.breakpoints[mid] <= t:
                lo = mid
            else:
                hi = mid - 1
        return lo

    def __call__(self, t: float) -> float:
        if t < 0.0:
            raise ValueError("domain is [0, inf)")
        c = self.pieces[self._index(t)]
        return c[0] + t * (c[1] + t * (c[2] + t * c[3]))

    def values(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        if np.any(ts < 0.0):
            raise ValueError("domain is [0, inf)")
        idx = np.clip(np.searchsorted(self.breakpoints, ts, side="right") - 1, 0, None)
        coefs = np.asarray(self.pieces)[idx]
        return coefs[:, 0] + ts * (coefs[:, 1] + ts * (coefs[:, 2] + ts * coefs[:, 3]))

    # -- integration -----------------------------------------------------

    def _piece_integral(self, i: int, a: float, b: float) -> float:
        c = self.pieces[i]

        def anti(x: float) -> float:
            return x * (c[0] + x * (c[1] / 2.0 + x * (c[2] / 3.0 + x * c[3] / 4.0)))

        return anti(b) - anti(a)

    def integral(self, t: float) -> float:
        """Integral of the function over [0, t], exact."""
        if t < 0.0:
            raise ValueError("domain is [0, inf)")
        i = self._index(t)
        return self._prefix[i] + self._piece_integral(i, self.breakpoints[i], t)

    def integral_between(self, a: float, b: float) -> float:
        return self.integral(b) - self.integral(a)

    def integrals(self, ts: np.ndarray) -> np.ndarray:
        return np.array([self.integral(float(t)) for t in np.asarray(ts, dtype=float)])

    # -- calculus helpers --------------------------------------------------

    def derivative(self) -> "PiecewisePolyFn":
        pc = tuple((c[1], 2.0 * c[2], 3.0 * c[3], 0.0) for c in self.pieces)
        return PiecewisePolyFn(self.breakpoints, pc)

    def _extremum_on(self, a: float, b: float, sign: float) -> float:
        """sup of sign * f over [a, b]; b = inf allowed."""
        if b < a:
            raise ValueError("empty interval")
        if math.isinf(b) and self._tail_unbounded(sign):
            return math.inf
        last = len(self.breakpoints) - 1
        i0 = self._index(a)
        i1 = self._index(b) if math.isfinite(b) else last
        best = -math.inf
        for i in range(i0, i1 + 1):
            lo = max(a, self.breakpoints[i])
            hi = min(b, self.breakpoints[i + 1]) if i < last else b
            cand = [lo]
            if math.isfinite(hi):
                cand.append(hi)
            c = self.pieces[i]
            for r in _quad_roots(3.0 * c[3], 2.0 * c[2], c[1]):
                if lo < r < hi:
                    cand.append(r)
            for t in cand:
                v = sign * self._eval_piece(i, t)
                if v > best:
                    best = v
        return best

    def _eval_piece(self, i: int, t: float) -> float:
        c = self.pieces[i]
        return c[0] + t * (c[1] + t * (c[2] + t * c[3]))

    def _tail_unbounded(self, sign: float) -> bool:
        """Does sign * f(t) tend to +inf as t -> inf?"""
        c = self.pieces[-1]
        for coef in (c[3], c[2], c[1]):
            if coef != 0.0:
                return sign * coef > 0.0
        return False

    def sup_on(self, a: float, b: float) -> float:
        """Exact supremum over [a, b]; b = inf allowed."""
        return self._extremum_on(a, b, +1.0)

    def inf_on(self, a: float, b: float) -> float:
        return -self._extremum_on(a, b, -1.0)

    def is_nonnegative(self) -> bool:
        """Exact check f >= 0 on all of [0, inf)."""
        return self.inf_on(0.0, math.inf) >= 0.0

    def is_zero(self) -> bool:
        return all(all(x == 0.0 for x in c) for c in self.pieces)

    def is_nondecreasing(self) -> bool:
        return self.derivative().is_nonnegative()

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        return {"breakpoints": list(self.breakpoints), "pieces": [list(c) for c in self.pieces]}

    @classmethod
    def from_json(cls, obj: dict) -> "PiecewisePolyFn":
        if not isinstance(obj, dict):
            raise ValueError("piecewise function must be an object")
        unknown = set(obj) - {"breakpoints", "pieces"}
        if unknown:
            raise ValueError(f"unknown keys in piecewise function: {sorted(unknown)}")
        try:
            return cls(tuple(obj["breakpoints"]), tuple(tuple(p) for p in obj["pieces"]))
        except KeyError as exc:
            raise ValueError(f"piecewise function missing key: {exc}") from None
