"""Bound engine: time suprema of cumulants, adjustment coefficients and
window constants, all packaged as certificates.

A certificate carries an exponent L, a constant C and the diagnostics that
justify them: the supremum of the cumulant over the search window at L, the
bisection bracket and the tolerances used. The certified statement is always
of the form  ruin probability <= min(1, C * exp(-L u)).

The exponent search is a conservative bisection: the reported L is the lower
end of the final bracket, so the certified predicate holds at L itself and
never only in the limit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .risk_models import (
    CumulantResult,
    ModelA,
    ModelB,
    QuasiPeriodicReport,
    UnitedModel,
    branch_cumulant,
    cumulant_model_b,
    cumulant_model_b_grid,
    united_breakpoint_values,
    united_terminal_slope,
)

__all__ = [
    "TimeWindow",
    "BoundCertificate",
    "ContractionCheckError",
    "make_cumulant_evaluator",
    "sup_cumulant",
    "adjustment_coefficient",
    "periodic_exponent",
    "quasi_periodic_constant",
    "united_exponents",
    "optimized_bound",
    "golden_min",
]

DEFAULT_HTOL = 5e-10
DEFAULT_ATOL = 1e-10
DEFAULT_H_MAX = 256.0
SUP_GRID_POINTS = 512
SUP_T_TOL = 1e-10


class ContractionCheckError(ValueError):
    """The per-window contraction hypothesis failed on the verification grid."""


@dataclass(frozen=True)
class TimeWindow:
    """Search window for the inner supremum over time."""

    kind: str
    t_end: float = math.nan
    lag: float = math.nan
    t0: float = 0.0
    model: UnitedModel | None = None

    @classmethod
    def finite(cls, t_end: float) -> "TimeWindow":
        if not (t_end > 0.0 and math.isfinite(t_end)):
            raise ValueError("finite window needs a positive finite horizon")
        return cls("finite", t_end=float(t_end))

    @classmethod
    def periodic(cls, lag: float) -> "TimeWindow":
        if not (lag > 0.0 and math.isfinite(lag)):
            raise ValueError("period must be positive and finite")
        return cls("periodic", t_end=float(lag), lag=float(lag))

    @classmethod
    def quasi_periodic(cls, t0: float, lag: float) -> "TimeWindow":
        if t0 < 0.0 or not (lag > 0.0 and math.isfinite(lag)):
            raise ValueError("need t0 >= 0 and positive finite lag")
        return cls("quasi_periodic", t_end=float(t0 + lag), lag=float(lag), t0=float(t0))

    @classmethod
    def united(cls, model: UnitedModel) -> "TimeWindow":
        return cls("united", model=model)

    def describe(self) -> str:
        if self.kind == "united":
            return "united"
        return f"{self.kind}[0,{self.t_end:g}]"


@dataclass(frozen=True)
class BoundCertificate:
    """Exponent, constant and the diagnostics certifying sup_t a(L, t) <= atol."""

    L: float
    C: float
    sup_at_L: float
    argmax_t: float
    h_bracket: tuple[float, float]
    htol: float
    atol: float
    window: str
    method: str = ""
    notes: dict = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return self.L <= 0.0

    def bound(self, u: float) -> float:
        if u < 0.0:
            raise ValueError("reserve must be nonnegative")
        return min(1.0, self.C * math.exp(-self.L * u))

    def to_json(self) -> dict:
        out = {
            "L": self.L,
            "C": self.C,
            "window": self.window,
            "sup_at_L": self.sup_at_L,
            "argmax_t": self.argmax_t,
            "htol": self.htol,
            "atol": self.atol,
            "method": self.method,
        }
        if self.notes:
            out["notes"] = self.notes
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "BoundCertificate":
        return cls(
            L=float(obj["L"]), C=float(obj["C"]),
            sup_at_L=float(obj.get("sup_at_L", 0.0)),
            argmax_t=float(obj.get("argmax_t", 0.0)),
            h_bracket=(float(obj["L"]), float(obj["L"])),
            htol=float(obj.get("htol", DEFAULT_HTOL)),
            atol=float(obj.get("atol", DEFAULT_ATOL)),
            window=str(obj.get("window", "")),
            method=str(obj.get("method", "")),
            notes=dict(obj.get("notes", {})),
        )


# -- evaluator over continuous models ----------------------------------------


@dataclass(frozen=True)
class ContinuousCumulant:
    """Pointwise / grid cumulant access for compound Poisson models."""

    model: ModelB

    def value(self, h: float, t: float) -> CumulantResult:
        return cumulant_model_b(self.model, h, t)

    def grid(self, h: float, ts: np.ndarray) -> np.ndarray:
        return cumulant_model_b_grid(self.model, h, ts)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        base = self.model.base
        pts = set(base.intensity_density.breakpoints)
        pts.update(base.premium_density.breakpoints)
        pts.update(base.claims.scale.breakpoints)
        pts.update(self.model.discount.breakpoints)
        return tuple(sorted(pts))

    def h_cap(self, t_end: float) -> float:
        """Largest h with a finite cumulant everywhere on [0, t_end]."""
        absc = self.model.base.claims.base.abscissa
        if math.isinf(absc):
            return math.inf
        scale = self.model.base.claims.scale
        r = self.model.discount
        pts = sorted({0.0, t_end} | {b for b in scale.breakpoints if b < t_end}
                     | {b for b in r.breakpoints if b < t_end})
        env = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            n = max(1, int(math.ceil((b - a) / 0.25)))
            for i in range(n):
                x0 = a + (b - a) * i / n
                x1 = a + (b - a) * (i + 1) / n
                env = max(env, math.exp(-r(x0)) * scale.sup_on(x0, x1))
        if env == 0.0:
            return math.inf
        return absc / env


def make_cumulant_evaluator(model: ModelA | ModelB) -> ContinuousCumulant:
    if isinstance(model, ModelA):
        model = ModelB.without_interest(model)
    return ContinuousCumulant(model)


# -- supremum over a window ----------------------------------------------------


def _united_sup(model: UnitedModel, h: float) -> tuple[float, float]:
    slope = united_terminal_slope(model, h)
    if math.isinf(slope):
        return math.inf, math.inf
    vals = united_breakpoint_values(model, h)
    if slope > 0.0:
        return math.inf, math.inf
    best = max(vals)
    tol = 1e-12 * (1.0 + abs(best))
    for tk, v in zip(model.start_times, vals):
        if v >= best - tol:
            return best, tk
    return best, model.start_times[-1]


def sup_cumulant(evaluator, h: float, window: TimeWindow) -> tuple[float, float]:
    """(sup_t a(h, t), argmax t) over the window; +inf on divergence.

    Finite windows use a dense grid refined around the best local maxima;
    the united window is exact through its piecewise-linear structure.
    """
    if h < 0.0:
        raise ValueError("h must be nonnegative")
    if window.kind == "united":
        model = window.model if window.model is not None else evaluator
        return _united_sup(model, h)
    if h == 0.0:
        return 0.0, 0.0
    t_hi = window.t_end
    ts = np.union1d(
        np.linspace(0.0, t_hi, SUP_GRID_POINTS + 1),
        [b for b in evaluator.breakpoints if 0.0 < b < t_hi],
    )
    vals = evaluator.grid(h, ts)
    if np.any(np.isinf(vals)):
        first = int(np.argmax(np.isinf(vals)))
        return math.inf, float(ts[first])
    order = np.argsort(vals)[::-1]
    brackets = []
    for i in order[:3]:
        lo = ts[max(int(i) - 1, 0)]
        hi = ts[min(int(i) + 1, len(ts) - 1)]
        brackets.append((float(lo), float(hi)))
    ttol = SUP_T_TOL * max(1.0, t_hi)
    candidates = [(float(ts[i]), float(vals[i])) for i in range(len(ts))]
    for lo, hi in brackets:
        while hi - lo > ttol:
            local = np.linspace(lo, hi, 33)
            lvals = evaluator.grid(h, local)
            j = int(np.argmax(lvals))
            candidates.append((float(local[j]), float(lvals[j])))
            lo = float(local[max(j - 1, 0)])
            hi = float(local[min(j + 1, 32)])
    best = max(v for _, v in candidates)
    tol = 1e-12 * (1.0 + abs(best))
    arg = min(t for t, v in candidates if v >= best - tol)
    return best, arg


# -- exponent searches -----------------------------------------------------------


def _bisect_largest(predicate, h_cap: float, h_max: float | None, htol: float):
    """Largest h in [0, cap] with predicate(h) true; predicate(0) must hold.

    Returns (lo, hi, capped): lo satisfies the predicate, hi fails it unless
    the search saturated at the cap.
    """
    cap = min(h_cap, h_max if h_max is not None else math.inf)
    if math.isinf(cap):
        cap = DEFAULT_H_MAX
    if cap <= 0.0:
        return 0.0, 0.0, True
    hi = cap
    if predicate(hi):
        return hi, hi, True
    lo = 0.0
    while hi - lo > htol:
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi, False


def adjustment_coefficient(
    evaluator,
    window: TimeWindow,
    h_max: float | None = None,
    htol: float = DEFAULT_HTOL,
    atol: float = DEFAULT_ATOL,
) -> BoundCertificate:
    """Largest certified h with sup_t a(h, t) <= 0 over the window.

    The constant is C = exp(max(0, sup_t a(L, t))), which is 1 whenever the
    supremum is nonpositive. Degenerates to L = 0, C = 1 (the trivial bound)
    when no positive h satisfies the predicate.
    """
    if window.kind == "united":
        h_cap = math.inf
    else:
        h_cap = evaluator.h_cap(window.t_end)

    def pred(h: float) -> bool:
        return sup_cumulant(evaluator, h, window)[0] <= 0.0

    lo, hi, capped = _bisect_largest(pred, h_cap, h_max, htol)
    sup_at, arg = sup_cumulant(evaluator, lo, window)
    notes = {}
    if capped and lo > 0.0:
        notes["capped"] = True
    return BoundCertificate(
        L=lo, C=math.exp(max(0.0, sup_at)), sup_at_L=sup_at, argmax_t=arg,
        h_bracket=(lo, hi), htol=htol, atol=atol,
        window=window.describe(), method="adjustment_coefficient", notes=notes,
    )


def periodic_exponent(
    model: ModelA | ModelB,
    lag: float,
    h_max: float | None = None,
    htol: float = DEFAULT_HTOL,
    atol: float = DEFAULT_ATOL,
    condition_report: QuasiPeriodicReport | None = None,
) -> BoundCertificate:
    """Exponent L = sup{h : E[exp(h Y(lag))] <= 1} and window constant
    C = sup_{0<=t<=lag} exp(a(L, t)).

    Callers are responsible for establishing the periodic-window conditions
    (see check_quasi_periodic); the report, when given, lands in the notes.
    """
    ev = make_cumulant_evaluator(model)
    window = TimeWindow.periodic(lag)

    def pred(h: float) -> bool:
        return ev.value(h, lag).value <= 0.0

    lo, hi, capped = _bisect_largest(pred, ev.h_cap(lag), h_max, htol)
    sup_at, arg = sup_cumulant(ev, lo, window)
    notes = {}
    if capped and lo > 0.0:
        notes["capped"] = True
    if condition_report is not None:
        notes["window_conditions"] = "grid-pass" if condition_report.passed else "grid-fail"
    return BoundCertificate(
        L=lo, C=math.exp(max(0.0, sup_at)), sup_at_L=sup_at, argmax_t=arg,
        h_bracket=(lo, hi), htol=htol, atol=atol,
        window=window.describe(), method="periodic_exponent", notes=notes,
    )


def quasi_periodic_constant(
    model: ModelA | ModelB,
    lag: float,
    t0: float,
    exponent: float,
    grid_points: int = 65,
    atol: float = DEFAULT_ATOL,
) -> BoundCertificate:
    """Window constant for a supplied exponent, after verifying the
    per-period contraction E[exp(h (Y(t+lag) - Y(t)))] <= 1 on a grid of
    t >= t0. Raises ContractionCheckError when the grid check fails."""
    if exponent < 0.0:
        raise ValueError("exponent must be nonnegative")
    ev = make_cumulant_evaluator(model)
    window = TimeWindow.quasi_periodic(t0, lag)
    if exponent > 0.0:
        for t in np.linspace(t0, t0 + 3.0 * lag, grid_points):
            inc = ev.value(exponent, float(t) + lag).value - ev.value(exponent, float(t)).value
            if not inc <= 1e-9 * (1.0 + abs(inc)):
                raise ContractionCheckError(
                    f"per-period increment MGF exceeds 1 at t={float(t):g} (log-increment {inc:.3e})"
                )
    sup_at, arg = sup_cumulant(ev, exponent, window)
    return BoundCertificate(
        L=exponent, C=math.exp(max(0.0, sup_at)), sup_at_L=sup_at, argmax_t=arg,
        h_bracket=(exponent, exponent), htol=0.0, atol=atol,
        window=window.describe(), method="quasi_periodic_constant",
        notes={"t0": t0, "contraction_grid": grid_points},
    )


def united_exponents(
    model: UnitedModel,
    h_max: float | None = None,
    htol: float = DEFAULT_HTOL,
    atol: float = DEFAULT_ATOL,
) -> tuple[BoundCertificate, list[float]]:
    """Aggregate exponent (largest h with the united supremum nonpositive)
    plus each branch's own exponent. The aggregate always lies between the
    first branch's exponent and the weakest branch's."""
    window = TimeWindow.united(model)

    def agg_pred(h: float) -> bool:
        return _united_sup(model, h)[0] <= 0.0

    lo, hi, capped = _bisect_largest(agg_pred, math.inf, h_max, htol)
    sup_at, arg = _united_sup(model, lo)

    per_branch = []
    for br in model.branches:
        cap = br.claims.abscissa

        def br_pred(h: float, _br=br) -> bool:
            return branch_cumulant(_br, h) <= 0.0

        blo, _bhi, _c = _bisect_largest(br_pred, cap, h_max, htol)
        per_branch.append(blo)

    notes = {"branch_exponents": per_branch}
    if capped and lo > 0.0:
        notes["capped"] = True
    cert = BoundCertificate(
        L=lo, C=math.exp(max(0.0, sup_at)), sup_at_L=sup_at, argmax_t=arg,
        h_bracket=(lo, hi), htol=htol, atol=atol,
        window=window.describe(), method="united_exponents", notes=notes,
    )
    return cert, per_branch


# -- reserve-dependent optimization ---------------------------------------------


def golden_min(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Golden-section minimum of a unimodal f on [lo, hi]; returns (x*, f*)."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    invphi2 = (3.0 - math.sqrt(5.0)) / 2.0
    a, b = lo, hi
    c = a + invphi2 * (b - a)
    d = a + invphi * (b - a)
    yc, yd = f(c), f(d)
    best = min(((c, yc), (d, yd), (a, f(a)), (b, f(b))), key=lambda p: p[1])
    while b - a > tol:
        if yc < yd:
            b, d, yd = d, c, yc
            c = a + invphi2 * (b - a)
            yc = f(c)
            if yc < best[1]:
                best = (c, yc)
        else:
            a, c, yc = c, d, yd
            d = a + invphi * (b - a)
            yd = f(d)
            if yd < best[1]:
                best = (d, yd)
    return best


def optimized_bound(
    log_sup_mgf,
    u: float,
    h_domain: tuple[float, float],
    h_tol: float = 1e-8,
) -> tuple[float, float]:
    """min over h of exp(-h u) * sup-MGF(h), capped at 1.

    `log_sup_mgf` maps h to log sup_t E[exp(h S(t))] (or the renewal
    analogue over n); the objective -h u + log_sup_mgf(h) is convex, so a
    golden-section search is exact up to its tolerance. Returns the capped
    bound and the minimizing h; (1, 0) when nothing beats the trivial bound.
    """
    if u < 0.0:
        raise ValueError("reserve must be nonnegative")
    lo, hi = h_domain
    if not (0.0 <= lo < hi):
        raise ValueError("invalid h domain")

    def objective(h: float) -> float:
        m = log_sup_mgf(h)
        if math.isinf(m):
            return math.inf
        return -h * u + m

    h_star, phi_star = golden_min(objective, lo, hi, h_tol * max(1.0, hi))
    if not phi_star < 0.0:
        return 1.0, 0.0
    return math.exp(phi_star), h_star
