"""Risk model descriptors and their cumulant functions.

Four families are supported:

* compound Poisson with time-varying intensity, premium density and claim
  law (no interest),
* the same model observed through deterministic interest discounting,
* a superposition of homogeneous branches opened at increasing times
  ("united" model),
* a discrete-time renewal walk with independent, non-identically
  distributed steps.

The central object is the cumulant a(h, t) = log E[exp(h S(t))] (or its
discounted analogue), evaluated pointwise with an error estimate and on
grids via cumulative fixed-order Gauss-Legendre panels for the bound
engine's inner suprema.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate

from .distributions import (
    DistributionSpec,
    TimeVaryingClaimFamily,
    distribution_to_json,
    parse_distribution,
)
from .piecewise import PiecewisePolyFn

__all__ = [
    "CumulantResult",
    "ModelA",
    "ModelB",
    "UnitedBranch",
    "UnitedModel",
    "RenewalStep",
    "RenewalModel",
    "QuasiPeriodicReport",
    "cumulant_model_a",
    "cumulant_model_b",
    "cumulant_united",
    "branch_cumulant",
    "united_breakpoint_values",
    "united_terminal_slope",
    "renewal_log_mgf",
    "renewal_expected_sums",
    "renewal_sup_log_mgf",
    "check_quasi_periodic",
    "parse_model",
    "model_to_json",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(15)

# resolution of the divergence envelope scan for discounted cumulants
_SCAN_WIDTH = 0.25


@dataclass(frozen=True)
class CumulantResult:
    """Value of a cumulant with its quadrature error estimate."""

    value: float
    error: float = 0.0

    @property
    def diverged(self) -> bool:
        return math.isinf(self.value)


@dataclass(frozen=True)
class ModelA:
    """Compound Poisson claim surplus with densities for intensity and premium."""

    intensity_density: PiecewisePolyFn
    premium_density: PiecewisePolyFn
    claims: TimeVaryingClaimFamily

    def __post_init__(self):
        if not self.intensity_density.is_nonnegative():
            raise ValueError("intensity density must be nonnegative")
        if not self.premium_density.is_nonnegative():
            raise ValueError("premium density must be nonnegative")

    def accumulated_intensity(self, t: float) -> float:
        return self.intensity_density.integral(t)

    def accumulated_premium(self, t: float) -> float:
        return self.premium_density.integral(t)


@dataclass(frozen=True)
class ModelB:
    """Model A observed through the discounted process Y(t) = int e^{-r} dS.

    The accumulation factor is pinned to its admissible boundary
    exp(r(t2) - r(t1)), with no interest credited on premiums; any larger
    accumulation only lowers the true ruin probability, so certificates
    computed here remain valid for it.
    """

    base: ModelA
    discount: PiecewisePolyFn

    def __post_init__(self):
        if self.discount(0.0) != 0.0:
            raise ValueError("discount exponent must vanish at 0")
        if not self.discount.is_nondecreasing():
            raise ValueError("discount exponent must be nondecreasing")

    @classmethod
    def without_interest(cls, base: ModelA) -> "ModelB":
        return cls(base, PiecewisePolyFn.zero())

    @property
    def interest_free(self) -> bool:
        return self.discount.is_zero()


@dataclass(frozen=True)
class UnitedBranch:
    start: float
    intensity: float
    premium_rate: float
    claims: DistributionSpec

    def __post_init__(self):
        if self.start < 0.0:
            raise ValueError("branch start time must be nonnegative")
        if not self.intensity > 0.0:
            raise ValueError("branch intensity must be positive")
        if self.premium_rate < 0.0:
            raise ValueError("branch premium rate must be nonnegative")
        if not self.claims.nonnegative:
            raise ValueError("claim sizes must have nonnegative support")


@dataclass(frozen=True)
class UnitedModel:
    branches: tuple[UnitedBranch, ...]

    def __post_init__(self):
        br = tuple(self.branches)
        if not br:
            raise ValueError("need at least one branch")
        if br[0].start != 0.0:
            raise ValueError("first branch must start at time 0")
        if any(b2.start <= b1.start for b1, b2 in zip(br, br[1:])):
            raise ValueError("branch start times must be strictly increasing")
        object.__setattr__(self, "branches", br)

    @property
    def start_times(self) -> tuple[float, ...]:
        return tuple(b.start for b in self.branches)


@dataclass(frozen=True)
class RenewalStep:
    """One renewal step: either (claim, inter-occurrence time, premium rate)
    or a direct law for the increment itself."""

    claim: DistributionSpec | None = None
    inter_time: DistributionSpec | None = None
    premium_rate: float = 0.0
    increment: DistributionSpec | None = None

    def __post_init__(self):
        direct = self.increment is not None
        decomposed = self.claim is not None or self.inter_time is not None
        if direct == decomposed:
            raise ValueError("step is either decomposed (claim, inter_time) or direct (increment)")
        if not direct:
            if self.claim is None or self.inter_time is None:
                raise ValueError("decomposed step needs both claim and inter_time")
            if not self.claim.nonnegative:
                raise ValueError("claim must have nonnegative support")
            if not self.inter_time.nonnegative:
                raise ValueError("inter-occurrence time must have nonnegative support")
            if self.premium_rate < 0.0:
                raise ValueError("premium rate must be nonnegative")

    @property
    def is_direct(self) -> bool:
        return self.increment is not None

    def log_mgf(self, h: float) -> float:
        if self.is_direct:
            return self.increment.log_mgf(h)
        return self.claim.log_mgf(h) + self.inter_time.log_mgf(-h * self.premium_rate)

    def mean(self) -> float:
        if self.is_direct:
            return self.increment.mean()
        return self.claim.mean() - self.premium_rate * self.inter_time.mean()


@dataclass(frozen=True)
class RenewalModel:
    """Step laws; with period > 0 the trailing `period` steps repeat forever."""

    steps: tuple[RenewalStep, ...]
    period: int = 0

    def __post_init__(self):
        st = tuple(self.steps)
        if not st:
            raise ValueError("need at least one step")
        if not 0 <= self.period <= len(st):
            raise ValueError("period must lie in [0, len(steps)]")
        object.__setattr__(self, "steps", st)

    @property
    def preperiod(self) -> int:
        return len(self.steps) - self.period

    def step(self, k: int) -> RenewalStep:
        """Step law for index k >= 1."""
        if k < 1:
            raise ValueError("step index starts at 1")
        if k <= len(self.steps):
            return self.steps[k - 1]
        if self.period == 0:
            raise ValueError(f"model defines only {len(self.steps)} steps")
        return self.steps[self.preperiod + (k - self.preperiod - 1) % self.period]

    @classmethod
    def iid(cls, step: RenewalStep) -> "RenewalModel":
        return cls((step,), period=1)


# -- cumulants: compound Poisson ------------------------------------------


def _merged_edges(t_end: float, *fns: PiecewisePolyFn) -> list[float]:
    pts = {0.0, t_end}
    for fn in fns:
        pts.update(b for b in fn.breakpoints if 0.0 < b < t_end)
    return sorted(pts)


def cumulant_model_a(m: ModelA, h: float, t: float) -> CumulantResult:
    """a(h, t) = int_0^t (E[exp(h Z(x))] - 1) dLambda(x) - h p(t)."""
    _check_args(h, t)
    if h == 0.0 or t == 0.0:
        return CumulantResult(0.0)
    if h >= m.claims.abscissa_cap(0.0, t):
        return CumulantResult(math.inf)
    total = err = 0.0
    for a, b in _pairs(_merged_edges(t, m.intensity_density, m.claims.scale)):
        val, e = integrate.quad(
            lambda x: m.claims.q(h, x) * m.intensity_density(x), a, b,
            epsabs=1e-12, epsrel=1e-9, limit=200,
        )
        total += val
        err += e
    return CumulantResult(total - h * m.accumulated_premium(t), err)


def cumulant_model_a_grid(m: ModelA, h: float, ts: np.ndarray) -> np.ndarray:
    """Cumulant on an ascending grid, +inf past the divergence point."""
    mb = ModelB.without_interest(m)
    return cumulant_model_b_grid(mb, h, ts)


def cumulant_model_b(m: ModelB, h: float, t: float) -> CumulantResult:
    """Discounted cumulant
    a(h, t) = int_0^t (E[exp(h e^{-r} Z(x))] - 1) dLambda(x) - h int_0^t e^{-r} dp."""
    _check_args(h, t)
    if h == 0.0 or t == 0.0:
        return CumulantResult(0.0)
    if _discounted_divergence(m, h, t):
        return CumulantResult(math.inf)
    base = m.base
    r = m.discount
    total = err = 0.0
    edges = _merged_edges(t, base.intensity_density, base.premium_density, base.claims.scale, r)
    for a, b in _pairs(edges):
        val, e = integrate.quad(
            lambda x: base.claims.base.mgf_minus_one(h * math.exp(-r(x)) * base.claims.scale(x))
            * base.intensity_density(x)
            - h * math.exp(-r(x)) * base.premium_density(x),
            a, b, epsabs=1e-12, epsrel=1e-9, limit=200,
        )
        total += val
        err += e
    return CumulantResult(total, err)


def cumulant_model_b_grid(m: ModelB, h: float, ts: np.ndarray) -> np.ndarray:
    ts = np.asarray(ts, dtype=float)
    out = np.zeros(ts.shape)
    if h == 0.0 or ts.size == 0:
        return out
    t_end = float(ts[-1])
    if t_end == 0.0:
        return out
    base = m.base
    r = m.discount
    div_from = _discounted_divergence_onset(m, h, t_end)
    edges = np.array(
        sorted(
            set(np.asarray(ts, dtype=float).tolist())
            | set(_merged_edges(t_end, base.intensity_density, base.premium_density, base.claims.scale, r))
        )
    )
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    # panel nodes, shape (cells, order)
    x = mid[:, None] + half[:, None] * _GL_X[None, :]
    xf = x.ravel()
    disc = np.exp(-r.values(xf))
    q = _q_vec_discounted(base.claims, h, xf, disc)
    f = q * base.intensity_density.values(xf) - h * disc * base.premium_density.values(xf)
    cell = (f.reshape(x.shape) * _GL_W[None, :]).sum(axis=1) * half
    cum = np.concatenate(([0.0], np.cumsum(cell)))
    idx = np.searchsorted(edges, ts)
    out = cum[idx]
    if div_from is not None:
        out[ts >= div_from - 1e-15] = np.inf
    return out


def _q_vec_discounted(claims: TimeVaryingClaimFamily, h: float, xs: np.ndarray, disc: np.ndarray) -> np.ndarray:
    from .distributions import mgf_minus_one_vec

    return mgf_minus_one_vec(claims.base, h * disc * claims.scale.values(xs))


def _discount_scan_edges(m: ModelB, t: float) -> list[float]:
    edges = _merged_edges(t, m.base.claims.scale, m.discount)
    refined: list[float] = []
    for a, b in _pairs(edges):
        n = max(1, int(math.ceil((b - a) / _SCAN_WIDTH)))
        refined.extend(a + (b - a) * i / n for i in range(n))
    refined.append(t)
    return refined


def _discounted_divergence(m: ModelB, h: float, t: float) -> bool:
    return _discounted_divergence_onset(m, h, t) is not None


def _discounted_divergence_onset(m: ModelB, h: float, t: float) -> float | None:
    """First scan point whose envelope h * e^{-r} * scale reaches the abscissa.

    The envelope uses e^{-r(segment start)}, exact for nondecreasing r on
    segments where r is constant and conservative within the scan width
    otherwise.
    """
    absc = m.base.claims.base.abscissa
    if math.isinf(absc):
        return None
    scale = m.base.claims.scale
    edges = _discount_scan_edges(m, t)
    for a, b in _pairs(edges):
        env = h * math.exp(-m.discount(a)) * scale.sup_on(a, b)
        if env >= absc:
            return a
    return None


def _pairs(edges):
    return zip(edges[:-1], edges[1:])


def _check_args(h: float, t: float) -> None:
    if h < 0.0:
        raise ValueError("h must be nonnegative")
    if t < 0.0:
        raise ValueError("t must be nonnegative")


# -- cumulants: united model ------------------------------------------------


def branch_cumulant(branch: UnitedBranch, h: float) -> float:
    """Per-unit-time exponent lambda_i (E[exp(h Z_i)] - 1) - h p_i."""
    q = branch.claims.mgf_minus_one(h)
    if math.isinf(q):
        return math.inf
    return branch.intensity * q - h * branch.premium_rate


def cumulant_united(m: UnitedModel, h: float, t: float) -> CumulantResult:
    """a(h, t) = sum_i (t - t_i)^+ a_i(h); exact and piecewise linear in t."""
    _check_args(h, t)
    if h == 0.0:
        return CumulantResult(0.0)
    total = 0.0
    for br in m.branches:
        dt = t - br.start
        if dt > 0.0:
            a = branch_cumulant(br, h)
            if math.isinf(a):
                return CumulantResult(math.inf)
            total += dt * a
    return CumulantResult(total)


def united_breakpoint_values(m: UnitedModel, h: float) -> list[float]:
    """Cumulant values at the branch opening times (the vertices of t -> a(h, t))."""
    return [cumulant_united(m, h, tk).value for tk in m.start_times]


def united_terminal_slope(m: UnitedModel, h: float) -> float:
    """d a(h, t) / dt once every branch is open."""
    total = 0.0
    for br in m.branches:
        a = branch_cumulant(br, h)
        if math.isinf(a):
            return math.inf
        total += a
    return total


# -- renewal model -----------------------------------------------------------


def renewal_log_mgf(m: RenewalModel, h: float, n: int) -> float:
    """log E[exp(h S_n)] = sum_{k<=n} log E[exp(h Y_k)]; +inf propagates."""
    if h < 0.0:
        raise ValueError("h must be nonnegative")
    if n < 1:
        raise ValueError("n must be positive")
    total = 0.0
    for k in range(1, n + 1):
        c = m.step(k).log_mgf(h)
        if math.isinf(c):
            return math.inf
        total += c
    return total


def renewal_expected_sums(m: RenewalModel, n: int) -> list[float]:
    """E[S_k] for k = 1..n."""
    if n < 1:
        raise ValueError("n must be positive")
    sums, acc = [], 0.0
    for k in range(1, n + 1):
        acc += m.step(k).mean()
        sums.append(acc)
    return sums


def renewal_sup_log_mgf(m: RenewalModel, h: float, n_cap: int | None = None) -> float:
    """log sup_{n>=1} E[exp(h S_n)].

    Exact for models with a periodic tail: beyond the preperiod the log-MGF
    partial sums gain a fixed per-period increment, so the supremum either
    sits inside the first full cycle or is +inf when that increment is
    positive. Without a periodic tail a finite n_cap is required and the
    result is a finite-horizon envelope only.
    """
    if m.period == 0:
        if n_cap is None:
            raise ValueError("non-periodic model: pass n_cap for a finite-horizon envelope")
        return max(renewal_log_mgf(m, h, n) for n in range(1, n_cap + 1))
    per_step = [m.step(k).log_mgf(h) for k in range(1, len(m.steps) + 1)]
    if any(math.isinf(c) for c in per_step):
        return math.inf
    cycle = sum(per_step[m.preperiod:])
    if cycle > 0.0:
        return math.inf
    best, acc = -math.inf, 0.0
    for c in per_step:
        acc += c
        best = max(best, acc)
    return best


# -- quasi-periodicity checks -------------------------------------------------


@dataclass(frozen=True)
class QuasiPeriodicReport:
    """Grid evidence for the periodic-window reduction; PASS is not a proof."""

    passed: bool
    lag: float
    first_violation: dict | None = None
    points_checked: int = 0

    def __bool__(self) -> bool:
        return self.passed


def check_quasi_periodic(
    m: ModelB, lag: float, h_grid, t_grid, rtol: float = 1e-9
) -> QuasiPeriodicReport:
    """Check the window-reduction conditions on finite grids.

    For every t in t_grid (and h in h_grid for the claim condition):

    * e^{r(t+l)} (E[exp(h e^{-r(t+l)} Z(t+l))] - 1)
        <= e^{r(t)} (E[exp(h e^{-r(t)} Z(t))] - 1),
    * e^{-r(t+l)} Lambda'(t+l) <= e^{-r(t)} Lambda'(t),
    * e^{-r(t+l)} p'(t+l)      >= e^{-r(t)} p'(t).

    Reports the first violated inequality, or PASS.
    """
    if lag <= 0.0:
        raise ValueError("lag must be positive")
    h_grid = [float(h) for h in h_grid]
    t_grid = [float(t) for t in t_grid]
    if not h_grid or not t_grid:
        raise ValueError("grids must be nonempty")
    base, r = m.base, m.discount
    checked = 0

    def viol(lhs, rhs):
        tol = rtol * (1.0 + max(abs(lhs), abs(rhs)))
        return lhs > rhs + tol

    for t in t_grid:
        tl = t + lag
        d0, d1 = math.exp(-r(t)), math.exp(-r(tl))
        lam0, lam1 = base.intensity_density(t), base.intensity_density(tl)
        p0, p1 = base.premium_density(t), base.premium_density(tl)
        checked += 1
        if viol(d1 * lam1, d0 * lam0):
            return QuasiPeriodicReport(False, lag, {
                "condition": "intensity", "t": t, "lhs": d1 * lam1, "rhs": d0 * lam0,
            }, checked)
        if viol(d0 * p0, d1 * p1):
            return QuasiPeriodicReport(False, lag, {
                "condition": "premium", "t": t, "lhs": d0 * p0, "rhs": d1 * p1,
            }, checked)
        for h in h_grid:
            lhs = (1.0 / d1) * base.claims.q(h * d1, tl)
            rhs = (1.0 / d0) * base.claims.q(h * d0, t)
            checked += 1
            if math.isinf(lhs) and math.isinf(rhs):
                continue
            if viol(lhs, rhs):
                return QuasiPeriodicReport(False, lag, {
                    "condition": "claims", "t": t, "h": h, "lhs": lhs, "rhs": rhs,
                }, checked)
    return QuasiPeriodicReport(True, lag, None, checked)


# -- wire format ---------------------------------------------------------------

ModelSpec = ModelA | ModelB | UnitedModel | RenewalModel


def model_to_json(m: ModelSpec) -> dict:
    if isinstance(m, ModelA):
        return {
            "model": "compound_poisson",
            "intensity_density": m.intensity_density.to_json(),
            "premium_density": m.premium_density.to_json(),
            "claims": m.claims.to_json(),
        }
    if isinstance(m, ModelB):
        out = model_to_json(m.base)
        out["model"] = "discounted"
        out["discount"] = m.discount.to_json()
        return out
    if isinstance(m, UnitedModel):
        return {
            "model": "united",
            "branches": [
                {
                    "start": b.start,
                    "intensity": b.intensity,
                    "premium_rate": b.premium_rate,
                    "claims": distribution_to_json(b.claims),
                }
                for b in m.branches
            ],
        }
    if isinstance(m, RenewalModel):
        steps = []
        for s in m.steps:
            if s.is_direct:
                steps.append({"increment": distribution_to_json(s.increment)})
            else:
                steps.append({
                    "claim": distribution_to_json(s.claim),
                    "inter_time": distribution_to_json(s.inter_time),
                    "premium_rate": s.premium_rate,
                })
        return {"model": "renewal", "steps": steps, "period": m.period}
    raise ValueError(f"unknown model type {type(m).__name__}")


def parse_model(obj: dict) -> ModelSpec:
    if not isinstance(obj, dict) or "model" not in obj:
        raise ValueError("model must be an object with a 'model' key")
    kind = obj["model"]
    if kind == "compound_poisson":
        _require_keys(obj, {"model", "intensity_density", "premium_density", "claims"})
        return ModelA(
            PiecewisePolyFn.from_json(obj["intensity_density"]),
            PiecewisePolyFn.from_json(obj["premium_density"]),
            TimeVaryingClaimFamily.from_json(obj["claims"]),
        )
    if kind == "discounted":
        _require_keys(obj, {"model", "intensity_density", "premium_density", "claims", "discount"})
        base = ModelA(
            PiecewisePolyFn.from_json(obj["intensity_density"]),
            PiecewisePolyFn.from_json(obj["premium_density"]),
            TimeVaryingClaimFamily.from_json(obj["claims"]),
        )
        return ModelB(base, PiecewisePolyFn.from_json(obj["discount"]))
    if kind == "united":
        _require_keys(obj, {"model", "branches"})
        branches = []
        for b in obj["branches"]:
            unknown = set(b) - {"start", "intensity", "premium_rate", "claims"}
            if unknown:
                raise ValueError(f"unknown branch keys: {sorted(unknown)}")
            branches.append(UnitedBranch(
                float(b["start"]), float(b["intensity"]),
                float(b.get("premium_rate", 0.0)), parse_distribution(b["claims"]),
            ))
        return UnitedModel(tuple(branches))
    if kind == "renewal":
        _require_keys(obj, {"model", "steps", "period"}, optional={"period"})
        steps = []
        for s in obj["steps"]:
            if "increment" in s:
                unknown = set(s) - {"increment"}
                if unknown:
                    raise ValueError(f"unknown step keys: {sorted(unknown)}")
                steps.append(RenewalStep(increment=parse_distribution(s["increment"])))
            else:
                unknown = set(s) - {"claim", "inter_time", "premium_rate"}
                if unknown:
                    raise ValueError(f"unknown step keys: {sorted(unknown)}")
                steps.append(RenewalStep(
                    claim=parse_distribution(s["claim"]),
                    inter_time=parse_distribution(s["inter_time"]),
                    premium_rate=float(s.get("premium_rate", 0.0)),
                ))
        return RenewalModel(tuple(steps), int(obj.get("period", 0)))
    raise ValueError(f"unknown model kind '{kind}'")


def _require_keys(obj: dict, allowed: set, optional: set = frozenset()) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ValueError(f"unknown keys: {sorted(unknown)}")
    missing = allowed - set(obj) - set(optional)
    if missing:
        raise ValueError(f"missing keys: {sorted(missing)}")
