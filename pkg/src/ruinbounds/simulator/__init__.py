"""Monte-Carlo ground truth for the bound certificates.

Path simulation for the compound Poisson models (claim arrivals by thinning
against the exact intensity supremum, ruin checked at claim instants, which
is where the discounted surplus attains its running supremum), renewal-walk
simulation, an exact dynamic-programming oracle for lattice walks, and
Wilson-interval estimates. Replications are a pure function of
(model, paths, horizon, u, seed): worker counts never change results.
"""

from __future__ import annotations

from dataclasses import dataclass
import math
import time
import warnings

import numpy as np

from ..distributions import Deterministic, Discrete
from ..piecewise import PiecewisePolyFn
from ..risk_models import ModelA, ModelB, RenewalModel, UnitedModel
from ..rng import RngStream
from ._backend import available_backends, backend_name, get_kernels
from ._encode import encode_continuous, encode_renewal, encode_united

__all__ = [
    "SimConfig",
    "SimEstimate",
    "LatticeStep",
    "LatticeWalk",
    "wilson_interval",
    "sample_nhpp",
    "estimate_ruin_model_a",
    "estimate_ruin_model_b",
    "estimate_ruin_united",
    "estimate_ruin_renewal",
    "dp_exact_ruin",
    "lattice_walk_from_renewal",
    "suggest_horizon",
    "backend_name",
    "available_backends",
]

_Z99 = 2.5758293035489004  # two-sided 99% normal quantile
_DP_CELL_GUARD = 4_000_000


@dataclass(frozen=True)
class SimConfig:
    """Replication plan; results depend on workers only through wall time."""

    paths: int
    horizon: float
    u: float
    seed: int
    workers: int | None = None

    def __post_init__(self):
        if self.paths < 1:
            raise ValueError("paths must be positive")
        if not self.horizon > 0.0:
            raise ValueError("horizon must be positive")
        if not self.u > 0.0:
            raise ValueError("initial reserve must be positive")


@dataclass(frozen=True)
class SimEstimate:
    """Empirical ruin frequency with a two-sided 99% Wilson interval."""

    ruins: int
    paths: int
    p_hat: float
    ci_lo: float
    ci_hi: float
    horizon: float
    seed: int
    total_events: int = 0
    wall_time: float = 0.0

    @property
    def se(self) -> float:
        return math.sqrt(self.p_hat * (1.0 - self.p_hat) / self.paths)

    def to_json(self) -> dict:
        return {
            "paths": self.paths,
            "ruins": self.ruins,
            "p_hat": self.p_hat,
            "ci99": [self.ci_lo, self.ci_hi],
            "horizon": self.horizon,
            "seed": self.seed,
        }


def wilson_interval(successes: int, trials: int, z: float = _Z99) -> tuple[float, float]:
    if trials < 1:
        raise ValueError("trials must be positive")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def sample_nhpp(intensity_density: PiecewisePolyFn, horizon: float, stream: RngStream) -> np.ndarray:
    """Event times of a non-homogeneous Poisson process on [0, horizon].

    Thinning against the exact supremum of the intensity on the window:
    homogeneous candidates at that rate, each kept with probability
    intensity(t) / supremum.
    """
    if not horizon > 0.0:
        raise ValueError("horizon must be positive")
    lam_max = intensity_density.sup_on(0.0, horizon)
    if lam_max == 0.0:
        return np.empty(0)
    out = []
    t = 0.0
    while True:
        t -= math.log(stream.uniform()) / lam_max
        if t > horizon:
            break
        if stream.uniform() * lam_max <= intensity_density(t):
            out.append(t)
    return np.asarray(out)


def _finish(flags, counts, horizon, seed, t0) -> SimEstimate:
    ruins = int(flags.sum())
    paths = len(flags)
    lo, hi = wilson_interval(ruins, paths)
    return SimEstimate(
        ruins=ruins, paths=paths, p_hat=ruins / paths, ci_lo=lo, ci_hi=hi,
        horizon=horizon, seed=seed, total_events=int(counts.sum()),
        wall_time=time.perf_counter() - t0,
    )


def estimate_ruin_model_a(model: ModelA, cfg: SimConfig) -> SimEstimate:
    """Ruin frequency for the undiscounted model; identical paths to the
    discounted estimator with a zero discount exponent."""
    return estimate_ruin_model_b(ModelB.without_interest(model), cfg)


def estimate_ruin_model_b(model: ModelB, cfg: SimConfig) -> SimEstimate:
    t0 = time.perf_counter()
    kern = get_kernels()
    kern.set_workers(cfg.workers)
    enc = encode_continuous(model, cfg.horizon)
    flags, counts = kern.simulate_continuous(enc, cfg.seed, cfg.paths, cfg.u)
    return _finish(flags, counts, cfg.horizon, cfg.seed, t0)


def estimate_ruin_united(model: UnitedModel, cfg: SimConfig) -> SimEstimate:
    t0 = time.perf_counter()
    kern = get_kernels()
    kern.set_workers(cfg.workers)
    enc = encode_united(model, cfg.horizon)
    flags, counts = kern.simulate_united(enc, cfg.seed, cfg.paths, cfg.u)
    return _finish(flags, counts, cfg.horizon, cfg.seed, t0)


def estimate_ruin_renewal(model: RenewalModel, u: float, n_steps: int, cfg: SimConfig) -> SimEstimate:
    if not u > 0.0:
        raise ValueError("initial reserve must be positive")
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    t0 = time.perf_counter()
    kern = get_kernels()
    kern.set_workers(cfg.workers)
    enc = encode_renewal(model, n_steps)
    flags, counts = kern.simulate_renewal(enc, cfg.seed, cfg.paths, u)
    return _finish(flags, counts, float(n_steps), cfg.seed, t0)


# -- exact lattice oracle -------------------------------------------------------


@dataclass(frozen=True)
class LatticeStep:
    """Finite-support increment in lattice units."""

    values: tuple[int, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) == 0 or len(self.values) != len(self.probs):
            raise ValueError("values and probs must be nonempty and equal length")
        if any(p < 0.0 for p in self.probs) or abs(sum(self.probs) - 1.0) > 1e-9:
            raise ValueError("probs must be nonnegative and sum to 1")


@dataclass(frozen=True)
class LatticeWalk:
    """Walk on scale * Z; steps repeat cyclically past the end of the list."""

    steps: tuple[LatticeStep, ...]
    scale: float = 1.0

    def __post_init__(self):
        if not self.steps:
            raise ValueError("need at least one step")
        if not self.scale > 0.0:
            raise ValueError("scale must be positive")

    def step(self, k: int) -> LatticeStep:
        return self.steps[(k - 1) % len(self.steps)]


def dp_exact_ruin(walk: LatticeWalk, u: float, n_steps: int) -> float:
    """Exact P(max_{k<=n} S_k > u) by dynamic programming over lattice levels.

    Brute-force oracle, independent of both the simulator and the bound
    engine. State space is guarded against blowup.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    if n_steps == 0:
        return 0.0
    # smallest lattice level strictly above the reserve
    k_min = math.floor(u / walk.scale + 1e-9) + 1
    lo = hi = 0
    probs = np.array([1.0])
    ruined = 0.0
    for k in range(1, n_steps + 1):
        step = walk.step(k)
        new_lo = lo + min(step.values)
        new_hi = hi + max(step.values)
        size = new_hi - new_lo + 1
        if size > _DP_CELL_GUARD:
            raise ValueError("lattice state space exceeds the overflow guard")
        new_probs = np.zeros(size)
        for v, q in zip(step.values, step.probs):
            shift = (lo + v) - new_lo
            new_probs[shift:shift + len(probs)] += q * probs
        j0 = max(0, k_min - new_lo)
        if j0 < size:
            ruined += float(new_probs[j0:].sum())
            new_probs[j0:] = 0.0
        lo, hi, probs = new_lo, min(new_hi, k_min - 1), new_probs[: max(0, min(new_hi, k_min - 1) - new_lo + 1)]
        if probs.size == 0 or probs.sum() == 0.0:
            break
    return min(1.0, ruined)


def _atoms(dist) -> tuple[tuple[float, ...], tuple[float, ...]]:
    if isinstance(dist, Deterministic):
        return (dist.point,), (1.0,)
    if isinstance(dist, Discrete):
        return dist.values, dist.probs
    raise ValueError(f"{type(dist).__name__} has no finite support")


def _to_units(x: float, scale: float) -> int:
    q = x / scale
    k = round(q)
    if abs(q - k) > 1e-9:
        raise ValueError(f"value {x} is not on the lattice with scale {scale}")
    return int(k)


def lattice_walk_from_renewal(model: RenewalModel, n_steps: int, scale: float = 1.0) -> LatticeWalk:
    """Exact lattice image of a renewal model whose step laws have finite
    support; the resulting walk feeds dp_exact_ruin as an oracle."""
    steps = []
    for k in range(1, n_steps + 1):
        step = model.step(k)
        acc: dict[int, float] = {}
        if step.is_direct:
            vals, probs = _atoms(step.increment)
            for v, q in zip(vals, probs):
                iv = _to_units(v, scale)
                acc[iv] = acc.get(iv, 0.0) + q
        else:
            zv, zp = _atoms(step.claim)
            tv, tp = _atoms(step.inter_time)
            for z, qz in zip(zv, zp):
                for th, qt in zip(tv, tp):
                    iv = _to_units(z - step.premium_rate * th, scale)
                    acc[iv] = acc.get(iv, 0.0) + qz * qt
        items = sorted(acc.items())
        steps.append(LatticeStep(tuple(v for v, _ in items), tuple(q for _, q in items)))
    return LatticeWalk(tuple(steps), scale)


# -- horizon heuristics ----------------------------------------------------------


def suggest_horizon(model) -> float:
    """Finite horizon approximating infinite-horizon ruin: 20 reserve-units
    of expected drift. The truncation bias is one-sided (it can only
    underestimate ruin), which is the safe direction for dominance checks."""
    if isinstance(model, ModelA):
        model = ModelB.without_interest(model)
    if isinstance(model, ModelB):
        base = model.base
        probe = max(64.0, 2.0 * max(
            base.intensity_density.breakpoints[-1], base.premium_density.breakpoints[-1], 1.0
        ))
        mean_claims = base.claims.base.mean() * _weighted_intensity(base, probe)
        drift = (mean_claims - base.accumulated_premium(probe)) / probe
        if drift >= -1e-9:
            warnings.warn("drift is nonnegative; defaulting to horizon 200", stacklevel=2)
            return 200.0
        return float(min(max(20.0 / abs(drift), 10.0), 10000.0))
    if isinstance(model, UnitedModel):
        drift = sum(b.intensity * b.claims.mean() - b.premium_rate for b in model.branches)
        t_last = model.start_times[-1]
        if drift >= -1e-9:
            warnings.warn("terminal drift is nonnegative; defaulting to horizon 200", stacklevel=2)
            return t_last + 200.0
        return float(t_last + min(max(20.0 / abs(drift), 10.0), 10000.0))
    if isinstance(model, RenewalModel):
        span = len(model.steps)
        mean = sum(model.step(k).mean() for k in range(1, span + 1)) / span
        if mean >= -1e-9:
            warnings.warn("per-step drift is nonnegative; defaulting to 200 steps", stacklevel=2)
            return 200.0
        return float(min(max(20.0 / abs(mean), 50.0), 100000.0))
    raise ValueError(f"unknown model type {type(model).__name__}")


def _weighted_intensity(base: ModelA, horizon: float) -> float:
    """integral of scale(x) * intensity(x) over [0, horizon], exact."""
    from scipy import integrate

    total = 0.0
    pts = sorted({0.0, horizon}
                 | {b for b in base.intensity_density.breakpoints if b < horizon}
                 | {b for b in base.claims.scale.breakpoints if b < horizon})
    for a, b in zip(pts[:-1], pts[1:]):
        val, _ = integrate.quad(lambda x: base.claims.scale(x) * base.intensity_density(x), a, b)
        total += val
    return total
