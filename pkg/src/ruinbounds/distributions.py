"""Claim, inter-occurrence and increment distributions.

A closed catalog of laws with exact moment functionals: moment generating
function (divergence is reported as +inf, never as an exception, so root
finders can bracket against it), tail means, truncated second moments and
the Taylor-remainder moment E[exp(hZ) - 1 - hZ] that drives the discrete
truncation bounds. Exact closed forms everywhere they exist; adaptive
quadrature (scipy) where they do not.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate, special

from .piecewise import PiecewisePolyFn

__all__ = [
    "Exponential",
    "Gamma",
    "Uniform",
    "Deterministic",
    "Normal",
    "Discrete",
    "DistributionSpec",
    "TimeVaryingClaimFamily",
    "UnsupportedVariantError",
    "mgf_minus_one",
    "mean",
    "upper_tail_mean",
    "truncated_second_moment",
    "g_moment",
    "sample",
    "parse_distribution",
    "distribution_to_json",
]

QUAD_ABS_TOL = 1e-12
QUAD_REL_TOL = 1e-9


class UnsupportedVariantError(ValueError):
    """The requested moment functional is undefined for this variant."""


def _expm1mx(x: float) -> float:
    """exp(x) - 1 - x, accurate near zero."""
    if abs(x) < 1e-4:
        return 0.5 * x * x * (1.0 + x / 3.0 + x * x / 12.0)
    return math.expm1(x) - x


def _phi(x: float) -> float:
    """(exp(x) - 1) / x, continuous at zero."""
    if x == 0.0:
        return 1.0
    return math.expm1(x) / x


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        if not self.rate > 0.0:
            raise ValueError("rate must be positive")

    @property
    def abscissa(self) -> float:
        return self.rate

    @property
    def nonnegative(self) -> bool:
        return True

    def mean(self) -> float:
        return 1.0 / self.rate

    def variance(self) -> float:
        return 1.0 / self.rate**2

    def raw_moment(self, j: int) -> float:
        return math.factorial(j) / self.rate**j

    def mgf(self, s: float) -> float:
        if s >= self.rate:
            return math.inf
        return self.rate / (self.rate - s)

    def log_mgf(self, s: float) -> float:
        if s >= self.rate:
            return math.inf
        return -math.log1p(-s / self.rate)

    def mgf_minus_one(self, h: float) -> float:
        if h >= self.rate:
            return math.inf
        return h / (self.rate - h)

    def g_moment(self, h: float) -> float:
        if h >= self.rate:
            return math.inf
        return h * h / (self.rate * (self.rate - h))

    def upper_tail_mean(self, c: float) -> float:
        return (c + 1.0 / self.rate) * math.exp(-self.rate * c)

    def truncated_second_moment(self, c: float) -> float:
        lam = self.rate
        return 2.0 / lam**2 - math.exp(-lam * c) * (c * c + 2.0 * c / lam + 2.0 / lam**2)

    def sample(self, stream) -> float:
        return -math.log(stream.uniform()) / self.rate


@dataclass(frozen=True)
class Gamma:
    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0.0 and self.rate > 0.0):
            raise ValueError("shape and rate must be positive")

    @property
    def abscissa(self) -> float:
        return self.rate

    @property
    def nonnegative(self) -> bool:
        return True

    def mean(self) -> float:
        return self.shape / self.rate

    def variance(self) -> float:
        return self.shape / self.rate**2

    def raw_moment(self, j: int) -> float:
        m = 1.0
        for i in range(j):
            m *= (self.shape + i) / self.rate
        return m

    def mgf(self, s: float) -> float:
        if s >= self.rate:
            return math.inf
        return math.exp(-self.shape * math.log1p(-s / self.rate))

    def log_mgf(self, s: float) -> float:
        if s >= self.rate:
            return math.inf
        return -self.shape * math.log1p(-s / self.rate)

    def mgf_minus_one(self, h: float) -> float:
        if h >= self.rate:
            return math.inf
        return math.expm1(-self.shape * math.log1p(-h / self.rate))

    def g_moment(self, h: float) -> float:
        if h >= self.rate:
            return math.inf
        return _g_by_series_or_direct(self, h)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(
            x > 0.0,
            np.exp(
                self.shape * math.log(self.rate)
                + (self.shape - 1.0) * np.log(np.maximum(x, 1e-300))
                - self.rate * x
                - special.gammaln(self.shape)
            ),
            0.0,
        )

    def upper_tail_mean(self, c: float) -> float:
        val, _ = integrate.quad(
            lambda x: x * float(self.pdf(x)), c, np.inf,
            epsabs=QUAD_ABS_TOL, epsrel=QUAD_REL_TOL, limit=200,
        )
        return val

    def truncated_second_moment(self, c: float) -> float:
        if c == 0.0:
            return 0.0
        val, _ = integrate.quad(
            lambda x: x * x * float(self.pdf(x)), 0.0, c,
            epsabs=QUAD_ABS_TOL, epsrel=QUAD_REL_TOL, limit=200,
        )
        return val

    def sample(self, stream) -> float:
        return _gamma_sample(self.shape, self.rate, stream)


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo >= 0.0 and self.hi > self.lo):
            raise ValueError("need 0 <= lo < hi")

    @property
    def abscissa(self) -> float:
        return math.inf

    @property
    def nonnegative(self) -> bool:
        return True

    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def variance(self) -> float:
        return (self.hi - self.lo) ** 2 / 12.0

    def raw_moment(self, j: int) -> float:
        a, b = self.lo, self.hi
        return (b ** (j + 1) - a ** (j + 1)) / ((j + 1) * (b - a))

    def mgf(self, s: float) -> float:
        return math.exp(s * self.lo) * _phi(s * (self.hi - self.lo))

    def log_mgf(self, s: float) -> float:
        return s * self.lo + math.log(_phi(s * (self.hi - self.lo)))

    def mgf_minus_one(self, h: float) -> float:
        x = h * (self.hi - self.lo)
        if x == 0.0:
            return math.expm1(h * self.lo)
        # exp(h*lo)*phi(x) - 1, rearranged to avoid cancellation at small h
        return math.expm1(h * self.lo) * _phi(x) + _expm1mx(x) / x

    def g_moment(self, h: float) -> float:
        return _g_by_series_or_direct(self, h)

    def upper_tail_mean(self, c: float) -> float:
        if c >= self.hi:
            return 0.0
        lo = max(c, self.lo)
        return (self.hi**2 - lo**2) / (2.0 * (self.hi - self.lo))

    def truncated_second_moment(self, c: float) -> float:
        hi = min(c, self.hi)
        if hi <= self.lo:
            return 0.0
        return (hi**3 - self.lo**3) / (3.0 * (self.hi - self.lo))

    def sample(self, stream) -> float:
        return self.lo + (self.hi - self.lo) * stream.uniform()


@dataclass(frozen=True)
class Deterministic:
    point: float

    def __post_init__(self):
        if not self.point >= 0.0:
            raise ValueError("point mass must be nonnegative")

    @property
    def abscissa(self) -> float:
        return math.inf

    @property
    def nonnegative(self) -> bool:
        return True

    def mean(self) -> float:
        return self.point

    def variance(self) -> float:
        return 0.0

    def raw_moment(self, j: int) -> float:
        return self.point**j

    def mgf(self, s: float) -> float:
        return math.exp(s * self.point)

    def log_mgf(self, s: float) -> float:
        return s * self.point

    def mgf_minus_one(self, h: float) -> float:
        return math.expm1(h * self.point)

    def g_moment(self, h: float) -> float:
        return _expm1mx(h * self.point)

    def upper_tail_mean(self, c: float) -> float:
        return self.point if self.point > c else 0.0

    def truncated_second_moment(self, c: float) -> float:
        return self.point**2 if 0.0 < self.point <= c else 0.0

    def sample(self, stream) -> float:
        return self.point


@dataclass(frozen=True)
class Normal:
    """Admitted for direct renewal increments only, never as a claim size."""

    mean_: float
    variance_: float

    def __post_init__(self):
        if not self.variance_ > 0.0:
            raise ValueError("variance must be positive")

    @property
    def abscissa(self) -> float:
        return math.inf

    @property
    def nonnegative(self) -> bool:
        return False

    def mean(self) -> float:
        return self.mean_

    def variance(self) -> float:
        return self.variance_

    def mgf(self, s: float) -> float:
        return math.exp(s * self.mean_ + 0.5 * s * s * self.variance_)

    def log_mgf(self, s: float) -> float:
        return s * self.mean_ + 0.5 * s * s * self.variance_

    def mgf_minus_one(self, h: float) -> float:
        return math.expm1(h * self.mean_ + 0.5 * h * h * self.variance_)

    def g_moment(self, h: float) -> float:
        raise UnsupportedVariantError("g moment requires nonnegative support")

    def upper_tail_mean(self, c: float) -> float:
        raise UnsupportedVariantError("tail mean requires nonnegative support")

    def truncated_second_moment(self, c: float) -> float:
        raise UnsupportedVariantError("truncated moment requires nonnegative support")

    def sample(self, stream) -> float:
        u1 = stream.uniform()
        u2 = stream.uniform()
        z = math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
        return self.mean_ + math.sqrt(self.variance_) * z


@dataclass(frozen=True)
class Discrete:
    """Finite-support law on a common lattice.

    Not part of the original five-variant catalog; added so that renewal
    bound certificates can be falsified against the exact lattice dynamic
    program with genuinely stochastic walks, and so that two-point
    increment laws (biased +/-1 walks) are expressible.
    """

    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        pr = tuple(float(p) for p in self.probs)
        if len(vals) == 0 or len(vals) != len(pr):
            raise ValueError("values and probs must be nonempty and equal length")
        if any(p < 0.0 for p in pr) or abs(sum(pr) - 1.0) > 1e-12:
            raise ValueError("probs must be nonnegative and sum to 1")
        if any(v2 <= v1 for v1, v2 in zip(vals, vals[1:])):
            raise ValueError("values must be strictly increasing")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "probs", pr)

    @property
    def abscissa(self) -> float:
        return math.inf

    @property
    def nonnegative(self) -> bool:
        return self.values[0] >= 0.0

    def mean(self) -> float:
        return sum(p * v for v, p in zip(self.values, self.probs))

    def variance(self) -> float:
        m = self.mean()
        return sum(p * (v - m) ** 2 for v, p in zip(self.values, self.probs))

    def raw_moment(self, j: int) -> float:
        return sum(p * v**j for v, p in zip(self.values, self.probs))

    def mgf(self, s: float) -> float:
        return sum(p * math.exp(s * v) for v, p in zip(self.values, self.probs))

    def log_mgf(self, s: float) -> float:
        return math.log(self.mgf(s))

    def mgf_minus_one(self, h: float) -> float:
        return sum(p * math.expm1(h * v) for v, p in zip(self.values, self.probs))

    def g_moment(self, h: float) -> float:
        if not self.nonnegative:
            raise UnsupportedVariantError("g moment requires nonnegative support")
        return sum(p * _expm1mx(h * v) for v, p in zip(self.values, self.probs))

    def upper_tail_mean(self, c: float) -> float:
        if not self.nonnegative:
            raise UnsupportedVariantError("tail mean requires nonnegative support")
        return sum(p * v for v, p in zip(self.values, self.probs) if v > c)

    def truncated_second_moment(self, c: float) -> float:
        if not self.nonnegative:
            raise UnsupportedVariantError("truncated moment requires nonnegative support")
        return sum(p * v * v for v, p in zip(self.values, self.probs) if 0.0 < v <= c)

    def sample(self, stream) -> float:
        u = stream.uniform()
        acc = 0.0
        for v, p in zip(self.values, self.probs):
            acc += p
            if u < acc:
                return v
        return self.values[-1]


DistributionSpec = Exponential | Gamma | Uniform | Deterministic | Normal | Discrete


def _g_by_series_or_direct(dist, h: float) -> float:
    q = dist.mgf_minus_one(h)
    hm = h * dist.mean()
    g = q - hm
    if g >= 1e-6 * max(abs(q), abs(hm)):
        return g
    # severe cancellation: fall back to the Taylor series of E[exp(hZ)-1-hZ]
    total, hj = 0.0, h * h
    for j in range(2, 7):
        total += hj * dist.raw_moment(j) / math.factorial(j)
        hj *= h
    return total


def _gamma_sample(shape: float, rate: float, stream) -> float:
    # Marsaglia-Tsang; shape < 1 boosted through shape + 1
    if shape < 1.0:
        g = _gamma_sample(shape + 1.0, rate, stream)
        return g * stream.uniform() ** (1.0 / shape)
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        u1 = stream.uniform()
        u2 = stream.uniform()
        x = math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
        v = (1.0 + c * x) ** 3
        if v <= 0.0:
            continue
        u = stream.uniform()
        if u < 1.0 - 0.0331 * x**4 or math.log(u) < 0.5 * x * x + d * (1.0 - v + math.log(v)):
            return d * v / rate


# -- module-level operation surface ---------------------------------------


def mgf_minus_one(dist: DistributionSpec, h: float) -> float:
    """E[exp(h Z)] - 1; +inf at and beyond the abscissa of convergence."""
    if h < 0.0:
        raise ValueError("h must be nonnegative")
    return dist.mgf_minus_one(h)


def mean(dist: DistributionSpec) -> float:
    return dist.mean()


def upper_tail_mean(dist: DistributionSpec, c: float) -> float:
    """E[Z 1{Z > c}] for nonnegative-support variants."""
    if c < 0.0:
        raise ValueError("threshold must be nonnegative")
    if not dist.nonnegative:
        raise UnsupportedVariantError("tail mean requires nonnegative support")
    return dist.upper_tail_mean(c)


def truncated_second_moment(dist: DistributionSpec, c: float) -> float:
    """E[Z^2 1{0 < Z <= c}] for nonnegative-support variants."""
    if c < 0.0:
        raise ValueError("threshold must be nonnegative")
    if not dist.nonnegative:
        raise UnsupportedVariantError("truncated moment requires nonnegative support")
    return dist.truncated_second_moment(c)


def g_moment(dist: DistributionSpec, h: float) -> float:
    """E[exp(h Z) - 1 - h Z]; nonnegative, +inf at and beyond the abscissa."""
    if h < 0.0:
        raise ValueError("h must be nonnegative")
    return dist.g_moment(h)


def sample(dist: DistributionSpec, stream) -> float:
    """One variate of the exact law, consuming the caller-owned stream."""
    return dist.sample(stream)


# -- vectorized MGF-minus-one, for cumulant quadrature grids ----------------


def mgf_minus_one_vec(dist: DistributionSpec, s: np.ndarray) -> np.ndarray:
    """Vectorized E[exp(s Z)] - 1 over an array of nonnegative arguments."""
    s = np.asarray(s, dtype=float)
    out = np.full(s.shape, np.inf)
    if isinstance(dist, Exponential):
        ok = s < dist.rate
        out[ok] = s[ok] / (dist.rate - s[ok])
    elif isinstance(dist, Gamma):
        ok = s < dist.rate
        out[ok] = np.expm1(-dist.shape * np.log1p(-s[ok] / dist.rate))
    elif isinstance(dist, Uniform):
        x = s * (dist.hi - dist.lo)
        phi = np.where(x != 0.0, np.expm1(x) / np.where(x != 0.0, x, 1.0), 1.0)
        out = np.exp(s * dist.lo) * phi - 1.0
    elif isinstance(dist, Deterministic):
        out = np.expm1(s * dist.point)
    elif isinstance(dist, Normal):
        out = np.expm1(s * dist.mean_ + 0.5 * s * s * dist.variance_)
    elif isinstance(dist, Discrete):
        out = np.zeros(s.shape)
        for v, p in zip(dist.values, dist.probs):
            out += p * np.expm1(s * v)
    else:
        raise UnsupportedVariantError(f"unknown variant {type(dist).__name__}")
    return out


# -- time-varying claim families -------------------------------------------


@dataclass(frozen=True)
class TimeVaryingClaimFamily:
    """Claim law indexed by arrival time: the claim at time t is scale(t) * Z.

    scale identically 1 recovers claims that are i.i.d. in time. Scaling by
    a deterministic factor keeps every MGF in closed form: the family MGF at
    (h, t) is the base MGF at h * scale(t).
    """

    base: DistributionSpec
    scale: PiecewisePolyFn = PiecewisePolyFn.constant(1.0)

    def __post_init__(self):
        if isinstance(self.base, Normal):
            raise ValueError("claim sizes must have nonnegative support")
        if not self.base.nonnegative:
            raise ValueError("claim sizes must have nonnegative support")
        if not self.scale.is_nonnegative():
            raise ValueError("scale function must be nonnegative")

    def q(self, h: float, t: float) -> float:
        """E[exp(h Z(t))] - 1."""
        return self.base.mgf_minus_one(h * self.scale(t))

    def q_values(self, h: float, ts: np.ndarray) -> np.ndarray:
        return mgf_minus_one_vec(self.base, h * self.scale.values(ts))

    def scale_sup(self, a: float, b: float) -> float:
        return self.scale.sup_on(a, b)

    def abscissa_cap(self, a: float, b: float) -> float:
        """Largest h with E[exp(h Z(t))] finite for every t in [a, b]."""
        s = self.scale_sup(a, b)
        if s == 0.0:
            return math.inf
        return self.base.abscissa / s

    def sample_at(self, t: float, stream) -> float:
        return self.scale(t) * self.base.sample(stream)

    def to_json(self) -> dict:
        out = {"base": distribution_to_json(self.base)}
        if not (self.scale.breakpoints == (0.0,) and self.scale.pieces == ((1.0, 0.0, 0.0, 0.0),)):
            out["scale"] = self.scale.to_json()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "TimeVaryingClaimFamily":
        unknown = set(obj) - {"base", "scale"}
        if unknown:
            raise ValueError(f"unknown keys in claim family: {sorted(unknown)}")
        scale = PiecewisePolyFn.from_json(obj["scale"]) if "scale" in obj else PiecewisePolyFn.constant(1.0)
        return cls(parse_distribution(obj["base"]), scale)


# -- wire format ------------------------------------------------------------

_KINDS = {
    "exponential": (Exponential, ("rate",)),
    "gamma": (Gamma, ("shape", "rate")),
    "uniform": (Uniform, ("lo", "hi")),
    "deterministic": (Deterministic, ("point",)),
    "normal": (Normal, ("mean", "variance")),
    "discrete": (Discrete, ("values", "probs")),
}

_REJECTED_KINDS = {"pareto", "lognormal", "weibull"}


def parse_distribution(obj: dict) -> DistributionSpec:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValueError("distribution must be an object with a 'kind' key")
    kind = obj["kind"]
    if kind in _REJECTED_KINDS:
        raise ValueError(f"'{kind}' has no finite exponential moment and is not supported")
    if kind not in _KINDS:
        raise ValueError(f"unknown distribution kind '{kind}'")
    cls, fields = _KINDS[kind]
    unknown = set(obj) - {"kind", *fields}
    if unknown:
        raise ValueError(f"unknown keys for '{kind}': {sorted(unknown)}")
    missing = [f for f in fields if f not in obj]
    if missing:
        raise ValueError(f"'{kind}' missing keys: {missing}")
    if kind == "normal":
        return Normal(float(obj["mean"]), float(obj["variance"]))
    if kind == "discrete":
        return Discrete(tuple(obj["values"]), tuple(obj["probs"]))
    return cls(*(float(obj[f]) for f in fields))


def distribution_to_json(dist: DistributionSpec) -> dict:
    if isinstance(dist, Exponential):
        return {"kind": "exponential", "rate": dist.rate}
    if isinstance(dist, Gamma):
        return {"kind": "gamma", "shape": dist.shape, "rate": dist.rate}
    if isinstance(dist, Uniform):
        return {"kind": "uniform", "lo": dist.lo, "hi": dist.hi}
    if isinstance(dist, Deterministic):
        return {"kind": "deterministic", "point": dist.point}
    if isinstance(dist, Normal):
        return {"kind": "normal", "mean": dist.mean_, "variance": dist.variance_}
    if isinstance(dist, Discrete):
        return {"kind": "discrete", "values": list(dist.values), "probs": list(dist.probs)}
    raise UnsupportedVariantError(f"unknown variant {type(dist).__name__}")
