"""Flat array encodings of risk models for the simulation kernels.

Both the numba and the numpy backends consume exactly these arrays, so a
model encodes once per run and the heavy per-path work never touches Python
objects. Distribution variants are integer-coded; finite-support laws index
into shared value/cumulative tables.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from ..distributions import (
    Deterministic,
    Discrete,
    DistributionSpec,
    Exponential,
    Gamma,
    Normal,
    Uniform,
)
from ..piecewise import PiecewisePolyFn
from ..risk_models import ModelB, RenewalModel, UnitedModel

DIST_EXPONENTIAL = 0
DIST_GAMMA = 1
DIST_UNIFORM = 2
DIST_DETERMINISTIC = 3
DIST_NORMAL = 4
DIST_DISCRETE = 5

GL_X, GL_W = np.polynomial.legendre.leggauss(15)

# max width of one discounted-premium quadrature segment
_SEG_WIDTH = 2.0


class _DistTable:
    """Accumulates finite-support laws into shared flat tables."""

    def __init__(self):
        self.vals: list[float] = []
        self.cum: list[float] = []

    def encode(self, dist: DistributionSpec) -> tuple[int, float, float, int, int]:
        if isinstance(dist, Exponential):
            return DIST_EXPONENTIAL, dist.rate, 0.0, 0, 0
        if isinstance(dist, Gamma):
            return DIST_GAMMA, dist.shape, dist.rate, 0, 0
        if isinstance(dist, Uniform):
            return DIST_UNIFORM, dist.lo, dist.hi, 0, 0
        if isinstance(dist, Deterministic):
            return DIST_DETERMINISTIC, dist.point, 0.0, 0, 0
        if isinstance(dist, Normal):
            return DIST_NORMAL, dist.mean_, math.sqrt(dist.variance_), 0, 0
        if isinstance(dist, Discrete):
            off = len(self.vals)
            self.vals.extend(dist.values)
            self.cum.extend(np.cumsum(dist.probs))
            return DIST_DISCRETE, 0.0, 0.0, off, len(dist.values)
        raise ValueError(f"cannot encode {type(dist).__name__}")

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.vals, dtype=float), np.asarray(self.cum, dtype=float)


def _poly_arrays(fn: PiecewisePolyFn) -> tuple[np.ndarray, np.ndarray]:
    return np.asarray(fn.breakpoints, dtype=float), np.asarray(fn.pieces, dtype=float)


def _premium_closed_form(fn: PiecewisePolyFn) -> tuple[np.ndarray, np.ndarray]:
    """Per-piece antiderivative coefficients and offsets so the accumulated
    premium is base[i] + t(a0 + t(a1 + t(a2 + t a3)))."""
    breaks = np.asarray(fn.breakpoints)
    anti = np.empty((len(breaks), 4))
    base = np.empty(len(breaks))
    for i, c in enumerate(fn.pieces):
        anti[i] = (c[0], c[1] / 2.0, c[2] / 3.0, c[3] / 4.0)
        b = breaks[i]
        a_at_b = b * (anti[i, 0] + b * (anti[i, 1] + b * (anti[i, 2] + b * anti[i, 3])))
        base[i] = fn._prefix[i] - a_at_b
    return base, anti


def _discount_segments(r: PiecewisePolyFn, prem: PiecewisePolyFn, horizon: float):
    """Quadrature segments for int_0^t e^{-r} dp: edges, per-segment poly
    rows and the exact-prefix integrals at the edges."""
    pts = {0.0, horizon}
    pts.update(b for b in r.breakpoints if 0.0 < b < horizon)
    pts.update(b for b in prem.breakpoints if 0.0 < b < horizon)
    edges: list[float] = []
    pts = sorted(pts)
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(math.ceil((b - a) / _SEG_WIDTH)))
        edges.extend(a + (b - a) * i / n for i in range(n))
    edges.append(horizon)
    edges = np.asarray(edges)
    nseg = len(edges) - 1
    seg_r = np.empty((nseg, 4))
    seg_p = np.empty((nseg, 4))
    for i in range(nseg):
        seg_r[i] = r.pieces[r._index(edges[i])]
        seg_p[i] = prem.pieces[prem._index(edges[i])]
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = mid[:, None] + half[:, None] * GL_X[None, :]
    rv = seg_r[:, 0:1] + x * (seg_r[:, 1:2] + x * (seg_r[:, 2:3] + x * seg_r[:, 3:4]))
    pv = seg_p[:, 0:1] + x * (seg_p[:, 1:2] + x * (seg_p[:, 2:3] + x * seg_p[:, 3:4]))
    cell = ((np.exp(-rv) * pv) * GL_W[None, :]).sum(axis=1) * half
    prefix = np.concatenate(([0.0], np.cumsum(cell)))
    return edges, prefix, seg_r, seg_p


@dataclass
class EncodedContinuous:
    horizon: float
    lam_breaks: np.ndarray
    lam_coefs: np.ndarray
    lam_max: float
    prem_base: np.ndarray
    prem_breaks: np.ndarray
    prem_anti: np.ndarray
    r_zero: bool
    r_breaks: np.ndarray
    r_coefs: np.ndarray
    seg_edges: np.ndarray
    seg_prefix: np.ndarray
    seg_r: np.ndarray
    seg_p: np.ndarray
    scale_one: bool
    scale_breaks: np.ndarray
    scale_coefs: np.ndarray
    claim_kind: int
    claim_p0: float
    claim_p1: float
    claim_off: int
    claim_len: int
    tab_vals: np.ndarray
    tab_cum: np.ndarray


def encode_continuous(model: ModelB, horizon: float) -> EncodedContinuous:
    if not horizon > 0.0:
        raise ValueError("horizon must be positive")
    base = model.base
    table = _DistTable()
    kind, p0, p1, off, ln = table.encode(base.claims.base)
    tab_vals, tab_cum = table.arrays()
    lam_breaks, lam_coefs = _poly_arrays(base.intensity_density)
    prem_base, prem_anti = _premium_closed_form(base.premium_density)
    r_zero = model.interest_free
    r_breaks, r_coefs = _poly_arrays(model.discount)
    seg_edges, seg_prefix, seg_r, seg_p = _discount_segments(
        model.discount, base.premium_density, horizon
    )
    scale = base.claims.scale
    scale_one = scale.breakpoints == (0.0,) and scale.pieces == ((1.0, 0.0, 0.0, 0.0),)
    scale_breaks, scale_coefs = _poly_arrays(scale)
    return EncodedContinuous(
        horizon=float(horizon),
        lam_breaks=lam_breaks, lam_coefs=lam_coefs,
        lam_max=base.intensity_density.sup_on(0.0, horizon),
        prem_base=prem_base,
        prem_breaks=np.asarray(base.premium_density.breakpoints, dtype=float),
        prem_anti=prem_anti,
        r_zero=r_zero, r_breaks=r_breaks, r_coefs=r_coefs,
        seg_edges=seg_edges, seg_prefix=seg_prefix, seg_r=seg_r, seg_p=seg_p,
        scale_one=scale_one, scale_breaks=scale_breaks, scale_coefs=scale_coefs,
        claim_kind=kind, claim_p0=p0, claim_p1=p1, claim_off=off, claim_len=ln,
        tab_vals=tab_vals, tab_cum=tab_cum,
    )


@dataclass
class EncodedUnited:
    horizon: float
    t_open: np.ndarray
    lam: np.ndarray
    prate: np.ndarray
    lam_max: float
    kind: np.ndarray
    p0: np.ndarray
    p1: np.ndarray
    off: np.ndarray
    ln: np.ndarray
    tab_vals: np.ndarray
    tab_cum: np.ndarray


def encode_united(model: UnitedModel, horizon: float) -> EncodedUnited:
    if not horizon > 0.0:
        raise ValueError("horizon must be positive")
    table = _DistTable()
    nb = len(model.branches)
    kind = np.empty(nb, dtype=np.int64)
    p0 = np.empty(nb)
    p1 = np.empty(nb)
    off = np.empty(nb, dtype=np.int64)
    ln = np.empty(nb, dtype=np.int64)
    for i, br in enumerate(model.branches):
        kind[i], p0[i], p1[i], off[i], ln[i] = table.encode(br.claims)
    tab_vals, tab_cum = table.arrays()
    t_open = np.asarray(model.start_times, dtype=float)
    lam = np.asarray([b.intensity for b in model.branches])
    return EncodedUnited(
        horizon=float(horizon), t_open=t_open, lam=lam,
        prate=np.asarray([b.premium_rate for b in model.branches]),
        lam_max=float(lam[t_open < horizon].sum()),
        kind=kind, p0=p0, p1=p1, off=off, ln=ln,
        tab_vals=tab_vals, tab_cum=tab_cum,
    )


@dataclass
class EncodedRenewal:
    n_steps: int
    decomposed: np.ndarray
    z_kind: np.ndarray
    z_p0: np.ndarray
    z_p1: np.ndarray
    z_off: np.ndarray
    z_ln: np.ndarray
    t_kind: np.ndarray
    t_p0: np.ndarray
    t_p1: np.ndarray
    t_off: np.ndarray
    t_ln: np.ndarray
    prate: np.ndarray
    tab_vals: np.ndarray
    tab_cum: np.ndarray


def encode_renewal(model: RenewalModel, n_steps: int) -> EncodedRenewal:
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    table = _DistTable()
    dec = np.empty(n_steps, dtype=np.uint8)
    zk = np.zeros(n_steps, dtype=np.int64)
    zp0 = np.zeros(n_steps)
    zp1 = np.zeros(n_steps)
    zoff = np.zeros(n_steps, dtype=np.int64)
    zln = np.zeros(n_steps, dtype=np.int64)
    tk = np.zeros(n_steps, dtype=np.int64)
    tp0 = np.zeros(n_steps)
    tp1 = np.zeros(n_steps)
    toff = np.zeros(n_steps, dtype=np.int64)
    tln = np.zeros(n_steps, dtype=np.int64)
    pr = np.zeros(n_steps)
    # identical step laws share table rows only through their own encodings;
    # repetition is expanded flat so the kernel indexes by step alone
    for k in range(1, n_steps + 1):
        step = model.step(k)
        i = k - 1
        if step.is_direct:
            dec[i] = 0
            zk[i], zp0[i], zp1[i], zoff[i], zln[i] = table.encode(step.increment)
        else:
            dec[i] = 1
            zk[i], zp0[i], zp1[i], zoff[i], zln[i] = table.encode(step.claim)
            tk[i], tp0[i], tp1[i], toff[i], tln[i] = table.encode(step.inter_time)
            pr[i] = step.premium_rate
    tab_vals, tab_cum = table.arrays()
    return EncodedRenewal(
        n_steps=n_steps, decomposed=dec,
        z_kind=zk, z_p0=zp0, z_p1=zp1, z_off=zoff, z_ln=zln,
        t_kind=tk, t_p0=tp0, t_p1=tp1, t_off=toff, t_ln=tln,
        prate=pr, tab_vals=tab_vals, tab_cum=tab_cum,
    )
