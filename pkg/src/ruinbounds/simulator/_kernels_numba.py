"""Hot simulation loops, JIT-compiled.

Per-path sequential loops over candidate events / renewal steps, parallel
over paths. Every variate comes from the keyed-counter construction in
ruinbounds.rng, so results are independent of the thread count and agree
path-for-path with a single-threaded run.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

from ..rng import GOLDEN
from ._encode import (
    DIST_DETERMINISTIC,
    DIST_DISCRETE,
    DIST_EXPONENTIAL,
    DIST_NORMAL,
    DIST_UNIFORM,
    GL_W,
    GL_X,
    EncodedContinuous,
    EncodedRenewal,
    EncodedUnited,
)

_G = np.uint64(GOLDEN)
_MA = np.uint64(0xBF58476D1CE4E5B9)
_MB = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_U1 = np.uint64(1)
_INV_2_53 = 1.0 / 9007199254740992.0
_TWO_PI = 2.0 * np.pi


@njit(cache=True, inline="always")
def _mix64(z):
    z ^= z >> _S30
    z *= _MA
    z ^= z >> _S27
    z *= _MB
    z ^= z >> _S31
    return z


@njit(cache=True, inline="always")
def _u01(key, ctr):
    word = _mix64(key + (ctr + _U1) * _G)
    return ((word >> _S11) + 0.5) * _INV_2_53


@njit(cache=True, inline="always")
def _poly(breaks, coefs, t):
    i = np.searchsorted(breaks, t, side="right") - 1
    if i < 0:
        i = 0
    return coefs[i, 0] + t * (coefs[i, 1] + t * (coefs[i, 2] + t * coefs[i, 3]))


@njit(cache=True)
def _sample(kind, p0, p1, off, ln, tab_vals, tab_cum, key, ctr):
    """One variate; returns (value, advanced counter)."""
    if kind == DIST_DETERMINISTIC:
        return p0, ctr
    if kind == DIST_EXPONENTIAL:
        u = _u01(key, ctr)
        ctr += _U1
        return -np.log(u) / p0, ctr
    if kind == DIST_UNIFORM:
        u = _u01(key, ctr)
        ctr += _U1
        return p0 + (p1 - p0) * u, ctr
    if kind == DIST_NORMAL:
        u1 = _u01(key, ctr)
        ctr += _U1
        u2 = _u01(key, ctr)
        ctr += _U1
        return p0 + p1 * np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2), ctr
    if kind == DIST_DISCRETE:
        u = _u01(key, ctr)
        ctr += _U1
        j = off
        while j < off + ln - 1 and u >= tab_cum[j]:
            j += 1
        return tab_vals[j], ctr
    # gamma via Marsaglia-Tsang; shape < 1 boosted through shape + 1
    shape = p0
    s = shape if shape >= 1.0 else shape + 1.0
    d = s - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    g = 0.0
    while True:
        u1 = _u01(key, ctr)
        ctr += _U1
        u2 = _u01(key, ctr)
        ctr += _U1
        x = np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)
        v = (1.0 + c * x) ** 3
        if v <= 0.0:
            continue
        u3 = _u01(key, ctr)
        ctr += _U1
        if u3 < 1.0 - 0.0331 * x**4 or np.log(u3) < 0.5 * x * x + d * (1.0 - v + np.log(v)):
            g = d * v
            break
    if shape < 1.0:
        ub = _u01(key, ctr)
        ctr += _U1
        g *= ub ** (1.0 / shape)
    return g / p1, ctr


@njit(cache=True, inline="always")
def _prem_closed(t, prem_breaks, prem_base, prem_anti):
    i = np.searchsorted(prem_breaks, t, side="right") - 1
    if i < 0:
        i = 0
    return prem_base[i] + t * (
        prem_anti[i, 0] + t * (prem_anti[i, 1] + t * (prem_anti[i, 2] + t * prem_anti[i, 3]))
    )


@njit(cache=True)
def _prem_discounted(t, seg_edges, seg_prefix, seg_r, seg_p, glx, glw):
    i = np.searchsorted(seg_edges, t, side="right") - 1
    last = seg_edges.shape[0] - 2
    if i < 0:
        i = 0
    if i > last:
        i = last
    a = seg_edges[i]
    mid = 0.5 * (a + t)
    half = 0.5 * (t - a)
    s = 0.0
    for k in range(glx.shape[0]):
        x = mid + half * glx[k]
        rv = seg_r[i, 0] + x * (seg_r[i, 1] + x * (seg_r[i, 2] + x * seg_r[i, 3]))
        pv = seg_p[i, 0] + x * (seg_p[i, 1] + x * (seg_p[i, 2] + x * seg_p[i, 3]))
        s += glw[k] * np.exp(-rv) * pv
    return seg_prefix[i] + half * s


@njit(cache=True, parallel=True, error_model="numpy")
def _run_continuous(
    seed, paths, u0, horizon,
    lam_breaks, lam_coefs, lam_max,
    prem_breaks, prem_base, prem_anti,
    r_zero, r_breaks, r_coefs,
    seg_edges, seg_prefix, seg_r, seg_p,
    scale_one, scale_breaks, scale_coefs,
    claim_kind, claim_p0, claim_p1, claim_off, claim_len,
    tab_vals, tab_cum, glx, glw,
    flags, counts,
):
    for p in prange(paths):
        key = _mix64(seed + (np.uint64(p) + _U1) * _G)
        ctr = np.uint64(0)
        t = 0.0
        claims_sum = 0.0
        nev = 0
        ruined = np.uint8(0)
        while True:
            u = _u01(key, ctr)
            ctr += _U1
            t -= np.log(u) / lam_max
            if t > horizon:
                break
            ua = _u01(key, ctr)
            ctr += _U1
            if ua * lam_max <= _poly(lam_breaks, lam_coefs, t):
                z, ctr = _sample(
                    claim_kind, claim_p0, claim_p1, claim_off, claim_len, tab_vals, tab_cum, key, ctr
                )
                nev += 1
                if not scale_one:
                    z *= _poly(scale_breaks, scale_coefs, t)
                if r_zero:
                    claims_sum += z
                    prem = _prem_closed(t, prem_breaks, prem_base, prem_anti)
                else:
                    claims_sum += np.exp(-_poly(r_breaks, r_coefs, t)) * z
                    prem = _prem_discounted(t, seg_edges, seg_prefix, seg_r, seg_p, glx, glw)
                if claims_sum - prem > u0:
                    ruined = np.uint8(1)
                    break
        flags[p] = ruined
        counts[p] = nev


@njit(cache=True, parallel=True, error_model="numpy")
def _run_united(
    seed, paths, u0, horizon,
    t_open, lam, prate, lam_max,
    kind, p0, p1, off, ln, tab_vals, tab_cum,
    flags, counts,
):
    nb = t_open.shape[0]
    for p in prange(paths):
        key = _mix64(seed + (np.uint64(p) + _U1) * _G)
        ctr = np.uint64(0)
        t = 0.0
        claims_sum = 0.0
        nev = 0
        ruined = np.uint8(0)
        while True:
            u = _u01(key, ctr)
            ctr += _U1
            t -= np.log(u) / lam_max
            if t > horizon:
                break
            lam_t = 0.0
            for b in range(nb):
                if t_open[b] < t:
                    lam_t += lam[b]
            ua = _u01(key, ctr)
            ctr += _U1
            if ua * lam_max <= lam_t:
                ub = _u01(key, ctr)
                ctr += _U1
                target = ub * lam_t
                acc = 0.0
                chosen = -1
                last_active = 0
                for b in range(nb):
                    if t_open[b] < t:
                        acc += lam[b]
                        last_active = b
                        if chosen < 0 and target < acc:
                            chosen = b
                if chosen < 0:
                    chosen = last_active
                z, ctr = _sample(
                    kind[chosen], p0[chosen], p1[chosen], off[chosen], ln[chosen],
                    tab_vals, tab_cum, key, ctr,
                )
                claims_sum += z
                nev += 1
                prem = 0.0
                for b in range(nb):
                    if t_open[b] < t:
                        prem += prate[b] * (t - t_open[b])
                if claims_sum - prem > u0:
                    ruined = np.uint8(1)
                    break
        flags[p] = ruined
        counts[p] = nev


@njit(cache=True, parallel=True, error_model="numpy")
def _run_renewal(
    seed, paths, u0, n_steps,
    decomposed, z_kind, z_p0, z_p1, z_off, z_ln,
    t_kind, t_p0, t_p1, t_off, t_ln, prate,
    tab_vals, tab_cum,
    flags, counts,
):
    for p in prange(paths):
        key = _mix64(seed + (np.uint64(p) + _U1) * _G)
        ctr = np.uint64(0)
        s = 0.0
        taken = 0
        ruined = np.uint8(0)
        for k in range(n_steps):
            if decomposed[k] == 1:
                z, ctr = _sample(
                    z_kind[k], z_p0[k], z_p1[k], z_off[k], z_ln[k], tab_vals, tab_cum, key, ctr
                )
                th, ctr = _sample(
                    t_kind[k], t_p0[k], t_p1[k], t_off[k], t_ln[k], tab_vals, tab_cum, key, ctr
                )
                y = z - prate[k] * th
            else:
                y, ctr = _sample(
                    z_kind[k], z_p0[k], z_p1[k], z_off[k], z_ln[k], tab_vals, tab_cum, key, ctr
                )
            s += y
            taken = k + 1
            if s > u0:
                ruined = np.uint8(1)
                break
        flags[p] = ruined
        counts[p] = taken


# -- python-facing wrappers ---------------------------------------------------


def simulate_continuous(enc: EncodedContinuous, seed: int, paths: int, u: float):
    flags = np.zeros(paths, dtype=np.uint8)
    counts = np.zeros(paths, dtype=np.int64)
    if enc.lam_max > 0.0:
        _run_continuous(
            np.uint64(seed & (2**64 - 1)), paths, u, enc.horizon,
            enc.lam_breaks, enc.lam_coefs, enc.lam_max,
            enc.prem_breaks, enc.prem_base, enc.prem_anti,
            enc.r_zero, enc.r_breaks, enc.r_coefs,
            enc.seg_edges, enc.seg_prefix, enc.seg_r, enc.seg_p,
            enc.scale_one, enc.scale_breaks, enc.scale_coefs,
            enc.claim_kind, enc.claim_p0, enc.claim_p1, enc.claim_off, enc.claim_len,
            enc.tab_vals, enc.tab_cum, GL_X, GL_W,
            flags, counts,
        )
    return flags, counts


def simulate_united(enc: EncodedUnited, seed: int, paths: int, u: float):
    flags = np.zeros(paths, dtype=np.uint8)
    counts = np.zeros(paths, dtype=np.int64)
    if enc.lam_max > 0.0:
        _run_united(
            np.uint64(seed & (2**64 - 1)), paths, u, enc.horizon,
            enc.t_open, enc.lam, enc.prate, enc.lam_max,
            enc.kind, enc.p0, enc.p1, enc.off, enc.ln, enc.tab_vals, enc.tab_cum,
            flags, counts,
        )
    return flags, counts


def simulate_renewal(enc: EncodedRenewal, seed: int, paths: int, u: float):
    flags = np.zeros(paths, dtype=np.uint8)
    counts = np.zeros(paths, dtype=np.int64)
    _run_renewal(
        np.uint64(seed & (2**64 - 1)), paths, u, enc.n_steps,
        enc.decomposed, enc.z_kind, enc.z_p0, enc.z_p1, enc.z_off, enc.z_ln,
        enc.t_kind, enc.t_p0, enc.t_p1, enc.t_off, enc.t_ln, enc.prate,
        enc.tab_vals, enc.tab_cum,
        flags, counts,
    )
    return flags, counts


def set_workers(n: int | None) -> None:
    if n is None:
        return
    import numba

    limit = numba.config.NUMBA_DEFAULT_NUM_THREADS
    numba.set_num_threads(max(1, min(int(n), limit)))
