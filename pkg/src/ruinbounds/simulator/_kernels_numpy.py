"""Vectorized simulation loops, pure numpy.

Fallback backend mirroring the JIT kernels: all paths in a chunk advance in
lockstep behind boolean masks, and every path consumes its own keyed-counter
stream in exactly the same per-path order as the sequential kernels. Results
are therefore deterministic and statistically identical to the JIT backend;
use it when numba is unavailable or via RUIN_BACKEND=numpy.
"""

from __future__ import annotations

import numpy as np

from ..rng import path_key_vec, u01_vec
from ._encode import (
    DIST_DETERMINISTIC,
    DIST_DISCRETE,
    DIST_EXPONENTIAL,
    DIST_GAMMA,
    DIST_NORMAL,
    DIST_UNIFORM,
    GL_W,
    GL_X,
    EncodedContinuous,
    EncodedRenewal,
    EncodedUnited,
)

_CHUNK = 1 << 18
_TWO_PI = 2.0 * np.pi


def _draw(keys, ctr, idx):
    u = u01_vec(keys[idx], ctr[idx])
    ctr[idx] += np.uint64(1)
    return u


def _poly_vec(breaks, coefs, ts):
    i = np.clip(np.searchsorted(breaks, ts, side="right") - 1, 0, len(breaks) - 1)
    c = coefs[i]
    return c[:, 0] + ts * (c[:, 1] + ts * (c[:, 2] + ts * c[:, 3]))


def _gamma_vec(shape, rate, keys, ctr, idx):
    s = shape if shape >= 1.0 else shape + 1.0
    d = s - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    out = np.empty(idx.size)
    pending = np.arange(idx.size)
    while pending.size:
        u1 = _draw(keys, ctr, idx[pending])
        u2 = _draw(keys, ctr, idx[pending])
        x = np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)
        v = (1.0 + c * x) ** 3
        ok = v > 0.0
        sub = pending[ok]
        if sub.size:
            u3 = _draw(keys, ctr, idx[sub])
            xs, vs = x[ok], v[ok]
            acc = (u3 < 1.0 - 0.0331 * xs**4) | (
                np.log(u3) < 0.5 * xs * xs + d * (1.0 - vs + np.log(vs))
            )
            out[sub[acc]] = d * vs[acc]
            pending = np.concatenate([pending[~ok], sub[~acc]])
        else:
            pending = pending[~ok]
    if shape < 1.0:
        out *= _draw(keys, ctr, idx) ** (1.0 / shape)
    return out / rate


def _sample_vec(kind, p0, p1, off, ln, tab_vals, tab_cum, keys, ctr, idx):
    if kind == DIST_DETERMINISTIC:
        return np.full(idx.size, p0)
    if kind == DIST_EXPONENTIAL:
        return -np.log(_draw(keys, ctr, idx)) / p0
    if kind == DIST_UNIFORM:
        return p0 + (p1 - p0) * _draw(keys, ctr, idx)
    if kind == DIST_NORMAL:
        u1 = _draw(keys, ctr, idx)
        u2 = _draw(keys, ctr, idx)
        return p0 + p1 * np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)
    if kind == DIST_DISCRETE:
        u = _draw(keys, ctr, idx)
        j = np.minimum(np.searchsorted(tab_cum[off:off + ln], u, side="right"), ln - 1)
        return tab_vals[off + j]
    if kind == DIST_GAMMA:
        return _gamma_vec(p0, p1, keys, ctr, idx)
    raise ValueError(f"unknown distribution code {kind}")


def _prem_closed_vec(ts, prem_breaks, prem_base, prem_anti):
    i = np.clip(np.searchsorted(prem_breaks, ts, side="right") - 1, 0, len(prem_breaks) - 1)
    a = prem_anti[i]
    return prem_base[i] + ts * (a[:, 0] + ts * (a[:, 1] + ts * (a[:, 2] + ts * a[:, 3])))


def _prem_discounted_vec(ts, seg_edges, seg_prefix, seg_r, seg_p):
    i = np.clip(np.searchsorted(seg_edges, ts, side="right") - 1, 0, len(seg_edges) - 2)
    a = seg_edges[i]
    mid = 0.5 * (a + ts)
    half = 0.5 * (ts - a)
    x = mid[:, None] + half[:, None] * GL_X[None, :]
    rc, pc = seg_r[i], seg_p[i]
    rv = rc[:, 0:1] + x * (rc[:, 1:2] + x * (rc[:, 2:3] + x * rc[:, 3:4]))
    pv = pc[:, 0:1] + x * (pc[:, 1:2] + x * (pc[:, 2:3] + x * pc[:, 3:4]))
    return seg_prefix[i] + half * ((np.exp(-rv) * pv) * GL_W[None, :]).sum(axis=1)


def simulate_continuous(enc: EncodedContinuous, seed: int, paths: int, u: float):
    flags = np.zeros(paths, dtype=np.uint8)
    counts = np.zeros(paths, dtype=np.int64)
    if enc.lam_max <= 0.0:
        return flags, counts
    for start in range(0, paths, _CHUNK):
        n = min(_CHUNK, paths - start)
        keys = path_key_vec(seed, np.arange(start, start + n, dtype=np.uint64))
        ctr = np.zeros(n, dtype=np.uint64)
        t = np.zeros(n)
        claims_sum = np.zeros(n)
        nev = np.zeros(n, dtype=np.int64)
        ruined = np.zeros(n, dtype=bool)
        alive = np.arange(n)
        while alive.size:
            u1 = _draw(keys, ctr, alive)
            t[alive] -= np.log(u1) / enc.lam_max
            alive = alive[t[alive] <= enc.horizon]
            if not alive.size:
                break
            ua = _draw(keys, ctr, alive)
            accepted = ua * enc.lam_max <= _poly_vec(enc.lam_breaks, enc.lam_coefs, t[alive])
            ev = alive[accepted]
            if ev.size:
                z = _sample_vec(
                    enc.claim_kind, enc.claim_p0, enc.claim_p1, enc.claim_off, enc.claim_len,
                    enc.tab_vals, enc.tab_cum, keys, ctr, ev,
                )
                nev[ev] += 1
                tv = t[ev]
                if not enc.scale_one:
                    z = z * _poly_vec(enc.scale_breaks, enc.scale_coefs, tv)
                if enc.r_zero:
                    claims_sum[ev] += z
                    prem = _prem_closed_vec(tv, enc.prem_breaks, enc.prem_base, enc.prem_anti)
                else:
                    claims_sum[ev] += np.exp(-_poly_vec(enc.r_breaks, enc.r_coefs, tv)) * z
                    prem = _prem_discounted_vec(tv, enc.seg_edges, enc.seg_prefix, enc.seg_r, enc.seg_p)
                ruin = claims_sum[ev] - prem > u
                if ruin.any():
                    ruined[ev[ruin]] = True
                    keep = np.ones(alive.size, dtype=bool)
                    keep[np.flatnonzero(accepted)[ruin]] = False
                    alive = alive[keep]
        flags[start:start + n] = ruined
        counts[start:start + n] = nev
    return flags, counts


def simulate_united(enc: EncodedUnited, seed: int, paths: int, u: float):
    flags = np.zeros(paths, dtype=np.uint8)
    counts = np.zeros(paths, dtype=np.int64)
    if enc.lam_max <= 0.0:
        return flags, counts
    nb = len(enc.t_open)
    for start in range(0, paths, _CHUNK):
        n = min(_CHUNK, paths - start)
        keys = path_key_vec(seed, np.arange(start, start + n, dtype=np.uint64))
        ctr = np.zeros(n, dtype=np.uint64)
        t = np.zeros(n)
        claims_sum = np.zeros(n)
        nev = np.zeros(n, dtype=np.int64)
        ruined = np.zeros(n, dtype=bool)
        alive = np.arange(n)
        while alive.size:
            u1 = _draw(keys, ctr, alive)
            t[alive] -= np.log(u1) / enc.lam_max
            alive = alive[t[alive] <= enc.horizon]
            if not alive.size:
                break
            tv = t[alive]
            active = tv[:, None] > enc.t_open[None, :]
            lam_t = active @ enc.lam
            ua = _draw(keys, ctr, alive)
            accepted = ua * enc.lam_max <= lam_t
            ev = alive[accepted]
            if ev.size:
                ub = _draw(keys, ctr, ev)
                target = ub * lam_t[accepted]
                act = active[accepted]
                cums = np.cumsum(np.where(act, enc.lam[None, :], 0.0), axis=1)
                chosen = np.argmax((target[:, None] < cums) & act, axis=1)
                no_pick = ~np.any((target[:, None] < cums) & act, axis=1)
                if no_pick.any():
                    last_active = act.shape[1] - 1 - np.argmax(act[:, ::-1], axis=1)
                    chosen[no_pick] = last_active[no_pick]
                z = np.empty(ev.size)
                for b in range(nb):
                    sel = chosen == b
                    if sel.any():
                        z[sel] = _sample_vec(
                            int(enc.kind[b]), enc.p0[b], enc.p1[b], int(enc.off[b]), int(enc.ln[b]),
                            enc.tab_vals, enc.tab_cum, keys, ctr, ev[sel],
                        )
                claims_sum[ev] += z
                nev[ev] += 1
                tev = t[ev]
                prem = (np.maximum(tev[:, None] - enc.t_open[None, :], 0.0) @ enc.prate)
                ruin = claims_sum[ev] - prem > u
                if ruin.any():
                    ruined[ev[ruin]] = True
                    keep = np.ones(alive.size, dtype=bool)
                    keep[np.flatnonzero(accepted)[ruin]] = False
                    alive = alive[keep]
        flags[start:start + n] = ruined
        counts[start:start + n] = nev
    return flags, counts


def simulate_renewal(enc: EncodedRenewal, seed: int, paths: int, u: float):
    flags = np.zeros(paths, dtype=np.uint8)
    counts = np.zeros(paths, dtype=np.int64)
    for start in range(0, paths, _CHUNK):
        n = min(_CHUNK, paths - start)
        keys = path_key_vec(seed, np.arange(start, start + n, dtype=np.uint64))
        ctr = np.zeros(n, dtype=np.uint64)
        s = np.zeros(n)
        taken = np.zeros(n, dtype=np.int64)
        ruined = np.zeros(n, dtype=bool)
        alive = np.arange(n)
        for k in range(enc.n_steps):
            if not alive.size:
                break
            z = _sample_vec(
                int(enc.z_kind[k]), enc.z_p0[k], enc.z_p1[k], int(enc.z_off[k]), int(enc.z_ln[k]),
                enc.tab_vals, enc.tab_cum, keys, ctr, alive,
            )
            if enc.decomposed[k] == 1:
                th = _sample_vec(
                    int(enc.t_kind[k]), enc.t_p0[k], enc.t_p1[k], int(enc.t_off[k]), int(enc.t_ln[k]),
                    enc.tab_vals, enc.tab_cum, keys, ctr, alive,
                )
                y = z - enc.prate[k] * th
            else:
                y = z
            s[alive] += y
            taken[alive] = k + 1
            ruin = s[alive] > u
            if ruin.any():
                ruined[alive[ruin]] = True
                alive = alive[~ruin]
        flags[start:start + n] = ruined
        counts[start:start + n] = taken
    return flags, counts


def set_workers(n) -> None:
    # vectorized backend has no worker pool; the hint is accepted and ignored
    return None
