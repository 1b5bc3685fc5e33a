"""Compiled event loops. Each call runs until the horizon is reached or a random
buffer / output buffer runs low, then returns so the driver can refill and flush.

Integer state layout (``ist``) and float state layout (``fst``) are shared with
``engine.py`` through the index constants below.
"""
import math

import numpy as np
from numba import njit

# ist slots
I_EVENTS, I_ARRIVALS, I_EMPTY, I_EP_OPEN, I_EP_REGEN, I_EP_OVERFLOW, I_EP_OBS, \
    I_NSAMP, I_NEMPTY, I_NEP, I_TOTAL = range(11)
N_IST = 11
# fst slots
F_TIME, F_NEXT_ARRIVAL, F_AREA, F_EP_START, F_EP_REGEN_TIME = range(5)
N_FST = 5
# stream order matches streams.STREAM_NAMES
S_ARR, S_SRV, S_RTE, S_TIE = range(4)

DONE = 0
NEED_SERVICE = 1

# every event draws at most two uniforms from any one stream
_RESERVE = 4


@njit(cache=True)
def _exp(u, rate):
    return -math.log1p(-u) / rate


@njit(cache=True)
def _pick(pcum, u):
    n = pcum.shape[0]
    for i in range(n):
        if u < pcum[i]:
            return i
    # rounding left u above the last cumulative value: take the last positive mass
    for i in range(n - 1, -1, -1):
        if i == 0 or pcum[i] > pcum[i - 1]:
            return i
    return 0


@njit(cache=True)
def _low(buf, pos):
    return buf.shape[0] - pos < _RESERVE


@njit(cache=True)
def queue_kernel(x, fst, ist, lam, mu, pcum, nonidling, split_m, horizon, stride,
                 u_arr, u_srv, u_rte, pos,
                 s_idx, s_time, s_max, s_tot, s_min,
                 e_time,
                 ep_start, ep_end, ep_regen, ep_overflow, ep_obs, ep_hist, open_hist):
    """Ordered queue-length process under a p-allocation policy.

    ``x`` is the sorted queue vector. Labels inside a tie group do not change the
    ordered state, so no tie-break draws are spent.
    """
    s = x.shape[0]
    nf = split_m - 1
    while ist[I_ARRIVALS] < horizon:
        if (_low(u_arr, pos[S_ARR]) or _low(u_srv, pos[S_SRV]) or _low(u_rte, pos[S_RTE])
                or ist[I_NSAMP] >= s_idx.shape[0] or ist[I_NEMPTY] >= e_time.shape[0]
                or ist[I_NEP] >= ep_start.shape[0]):
            return NEED_SERVICE
        t = fst[F_TIME]
        if math.isnan(fst[F_NEXT_ARRIVAL]):
            fst[F_NEXT_ARRIVAL] = t + _exp(u_arr[pos[S_ARR]], lam)
            pos[S_ARR] += 1
        na = fst[F_NEXT_ARRIVAL]
        busy = 0
        for i in range(s):
            if x[i] > 0:
                busy += 1
        total = ist[I_TOTAL]
        d = np.inf
        if busy > 0:
            d = t + _exp(u_srv[pos[S_SRV]], mu * busy)
            pos[S_SRV] += 1
        if d < na:
            k = int(u_srv[pos[S_SRV]] * busy)
            pos[S_SRV] += 1
            if k >= busy:
                k = busy - 1
            j = s - busy + k
            v = x[j]
            while j > 0 and x[j - 1] == v:
                j -= 1
            x[j] -= 1
            fst[F_AREA] += total * (d - t)
            fst[F_TIME] = d
            t = d
            ist[I_TOTAL] = total - 1
            if total == 1:
                ist[I_EMPTY] += 1
                e_time[ist[I_NEMPTY]] = t
                ist[I_NEMPTY] += 1
        else:
            fst[F_AREA] += total * (na - t)
            fst[F_TIME] = na
            t = na
            observing = split_m >= 2 and ist[I_EP_OPEN] == 1 and ist[I_EP_REGEN] == 1
            if observing:
                nb = 0
                for i in range(nf):
                    if x[i] >= 1:
                        nb += 1
                open_hist[nb] += 1
                ist[I_EP_OBS] += 1
            i = _pick(pcum, u_rte[pos[S_RTE]])
            pos[S_RTE] += 1
            if nonidling and x[0] == 0:
                v = 0
            else:
                v = x[i]
            if observing and v >= 2:
                ist[I_EP_OVERFLOW] += 1
            j = 0
            while x[j] != v:
                j += 1
            while j + 1 < s and x[j + 1] == v:
                j += 1
            x[j] += 1
            ist[I_TOTAL] = total + 1
            ist[I_ARRIVALS] += 1
            fst[F_NEXT_ARRIVAL] = t + _exp(u_arr[pos[S_ARR]], lam)
            pos[S_ARR] += 1
        ist[I_EVENTS] += 1

        if split_m >= 2:
            split = True
            front_empty = True
            front_busy = True
            for i in range(s):
                if i < nf:
                    if x[i] > 1:
                        split = False
                    if x[i] != 0:
                        front_empty = False
                    if x[i] != 1:
                        front_busy = False
                elif x[i] < 2:
                    split = False
            if ist[I_EP_OPEN] == 1:
                if not split:
                    r = ist[I_NEP]
                    ep_start[r] = fst[F_EP_START]
                    ep_end[r] = t
                    ep_regen[r] = fst[F_EP_REGEN_TIME] if ist[I_EP_REGEN] == 1 else np.nan
                    ep_overflow[r] = ist[I_EP_OVERFLOW]
                    ep_obs[r] = ist[I_EP_OBS]
                    for b in range(nf + 1):
                        ep_hist[r, b] = open_hist[b]
                    ist[I_NEP] += 1
                    ist[I_EP_OPEN] = 0
                elif ist[I_EP_REGEN] == 0 and front_busy:
                    ist[I_EP_REGEN] = 1
                    fst[F_EP_REGEN_TIME] = t
            elif split and front_empty:
                ist[I_EP_OPEN] = 1
                ist[I_EP_REGEN] = 0
                ist[I_EP_OVERFLOW] = 0
                ist[I_EP_OBS] = 0
                fst[F_EP_START] = t
                fst[F_EP_REGEN_TIME] = np.nan
                for b in range(nf + 1):
                    open_hist[b] = 0

        if ist[I_EVENTS] % stride == 0:
            r = ist[I_NSAMP]
            s_idx[r] = ist[I_EVENTS]
            s_time[r] = t
            s_max[r] = x[s - 1]
            s_tot[r] = ist[I_TOTAL]
            s_min[r] = x[0]
            ist[I_NSAMP] += 1
    return DONE


@njit(cache=True)
def _uniform_idle(w, u):
    n_idle = 0
    for i in range(w.shape[0]):
        if w[i] == 0.0:
            n_idle += 1
    k = int(u * n_idle)
    if k >= n_idle:
        k = n_idle - 1
    for i in range(w.shape[0]):
        if w[i] == 0.0:
            if k == 0:
                return i
            k -= 1
    return -1


@njit(cache=True)
def workload_kernel(w, fst, ist, lam, mu, m, p_err, nonidling, horizon, stride,
                    u_arr, u_srv, u_rte, u_tie, pos,
                    s_idx, s_time, s_max, s_tot, s_min,
                    e_time):
    """Residual-workload process under JmSW(p), observed at arrival epochs.

    Each arrival goes to the m-th smallest workload with probability ``p_err``,
    otherwise to the smallest; idle ties are split uniformly.
    """
    s = w.shape[0]
    while ist[I_ARRIVALS] < horizon:
        if (_low(u_arr, pos[S_ARR]) or _low(u_srv, pos[S_SRV]) or _low(u_rte, pos[S_RTE])
                or _low(u_tie, pos[S_TIE])
                or ist[I_NSAMP] >= s_idx.shape[0] or ist[I_NEMPTY] >= e_time.shape[0]):
            return NEED_SERVICE
        t = fst[F_TIME]
        dt = _exp(u_arr[pos[S_ARR]], lam)
        pos[S_ARR] += 1
        total = 0.0
        wmax = 0.0
        area = 0.0
        for i in range(s):
            wi = w[i]
            total += wi
            if wi > wmax:
                wmax = wi
            if wi >= dt:
                area += wi * dt - 0.5 * dt * dt
                w[i] = wi - dt
            else:
                area += 0.5 * wi * wi
                w[i] = 0.0
        fst[F_AREA] += area
        if total > 0.0 and wmax <= dt:
            ist[I_EMPTY] += 1
            e_time[ist[I_NEMPTY]] = t + wmax
            ist[I_NEMPTY] += 1
        t += dt
        fst[F_TIME] = t

        u = u_rte[pos[S_RTE]]
        pos[S_RTE] += 1
        has_idle = False
        for i in range(s):
            if w[i] == 0.0:
                has_idle = True
                break
        if nonidling and has_idle:
            target = _uniform_idle(w, u_tie[pos[S_TIE]])
            pos[S_TIE] += 1
        else:
            rank = m if u >= 1.0 - p_err else 1
            order = np.argsort(w, kind="mergesort")
            target = order[rank - 1]
            if w[target] == 0.0:
                target = _uniform_idle(w, u_tie[pos[S_TIE]])
                pos[S_TIE] += 1
        w[target] += _exp(u_srv[pos[S_SRV]], mu)
        pos[S_SRV] += 1
        ist[I_ARRIVALS] += 1
        ist[I_EVENTS] += 1

        if ist[I_EVENTS] % stride == 0:
            r = ist[I_NSAMP]
            s_idx[r] = ist[I_EVENTS]
            s_time[r] = t
            tot = 0.0
            lo = np.inf
            hi = 0.0
            for i in range(s):
                tot += w[i]
                if w[i] < lo:
                    lo = w[i]
                if w[i] > hi:
                    hi = w[i]
            s_max[r] = hi
            s_tot[r] = tot
            s_min[r] = lo
            ist[I_NSAMP] += 1
    return DONE
