"""Compiled inner loops of the data-augmentation collapsed Gibbs sampler.

All arrays are preallocated by the caller for up to ``V + 1`` groups.
Group statistics (bn, bx, bw) are symmetric; ``L`` caches the per-block
collapsed log marginal (X part plus W part, without the w! term).
Random numbers come from a numpy Generator passed in by the caller, so a
chain is reproducible from its seed.
"""
import math

import numpy as np
from numba import njit

# hyp layout: a, b, a1, a2, const_x, const_w
VARIANT_ZIP = 0
VARIANT_PSBM = 1
VARIANT_FIXED = 2


def pack_hyper(a, b, a1, a2):
    const_x = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
    const_w = a1 * math.log(a2) - math.lgamma(a1)
    return np.array([a, b, a1, a2, const_x, const_w])


@njit(cache=True)
def block_logml(n, x, w, hyp, use_x):
    out = hyp[5] + math.lgamma(hyp[2] + w) - (hyp[2] + w) * math.log(hyp[3] + n)
    if use_x:
        out += hyp[4] + math.lgamma(hyp[0] + x) + math.lgamma(hyp[1] + n - x) - math.lgamma(hyp[0] + hyp[1] + n)
    return out


@njit(cache=True)
def augment(Y, X, W, z, pi, lam, rng, do_w):
    """Steps 1-2: redraw obscuration indicators and latent counts, pairs v > u."""
    V = Y.shape[0]
    for v in range(1, V):
        for u in range(v):
            y = Y[v, u]
            if y > 0:
                X[v, u] = 0
                X[u, v] = 0
                if do_w:
                    W[v, u] = y
                    W[u, v] = y
                continue
            p = pi[z[v], z[u]]
            rate = lam[z[v], z[u]]
            keep = (1.0 - p) * math.exp(-rate)
            prob = p / (p + keep)
            x = 1 if rng.random() < prob else 0
            X[v, u] = x
            X[u, v] = x
            if do_w:
                w = rng.poisson(rate) if x == 1 else 0
                W[v, u] = w
                W[u, v] = w


@njit(cache=True)
def recompute_stats(z, H, X, W, bn, bx, bw):
    V = z.size
    for h in range(H):
        for k in range(H):
            bn[h, k] = 0
            bx[h, k] = 0
            bw[h, k] = 0
    for v in range(1, V):
        hv = z[v]
        for u in range(v):
            hu = z[u]
            bn[hv, hu] += 1
            bx[hv, hu] += X[v, u]
            bw[hv, hu] += W[v, u]
            if hv != hu:
                bn[hu, hv] += 1
                bx[hu, hv] += X[v, u]
                bw[hu, hv] += W[v, u]


@njit(cache=True)
def recompute_cache(H, bn, bx, bw, L, hyp, use_x):
    for h in range(H):
        for k in range(h + 1):
            val = block_logml(bn[h, k], bx[h, k], bw[h, k], hyp, use_x)
            L[h, k] = val
            L[k, h] = val


@njit(cache=True)
def total_logml(H, L):
    s = 0.0
    for h in range(H):
        for k in range(h + 1):
            s += L[h, k]
    return s


@njit(cache=True)
def _swap_index(M, i, j):
    for k in range(M.shape[1]):
        t = M[i, k]
        M[i, k] = M[j, k]
        M[j, k] = t
    for k in range(M.shape[0]):
        t = M[k, i]
        M[k, i] = M[k, j]
        M[k, j] = t


@njit(cache=True)
def _add_partner_tallies(h, H, sign, cnt, xs, ws, bn, bx, bw):
    for k in range(H):
        bn[h, k] += sign * cnt[k]
        bx[h, k] += sign * xs[k]
        bw[h, k] += sign * ws[k]
        if k != h:
            bn[k, h] = bn[h, k]
            bx[k, h] = bx[h, k]
            bw[k, h] = bw[h, k]


@njit(cache=True)
def remove_node(v, z, H, sizes, ccount, cls, supervised, bn, bx, bw, L, X, W, hyp, use_x, cnt, xs, ws):
    """Take node v out of its group (step 3.1); returns H_{-v}.

    Fills cnt/xs/ws with v's pair count and latent sums towards every
    remaining group.  An emptied group is removed by moving the last label
    into its slot, so labels stay contiguous.
    """
    V = z.size
    for k in range(H + 1):
        cnt[k] = 0
        xs[k] = 0
        ws[k] = 0
    for u in range(V):
        if u != v:
            k = z[u]
            cnt[k] += 1
            xs[k] += X[v, u]
            ws[k] += W[v, u]
    hv = z[v]
    _add_partner_tallies(hv, H, -1, cnt, xs, ws, bn, bx, bw)
    sizes[hv] -= 1
    if supervised:
        ccount[hv, cls[v]] -= 1
    z[v] = -1
    if sizes[hv] == 0:
        last = H - 1
        if hv != last:
            for u in range(V):
                if z[u] == last:
                    z[u] = hv
            sizes[hv] = sizes[last]
            sizes[last] = 0
            for c in range(ccount.shape[1]):
                t = ccount[hv, c]
                ccount[hv, c] = ccount[last, c]
                ccount[last, c] = t
            _swap_index(bn, hv, last)
            _swap_index(bx, hv, last)
            _swap_index(bw, hv, last)
            _swap_index(L, hv, last)
            cnt[hv], cnt[last] = cnt[last], cnt[hv]
            xs[hv], xs[last] = xs[last], xs[hv]
            ws[hv], ws[last] = ws[last], ws[hv]
        return H - 1
    for k in range(H):
        val = block_logml(bn[hv, k], bx[hv, k], bw[hv, k], hyp, use_x)
        L[hv, k] = val
        L[k, hv] = val
    return H


@njit(cache=True)
def score_node(v, H, V, sizes, ccount, cls, cohes, alpha0, supervised, gamma,
               bn, bx, bw, L, hyp, use_x, cnt, xs, ws, scores):
    """Unnormalized log full conditional of z_v over groups 0..H (H = new group)."""
    if H == 0:
        scores[0] = 0.0
        return
    cv = cls[v] if supervised else 0
    log_occ = math.log(V - 1 - H + gamma)
    for h in range(H):
        s = math.log(sizes[h] + 1.0) + log_occ
        if supervised:
            s += math.log(ccount[h, cv] + cohes[cv]) - math.log(sizes[h] + alpha0)
        for k in range(H):
            s += block_logml(bn[h, k] + cnt[k], bx[h, k] + xs[k], bw[h, k] + ws[k], hyp, use_x) - L[h, k]
        scores[h] = s
    s = math.log(H) + math.log(H - gamma)
    if supervised:
        s += math.log(cohes[cv]) - math.log(alpha0)
    for k in range(H):
        s += block_logml(cnt[k], xs[k], ws[k], hyp, use_x)
    scores[H] = s


@njit(cache=True)
def insert_node(v, h, z, H, sizes, ccount, cls, supervised, bn, bx, bw, L, hyp, use_x, cnt, xs, ws):
    if h == H:
        H += 1
    z[v] = h
    sizes[h] += 1
    if supervised:
        ccount[h, cls[v]] += 1
    _add_partner_tallies(h, H, 1, cnt, xs, ws, bn, bx, bw)
    for k in range(H):
        val = block_logml(bn[h, k], bx[h, k], bw[h, k], hyp, use_x)
        L[h, k] = val
        L[k, h] = val
    return H


@njit(cache=True)
def draw_categorical(scores, m, rng):
    top = scores[0]
    for i in range(1, m):
        if scores[i] > top:
            top = scores[i]
    total = 0.0
    for i in range(m):
        scores[i] = math.exp(scores[i] - top)
        total += scores[i]
    r = rng.random() * total
    acc = 0.0
    for i in range(m):
        acc += scores[i]
        if r < acc:
            return i
    return m - 1


@njit(cache=True)
def sweep_allocations(z, H, sizes, ccount, cls, cohes, alpha0, supervised, gamma,
                      bn, bx, bw, L, X, W, hyp, use_x, cnt, xs, ws, scores, rng):
    """Step 3 for v = 0..V-1; returns the new group count."""
    V = z.size
    for v in range(V):
        H = remove_node(v, z, H, sizes, ccount, cls, supervised, bn, bx, bw, L, X, W, hyp, use_x, cnt, xs, ws)
        score_node(v, H, V, sizes, ccount, cls, cohes, alpha0, supervised, gamma,
                   bn, bx, bw, L, hyp, use_x, cnt, xs, ws, scores)
        h = draw_categorical(scores, H + 1, rng)
        H = insert_node(v, h, z, H, sizes, ccount, cls, supervised, bn, bx, bw, L, hyp, use_x, cnt, xs, ws)
    return H


@njit(cache=True)
def sample_params(H, bn, bx, bw, pi, lam, hyp, rng, draw_pi):
    """Steps 4-5 over blocks h >= k in lower-triangular order."""
    for h in range(H):
        for k in range(h + 1):
            if draw_pi:
                p = rng.beta(hyp[0] + bx[h, k], hyp[1] + bn[h, k] - bx[h, k])
            else:
                p = 0.0
            rate = rng.gamma(hyp[2] + bw[h, k], 1.0 / (hyp[3] + bn[h, k]))
            pi[h, k] = p
            pi[k, h] = p
            lam[h, k] = rate
            lam[k, h] = rate


@njit(cache=True)
def iterate(variant, skip_w, Y, X, W, z, H, sizes, ccount, cls, cohes, alpha0, supervised, gamma,
            bn, bx, bw, L, pi, lam, hyp, cnt, xs, ws, scores, rng):
    """One pass of Algorithm steps 1-5 (variant-dependent); returns H."""
    use_x = variant != VARIANT_PSBM
    if variant != VARIANT_PSBM:
        augment(Y, X, W, z, pi, lam, rng, not skip_w)
        recompute_stats(z, H, X, W, bn, bx, bw)
        if variant == VARIANT_ZIP:
            recompute_cache(H, bn, bx, bw, L, hyp, use_x)
    if variant != VARIANT_FIXED:
        H = sweep_allocations(z, H, sizes, ccount, cls, cohes, alpha0, supervised, gamma,
                              bn, bx, bw, L, X, W, hyp, use_x, cnt, xs, ws, scores, rng)
    sample_params(H, bn, bx, bw, pi, lam, hyp, rng, use_x)
    return H


@njit(cache=True)
def draw_observed(z, pi, lam, X, W, Y, rng):
    """Forward simulation of (X, W, Y) given allocations and block parameters."""
    V = z.size
    for v in range(1, V):
        for u in range(v):
            p = pi[z[v], z[u]]
            rate = lam[z[v], z[u]]
            x = 1 if rng.random() < p else 0
            w = rng.poisson(rate)
            X[v, u] = x
            X[u, v] = x
            W[v, u] = w
            W[u, v] = w
            y = 0 if x == 1 else w
            Y[v, u] = y
            Y[u, v] = y
