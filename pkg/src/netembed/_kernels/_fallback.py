"""Pure-Python twins of the compiled kernels in ``_core.pyx``.

Same signatures, same arithmetic order, same random streams: for identical
inputs the output is bit-identical to the compiled core.  Slow (roughly two
orders of magnitude), meant for platforms without a C compiler and as an
executable reference in the test suite.
"""
from __future__ import annotations

from bisect import bisect_left
from math import exp, log1p

from .._rng import GOLDEN, MASK64, mix64

_TO_UNIT = 1.0 / 9007199254740992.0
_TO_UNIT32 = 1.0 / 4294967296.0


def _flat(a):
    # writable 1-D double view sharing memory with a C-contiguous array
    return memoryview(a).cast("B").cast(a.dtype.char)


class _Stream:
    __slots__ = ("state",)

    def __init__(self, base, index):
        self.state = mix64((base + (index + 1) * GOLDEN) & MASK64)

    def unit(self):
        self.state = (self.state + GOLDEN) & MASK64
        return (mix64(self.state) >> 11) * _TO_UNIT


def _alias_draw(rng, prob, alias, off, k):
    # one 64-bit draw: high half picks the column, low half is the coin
    rng.state = (rng.state + GOLDEN) & MASK64
    r = mix64(rng.state)
    i = ((r >> 32) * k) >> 32
    if (r & 0xFFFFFFFF) * _TO_UNIT32 < prob[off + i]:
        return i
    return alias[off + i]


def _dot(a, ao, b, bo, d):
    s0 = s1 = s2 = s3 = 0.0
    k = 0
    while k + 4 <= d:
        s0 = s0 + a[ao + k] * b[bo + k]
        s1 = s1 + a[ao + k + 1] * b[bo + k + 1]
        s2 = s2 + a[ao + k + 2] * b[bo + k + 2]
        s3 = s3 + a[ao + k + 3] * b[bo + k + 3]
        k += 4
    while k < d:
        s0 = s0 + a[ao + k] * b[bo + k]
        k += 1
    return (s0 + s1) + (s2 + s3)


def random_walks(indptr, indices, weights, alias_prob, alias_idx, starts, walk_ids,
                 walk_length, node2vec, p, q, seed, out, lengths):
    indptr = indptr.tolist()
    indices_l = indices.tolist()
    weights = weights.tolist()
    alias_prob = alias_prob.tolist()
    alias_idx = alias_idx.tolist()
    for w in range(len(starts)):
        rng = _Stream(seed, int(walk_ids[w]))
        v = int(starts[w])
        row = [v]
        u = -1
        step = 1
        while step < walk_length:
            off = indptr[v]
            deg = indptr[v + 1] - off
            if deg == 0:
                break
            if not node2vec or u < 0:
                pick = _alias_draw(rng, alias_prob, alias_idx, off, deg)
            else:
                buf = []
                total = 0.0
                lo_u, hi_u = indptr[u], indptr[u + 1]
                for j in range(deg):
                    x = indices_l[off + j]
                    wt = weights[off + j]
                    if x == u:
                        wt = wt / p
                    else:
                        pos = bisect_left(indices_l, x, lo_u, hi_u)
                        if not (pos < hi_u and indices_l[pos] == x):
                            wt = wt / q
                    buf.append(wt)
                    total = total + wt
                r = rng.unit() * total
                acc = 0.0
                pick = deg - 1
                for j in range(deg):
                    acc = acc + buf[j]
                    if r < acc:
                        pick = j
                        break
            u = v
            v = indices_l[off + pick]
            row.append(v)
            step += 1
        out[w, :step] = row
        lengths[w] = step


def _ns_step(zf, zo, tf, targets, lr, d, track):
    g = []
    obj = 0.0
    for t, tgt in enumerate(targets):
        f = _dot(zf, zo, tf, tgt * d, d)
        if f >= 0:
            e = exp(-f)
            s = 1.0 / (1.0 + e)
        else:
            e = exp(f)
            s = e / (1.0 + e)
        if t == 0:
            g.append(lr * (1.0 - s))
            if track:
                obj = obj + (-log1p(e) if f >= 0 else f - log1p(e))
        else:
            g.append(lr * (0.0 - s))
            if track:
                obj = obj + (-f - log1p(e) if f >= 0 else -log1p(e))
    zold = [zf[zo + k] for k in range(d)]
    neu1e = [0.0] * d
    for t, tgt in enumerate(targets):
        to = tgt * d
        gt = g[t]
        for k in range(d):
            x = tf[to + k]
            neu1e[k] = neu1e[k] + gt * x
            tf[to + k] = x + gt * zold[k]
    for k in range(d):
        zf[zo + k] = zf[zo + k] + neu1e[k]
    return obj


def _lr_at(lr0, span, lr_min, u, inv_total):
    lr = lr0 - span * (u * inv_total)
    if lr < lr_min:
        lr = lr_min
    return lr


def sgns_train(walk_nodes, walk_offsets, w_lo, w_hi, label_offset, update_offset,
               total_updates, Z, Zc, noise_prob, noise_alias, window, negatives,
               lr0, lr_min, seed, track=False):
    d = Z.shape[1]
    zf, cf = _flat(Z), _flat(Zc)
    nodes = walk_nodes.tolist()
    offsets = walk_offsets.tolist()
    nprob, nalias = noise_prob.tolist(), noise_alias.tolist()
    n_noise = len(nprob)
    obj = 0.0
    span, inv_total = lr0 - lr_min, 1.0 / total_updates
    u = update_offset
    for w in range(w_lo, w_hi):
        rng = _Stream(seed, label_offset + w)
        start = offsets[w]
        length = offsets[w + 1] - start
        for i in range(length):
            lo = max(i - window, 0)
            hi = min(i + window, length - 1)
            for j in range(lo, hi + 1):
                if j == i:
                    continue
                targets = [nodes[start + j]]
                for _ in range(negatives):
                    targets.append(_alias_draw(rng, nprob, nalias, 0, n_noise))
                lr = _lr_at(lr0, span, lr_min, u, inv_total)
                obj = obj + _ns_step(zf, nodes[start + i] * d, cf, targets, lr, d, track)
                u += 1
    return obj, u - update_offset


def line_train(src, dst, edge_prob, edge_alias, noise_prob, noise_alias, Z, Zt,
               negatives, lr0, lr_min, total, s_lo, s_hi, seed, track=False):
    d = Z.shape[1]
    zf = _flat(Z)
    tf = zf if Zt is Z else _flat(Zt)
    src, dst = src.tolist(), dst.tolist()
    eprob, ealias = edge_prob.tolist(), edge_alias.tolist()
    nprob, nalias = noise_prob.tolist(), noise_alias.tolist()
    m, n_noise = len(src), len(nprob)
    span, inv_total = lr0 - lr_min, 1.0 / total
    obj = 0.0
    for s in range(s_lo, s_hi):
        rng = _Stream(seed, s)
        e = _alias_draw(rng, eprob, ealias, 0, m)
        targets = [dst[e]]
        for _ in range(negatives):
            targets.append(_alias_draw(rng, nprob, nalias, 0, n_noise))
        lr = _lr_at(lr0, span, lr_min, s, inv_total)
        obj = obj + _ns_step(zf, src[e] * d, tf, targets, lr, d, track)
    return obj


def gf_epoch(src, dst, w, order, reg, Z, lr0, lr_min, total, offset, lo, hi):
    d = Z.shape[1]
    zf = _flat(Z)
    src, dst, w = src.tolist(), dst.tolist(), w.tolist()
    order, reg = order.tolist(), reg.tolist()
    span, inv_total = lr0 - lr_min, 1.0 / total
    for idx in range(lo, hi):
        e = order[idx]
        i, j = src[e], dst[e]
        io, jo = i * d, j * d
        lr = _lr_at(lr0, span, lr_min, offset + idx, inv_total)
        err = w[e] - _dot(zf, io, zf, jo, d)
        si = 1.0 + lr * reg[i]
        sj = 1.0 + lr * reg[j]
        for k in range(d):
            zi_k = zf[io + k]
            zf[io + k] = (zi_k + lr * err * zf[jo + k]) / si
            zf[jo + k] = (zf[jo + k] + lr * err * zi_k) / sj
