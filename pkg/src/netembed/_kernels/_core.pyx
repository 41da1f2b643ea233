# cython: language_level=3
"""Compiled inner loops: random walks and the SGD trainers.

Every function here has a line-for-line twin in ``_fallback.py``; the two must
produce bit-identical output for the same inputs.  All loops release the GIL so
callers may run disjoint ranges on threads (Hogwild-style for the trainers).
"""
from libc.math cimport exp, log1p
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, free

ctypedef double f64

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef f64 TO_UNIT = 1.0 / 9007199254740992.0
cdef f64 TO_UNIT32 = 1.0 / 4294967296.0


cdef inline uint64_t _mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _stream_key(uint64_t base, uint64_t index) noexcept nogil:
    return _mix64(base + (index + 1) * GOLDEN)


cdef inline f64 _unit(uint64_t* state) noexcept nogil:
    state[0] = state[0] + GOLDEN
    return (_mix64(state[0]) >> 11) * TO_UNIT


cdef inline int64_t _alias_draw(uint64_t* state, const f64* prob, const int64_t* alias,
                                int64_t k) noexcept nogil:
    # one 64-bit draw: high half picks the column, low half is the coin
    cdef uint64_t r
    state[0] = state[0] + GOLDEN
    r = _mix64(state[0])
    cdef int64_t i = <int64_t>(((r >> 32) * <uint64_t>k) >> 32)
    if (r & 0xFFFFFFFFULL) * TO_UNIT32 < prob[i]:
        return i
    return alias[i]


cdef inline bint _has_edge(const int64_t* indptr, const int64_t* indices,
                           int64_t u, int64_t x) noexcept nogil:
    cdef int64_t lo = indptr[u], hi = indptr[u + 1], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if indices[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo < indptr[u + 1] and indices[lo] == x


def random_walks(const int64_t[::1] indptr, const int64_t[::1] indices,
                 const f64[::1] weights, const f64[::1] alias_prob,
                 const int64_t[::1] alias_idx, const int64_t[::1] starts,
                 const int64_t[::1] walk_ids, int64_t walk_length, bint node2vec,
                 f64 p, f64 q, uint64_t seed, int64_t[:, ::1] out,
                 int64_t[::1] lengths):
    cdef int64_t m = starts.shape[0], n = indptr.shape[0] - 1
    cdef int64_t w, step, v, u, x, deg, off, j, pick, max_deg = 0
    cdef uint64_t state
    cdef f64 total, r, acc, wt
    cdef f64* buf
    for v in range(n):
        if indptr[v + 1] - indptr[v] > max_deg:
            max_deg = indptr[v + 1] - indptr[v]
    buf = <f64*>malloc((max_deg + 1) * sizeof(f64))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            for w in range(m):
                state = _stream_key(seed, <uint64_t>walk_ids[w])
                v = starts[w]
                out[w, 0] = v
                u = -1
                step = 1
                while step < walk_length:
                    off = indptr[v]
                    deg = indptr[v + 1] - off
                    if deg == 0:
                        break
                    if not node2vec or u < 0:
                        pick = _alias_draw(&state, &alias_prob[off], &alias_idx[off], deg)
                    else:
                        total = 0.0
                        for j in range(deg):
                            x = indices[off + j]
                            wt = weights[off + j]
                            if x == u:
                                wt = wt / p
                            elif not _has_edge(&indptr[0], &indices[0], u, x):
                                wt = wt / q
                            buf[j] = wt
                            total = total + wt
                        r = _unit(&state) * total
                        acc = 0.0
                        pick = deg - 1
                        for j in range(deg):
                            acc = acc + buf[j]
                            if r < acc:
                                pick = j
                                break
                    u = v
                    v = indices[off + pick]
                    out[w, step] = v
                    step += 1
                lengths[w] = step
    finally:
        free(buf)


cdef inline f64 _dot(const f64* a, const f64* b, int64_t d) noexcept nogil:
    # four interleaved partial sums, combined pairwise
    cdef f64 s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0
    cdef int64_t k = 0
    while k + 4 <= d:
        s0 = s0 + a[k] * b[k]
        s1 = s1 + a[k + 1] * b[k + 1]
        s2 = s2 + a[k + 2] * b[k + 2]
        s3 = s3 + a[k + 3] * b[k + 3]
        k += 4
    while k < d:
        s0 = s0 + a[k] * b[k]
        k += 1
    return (s0 + s1) + (s2 + s3)


cdef inline f64 _ns_step(f64* z, f64* tbase, const int64_t* targets,
                         int64_t nt, f64 lr, int64_t d, f64* g, f64* neu1e,
                         f64* zold, bint track) noexcept nogil:
    # ascent step on log s(z't z) + sum log s(-z'l z); targets[0] is the
    # positive, the rest are negatives.  Coefficients use the pre-step vectors;
    # target rows are then updated in order (a repeated target sees its own
    # earlier update, as in word2vec).
    cdef int64_t t, k
    cdef f64 f, e, s, gt, x, obj = 0.0
    cdef f64* zt
    for t in range(nt):
        f = _dot(z, tbase + targets[t] * d, d)
        if f >= 0:
            e = exp(-f)
            s = 1.0 / (1.0 + e)
        else:
            e = exp(f)
            s = e / (1.0 + e)
        if t == 0:
            g[t] = lr * (1.0 - s)
            if track:
                obj = obj + (-log1p(e) if f >= 0 else f - log1p(e))
        else:
            g[t] = lr * (0.0 - s)
            if track:
                obj = obj + (-f - log1p(e) if f >= 0 else -log1p(e))
    for k in range(d):
        neu1e[k] = 0.0
        zold[k] = z[k]
    for t in range(nt):
        zt = tbase + targets[t] * d
        gt = g[t]
        for k in range(d):
            x = zt[k]
            neu1e[k] = neu1e[k] + gt * x
            zt[k] = x + gt * zold[k]
    for k in range(d):
        z[k] = z[k] + neu1e[k]
    return obj


cdef inline f64 _lr_at(f64 lr0, f64 span, f64 lr_min, int64_t u, f64 inv_total) noexcept nogil:
    # linear decay; span = lr0 - lr_min, inv_total = 1 / total updates
    cdef f64 lr = lr0 - span * (<f64>u * inv_total)
    if lr < lr_min:
        lr = lr_min
    return lr


def sgns_train(const int64_t[::1] walk_nodes, const int64_t[::1] walk_offsets,
               int64_t w_lo, int64_t w_hi, int64_t label_offset,
               int64_t update_offset, int64_t total_updates,
               f64[:, ::1] Z, f64[:, ::1] Zc, const f64[::1] noise_prob,
               const int64_t[::1] noise_alias, int64_t window, int64_t negatives,
               f64 lr0, f64 lr_min, uint64_t seed, bint track=False):
    """Train on walks ``w_lo..w_hi``; returns (objective sum, updates done).

    The objective is only accumulated when ``track`` is set (it costs a log1p
    per target); otherwise the sum is 0.
    """
    cdef int64_t d = Z.shape[1], n_noise = noise_prob.shape[0]
    cdef int64_t w, i, j, lo, hi, start, length, t, u = update_offset
    cdef uint64_t state
    cdef f64 obj = 0.0, lr, span = lr0 - lr_min, inv_total = 1.0 / <f64>total_updates
    cdef int64_t* targets = <int64_t*>malloc((negatives + 1) * sizeof(int64_t))
    cdef f64* g = <f64*>malloc((negatives + 1) * sizeof(f64))
    cdef f64* neu1e = <f64*>malloc(d * sizeof(f64))
    cdef f64* zold = <f64*>malloc(d * sizeof(f64))
    if targets == NULL or g == NULL or neu1e == NULL or zold == NULL:
        free(targets); free(g); free(neu1e); free(zold)
        raise MemoryError()
    try:
        with nogil:
            for w in range(w_lo, w_hi):
                state = _stream_key(seed, <uint64_t>(label_offset + w))
                start = walk_offsets[w]
                length = walk_offsets[w + 1] - start
                for i in range(length):
                    lo = i - window
                    if lo < 0:
                        lo = 0
                    hi = i + window
                    if hi > length - 1:
                        hi = length - 1
                    for j in range(lo, hi + 1):
                        if j == i:
                            continue
                        targets[0] = walk_nodes[start + j]
                        for t in range(1, negatives + 1):
                            targets[t] = _alias_draw(&state, &noise_prob[0],
                                                     &noise_alias[0], n_noise)
                        lr = _lr_at(lr0, span, lr_min, u, inv_total)
                        obj = obj + _ns_step(&Z[walk_nodes[start + i], 0], &Zc[0, 0], targets,
                                             negatives + 1, lr, d, g, neu1e, zold, track)
                        u += 1
    finally:
        free(targets); free(g); free(neu1e); free(zold)
    return obj, u - update_offset


def line_train(const int64_t[::1] src, const int64_t[::1] dst,
               const f64[::1] edge_prob, const int64_t[::1] edge_alias,
               const f64[::1] noise_prob, const int64_t[::1] noise_alias,
               f64[:, ::1] Z, f64[:, ::1] Zt, int64_t negatives, f64 lr0,
               f64 lr_min, int64_t total, int64_t s_lo, int64_t s_hi, uint64_t seed,
               bint track=False):
    """Edge-sampling SGD for samples ``s_lo..s_hi``; returns the objective sum.

    ``Zt`` is the target matrix: ``Z`` itself for first order, the context
    matrix for second order.
    """
    cdef int64_t d = Z.shape[1], n_noise = noise_prob.shape[0], m = src.shape[0]
    cdef int64_t s, e, t
    cdef uint64_t state
    cdef f64 obj = 0.0, lr, span = lr0 - lr_min, inv_total = 1.0 / <f64>total
    cdef int64_t* targets = <int64_t*>malloc((negatives + 1) * sizeof(int64_t))
    cdef f64* g = <f64*>malloc((negatives + 1) * sizeof(f64))
    cdef f64* neu1e = <f64*>malloc(d * sizeof(f64))
    cdef f64* zold = <f64*>malloc(d * sizeof(f64))
    if targets == NULL or g == NULL or neu1e == NULL or zold == NULL:
        free(targets); free(g); free(neu1e); free(zold)
        raise MemoryError()
    try:
        with nogil:
            for s in range(s_lo, s_hi):
                state = _stream_key(seed, <uint64_t>s)
                e = _alias_draw(&state, &edge_prob[0], &edge_alias[0], m)
                targets[0] = dst[e]
                for t in range(1, negatives + 1):
                    targets[t] = _alias_draw(&state, &noise_prob[0], &noise_alias[0], n_noise)
                lr = _lr_at(lr0, span, lr_min, s, inv_total)
                obj = obj + _ns_step(&Z[src[e], 0], &Zt[0, 0], targets, negatives + 1, lr, d,
                                     g, neu1e, zold, track)
    finally:
        free(targets); free(g); free(neu1e); free(zold)
    return obj


def gf_epoch(const int64_t[::1] src, const int64_t[::1] dst, const f64[::1] w,
             const int64_t[::1] order, const f64[::1] reg, f64[:, ::1] Z,
             f64 lr0, f64 lr_min, int64_t total, int64_t offset, int64_t lo,
             int64_t hi):
    """One pass of factorization SGD over ``order[lo:hi]``.

    The squared-error term takes an explicit step; the per-node ridge share
    ``reg[i]`` is applied as a proximal (implicit) shrink, stable for any ridge.
    """
    cdef int64_t d = Z.shape[1], idx, e, i, j, k
    cdef f64 err, lr, si, sj, zi_k, span = lr0 - lr_min, inv_total = 1.0 / <f64>total
    cdef f64* zi
    cdef f64* zj
    with nogil:
        for idx in range(lo, hi):
            e = order[idx]
            i = src[e]
            j = dst[e]
            zi = &Z[i, 0]
            zj = &Z[j, 0]
            lr = _lr_at(lr0, span, lr_min, offset + idx, inv_total)
            err = w[e] - _dot(zi, zj, d)
            si = 1.0 + lr * reg[i]
            sj = 1.0 + lr * reg[j]
            for k in range(d):
                zi_k = zi[k]
                zi[k] = (zi_k + lr * err * zj[k]) / si
                zj[k] = (zj[k] + lr * err * zi_k) / sj
