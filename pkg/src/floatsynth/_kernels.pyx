# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; mirror ``_pykernels`` exactly (same RNG stream, same order of draws)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t stream_state(uint64_t seed, uint64_t trial) nogil:
    return mix64(seed ^ mix64((trial + 1) * GOLDEN))


cdef inline double next_uniform(uint64_t* s) nogil:
    s[0] = s[0] + GOLDEN
    return (mix64(s[0]) >> 11) * INV53


def uniforms(seed, long long trial, int n):
    cdef uint64_t s = stream_state(<uint64_t>(seed & 0xFFFFFFFFFFFFFFFF), <uint64_t>trial)
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef int i
    for i in range(n):
        o[i] = next_uniform(&s)
    return out


cdef struct Prog:
    const long long* kind
    const long long* leaf_t
    const long long* toffoli
    const double* prob
    const long long* cstart
    const long long* ccount
    const long long* children


cdef void run_node(Prog* pg, long long node, uint64_t* s, long long* tot, long long* onl,
                   long long* attempts_out) nogil:
    cdef long long total = 0, online = 0, attempts = 0
    cdef long long c0, c1, ci, ch, tof
    cdef long long tp, op, tu, ou
    cdef double p
    if pg.kind[node] == 0:
        tot[0] = pg.leaf_t[node]
        onl[0] = pg.leaf_t[node]
        return
    p = pg.prob[node]
    c0 = pg.cstart[node]
    c1 = c0 + pg.ccount[node]
    tof = pg.toffoli[node]
    while True:
        attempts += 1
        total += tof
        online += tof
        for ci in range(c0, c1):
            ch = pg.children[ci]
            run_node(pg, ch, s, &tp, &op, NULL)
            run_node(pg, ch, s, &tu, &ou, NULL)
            total += tp + tu
            online += ou
        if next_uniform(s) < p:
            break
    tot[0] = total
    onl[0] = online
    if attempts_out != NULL:
        attempts_out[0] = attempts


def sample_plan(kind, leaf_t, toffoli, prob, cstart, ccount, children, long long root,
                seed, long long start, long long n):
    cdef long long[::1] k_ = np.ascontiguousarray(kind, dtype=np.int64)
    cdef long long[::1] lt = np.ascontiguousarray(leaf_t, dtype=np.int64)
    cdef long long[::1] tf = np.ascontiguousarray(toffoli, dtype=np.int64)
    cdef double[::1] pr = np.ascontiguousarray(prob, dtype=np.float64)
    cdef long long[::1] cs = np.ascontiguousarray(cstart, dtype=np.int64)
    cdef long long[::1] cc = np.ascontiguousarray(ccount, dtype=np.int64)
    ch_arr = np.ascontiguousarray(children, dtype=np.int64)
    if ch_arr.size == 0:
        ch_arr = np.zeros(1, dtype=np.int64)
    cdef long long[::1] chv = ch_arr
    total = np.zeros(n, dtype=np.int64)
    online = np.zeros(n, dtype=np.int64)
    attempts = np.ones(n, dtype=np.int64)
    cdef long long[::1] t_ = total
    cdef long long[::1] o_ = online
    cdef long long[::1] a_ = attempts
    cdef Prog pg
    pg.kind = &k_[0]
    pg.leaf_t = &lt[0]
    pg.toffoli = &tf[0]
    pg.prob = &pr[0]
    pg.cstart = &cs[0]
    pg.ccount = &cc[0]
    pg.children = &chv[0]
    cdef uint64_t sd = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t s
    cdef long long i
    with nogil:
        for i in range(n):
            s = stream_state(sd, <uint64_t>(start + i))
            run_node(&pg, root, &s, &t_[i], &o_[i], &a_[i])
    return total, online, attempts


def sample_chain(probs, seed, long long start, long long n):
    cdef double[::1] pr = np.ascontiguousarray(probs, dtype=np.float64)
    cdef int d = pr.shape[0]
    attempts = np.zeros(n, dtype=np.int64)
    first = np.zeros((n, d), dtype=np.int64)
    cdef long long[::1] a_ = attempts
    cdef long long[:, ::1] f_ = first
    cdef uint64_t sd = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t s
    cdef long long i, a
    cdef int q, ok
    cdef double u
    done_arr = np.zeros(max(d, 1), dtype=np.int8)
    cdef signed char[::1] done = done_arr
    with nogil:
        for i in range(n):
            s = stream_state(sd, <uint64_t>(start + i))
            for q in range(d):
                done[q] = 0
            a = 0
            while True:
                a += 1
                ok = 1
                for q in range(d):
                    u = next_uniform(&s)
                    if not done[q]:
                        f_[i, q] += 1
                    if u < pr[q]:
                        done[q] = 1
                    else:
                        ok = 0
                        break
                if ok:
                    break
            a_[i] = a
    return attempts, first


# -- search kernels ------------------------------------------------------------------

cdef inline long long isqrt64(long long x) nogil:
    cdef long long r
    if x <= 0:
        return 0
    r = <long long>sqrt(<double>x)
    while r * r > x:
        r -= 1
    while (r + 1) * (r + 1) <= x:
        r += 1
    return r


cdef inline int sde_reduce(long long A, long long B, int m) nogil:
    cdef long long t
    while m > 0 and (A & 1) == 0:
        if A == 0 and B == 0:
            return 0
        t = A
        A = B
        B = t // 2
        m -= 1
    return m


# the closed-form intersection squares values up to ~2^(2*log2(A)+1); keep A well inside int64
NORM_SOLVE_MAX = 1 << 29


def norm_solve(A, B):
    """Compiled twin of ``_pykernels.norm_solve``; falls back to Python ints for large A."""
    if A > NORM_SOLVE_MAX or abs(B) > NORM_SOLVE_MAX:
        from ._pykernels import norm_solve as py_norm_solve
        return py_norm_solve(A, B)
    return _norm_solve_c(A, B)


cdef object _norm_solve_c(long long A, long long B):
    cdef long long r, rr, w0, w2, s, R, al, be, disc, D, n1, n3, w1, w3, x, y, y2
    cdef int sg
    if A < 0:
        return None
    if A == 0:
        return (0, 0, 0, 0) if B == 0 else None
    if A * A < 2 * B * B:
        return None
    r = isqrt64(A)
    for w0 in range(-r, r + 1):
        rr = isqrt64(A - w0 * w0)
        for w2 in range(-rr, rr + 1):
            s = w0 * w0 + w2 * w2
            R = A - s
            al = w0 + w2
            be = w2 - w0
            if s == 0:
                if B == 0:
                    for x in range(isqrt64(A) + 1):
                        y2 = A - x * x
                        y = isqrt64(y2)
                        if y * y == y2:
                            return (0, x, 0, y)
                continue
            disc = 2 * s * R - B * B
            if disc < 0:
                continue
            D = isqrt64(disc)
            if D * D != disc:
                continue
            for sg in (1, -1):
                n3 = B * be + sg * al * D
                n1 = B * al - sg * be * D
                if n3 % (2 * s) != 0 or n1 % (2 * s) != 0:
                    continue
                w1 = n1 // (2 * s)
                w3 = n3 // (2 * s)
                if w1 * w1 + w3 * w3 == R and w1 * al + w3 * be == B:
                    return (w0, w1, w2, w3)
    return None


cdef long long lower_index(const double* v, long long n, double x) nogil:
    cdef long long lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if v[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef long long upper_index(const double* v, long long n, double x) nogil:
    cdef long long lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if v[mid] <= x:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef long long _join(const double* vl, const long long* x0, const long long* x1, const double* conj,
                     long long n, double lo, double hi, int K, int m, int include_lo,
                     long long i0, long long i1, double* ot, long long* oq, long long cap_out) nogil:
    cdef int kappa = K - 1
    cdef double cap = (<double>(1LL << K)) * (1.0 + 1e-12)
    cdef long long i, j, j0, j1, cnt = 0
    cdef double pv, t, pc
    cdef long long p0, p1, q0, q1, a, b, c, d, A, B
    for i in range(i0, i1):
        pv = vl[i]
        if pv > hi:
            break
        j0 = lower_index(vl, n, lo - pv) if lo - pv > 0 else 0
        j1 = upper_index(vl, n, hi - pv)
        p0 = x0[i]
        p1 = x1[i]
        pc = conj[i]
        for j in range(j0, j1):
            t = pv + vl[j]
            if t > hi or t < lo or (t == lo and not include_lo):
                continue
            q0 = x0[j]
            if ((p0 - q0) & 1) != 0:
                continue
            if pc + conj[j] > cap:
                continue
            q1 = x1[j]
            a = p1
            c = q1
            b = (p0 + q0) // 2
            d = (q0 - p0) // 2
            A = a * a + b * b + c * c + d * d
            if A == 0:
                continue
            B = a * b + b * c + c * d - d * a
            if sde_reduce(A, B, 2 * kappa) != m:
                continue
            if cnt < cap_out:
                ot[cnt] = t
                oq[6 * cnt] = a
                oq[6 * cnt + 1] = b
                oq[6 * cnt + 2] = c
                oq[6 * cnt + 3] = d
                oq[6 * cnt + 4] = A
                oq[6 * cnt + 5] = B
            cnt += 1
    return cnt


def band_join(vals, x0, x1, conj, double lo, double hi, int K, int m, bint include_lo,
              long long i0, long long i1):
    cdef double[::1] v = np.ascontiguousarray(vals, dtype=np.float64)
    cdef long long[::1] a0 = np.ascontiguousarray(x0, dtype=np.int64)
    cdef long long[::1] a1 = np.ascontiguousarray(x1, dtype=np.int64)
    cdef double[::1] cj = np.ascontiguousarray(conj, dtype=np.float64)
    cdef long long n = v.shape[0]
    if n == 0 or i1 <= i0:
        return np.zeros(0), np.zeros((0, 6), dtype=np.int64)
    cdef long long cnt
    cdef double dummy_t = 0
    cdef long long dummy_q[6]
    with nogil:
        cnt = _join(&v[0], &a0[0], &a1[0], &cj[0], n, lo, hi, K, m, include_lo, i0, i1,
                    &dummy_t, dummy_q, 0)
    t_arr = np.zeros(cnt, dtype=np.float64)
    q_arr = np.zeros((cnt, 6), dtype=np.int64)
    if cnt == 0:
        return t_arr, q_arr
    cdef double[::1] ot = t_arr
    cdef long long[:, ::1] oq = q_arr
    with nogil:
        _join(&v[0], &a0[0], &a1[0], &cj[0], n, lo, hi, K, m, include_lo, i0, i1,
              &ot[0], &oq[0, 0], cnt)
    return t_arr, q_arr
