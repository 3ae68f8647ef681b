"""Pure-Python kernels. Same algorithms and RNG stream as ``_kernels.pyx``.

Every function here must produce bit-identical output to its compiled twin; the
test-suite checks this whenever the extension is importable.
"""
from __future__ import annotations

import math
from bisect import bisect_left, bisect_right

import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_INV53 = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def stream_state(seed: int, trial: int) -> int:
    return mix64((seed & MASK) ^ mix64(((trial + 1) * GOLDEN) & MASK))


class _Stream:
    __slots__ = ("s",)

    def __init__(self, seed: int, trial: int) -> None:
        self.s = stream_state(seed, trial)

    def uniform(self) -> float:
        self.s = (self.s + GOLDEN) & MASK
        return (mix64(self.s) >> 11) * _INV53


def uniforms(seed: int, trial: int, n: int) -> np.ndarray:
    st = _Stream(seed, trial)
    return np.array([st.uniform() for _ in range(n)])


# -- branching-process sampler ---------------------------------------------------------

def _run(node, kind, leaf_t, toffoli, prob, cstart, ccount, children, st, out_attempts):
    if kind[node] == 0:
        t = int(leaf_t[node])
        return t, t
    total = 0
    online = 0
    p = prob[node]
    c0 = cstart[node]
    c1 = c0 + ccount[node]
    tof = int(toffoli[node])
    attempts = 0
    while True:
        attempts += 1
        total += tof
        online += tof
        for ci in range(c0, c1):
            ch = children[ci]
            # child prepared on its ancilla, then un-computed after the controlled -iX
            t_prep, _ = _run(ch, kind, leaf_t, toffoli, prob, cstart, ccount, children, st, None)
            t_undo, o_undo = _run(ch, kind, leaf_t, toffoli, prob, cstart, ccount, children, st, None)
            total += t_prep + t_undo
            online += o_undo
        if st.uniform() < p:
            break
    if out_attempts is not None:
        out_attempts.append(attempts)
    return total, online


def sample_plan(kind, leaf_t, toffoli, prob, cstart, ccount, children, root, seed, start, n):
    """T-count samples for trials start..start+n-1.

    Returns (total, online, root_attempts) as int64 arrays.
    """
    kind = [int(x) for x in kind]
    leaf_t = [int(x) for x in leaf_t]
    toffoli = [int(x) for x in toffoli]
    prob = [float(x) for x in prob]
    cstart = [int(x) for x in cstart]
    ccount = [int(x) for x in ccount]
    children = [int(x) for x in children]
    total = np.zeros(n, dtype=np.int64)
    online = np.zeros(n, dtype=np.int64)
    attempts = np.zeros(n, dtype=np.int64)
    for i in range(n):
        st = _Stream(seed, start + i)
        box: list[int] = []
        t, o = _run(root, kind, leaf_t, toffoli, prob, cstart, ccount, children, st, box)
        total[i] = t
        online[i] = o
        attempts[i] = box[0] if box else 1
    return total, online, attempts


def sample_chain(probs, seed, start, n):
    """Offline-ancilla attempts: each online attempt runs every level's measurement.

    Returns (attempts[n], first_success[n, d]) where first_success[:, q] counts the
    level-q measurements performed up to and including its first success.
    """
    probs = [float(p) for p in probs]
    d = len(probs)
    attempts = np.zeros(n, dtype=np.int64)
    first = np.zeros((n, d), dtype=np.int64)
    for i in range(n):
        st = _Stream(seed, start + i)
        seen = [0] * d
        done = [False] * d
        a = 0
        while True:
            a += 1
            ok = True
            for q in range(d):
                u = st.uniform()
                if not done[q]:
                    seen[q] += 1
                if u < probs[q]:
                    done[q] = True
                else:
                    ok = False
                    break
            if ok:
                break
        attempts[i] = a
        first[i, :] = seen
    return attempts, first


# -- search kernels --------------------------------------------------------------------

def sde_reduce(A: int, B: int, m: int) -> int:
    while m > 0 and A % 2 == 0:
        if A == 0 and B == 0:
            return 0
        A, B, m = B, A // 2, m - 1
    return m


def two_squares(n: int) -> tuple[int, int] | None:
    r = math.isqrt(n)
    for x in range(r + 1):
        y2 = n - x * x
        y = math.isqrt(y2)
        if y * y == y2:
            return x, y
    return None


def norm_solve(A: int, B: int) -> tuple[int, int, int, int] | None:
    """w in Z[omega] with |w|^2 = A + B*sqrt2, or None.

    |w|^2 = sum w_j^2 + sqrt2 (w0 w1 + w1 w2 + w2 w3 - w0 w3).  For each (w0, w2)
    the remaining pair lies on the circle w1^2 + w3^2 = A - w0^2 - w2^2 and the
    line (w0+w2) w1 + (w2-w0) w3 = B; intersect them in closed form.
    """
    if A < 0:
        return None
    if A == 0:
        return (0, 0, 0, 0) if B == 0 else None
    # both embeddings must be non-negative
    if B < 0 and A * A < 2 * B * B:
        return None
    if B > 0 and A * A < 2 * B * B:
        return None
    r = math.isqrt(A)
    for w0 in range(-r, r + 1):
        rr = math.isqrt(A - w0 * w0)
        for w2 in range(-rr, rr + 1):
            s = w0 * w0 + w2 * w2
            R = A - s
            al = w0 + w2
            be = w2 - w0
            if s == 0:
                if B == 0:
                    p = two_squares(A)
                    if p is not None:
                        return (0, p[0], 0, p[1])
                continue
            disc = 2 * s * R - B * B
            if disc < 0:
                continue
            D = math.isqrt(disc)
            if D * D != disc:
                continue
            for sg in (1, -1):
                n3 = B * be + sg * al * D
                n1 = B * al - sg * be * D
                if n3 % (2 * s) or n1 % (2 * s):
                    continue
                w1 = n1 // (2 * s)
                w3 = n3 // (2 * s)
                if w1 * w1 + w3 * w3 == R and w1 * al + w3 * be == B:
                    return (w0, w1, w2, w3)
    return None


def band_join(vals, x0, x1, conj, lo, hi, K, m, include_lo, i0, i1):
    """Pairs (p, q) from a sorted strip with lo < |p|^2+|q|^2 <= hi (lo inclusive if asked).

    p ranges over strip indices i0..i1-1.  Keeps pairs with p0 = q0 (mod 2),
    conjugate bound |p*|^2+|q*|^2 <= 2^K, non-zero value and sde(|u|^2) == m,
    where u = (p + i q)/sqrt2^K.  Returns arrays (t, a, b, c, d, A, B).
    """
    kappa = K - 1
    cap = float(1 << K) * (1.0 + 1e-12)
    vl = list(vals)
    out_t, out_q = [], []
    for i in range(i0, i1):
        pv = vl[i]
        if pv > hi:
            break
        j0 = bisect_left(vl, lo - pv) if lo - pv > 0 else 0
        j1 = bisect_right(vl, hi - pv)
        p0 = int(x0[i])
        p1 = int(x1[i])
        pc = conj[i]
        for j in range(j0, j1):
            t = pv + vl[j]
            if t > hi or t < lo or (t == lo and not include_lo):
                continue
            q0 = int(x0[j])
            if (p0 - q0) & 1:
                continue
            if pc + conj[j] > cap:
                continue
            q1 = int(x1[j])
            a, c = p1, q1
            b, d = (p0 + q0) // 2, (q0 - p0) // 2
            A = a * a + b * b + c * c + d * d
            if A == 0:
                continue
            B = a * b + b * c + c * d - d * a
            if sde_reduce(A, B, 2 * kappa) != m:
                continue
            out_t.append(t)
            out_q.append((a, b, c, d, A, B))
    t_arr = np.array(out_t, dtype=np.float64)
    q_arr = np.array(out_q, dtype=np.int64).reshape(-1, 6)
    return t_arr, q_arr
