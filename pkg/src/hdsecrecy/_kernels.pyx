# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.  Semantics mirror ``_kernels_py`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()

cdef enum:
    SILENCE = 0
    CLS_A = 1
    CLS_B = 2
    AORB = 3
    ERASE = 4


cdef int _clip(double* xs, double* ys, int n, double a, double b, double c,
               double* ox, double* oy) noexcept nogil:
    # keep the part of the polygon with a*x + b*y + c >= 0
    cdef int i, m = 0
    cdef double px, py, qx, qy, fp, fq, t
    if n == 0:
        return 0
    px = xs[n - 1]
    py = ys[n - 1]
    fp = a * px + b * py + c
    for i in range(n):
        qx = xs[i]
        qy = ys[i]
        fq = a * qx + b * qy + c
        if fq >= 0.0:
            if fp < 0.0:
                t = fp / (fp - fq)
                ox[m] = px + t * (qx - px)
                oy[m] = py + t * (qy - py)
                m += 1
            ox[m] = qx
            oy[m] = qy
            m += 1
        elif fp >= 0.0:
            t = fp / (fp - fq)
            ox[m] = px + t * (qx - px)
            oy[m] = py + t * (qy - py)
            m += 1
        px = qx
        py = qy
        fp = fq
    return m


cdef double _area(double* xs, double* ys, int n) noexcept nogil:
    cdef int i, j
    cdef double s = 0.0
    for i in range(n):
        j = i + 1
        if j == n:
            j = 0
        s += xs[i] * ys[j] - xs[j] * ys[i]
    return 0.5 * s if s > 0 else -0.5 * s


cdef double _interval(double lo, double hi, double a, double b) noexcept nogil:
    if a > lo:
        lo = a
    if b < hi:
        hi = b
    return hi - lo if hi > lo else 0.0


cdef double _pair_mass_one(double x1, double x2, double y1, double y2,
                           double lo, double hi, int order) noexcept nogil:
    cdef double w = x2 - x1, h = y2 - y1
    cdef double bx[16]
    cdef double by[16]
    cdef double cx[16]
    cdef double cy[16]
    cdef int n, i
    cdef double a, b, m
    if w > 0.0 and h > 0.0:
        # local coordinates relative to (x1, y1)
        bx[0] = 0.0; by[0] = 0.0
        bx[1] = w;   by[1] = 0.0
        bx[2] = w;   by[2] = h
        bx[3] = 0.0; by[3] = h
        n = 4
        if lo > x1 + y1:
            n = _clip(bx, by, n, 1.0, 1.0, x1 + y1 - lo, cx, cy)
            for i in range(n):
                bx[i] = cx[i]; by[i] = cy[i]
        if hi < x2 + y2:
            n = _clip(bx, by, n, -1.0, -1.0, hi - x1 - y1, cx, cy)
            for i in range(n):
                bx[i] = cx[i]; by[i] = cy[i]
        if order > 0:
            n = _clip(bx, by, n, -1.0, 1.0, y1 - x1, cx, cy)
            for i in range(n):
                bx[i] = cx[i]; by[i] = cy[i]
        elif order < 0:
            n = _clip(bx, by, n, 1.0, -1.0, x1 - y1, cx, cy)
            for i in range(n):
                bx[i] = cx[i]; by[i] = cy[i]
        if n < 3:
            return 0.0
        m = _area(bx, by, n) / (w * h)
    elif w > 0.0:
        a = lo - y1
        b = hi - y1
        if order > 0 and y1 < b:
            b = y1
        elif order < 0 and y1 > a:
            a = y1
        m = _interval(x1, x2, a, b) / w
    elif h > 0.0:
        a = lo - x1
        b = hi - x1
        if order > 0 and x1 > a:
            a = x1
        elif order < 0 and x1 < b:
            b = x1
        m = _interval(y1, y2, a, b) / h
    else:
        if not (lo < x1 + y1 < hi):
            return 0.0
        if order > 0:
            return 1.0 if y1 > x1 else 0.0
        if order < 0:
            return 1.0 if x1 > y1 else 0.0
        return 1.0
    if m < 0.0:
        return 0.0
    if m > 1.0:
        return 1.0
    return m


def pair_mass(const double[::1] x1, const double[::1] x2, const double[::1] y1, const double[::1] y2,
              const double[::1] lo, const double[::1] hi, const signed char[::1] order):
    cdef Py_ssize_t i, n = x1.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _pair_mass_one(x1[i], x2[i], y1[i], y2[i], lo[i], hi[i], order[i])
    return out


cdef inline int _lookup(double v, double* edges, Py_ssize_t k,
                        signed char* open_codes, signed char* point_codes) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = k, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if edges[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    if lo < k and edges[lo] == v:
        return point_codes[lo]
    return open_codes[lo]


def tally_frame(const unsigned char[::1] act_a, const unsigned char[::1] act_b,
                const double[::1] pa, const double[::1] pb,
                const signed char[::1] s_a, const signed char[::1] s_b,
                const unsigned char[::1] coin_amb, const unsigned char[::1] coin_tie,
                const double[::1] noise_r, const double[::1] noise_i,
                bint coherent, double cos_phase, double silence_floor,
                const double[::1] edges, const signed char[::1] open_codes,
                const signed char[::1] point_codes, bint oracle):
    cdef Py_ssize_t i, n = act_a.shape[0], k = edges.shape[0]
    cdef bint noisy = noise_r.shape[0] > 0
    counts_arr = np.zeros((4, 5), dtype=np.int64)
    amb_arr = np.zeros(4, dtype=np.int64)
    err_arr = np.zeros(2, dtype=np.int64)
    cdef long long[:, ::1] counts = counts_arr
    cdef long long[::1] amb = amb_arr
    cdef long long[::1] err = err_arr
    cdef int ev, code, win
    cdef double s, amp, u, v
    cdef double* e_ptr = &edges[0] if k > 0 else NULL
    cdef signed char* oc_ptr = &open_codes[0]
    cdef signed char* pc_ptr = &point_codes[0] if k > 0 else NULL
    with nogil:
        for i in range(n):
            ev = act_a[i] + 2 * act_b[i]
            if ev == 0:
                s = 0.0
            elif ev == 1:
                s = pa[i]
            elif ev == 2:
                s = pb[i]
            elif coherent:
                s = pa[i] + pb[i] + 2.0 * (s_a[i] * s_b[i]) * sqrt(pa[i] * pb[i]) * cos_phase
                if s < 0.0:
                    s = 0.0
            else:
                s = pa[i] + pb[i]
            if noisy:
                amp = sqrt(s)
                u = amp + noise_r[i]
                v = noise_i[i]
                s = u * u + v * v
            if s <= silence_floor:
                code = SILENCE
            elif oracle:
                if ev == 1:
                    code = CLS_A
                elif ev == 2:
                    code = CLS_B
                elif ev == 3:
                    code = ERASE
                else:
                    code = SILENCE
            else:
                code = _lookup(s, e_ptr, k, oc_ptr, pc_ptr)
                if code == AORB:
                    amb[ev] += 1
                    code = CLS_B if coin_amb[i] else CLS_A
            counts[ev, code] += 1
            if ev == 3 and (code == CLS_A or code == CLS_B):
                if pa[i] > pb[i]:
                    win = s_a[i]
                elif pb[i] > pa[i]:
                    win = s_b[i]
                else:
                    win = s_b[i] if coin_tie[i] else s_a[i]
                if code == CLS_A and win != s_a[i]:
                    err[0] += 1
                elif code == CLS_B and win != s_b[i]:
                    err[1] += 1
    # column AORB is always zero after coin resolution; drop it
    return counts_arr[:, [0, 1, 2, 4]].copy(), amb_arr, err_arr
