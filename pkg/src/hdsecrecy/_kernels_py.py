"""Pure-Python twin of the compiled kernels.

Every function here returns bit-identical results to its counterpart in
``_kernels.pyx``; the test suite checks this whenever both are importable.
"""

import numpy as np

SILENCE, CLS_A, CLS_B, AORB, ERASE = 0, 1, 2, 3, 4


def _clip(poly, a, b, c):
    if not poly:
        return []
    out = []
    px, py = poly[-1]
    fp = a * px + b * py + c
    for qx, qy in poly:
        fq = a * qx + b * qy + c
        if fq >= 0.0:
            if fp < 0.0:
                t = fp / (fp - fq)
                out.append((px + t * (qx - px), py + t * (qy - py)))
            out.append((qx, qy))
        elif fp >= 0.0:
            t = fp / (fp - fq)
            out.append((px + t * (qx - px), py + t * (qy - py)))
        px, py, fp = qx, qy, fq
    return out


def _area(poly):
    s = 0.0
    n = len(poly)
    for i in range(n):
        j = i + 1
        if j == n:
            j = 0
        s += poly[i][0] * poly[j][1] - poly[j][0] * poly[i][1]
    return 0.5 * s if s > 0 else -0.5 * s


def _interval(lo, hi, a, b):
    if a > lo:
        lo = a
    if b < hi:
        hi = b
    return hi - lo if hi > lo else 0.0


def pair_mass_one(x1, x2, y1, y2, lo, hi, order):
    """P(lo < X+Y < hi [and ordering]) for independent uniforms X, Y.

    ``order`` > 0 additionally requires Y > X, < 0 requires X > Y.  A zero
    width interval is a point mass.
    """
    w = x2 - x1
    h = y2 - y1
    if w > 0.0 and h > 0.0:
        poly = [(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)]
        if lo > x1 + y1:
            poly = _clip(poly, 1.0, 1.0, x1 + y1 - lo)
        if hi < x2 + y2:
            poly = _clip(poly, -1.0, -1.0, hi - x1 - y1)
        if order > 0:
            poly = _clip(poly, -1.0, 1.0, y1 - x1)
        elif order < 0:
            poly = _clip(poly, 1.0, -1.0, x1 - y1)
        if len(poly) < 3:
            return 0.0
        m = _area(poly) / (w * h)
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


def pair_mass(x1, x2, y1, y2, lo, hi, order):
    out = np.empty(len(x1), dtype=np.float64)
    for i in range(len(x1)):
        out[i] = pair_mass_one(float(x1[i]), float(x2[i]), float(y1[i]), float(y2[i]),
                               float(lo[i]), float(hi[i]), int(order[i]))
    return out


def classify_frame(act_a, act_b, pa, pb, s_a, s_b, coin_amb, coin_tie,
                   noise_r, noise_i, coherent, cos_phase, silence_floor,
                   edges, open_codes, point_codes, oracle):
    """Per-symbol events, observations, outcomes and capture-decode errors.

    Returns ``(event, obs, code, ambiguous, err)`` arrays where ``code`` is
    already coin-resolved and ``err`` flags a wrong decoded symbol for
    concurrent intervals attributed to A or B.
    """
    act_a = np.asarray(act_a, dtype=np.int64)
    act_b = np.asarray(act_b, dtype=np.int64)
    ev = act_a + 2 * act_b
    pa = np.asarray(pa, dtype=np.float64)
    pb = np.asarray(pb, dtype=np.float64)
    s_a = np.asarray(s_a, dtype=np.int64)
    s_b = np.asarray(s_b, dtype=np.int64)
    if coherent:
        both = pa + pb + 2.0 * (s_a * s_b).astype(np.float64) * np.sqrt(pa * pb) * cos_phase
        both = np.where(both < 0.0, 0.0, both)
    else:
        both = pa + pb
    s = np.select([ev == 1, ev == 2, ev == 3], [pa, pb, both], default=0.0)
    if len(noise_r) > 0:
        u = np.sqrt(s) + noise_r
        s = u * u + noise_i * noise_i
    edges = np.asarray(edges, dtype=np.float64)
    open_codes = np.asarray(open_codes, dtype=np.int64)
    point_codes = np.asarray(point_codes, dtype=np.int64)
    k = len(edges)
    if oracle:
        code = np.choose(ev, [SILENCE, CLS_A, CLS_B, ERASE])
    else:
        j = np.searchsorted(edges, s, side="left")
        on_edge = np.zeros(len(s), dtype=bool)
        if k:
            jj = np.minimum(j, k - 1)
            on_edge = (j < k) & (edges[jj] == s)
            code = np.where(on_edge, point_codes[jj], open_codes[j])
        else:
            code = open_codes[j]
    code = np.where(s <= silence_floor, SILENCE, code)
    ambiguous = code == AORB
    code = np.where(ambiguous, np.where(np.asarray(coin_amb) != 0, CLS_B, CLS_A), code)
    win = np.where(pa > pb, s_a, np.where(pb > pa, s_b,
                                          np.where(np.asarray(coin_tie) != 0, s_b, s_a)))
    err = (ev == 3) & (((code == CLS_A) & (win != s_a)) | ((code == CLS_B) & (win != s_b)))
    return ev, s, code, ambiguous, err


def tally_frame(act_a, act_b, pa, pb, s_a, s_b, coin_amb, coin_tie,
                noise_r, noise_i, coherent, cos_phase, silence_floor,
                edges, open_codes, point_codes, oracle):
    ev, _, code, ambiguous, err = classify_frame(
        act_a, act_b, pa, pb, s_a, s_b, coin_amb, coin_tie, noise_r, noise_i,
        coherent, cos_phase, silence_floor, edges, open_codes, point_codes, oracle)
    col = np.array([0, 1, 2, 3, 3])[code]
    counts = np.zeros((4, 4), dtype=np.int64)
    np.add.at(counts, (ev, col), 1)
    amb = np.bincount(ev[ambiguous], minlength=4).astype(np.int64)
    err_counts = np.array([np.count_nonzero(err & (code == CLS_A)),
                           np.count_nonzero(err & (code == CLS_B))], dtype=np.int64)
    return counts, amb, err_counts

