# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled split-scan kernels.

Bit-identical twin of _scan_np.py; see that module's docstring for the
shared accumulation convention. Any change here must be mirrored there
(the test suite compares both backends on random data).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, NAN, log


cdef inline Py_ssize_t _bin_index(double v, double f_min, double w, Py_ssize_t bins) nogil:
    # Rightmost j in [0, bins-1] with f_min + j*w <= v, computed with the
    # same comparisons a searchsorted over the threshold list would use.
    cdef Py_ssize_t j = <Py_ssize_t>((v - f_min) / w)
    if j < 0:
        j = 0
    if j > bins - 1:
        j = bins - 1
    while j > 0 and v < f_min + j * w:
        j -= 1
    while j < bins - 1 and v >= f_min + (j + 1) * w:
        j += 1
    return j


cdef void _scan_entropy_core(const double[::1] values, const long long[::1] labels,
                             Py_ssize_t n_classes, Py_ssize_t bins,
                             double f_min, double f_max,
                             long long[:, ::1] counts, long long[::1] left,
                             long long[::1] total_c, double* out) nogil:
    cdef Py_ssize_t total = values.shape[0]
    cdef Py_ssize_t l, b, c, j
    cdef long long n_l, n_r, cnt
    cdef double w, p, s_l, s_r, loss, best_loss
    cdef Py_ssize_t best_b = -1
    cdef long long best_nl = 0, best_nr = 0

    out[0] = INFINITY
    out[1] = NAN
    out[2] = 0.0
    out[3] = 0.0
    if not f_max > f_min:
        return
    w = (f_max - f_min) / bins

    for b in range(bins):
        for c in range(n_classes):
            counts[b, c] = 0
    for l in range(total):
        j = _bin_index(values[l], f_min, w, bins)
        counts[j, labels[l]] += 1

    for c in range(n_classes):
        left[c] = 0
        total_c[c] = 0
    for b in range(bins):
        for c in range(n_classes):
            total_c[c] += counts[b, c]

    best_loss = INFINITY
    n_l = 0
    for b in range(1, bins):
        for c in range(n_classes):
            left[c] += counts[b - 1, c]
            n_l += counts[b - 1, c]
        n_r = total - n_l
        if n_l <= 0 or n_r <= 0:
            continue
        s_l = 0.0
        s_r = 0.0
        for c in range(n_classes):
            cnt = left[c]
            if cnt > 0:
                p = (<double>cnt) / (<double>n_l)
                s_l += p * log(p)
        # right counts by integer subtraction (lossless)
        for c in range(n_classes):
            cnt = total_c[c] - left[c]
            if cnt > 0:
                p = (<double>cnt) / (<double>n_r)
                s_r += p * log(p)
        loss = ((<double>n_l) / (<double>total)) * (-s_l) + ((<double>n_r) / (<double>total)) * (-s_r)
        if loss < best_loss:
            best_loss = loss
            best_b = b
            best_nl = n_l
            best_nr = n_r
    if best_b >= 0:
        out[0] = best_loss
        out[1] = f_min + best_b * w
        out[2] = <double>best_nl
        out[3] = <double>best_nr


cdef void _scan_mse_core(const double[::1] values, const double[::1] y,
                         Py_ssize_t bins, double f_min, double f_max,
                         long long[::1] n_bin, double[::1] s_bin, double[::1] q_bin,
                         double[::1] s_suf, double[::1] q_suf,
                         double* out) nogil:
    cdef Py_ssize_t total = values.shape[0]
    cdef Py_ssize_t l, b, j
    cdef long long n_l, n_r
    cdef double w, s_l, q_l, sse, m_l, m_r, loss, best_loss
    cdef Py_ssize_t best_b = -1
    cdef long long best_nl = 0, best_nr = 0

    out[0] = INFINITY
    out[1] = NAN
    out[2] = 0.0
    out[3] = 0.0
    if not f_max > f_min:
        return
    w = (f_max - f_min) / bins

    for b in range(bins):
        n_bin[b] = 0
        s_bin[b] = 0.0
        q_bin[b] = 0.0
    for l in range(total):
        j = _bin_index(values[l], f_min, w, bins)
        n_bin[j] += 1
        s_bin[j] += y[l]
        q_bin[j] += y[l] * y[l]

    # suffix sums, accumulated in descending bin order
    s_suf[bins - 1] = s_bin[bins - 1]
    q_suf[bins - 1] = q_bin[bins - 1]
    for b in range(bins - 2, -1, -1):
        s_suf[b] = s_suf[b + 1] + s_bin[b]
        q_suf[b] = q_suf[b + 1] + q_bin[b]

    best_loss = INFINITY
    n_l = 0
    s_l = 0.0
    q_l = 0.0
    for b in range(1, bins):
        n_l += n_bin[b - 1]
        s_l += s_bin[b - 1]
        q_l += q_bin[b - 1]
        n_r = total - n_l
        if n_l <= 0 or n_r <= 0:
            continue
        sse = q_l - (s_l * s_l) / (<double>n_l)
        if sse < 0.0:
            sse = 0.0
        m_l = sse / (<double>n_l)
        sse = q_suf[b] - (s_suf[b] * s_suf[b]) / (<double>n_r)
        if sse < 0.0:
            sse = 0.0
        m_r = sse / (<double>n_r)
        loss = ((<double>n_l) / (<double>total)) * m_l + ((<double>n_r) / (<double>total)) * m_r
        if loss < best_loss:
            best_loss = loss
            best_b = b
            best_nl = n_l
            best_nr = n_r
    if best_b >= 0:
        out[0] = best_loss
        out[1] = f_min + best_b * w
        out[2] = <double>best_nl
        out[3] = <double>best_nr


cdef void _scan_gain_core(const double[::1] values, const double[::1] g,
                          const double[::1] h, double lam,
                          Py_ssize_t bins, double f_min, double f_max,
                          long long[::1] n_bin, double[::1] g_bin, double[::1] h_bin,
                          double[::1] g_suf, double[::1] h_suf,
                          double* out) nogil:
    cdef Py_ssize_t total = values.shape[0]
    cdef Py_ssize_t l, b, j
    cdef long long n_l, n_r
    cdef double w, g_l, h_l, denom, score_l, score_r, loss, best_loss
    cdef Py_ssize_t best_b = -1
    cdef long long best_nl = 0, best_nr = 0

    out[0] = INFINITY
    out[1] = NAN
    out[2] = 0.0
    out[3] = 0.0
    if not f_max > f_min:
        return
    w = (f_max - f_min) / bins

    for b in range(bins):
        n_bin[b] = 0
        g_bin[b] = 0.0
        h_bin[b] = 0.0
    for l in range(total):
        j = _bin_index(values[l], f_min, w, bins)
        n_bin[j] += 1
        g_bin[j] += g[l]
        h_bin[j] += h[l]

    g_suf[bins - 1] = g_bin[bins - 1]
    h_suf[bins - 1] = h_bin[bins - 1]
    for b in range(bins - 2, -1, -1):
        g_suf[b] = g_suf[b + 1] + g_bin[b]
        h_suf[b] = h_suf[b + 1] + h_bin[b]

    best_loss = INFINITY
    n_l = 0
    g_l = 0.0
    h_l = 0.0
    for b in range(1, bins):
        n_l += n_bin[b - 1]
        g_l += g_bin[b - 1]
        h_l += h_bin[b - 1]
        n_r = total - n_l
        if n_l <= 0 or n_r <= 0:
            continue
        denom = h_l + lam
        score_l = (g_l * g_l) / denom if denom > 0.0 else 0.0
        denom = h_suf[b] + lam
        score_r = (g_suf[b] * g_suf[b]) / denom if denom > 0.0 else 0.0
        loss = -(score_l + score_r)
        if loss < best_loss:
            best_loss = loss
            best_b = b
            best_nl = n_l
            best_nr = n_r
    if best_b >= 0:
        out[0] = best_loss
        out[1] = f_min + best_b * w
        out[2] = <double>best_nl
        out[3] = <double>best_nr


cdef inline void _minmax(const double[::1] row, double* lo, double* hi) nogil:
    cdef Py_ssize_t l
    cdef double v
    lo[0] = row[0]
    hi[0] = row[0]
    for l in range(1, row.shape[0]):
        v = row[l]
        if v < lo[0]:
            lo[0] = v
        if v > hi[0]:
            hi[0] = v


def scan_entropy(const double[::1] values, const long long[::1] labels,
                 int n_classes, int bins, double f_min, double f_max):
    cdef double out[4]
    counts = np.empty((bins, n_classes), dtype=np.int64)
    left = np.empty(n_classes, dtype=np.int64)
    total_c = np.empty(n_classes, dtype=np.int64)
    cdef long long[:, ::1] counts_v = counts
    cdef long long[::1] left_v = left
    cdef long long[::1] total_v = total_c
    with nogil:
        _scan_entropy_core(values, labels, n_classes, bins, f_min, f_max,
                           counts_v, left_v, total_v, out)
    return out[0], out[1], int(out[2]), int(out[3])


def scan_mse(const double[::1] values, const double[::1] y,
             int bins, double f_min, double f_max):
    cdef double out[4]
    n_bin = np.empty(bins, dtype=np.int64)
    s_bin = np.empty(bins)
    q_bin = np.empty(bins)
    s_suf = np.empty(bins)
    q_suf = np.empty(bins)
    cdef long long[::1] n_v = n_bin
    cdef double[::1] s_v = s_bin, q_v = q_bin, ss_v = s_suf, qs_v = q_suf
    with nogil:
        _scan_mse_core(values, y, bins, f_min, f_max, n_v, s_v, q_v, ss_v, qs_v, out)
    return out[0], out[1], int(out[2]), int(out[3])


def scan_gain(const double[::1] values, const double[::1] g, const double[::1] h,
              double lam, int bins, double f_min, double f_max):
    cdef double out[4]
    n_bin = np.empty(bins, dtype=np.int64)
    g_bin = np.empty(bins)
    h_bin = np.empty(bins)
    g_suf = np.empty(bins)
    h_suf = np.empty(bins)
    cdef long long[::1] n_v = n_bin
    cdef double[::1] g_v = g_bin, h_v = h_bin, gs_v = g_suf, hs_v = h_suf
    with nogil:
        _scan_gain_core(values, g, h, lam, bins, f_min, f_max,
                        n_v, g_v, h_v, gs_v, hs_v, out)
    return out[0], out[1], int(out[2]), int(out[3])


def scan_entropy_many(const double[:, ::1] columns, const long long[::1] labels,
                      int n_classes, int bins):
    cdef Py_ssize_t n = columns.shape[0]
    loss = np.empty(n)
    thr = np.empty(n)
    n_left = np.empty(n, dtype=np.int64)
    n_right = np.empty(n, dtype=np.int64)
    counts = np.empty((bins, n_classes), dtype=np.int64)
    left = np.empty(n_classes, dtype=np.int64)
    total_c = np.empty(n_classes, dtype=np.int64)
    cdef double[::1] loss_v = loss, thr_v = thr
    cdef long long[::1] nl_v = n_left, nr_v = n_right
    cdef long long[:, ::1] counts_v = counts
    cdef long long[::1] left_v = left
    cdef long long[::1] total_v = total_c
    cdef double out[4]
    cdef double lo, hi
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            _minmax(columns[i], &lo, &hi)
            _scan_entropy_core(columns[i], labels, n_classes, bins, lo, hi,
                               counts_v, left_v, total_v, out)
            loss_v[i] = out[0]
            thr_v[i] = out[1]
            nl_v[i] = <long long>out[2]
            nr_v[i] = <long long>out[3]
    return loss, thr, n_left, n_right


def scan_mse_many(const double[:, ::1] columns, const double[::1] y, int bins):
    cdef Py_ssize_t n = columns.shape[0]
    loss = np.empty(n)
    thr = np.empty(n)
    n_left = np.empty(n, dtype=np.int64)
    n_right = np.empty(n, dtype=np.int64)
    n_bin = np.empty(bins, dtype=np.int64)
    s_bin = np.empty(bins)
    q_bin = np.empty(bins)
    s_suf = np.empty(bins)
    q_suf = np.empty(bins)
    cdef double[::1] loss_v = loss, thr_v = thr
    cdef long long[::1] nl_v = n_left, nr_v = n_right
    cdef long long[::1] n_v = n_bin
    cdef double[::1] s_v = s_bin, q_v = q_bin, ss_v = s_suf, qs_v = q_suf
    cdef double out[4]
    cdef double lo, hi
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            _minmax(columns[i], &lo, &hi)
            _scan_mse_core(columns[i], y, bins, lo, hi, n_v, s_v, q_v, ss_v, qs_v, out)
            loss_v[i] = out[0]
            thr_v[i] = out[1]
            nl_v[i] = <long long>out[2]
            nr_v[i] = <long long>out[3]
    return loss, thr, n_left, n_right


def scan_gain_many(const double[:, ::1] columns, const double[::1] g,
                   const double[::1] h, double lam, int bins):
    cdef Py_ssize_t n = columns.shape[0]
    loss = np.empty(n)
    thr = np.empty(n)
    n_left = np.empty(n, dtype=np.int64)
    n_right = np.empty(n, dtype=np.int64)
    n_bin = np.empty(bins, dtype=np.int64)
    g_bin = np.empty(bins)
    h_bin = np.empty(bins)
    g_suf = np.empty(bins)
    h_suf = np.empty(bins)
    cdef double[::1] loss_v = loss, thr_v = thr
    cdef long long[::1] nl_v = n_left, nr_v = n_right
    cdef long long[::1] n_v = n_bin
    cdef double[::1] g_v = g_bin, h_v = h_bin, gs_v = g_suf, hs_v = h_suf
    cdef double out[4]
    cdef double lo, hi
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            _minmax(columns[i], &lo, &hi)
            _scan_gain_core(columns[i], g, h, lam, bins, lo, hi,
                            n_v, g_v, h_v, gs_v, hs_v, out)
            loss_v[i] = out[0]
            thr_v[i] = out[1]
            nl_v[i] = <long long>out[2]
            nr_v[i] = <long long>out[3]
    return loss, thr, n_left, n_right
