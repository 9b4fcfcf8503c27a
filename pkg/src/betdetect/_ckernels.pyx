# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled detector loops; see ``_pykernels`` for the contract.

Built without fast-math or FP contraction so results match the Python
fallback bit for bit.
"""

import numpy as np

cdef extern from "math.h":
    double fabs(double x) nogil

cdef enum:
    VIOL_BOUND = 1
    VIOL_FACTOR_A = 2
    VIOL_FACTOR_B = 4


cdef inline double _clamp(double x, double lo, double hi) noexcept nogil:
    # same tie semantics as Python's max(min(x, hi), lo)
    if hi < x:
        x = hi
    if lo > x:
        x = lo
    return x


def run_simple(const double[::1] g, const double[::1] d, double gamma,
               double threshold, bint abort):
    cdef Py_ssize_t n = g.shape[0]
    if d.shape[0] < n + 1:
        raise ValueError("d must have len(g) + 1 entries")
    wealth_arr = np.empty(n)
    theta_arr = np.empty(n)
    flags_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] wealth = wealth_arr
    cdef double[::1] theta_out = theta_arr
    cdef unsigned char[::1] flags = flags_arr

    cdef double half = 1.0 / (2.0 * d[0])
    cdef double theta = _clamp(0.0, -half, half)
    cdef double a = 1.0, w = 1.0, gi, factor, z
    cdef bint declared = False
    cdef Py_ssize_t i = 0, abort_step = -1
    cdef unsigned char flag

    with nogil:
        while i < n:
            gi = g[i]
            flag = 0
            if fabs(gi) > d[i]:
                flag |= VIOL_BOUND
            factor = 1.0 - gi * theta
            if factor <= 0.0:
                flag |= VIOL_FACTOR_A
                if abort:
                    flags[i] = flag
                    abort_step = i
                    break
                w = 0.0
            else:
                w = w * factor
            flags[i] = flag
            wealth[i] = w
            theta_out[i] = theta
            if w >= threshold:
                declared = True
                i += 1
                break
            half = 1.0 / (2.0 * d[i + 1])
            if factor > 0.0:
                z = gi / factor
                a = a + z * z
                theta = theta - z / (gamma * a)
            theta = _clamp(theta, -half, half)
            i += 1
    return wealth_arr[:i], theta_arr[:i], flags_arr[:i], int(i), bool(declared), int(abort_step)


def run_composite(const double[::1] g, const double[::1] d, double epsilon,
                  double gamma, double threshold, bint abort):
    cdef Py_ssize_t n = g.shape[0]
    if d.shape[0] < n + 1:
        raise ValueError("d must have len(g) + 1 entries")
    wa_arr = np.empty(n)
    wb_arr = np.empty(n)
    ta_arr = np.empty(n)
    tb_arr = np.empty(n)
    flags_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] wa_out = wa_arr
    cdef double[::1] wb_out = wb_arr
    cdef double[::1] ta_out = ta_arr
    cdef double[::1] tb_out = tb_arr
    cdef unsigned char[::1] flags = flags_arr

    cdef double eps = epsilon
    cdef double lo = -(1.0 / (2.0 * d[0]))
    cdef double ta = _clamp(0.0, lo, 0.0)
    cdef double tb = ta
    cdef double aa = 1.0, ab = 1.0, wa = 1.0, wb = 1.0
    cdef double gi, ga, gb, fa, fb, z
    cdef bint declared = False
    cdef Py_ssize_t i = 0, abort_step = -1
    cdef unsigned char flag

    with nogil:
        while i < n:
            gi = g[i]
            ga = gi - eps
            gb = -gi - eps
            flag = 0
            if fabs(gi) > d[i]:
                flag |= VIOL_BOUND
            fa = 1.0 - ga * ta
            fb = 1.0 - gb * tb
            if fa <= 0.0:
                flag |= VIOL_FACTOR_A
            if fb <= 0.0:
                flag |= VIOL_FACTOR_B
            if abort and (fa <= 0.0 or fb <= 0.0):
                flags[i] = flag
                abort_step = i
                break
            if fa > 0.0:
                wa = wa * fa
            else:
                wa = 0.0
            if fb > 0.0:
                wb = wb * fb
            else:
                wb = 0.0
            flags[i] = flag
            wa_out[i] = wa
            wb_out[i] = wb
            ta_out[i] = ta
            tb_out[i] = tb
            if wa >= threshold or wb >= threshold:
                declared = True
                i += 1
                break
            lo = -(1.0 / (2.0 * d[i + 1]))
            if fa > 0.0:
                z = ga / fa
                aa = aa + z * z
                ta = ta - z / (gamma * aa)
            if fb > 0.0:
                z = gb / fb
                ab = ab + z * z
                tb = tb - z / (gamma * ab)
            ta = _clamp(ta, lo, 0.0)
            tb = _clamp(tb, lo, 0.0)
            i += 1
    return (wa_arr[:i], wb_arr[:i], ta_arr[:i], tb_arr[:i], flags_arr[:i],
            int(i), bool(declared), int(abort_step))
