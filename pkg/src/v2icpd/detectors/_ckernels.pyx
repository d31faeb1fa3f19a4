# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; mirror ``_pykernels`` operation for operation."""

from libc.math cimport exp, log, log1p, sqrt, INFINITY, M_PI

cdef double NEG_INF = -INFINITY
cdef double HALF_LOG_2PI = 0.5 * log(2.0 * M_PI)


cdef inline double _lpdf(double y, double mu, double sigma) nogil:
    cdef double z = (y - mu) / sigma
    return -0.5 * z * z - log(sigma) - HALF_LOG_2PI


cdef inline double _lae(double a, double b) nogil:
    if a == NEG_INF and b == NEG_INF:
        return NEG_INF
    if a > b:
        return a + log1p(exp(b - a))
    return b + log1p(exp(a - b))


cdef inline double _lw1(double pi) nogil:
    return log1p(-pi) if pi < 1.0 else NEG_INF


cdef inline double _lw2(double pi) nogil:
    return log(pi) if pi > 0.0 else NEG_INF


def log_normal_pdf(double y, double mu, double sigma):
    return _lpdf(y, mu, sigma)


def logaddexp(double a, double b):
    return _lae(a, b)


def log_mixture_density(double y, double m1, double s1, double m2, double s2, double pi):
    return _lae(_lw1(pi) + _lpdf(y, m1, s1), _lw2(pi) + _lpdf(y, m2, s2))


cdef inline double _resp(double y, double m1, double s1, double m2, double s2, double pi) nogil:
    cdef double l1 = _lw1(pi) + _lpdf(y, m1, s1)
    cdef double l2 = _lw2(pi) + _lpdf(y, m2, s2)
    if l2 == NEG_INF:
        return 0.0
    return exp(l2 - _lae(l1, l2))


def responsibility(double y, double m1, double s1, double m2, double s2, double pi):
    return _resp(y, m1, s1, m2, s2, pi)


cdef double _loglik(double[:] w, double m1, double s1, double m2, double s2, double pi) nogil:
    cdef Py_ssize_t i
    cdef double total = 0.0
    cdef double lw1 = _lw1(pi)
    cdef double lw2 = _lw2(pi)
    for i in range(w.shape[0]):
        total += _lae(lw1 + _lpdf(w[i], m1, s1), lw2 + _lpdf(w[i], m2, s2))
    return total


def log_likelihood(window, double m1, double s1, double m2, double s2, double pi):
    cdef double[:] w = _as_view(window)
    return _loglik(w, m1, s1, m2, s2, pi)


cdef double[:] _as_view(obj):
    import numpy as np
    return np.ascontiguousarray(obj, dtype=np.float64)


cdef struct Params:
    double m1
    double s1
    double m2
    double s2
    double pi


cdef void _fit(double[:] w, double[:] gam, Params* p, int iterations, double floor1, double floor2,
               double pi_floor, double* lls) nogil:
    cdef Py_ssize_t i, n = w.shape[0]
    cdef int it
    cdef double lw1, lw2, l1, l2, lg, ll, g, w1, w2, a1, a2, v, d
    for it in range(iterations):
        lw1 = _lw1(p.pi)
        lw2 = _lw2(p.pi)
        ll = 0.0
        for i in range(n):
            l1 = lw1 + _lpdf(w[i], p.m1, p.s1)
            l2 = lw2 + _lpdf(w[i], p.m2, p.s2)
            lg = _lae(l1, l2)
            ll += lg
            gam[i] = 0.0 if l2 == NEG_INF else exp(l2 - lg)
        if lls != NULL:
            lls[it] = ll
        w1 = 0.0
        w2 = 0.0
        a1 = 0.0
        a2 = 0.0
        for i in range(n):
            g = gam[i]
            w2 += g
            w1 += 1.0 - g
            a2 += g * w[i]
            a1 += (1.0 - g) * w[i]
        if w1 > 0.0:
            p.m1 = a1 / w1
            v = 0.0
            for i in range(n):
                d = w[i] - p.m1
                v += (1.0 - gam[i]) * d * d
            p.s1 = sqrt(v / w1)
            if p.s1 < floor1:
                p.s1 = floor1
        if w2 > 0.0:
            p.m2 = a2 / w2
            v = 0.0
            for i in range(n):
                d = w[i] - p.m2
                v += gam[i] * d * d
            p.s2 = sqrt(v / w2)
            if p.s2 < floor2:
                p.s2 = floor2
        p.pi = w2 / n
        if p.pi < pi_floor:
            p.pi = pi_floor
        if p.pi > 1.0 - pi_floor:
            p.pi = 1.0 - pi_floor


def em_fit(window, double m1, double s1, double m2, double s2, double pi, int iterations, double floor1,
           double floor2, double pi_floor):
    import numpy as np
    cdef double[:] w = _as_view(window)
    cdef double[:] gam = np.empty(w.shape[0])
    cdef double[:] lls = np.empty(iterations + 1)
    cdef Params p = Params(m1, s1, m2, s2, pi)
    _fit(w, gam, &p, iterations, floor1, floor2, pi_floor, &lls[0])
    lls[iterations] = _loglik(w, p.m1, p.s1, p.m2, p.s2, p.pi)
    return p.m1, p.s1, p.m2, p.s2, p.pi, list(lls)


def em_run(double[:] values, double[:] window, Py_ssize_t head, double m1, double s1, double m2, double s2,
           double pi, int iterations, double floor1, double floor2, double pi_floor, double[:] scores):
    import numpy as np
    cdef Py_ssize_t t, n = window.shape[0]
    cdef double[:] gam = np.empty(n)
    cdef Params p = Params(m1, s1, m2, s2, pi)
    cdef double ll = float("nan")
    cdef double x
    with nogil:
        for t in range(values.shape[0]):
            x = values[t]
            window[head] = x
            head = (head + 1) % n
            _fit(window, gam, &p, iterations, floor1, floor2, pi_floor, NULL)
            scores[t] = _resp(x, p.m1, p.s1, p.m2, p.s2, p.pi)
        if values.shape[0] > 0:
            ll = _loglik(window, p.m1, p.s1, p.m2, p.s2, p.pi)
    return head, p.m1, p.s1, p.m2, p.s2, p.pi, ll


def cusum_run(double[:] values, double mu1, double k, double h, double c_plus, double c_minus,
              long n_plus, long n_minus, double offset, double[:] out_cp, double[:] out_cm,
              signed char[:] out_alarm, signed char[:] out_side):
    cdef Py_ssize_t t
    cdef double dev
    cdef signed char side
    with nogil:
        for t in range(values.shape[0]):
            dev = (values[t] - mu1) - offset
            c_plus = c_plus + dev - k
            if c_plus < 0.0:
                c_plus = 0.0
            c_minus = -c_minus - dev - k
            if c_minus < 0.0:
                c_minus = 0.0
            n_plus = n_plus + 1 if c_plus > 0.0 else 0
            n_minus = n_minus + 1 if c_minus > 0.0 else 0
            out_cp[t] = c_plus
            out_cm[t] = c_minus
            side = 0
            if c_plus > h or c_minus > h:
                if c_plus >= c_minus:
                    side = 1
                    offset = k + c_plus / n_plus
                else:
                    side = -1
                    offset = -k - c_minus / n_minus
                c_plus = 0.0
                c_minus = 0.0
                n_plus = 0
                n_minus = 0
            out_alarm[t] = 1 if side != 0 else 0
            out_side[t] = side
    return c_plus, c_minus, n_plus, n_minus, offset


def acusum_run(double[:] values, double mu1, double sigma, double alpha, double h, double c_plus,
               double c_minus, double mu_bar, double[:] out_cp, double[:] out_cm,
               signed char[:] out_alarm, signed char[:] out_side):
    cdef Py_ssize_t t
    cdef double var = sigma * sigma
    cdef double x, xt, d, w
    cdef signed char side
    with nogil:
        for t in range(values.shape[0]):
            x = values[t]
            xt = x - mu_bar
            mu_bar = alpha * mu_bar + (1.0 - alpha) * x
            d = mu_bar - mu1
            w = alpha * d / var
            c_plus = c_plus + w * (xt - d - alpha * d / 2.0)
            if c_plus < 0.0:
                c_plus = 0.0
            c_minus = c_minus - w * (xt + d + alpha * d / 2.0)
            if c_minus < 0.0:
                c_minus = 0.0
            out_cp[t] = c_plus
            out_cm[t] = c_minus
            side = 0
            if c_plus > h or c_minus > h:
                side = 1 if c_plus >= c_minus else -1
                c_plus = 0.0
                c_minus = 0.0
            out_alarm[t] = 1 if side != 0 else 0
            out_side[t] = side
    return c_plus, c_minus, mu_bar
