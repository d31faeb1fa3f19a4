"""Pure-Python kernels.

Same arithmetic, in the same order, as ``_ckernels.pyx`` so the two backends
agree to the last bit on the same platform libm.  Used when the extension is
not built, or when ``V2ICPD_PURE_PYTHON=1``.
"""

import math

NEG_INF = -math.inf
HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def log_normal_pdf(y, mu, sigma):
    z = (y - mu) / sigma
    return -0.5 * z * z - math.log(sigma) - HALF_LOG_2PI


def logaddexp(a, b):
    if a == NEG_INF and b == NEG_INF:
        return NEG_INF
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


def _log_weights(pi):
    lw1 = math.log1p(-pi) if pi < 1.0 else NEG_INF
    lw2 = math.log(pi) if pi > 0.0 else NEG_INF
    return lw1, lw2


def log_mixture_density(y, m1, s1, m2, s2, pi):
    lw1, lw2 = _log_weights(pi)
    return logaddexp(lw1 + log_normal_pdf(y, m1, s1), lw2 + log_normal_pdf(y, m2, s2))


def responsibility(y, m1, s1, m2, s2, pi):
    lw1, lw2 = _log_weights(pi)
    l1 = lw1 + log_normal_pdf(y, m1, s1)
    l2 = lw2 + log_normal_pdf(y, m2, s2)
    if l2 == NEG_INF:
        return 0.0
    return math.exp(l2 - logaddexp(l1, l2))


def log_likelihood(window, m1, s1, m2, s2, pi):
    total = 0.0
    for y in window:
        total += log_mixture_density(y, m1, s1, m2, s2, pi)
    return total


def em_fit(window, m1, s1, m2, s2, pi, iterations, floor1, floor2, pi_floor):
    """Run ``iterations`` E/M rounds on ``window``.

    Standard deviations are held at or above ``floor1``/``floor2`` and the
    mixing weight inside ``[pi_floor, 1 - pi_floor]``.  Returns
    ``(m1, s1, m2, s2, pi, logliks)`` where ``logliks`` holds the window
    log-likelihood before the first round and after every round.
    """
    n = len(window)
    gam = [0.0] * n
    logliks = []
    for _ in range(iterations):
        lw1, lw2 = _log_weights(pi)
        ll = 0.0
        for i in range(n):
            y = window[i]
            l1 = lw1 + log_normal_pdf(y, m1, s1)
            l2 = lw2 + log_normal_pdf(y, m2, s2)
            lg = logaddexp(l1, l2)
            ll += lg
            gam[i] = 0.0 if l2 == NEG_INF else math.exp(l2 - lg)
        logliks.append(ll)

        w1 = 0.0
        w2 = 0.0
        a1 = 0.0
        a2 = 0.0
        for i in range(n):
            g = gam[i]
            w2 += g
            w1 += 1.0 - g
            a2 += g * window[i]
            a1 += (1.0 - g) * window[i]
        if w1 > 0.0:
            m1 = a1 / w1
            v = 0.0
            for i in range(n):
                d = window[i] - m1
                v += (1.0 - gam[i]) * d * d
            s1 = max(math.sqrt(v / w1), floor1)
        if w2 > 0.0:
            m2 = a2 / w2
            v = 0.0
            for i in range(n):
                d = window[i] - m2
                v += gam[i] * d * d
            s2 = max(math.sqrt(v / w2), floor2)
        pi = min(max(w2 / n, pi_floor), 1.0 - pi_floor)
    logliks.append(log_likelihood(window, m1, s1, m2, s2, pi))
    return m1, s1, m2, s2, pi, logliks


def em_run(values, window, head, m1, s1, m2, s2, pi, iterations, floor1, floor2, pi_floor, scores):
    """Stream ``values`` through a ring ``window`` (next write slot ``head``).

    Writes one responsibility per value into ``scores`` and returns the final
    ``(head, m1, s1, m2, s2, pi, loglik)``.  ``window`` is updated in place.
    """
    n = len(window)
    ll = math.nan
    for t in range(len(values)):
        x = values[t]
        window[head] = x
        head = (head + 1) % n
        m1, s1, m2, s2, pi, lls = em_fit(window, m1, s1, m2, s2, pi, iterations, floor1, floor2, pi_floor)
        ll = lls[-1]
        scores[t] = responsibility(x, m1, s1, m2, s2, pi)
    return head, m1, s1, m2, s2, pi, ll


def cusum_run(values, mu1, k, h, c_plus, c_minus, n_plus, n_minus, offset, out_cp, out_cm, out_alarm, out_side):
    """Typical two-sided CUSUM with post-alarm mean re-estimation.

    ``offset`` is the current target mean minus ``mu1``.  Per-sample sums are
    written before any reset; ``out_side`` is +1 (upper), -1 (lower) or 0.
    Returns the final ``(c_plus, c_minus, n_plus, n_minus, offset)``.
    """
    for t in range(len(values)):
        dev = (values[t] - mu1) - offset
        c_plus = max(0.0, c_plus + dev - k)
        c_minus = max(0.0, -c_minus - dev - k)
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
        out_alarm[t] = 1 if side else 0
        out_side[t] = side
    return c_plus, c_minus, n_plus, n_minus, offset


def acusum_run(values, mu1, sigma, alpha, h, c_plus, c_minus, mu_bar, out_cp, out_cm, out_alarm, out_side):
    """Adaptive CUSUM on EWMA-adjusted observations; sums zeroed after alarms.

    Returns the final ``(c_plus, c_minus, mu_bar)``.
    """
    var = sigma * sigma
    for t in range(len(values)):
        x = values[t]
        xt = x - mu_bar
        mu_bar = alpha * mu_bar + (1.0 - alpha) * x
        d = mu_bar - mu1
        w = alpha * d / var
        c_plus = max(0.0, c_plus + w * (xt - d - alpha * d / 2.0))
        c_minus = max(0.0, c_minus - w * (xt + d + alpha * d / 2.0))
        out_cp[t] = c_plus
        out_cm[t] = c_minus
        side = 0
        if c_plus > h or c_minus > h:
            side = 1 if c_plus >= c_minus else -1
            c_plus = 0.0
            c_minus = 0.0
        out_alarm[t] = 1 if side else 0
        out_side[t] = side
    return c_plus, c_minus, mu_bar
