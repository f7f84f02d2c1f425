"""Modified Bessel function K1, accurate to ~1e-14 relative.

Two branches joined at x = 2:
  * ascending series (Abramowitz & Stegun 9.6.11) for small arguments,
    where the logarithmic cancellation is still harmless;
  * Steed's continued fraction for the scaled K0/K1 pair at large
    arguments, which stays close to machine precision all the way up to
    the underflow limit.
"""

from __future__ import annotations

import math

_EULER_GAMMA = 0.5772156649015328606
_SERIES_CUTOFF = 2.0
_UNDERFLOW_X = 746.0  # exp(-x) underflows; K1 is below ~1e-324 here
_MAX_ITER = 400
_EPS = 1e-16


def _k1_series(x: float) -> float:
    # K1(x) = ln(x/2) I1(x) + 1/x - (x/4) sum_k [psi(k+1)+psi(k+2)] t^k / (k!(k+1)!)
    # with t = x^2/4.
    t = 0.25 * x * x
    term_i = 0.5 * x          # I1 partial term: (x/2) t^k / (k!(k+1)!)
    i1 = term_i
    psi_sum = -2 * _EULER_GAMMA + 1.0   # psi(1) + psi(2)
    term_s = 1.0              # t^k / (k!(k+1)!)
    s = psi_sum * term_s
    for k in range(1, _MAX_ITER):
        term_i *= t / (k * (k + 1))
        i1 += term_i
        term_s *= t / (k * (k + 1))
        psi_sum += 1.0 / k + 1.0 / (k + 1)
        ds = psi_sum * term_s
        s += ds
        if abs(ds) < _EPS * abs(s) and term_i < _EPS * i1:
            break
    return math.log(0.5 * x) * i1 + 1.0 / x - 0.25 * x * s


def _k1_cf2(x: float) -> float:
    # Steed's CF2 for the pair (K_mu, K_mu+1) at mu = 0 (Thompson & Barnett).
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1 = 0.0
    q2 = 1.0
    a1 = 0.25
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAX_ITER):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels) < _EPS * abs(s):
            break
    h = a1 * h
    k0 = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / s
    return k0 * (x + 0.5 - h) / x


def bessel_k1(x: float) -> float:
    """K1(x) for x > 0; underflows gracefully to 0 for very large x."""
    x = float(x)
    if not x > 0:
        raise ValueError("bessel_k1 requires x > 0")
    if x >= _UNDERFLOW_X:
        return 0.0
    if x <= _SERIES_CUTOFF:
        return _k1_series(x)
    return _k1_cf2(x)


def scaled_x_k1(u: float) -> float:
    """u * K1(u), continuously extended to 1 at u = 0.

    This is the radial factor of the column-density projection; the u -> 0
    limit removes the 1/u singularity of K1.
    """
    if u < 0:
        raise ValueError("scaled_x_k1 requires u >= 0")
    if u == 0.0:
        return 1.0
    if u >= _UNDERFLOW_X:
        return 0.0
    return u * bessel_k1(u)
