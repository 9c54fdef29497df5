"""Harmonic function H(x) and the Gauss hypergeometric family 2F1(1, b; b+1; A).

Both appear in the closed-form single-pulse average posterior. The
parameters there range over many decades (``b`` up to ~1e10 for tiny
reflectance, ``A`` within 1e-8 of 1 for tiny background), so each function
has several evaluation routes:

``harmonic_diff(x, h)``
    H(x + h) - H(x) by upward recurrence to 10 followed by the asymptotic
    expansion of the digamma function written as differences, so no two
    large numbers are ever subtracted.

``hyp2f1_1bA(b, A)``
    * ``series``     -- b * sum A^k / (b + k), for A not too close to 1;
    * ``log``        -- expansion in powers of 1 - A (the logarithmic case
      c = a + b of the 1 - z transformation), for b (1 - A) <= 1;
    * ``asymptotic`` -- Laplace form  int_0^inf e^-s / (1 - e^-(mu + s/b)) ds
      with mu = -ln A, expanded in Bernoulli numbers, for large b.

The ``*_integral`` functions evaluate the defining integral representations by
adaptive quadrature and are used to cross-check the routes above.
"""
from __future__ import annotations

import math

import numpy as np

EULER_GAMMA = 0.57721566490153286060651209008240243

# B_2, B_4, ..., B_20
_BERNOULLI_2K = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
)

_SHIFT = 10.0


class ConvergenceError(RuntimeError):
    """A series or quadrature failed to reach the requested accuracy."""


def harmonic_diff(x: float, h: float) -> float:
    """H(x + h) - H(x), equivalently psi(x + h + 1) - psi(x + 1).

    Requires ``x > -1`` and ``x + h > -1``.
    """
    y = x + 1.0
    if not (y > 0.0 and y + h > 0.0):
        raise ValueError(f"harmonic_diff needs x > -1 and x + h > -1 (got x={x}, h={h})")
    if h == 0.0:
        return 0.0
    acc = []
    while y < _SHIFT or y + h < _SHIFT:
        # psi(y + h) - psi(y) = [psi(y + 1 + h) - psi(y + 1)] + h / (y (y + h))
        acc.append(h / (y * (y + h)))
        y += 1.0
    lp = math.log1p(h / y)
    acc.append(lp)
    acc.append(h / (2.0 * y * (y + h)))
    inv_y2 = 1.0 / (y * y)
    power = 1.0
    for k, b2k in enumerate(_BERNOULLI_2K, start=1):
        power *= inv_y2
        term = b2k / (2 * k) * power * math.expm1(-2 * k * lp)
        acc.append(-term)
        if abs(term) < 1e-18 * abs(lp):
            break
    return math.fsum(acc)


def harmonic_real(x: float) -> float:
    """Harmonic function H(x) = psi(x + 1) + Euler's constant, for x > -1."""
    return harmonic_diff(0.0, x)


def digamma(x: float) -> float:
    """psi(x) for x > 0."""
    return harmonic_diff(0.0, x - 1.0) - EULER_GAMMA


def exp_e1(x: float) -> float:
    """e^x E_1(x) for x > 0 (the scaled exponential integral)."""
    if not x > 0:
        raise ValueError("exp_e1 needs x > 0")
    if x < 500.0:
        from scipy.special import exp1

        return math.exp(x) * float(exp1(x))
    # asymptotic: sum (-1)^k k! / x^(k+1); smallest term long before k ~ x
    terms = []
    term = 1.0 / x
    for k in range(1, 60):
        terms.append(term)
        if abs(term) < 1e-18 * abs(terms[0]):
            break
        term *= -k / x
    return math.fsum(terms)


# --- 2F1(1, b; b + 1; A) ----------------------------------------------------

SERIES_LIMIT = 1e-4  # use the direct series while 1 - A > SERIES_LIMIT
_MAX_SERIES_TERMS = 5_000_000


def _hyp_series(b: float, A: float, w: float) -> float:
    if A == 0.0:
        return 1.0
    n_terms = int(math.ceil(math.log(1e-17 * w) / math.log(A))) + 1
    if n_terms > _MAX_SERIES_TERMS:
        raise ConvergenceError(f"direct series needs {n_terms} terms (A={A})")
    k = np.arange(n_terms, dtype=float)
    return float(np.sum(np.exp(k * math.log(A)) * (b / (b + k))))


def _hyp_log(b: float, w: float) -> float:
    # F = b sum_n (b)_n / n! w^n [psi(n + 1) - psi(b + n) - ln w]
    log_w = math.log(w)
    coeff = 1.0
    d = harmonic_diff(0.0, b - 1.0)  # psi(b) - psi(1)
    total = []
    n = 0
    while True:
        term = coeff * (-d - log_w)
        total.append(term)
        if n > b * w and abs(coeff) * (abs(d) + abs(log_w) + 1.0) < 1e-18 * abs(math.fsum(total)):
            break
        d += 1.0 / (b + n) - 1.0 / (n + 1.0)
        coeff *= (b + n) / (n + 1.0) * w
        n += 1
        if n > 10_000:
            raise ConvergenceError(f"log-case series did not converge (b={b}, 1-A={w})")
    return b * math.fsum(total)


def _hyp_asymptotic(b: float, mu: float) -> float:
    # 1/(1 - e^-tau) = 1/tau + 1/2 + sum_k B_2k tau^(2k-1) / (2k)!,  tau = mu + s/b
    total = [b * exp_e1(b * mu), 0.5]
    scale = abs(total[0]) + 0.5
    for k, b2k in enumerate(_BERNOULLI_2K, start=1):
        j = 2 * k - 1
        # E[(mu + S/b)^j] for S ~ Exp(1)
        moment = math.fsum(
            math.comb(j, i) * mu ** (j - i) * math.factorial(i) / b**i for i in range(j + 1)
        )
        term = b2k / math.factorial(2 * k) * moment
        total.append(term)
        if abs(term) < 1e-18 * scale:
            return math.fsum(total)
    raise ConvergenceError(f"Bernoulli expansion did not converge (b={b}, mu={mu})")


def hyp2f1_1bA(b: float, A: float, method: str = "auto", one_minus_A: float | None = None) -> float:
    """Gauss hypergeometric function 2F1(1, b; b + 1; A) for b > 0, 0 <= A < 1.

    ``one_minus_A`` may be passed when 1 - A is known more accurately than
    the rounded ``A`` (A within ~1e-8 of one). ``method`` forces one of
    ``"series"``, ``"log"`` or ``"asymptotic"``.
    """
    if not b > 0:
        raise ValueError(f"b must be > 0 (got {b})")
    w = (1.0 - A) if one_minus_A is None else one_minus_A
    # A itself may round to 1.0 when the exact 1 - A is supplied
    if not (0.0 <= A <= 1.0 and 0.0 < w <= 1.0):
        raise ValueError(f"A must be in [0, 1) (got A={A}, 1-A={w})")
    if method == "auto":
        if w > SERIES_LIMIT:
            method = "series"
        elif b * w <= 1.0:
            method = "log"
        else:
            method = "asymptotic"
    if method == "series":
        return _hyp_series(b, A, w)
    if method == "log":
        if w >= 0.5:
            raise ValueError("log-case expansion needs 1 - A < 1/2")
        return _hyp_log(b, w)
    if method == "asymptotic":
        mu = -math.log1p(-w)
        if b < 20.0 or mu > 1.0:
            raise ValueError("Bernoulli expansion needs b >= 20 and A >= 1/e")
        return _hyp_asymptotic(b, mu)
    raise ValueError(f"unknown method {method!r}")


# --- integral representations ----------------------------------------------


def _quad_pieces(f, edges, epsrel=1e-13):
    from scipy import integrate

    parts = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=epsrel, limit=400)
        parts.append(val)
    return math.fsum(parts)


def hyp2f1_integral(a: float, b: float, c: float, x: float) -> float:
    """2F1(a, b; c; x) from its Euler integral, for c > b > 0 and x < 1."""
    from scipy.special import gammaln

    if not c > b > 0:
        raise ValueError("Euler integral needs c > b > 0")
    pref = math.exp(gammaln(c) - gammaln(b) - gammaln(c - b))

    def f(t):
        return t ** (b - 1.0) * (1.0 - t) ** (c - b - 1.0) * (1.0 - x * t) ** (-a)

    return pref * _quad_pieces(f, [0.0, 0.5, 1.0])


def hyp2f1_1bA_integral(b: float, A: float, one_minus_A: float | None = None) -> float:
    """2F1(1, b; b + 1; A) from ``b int_0^1 t^(b-1) / (1 - A t) dt``.

    Integrated in the variable ``s = -b ln t`` where the integrand becomes
    ``e^-s / ((1 - A) + A (1 - e^(-s/b)))``, with breakpoints at the width
    of the near-pole peak.
    """
    w = (1.0 - A) if one_minus_A is None else one_minus_A

    def f(s):
        return math.exp(-s) / (w - A * math.expm1(-s / b))

    width = b * w / max(A, 1e-300)
    edges = {0.0, 1.0, 5.0, 20.0, 60.0, 200.0}
    for scale in (1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0):
        if 0.0 < width * scale < 60.0:
            edges.add(width * scale)
    return _quad_pieces(f, sorted(edges))


def harmonic_integral(x: float) -> float:
    """H(x) from ``int_0^1 (1 - u^x) / (1 - u) du``.

    Integrated in ``v = -ln u``: ``int_0^inf (1 - e^(-x v)) / (e^v - 1) dv``.
    """
    if not x > -1:
        raise ValueError("harmonic_integral needs x > -1")

    def f(v):
        if v == 0.0:
            return x
        # (1 - e^(-x v)) e^(-v) / (1 - e^(-v)), finite for large v
        return math.expm1(-x * v) * math.exp(-v) / math.expm1(-v)

    edges = {0.0, 1.0, 5.0, 40.0, 800.0}
    for scale in (0.01, 0.1, 1.0, 10.0, 100.0):
        if 0.0 < scale / abs(x) < 40.0:
            edges.add(scale / abs(x))
    return _quad_pieces(f, sorted(edges))
