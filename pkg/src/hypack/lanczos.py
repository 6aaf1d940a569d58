"""Complex Gamma function by the Lanczos approximation (g = 7, n = 9)."""

import math

import numpy as np

_G = 7.0
_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _lanczos_log(z):
    # valid for Re z >= 0.5
    z = z - 1.0
    x = _COEF[0]
    for i in range(1, len(_COEF)):
        x = x + _COEF[i] / (z + i)
    t = z + _G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * np.log(t) - t + np.log(x)


def loggamma(z):
    """log Gamma for complex arrays.

    The imaginary part is only meaningful modulo 2*pi; callers use the real
    part (``log|Gamma|``) or exponentiate.  Poles map to ``+inf``.
    """
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z).copy()
    out = np.empty_like(z)

    pole = (z.imag == 0.0) & (z.real <= 0.0) & (z.real == np.round(z.real))
    refl = (z.real < -0.5) & ~pole
    rest = ~pole & ~refl

    out[pole] = np.inf
    if refl.any():
        w = z[refl]
        out[refl] = math.log(math.pi) - np.log(np.sin(math.pi * w)) - _lanczos_log(1.0 - w)
    w = z[rest]
    shift = np.zeros_like(w)
    low = w.real < 0.5
    while low.any():
        shift[low] += np.log(w[low])
        w[low] += 1.0
        low = w.real < 0.5
    out[rest] = _lanczos_log(w) - shift
    return complex(out[0]) if scalar else out


def gamma(z):
    """Complex Gamma function."""
    return np.exp(loggamma(z))


def log_abs_gamma(z):
    """``log|Gamma(z)|``."""
    return np.real(loggamma(z))
