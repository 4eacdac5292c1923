"""Cramer-Rao bounds for the frequency of a decaying sinusoid in white noise.

``A_over_rho`` is the signal amplitude divided by the one-sided amplitude
noise density (units 1/sqrt(Hz) folded in), so variances come out in Hz^2.
"""

import math

import numpy as np

from ..exceptions import InputError, PhysicsError
from ..validation import check_positive


def crlb_c_factor(n, zeta):
    """Decay penalty ``C[T]`` for ``n`` samples and per-sample decay ``zeta``.

    With ``z = exp(-zeta)``::

        C = n^3/12 (1-z^2)^3 (1-z^(2n)) / (z^2 (1-z^(2n))^2 - n^2 z^(2n) (1-z^2)^2)

    ``C -> 1`` for ``n zeta -> 0`` (apart from a finite-``n`` correction)
    and grows without bound for strong decay.

    Raises
    ------
    PhysicsError
        When the two denominator terms cancel to fewer than eight
        significant digits, i.e. ``zeta`` is too small for ``n``.
    """
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise InputError("n must be an integer >= 2")
    zeta = check_positive(float(zeta), "zeta")
    z2 = math.exp(-2 * zeta)
    one_m_z2 = -math.expm1(-2 * zeta)
    z2n = math.exp(-2 * zeta * n)
    one_m_z2n = -math.expm1(-2 * zeta * n)
    first = z2 * one_m_z2n ** 2
    second = n ** 2 * z2n * one_m_z2 ** 2
    den = first - second
    if not den > 1e-8 * first:
        raise PhysicsError(f"C[T] denominator underflows for n={n}, zeta={zeta:g}; "
                           "use the small-decay limit instead")
    return n ** 3 / 12 * one_m_z2 ** 3 * one_m_z2n / den


def crlb_variance(a_over_rho, T, dt, t2star):
    """``var(nu) = 12 C[T] / ((2 pi)^2 (A/rho)^2 T^3)`` for ``T / dt`` samples."""
    a_over_rho = check_positive(float(a_over_rho), "A/rho")
    T = check_positive(float(T), "T")
    dt = check_positive(float(dt), "dt")
    t2star = check_positive(float(t2star), "T2*")
    n = int(round(T / dt))
    c = crlb_c_factor(n, dt / t2star)
    return 12 * c / ((2 * math.pi) ** 2 * a_over_rho ** 2 * T ** 3)


def crlb_variance_limit(a_over_rho, t2star):
    """Long-record plateau ``8 / ((2 pi)^2 (A/rho)^2 T2*^3)``."""
    return 8 / ((2 * math.pi) ** 2 * a_over_rho ** 2 * t2star ** 3)


def crlb_sigma(a_over_rho, t2star):
    """``sigma(nu) = 2 sqrt(2) / (2 pi (A/rho) T2*^(3/2))`` [Hz]."""
    a_over_rho = check_positive(float(a_over_rho), "A/rho")
    t2star = check_positive(float(t2star), "T2*")
    return 2 * math.sqrt(2) / (2 * math.pi * a_over_rho * t2star ** 1.5)


def noise_density(sample_std, dt):
    """One-sided amplitude density of white noise with per-sample std ``sample_std``.

    ``rho = sample_std * sqrt(2 dt)``.
    """
    return check_positive(float(sample_std), "sample_std", allow_zero=True) * math.sqrt(2 * dt)
