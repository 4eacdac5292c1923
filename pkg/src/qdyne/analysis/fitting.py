"""Least-squares fit of a decaying sinusoid.

Model::

    y(t) = A sin(2 pi nu t + phi0) exp(-Gamma t) + offset

The solver runs in sample units (``t = n``) so all parameters are of
order one, then converts back to Hz.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import hilbert
from sklearn.base import BaseEstimator, RegressorMixin

from ..exceptions import ConvergenceError, InputError
from ..validation import check_samples
from .spectrum import fft_amplitude_spectrum

PARAM_NAMES = ("amplitude", "frequency", "phase", "decay_rate", "offset")


@dataclass(eq=False)
class SinusoidFit:
    """Fitted decaying sinusoid. Frequencies and rates in Hz, phase in rad."""

    amplitude: float
    frequency: float
    phase: float
    decay_rate: float
    offset: float
    stddevs: dict = field(default_factory=dict)
    residual_rms: float = 0.0
    covariance: np.ndarray = None
    n_iter: int = 0

    def params(self):
        return {k: getattr(self, k) for k in PARAM_NAMES}

    def predict(self, t):
        t = np.asarray(t, dtype=float)
        return (self.amplitude * np.sin(2 * np.pi * self.frequency * t + self.phase)
                * np.exp(-self.decay_rate * t) + self.offset)

    def to_dict(self):
        out = {k: float(v) for k, v in self.params().items()}
        out["stddevs"] = {k: float(v) for k, v in self.stddevs.items()}
        out["residual_rms"] = float(self.residual_rms)
        return out


def _model(p, n):
    a, nu, ph, g, c = p
    return a * np.sin(2 * np.pi * nu * n + ph) * np.exp(-g * n) + c


def _jac(p, n):
    a, nu, ph, g, _ = p
    arg = 2 * np.pi * nu * n + ph
    e = np.exp(-g * n)
    s, co = np.sin(arg) * e, np.cos(arg) * e
    return np.column_stack([s, a * co * 2 * np.pi * n, a * co, -a * n * s, np.ones_like(n)])


def _wrap(phi):
    """Map to (-pi, pi]."""
    w = math.remainder(phi, 2 * math.pi)
    return math.pi if w == -math.pi else w


def initial_guess(y):
    """Starting point in sample units from the FFT peak and the Hilbert envelope.

    Returns ``[A, nu, phi0, Gamma, offset]`` with ``nu`` in cycles/sample
    and ``Gamma`` per sample.
    """
    y = np.asarray(y, dtype=float)
    n = np.arange(y.size)
    c = float(y.mean())
    spec = fft_amplitude_spectrum(y, 1.0, 8, remove_mean=True)
    nu = spec.peak_frequency(fmin=0.5 / y.size)
    env = np.abs(hilbert(y - c))
    lo, hi = y.size // 10, max(y.size - y.size // 10, y.size // 10 + 2)
    sl = slice(lo, hi)
    good = env[sl] > 1e-12 * max(env.max(), 1e-300)
    if good.sum() >= 2:
        slope, icpt = np.polyfit(n[sl][good], np.log(env[sl][good]), 1)
        gamma, amp = max(-slope, 0.0), math.exp(icpt)
    else:
        gamma, amp = 0.0, float(spec.amps.max())
    z = np.sum((y - c) * np.exp(-2j * np.pi * nu * n))
    phase = float(np.angle(1j * z))
    return np.array([amp, nu, phase, gamma, c])


def _canonical(p):
    a, nu, ph, g, c = (float(v) for v in p)
    if nu < 0:
        nu, ph, a = -nu, -ph, -a
    if a < 0:
        a, ph = -a, ph + math.pi
    return np.array([a, nu, _wrap(ph), g, c])


def _solve(y, p0, max_iter, xtol):
    n = np.arange(y.size, dtype=float)
    lower = [-np.inf, 0.0, -np.inf, 0.0, -np.inf]
    upper = [np.inf, 0.5, np.inf, np.inf, np.inf]
    p0 = np.clip(np.asarray(p0, dtype=float), lower, upper)
    p0[3] = max(p0[3], 1e-12)  # start strictly inside the Gamma >= 0 bound
    return least_squares(lambda p: _model(p, n) - y, p0, jac=lambda p: _jac(p, n),
                         bounds=(lower, upper), method="trf", x_scale="jac",
                         xtol=xtol, ftol=1e-15, gtol=1e-15, max_nfev=max_iter)


def _starts(y, init_sample):
    if init_sample is not None:
        yield init_sample
        return
    base = initial_guess(y)
    yield base
    half_bin = 0.5 / y.size
    for d_nu, g in ((0.0, 0.0), (half_bin, None), (-half_bin, None)):
        p = base.copy()
        p[1] = min(max(p[1] + d_nu, 1e-6), 0.5)
        if g is not None:
            p[3] = g
        yield p


class DecayingSinusoidRegressor(BaseEstimator, RegressorMixin):
    """Regressor for ``A sin(2 pi nu t + phi0) exp(-Gamma t) + offset``.

    Parameters
    ----------
    init : SinusoidFit, optional
        Starting point; by default it is taken from the FFT peak and a
        log-envelope regression, with a few perturbed restarts.
    max_iter : int
        Bound on solver iterations (function evaluations) per start.
    xtol : float
        Relative step tolerance.

    Attributes
    ----------
    fit_ : SinusoidFit
    sampling_interval_ : float
    """

    def __init__(self, init=None, max_iter=200, xtol=1e-12):
        self.init = init
        self.max_iter = max_iter
        self.xtol = xtol

    def fit(self, X, y):
        """Fit to samples ``y`` taken at uniformly spaced times ``X`` [s]."""
        y = check_samples(y, min_length=8, name="y")
        t = check_samples(np.ravel(X), min_length=8, name="X")
        if t.size != y.size:
            raise InputError("X and y differ in length")
        steps = np.diff(t)
        dt = float(steps.mean())
        if not dt > 0 or np.max(np.abs(steps - dt)) > 1e-9 * dt:
            raise InputError("sample times must be uniformly spaced and increasing")
        t0 = float(t[0])
        init = None
        if self.init is not None:
            f = self.init
            init = np.array([f.amplitude, f.frequency * dt, f.phase + 2 * np.pi * f.frequency * t0,
                             f.decay_rate * dt, f.offset])
            init[0] *= math.exp(-f.decay_rate * t0)
        best, last = None, None
        for p0 in _starts(y, init):
            res = _solve(y, p0, self.max_iter, self.xtol)
            last = res
            if res.status > 0 and (best is None or res.cost < best.cost):
                best = res
        if best is None:
            raise ConvergenceError(f"fit did not converge within {self.max_iter} iterations",
                                   last_iterate=self._to_fit(last, y, dt, t0))
        self.fit_ = self._to_fit(best, y, dt, t0)
        self.sampling_interval_ = dt
        return self

    @staticmethod
    def _to_fit(res, y, dt, t0):
        p = _canonical(res.x)
        n = np.arange(y.size, dtype=float)
        r = _model(p, n) - y
        dof = max(y.size - 5, 1)
        s2 = float(r @ r) / dof
        jac = _jac(p, n)
        cov = s2 * np.linalg.pinv(jac.T @ jac)
        # sample units -> seconds (covariance is reported at the t0 origin)
        scale = np.array([1.0, 1 / dt, 1.0, 1 / dt, 1.0])
        cov = cov * np.outer(scale, scale)
        a, nu, ph, g, c = p
        nu_hz, g_hz = nu / dt, g / dt
        a0 = a * math.exp(g_hz * t0)
        ph0 = _wrap(ph - 2 * math.pi * nu_hz * t0)
        std = np.sqrt(np.clip(np.diag(cov), 0, None))
        return SinusoidFit(a0, nu_hz, ph0, g_hz, c, dict(zip(PARAM_NAMES, std)),
                           math.sqrt(float(r @ r) / y.size), cov, int(res.nfev))

    def predict(self, X):
        return self.fit_.predict(np.ravel(X))

    @property
    def frequency_(self):
        return self.fit_.frequency

    @property
    def decay_rate_(self):
        return self.fit_.decay_rate


def fit_decaying_sinusoid(trace, init=None, dt=None, max_iter=200):
    """Fit a :class:`TimeTrace` (or a bare array plus ``dt``) and return a :class:`SinusoidFit`."""
    if hasattr(trace, "values") and hasattr(trace, "dt"):
        values, dt = trace.values, trace.dt if dt is None else dt
    else:
        values = trace
    if dt is None:
        raise InputError("a bare array needs dt")
    values = check_samples(values, min_length=8)
    est = DecayingSinusoidRegressor(init=init, max_iter=max_iter)
    return est.fit(np.arange(values.size) * dt, values).fit_
