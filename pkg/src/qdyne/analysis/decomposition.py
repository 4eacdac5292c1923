"""Split measured decay rates into back-action and intrinsic parts.

``Gamma_total(tau_seq) = (alpha^2 / 4) / tau_seq + Gamma_0``
"""

from dataclasses import dataclass
import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from ..exceptions import InputError
from ..validation import check_samples


@dataclass(eq=False)
class DecayDecomposition:
    """Result of :func:`fit_decay_decomposition`.

    ``covariance`` is ordered ``(back_action_coeff, gamma0)``. ``clamped``
    is True when an unconstrained estimate was negative and was pinned to 0.
    """

    back_action_coeff: float
    gamma0: float
    covariance: np.ndarray
    clamped: bool = False
    residuals: np.ndarray = None

    @property
    def alpha(self):
        return 2 * math.sqrt(self.back_action_coeff)

    @property
    def gamma0_std(self):
        return math.sqrt(max(self.covariance[1, 1], 0.0))

    @property
    def back_action_std(self):
        return math.sqrt(max(self.covariance[0, 0], 0.0))


class BackActionDecomposition(BaseEstimator, RegressorMixin):
    """Weighted linear fit of ``Gamma`` against ``{1/tau_seq, 1}``.

    ``fit(X, y, sample_weight)`` takes sequence durations ``X`` [s], decay
    rates ``y`` [Hz] and weights ``1/sigma^2``. Without weights the
    covariance is scaled by the residual variance.

    Attributes
    ----------
    result_ : DecayDecomposition
    """

    def __init__(self, clamp=True):
        self.clamp = clamp

    def fit(self, X, y, sample_weight=None):
        tau = check_samples(np.ravel(X), min_length=3, name="tau_seq")
        g = check_samples(y, min_length=3, name="decay rates")
        if tau.size != g.size:
            raise InputError("tau_seq and decay rates differ in length")
        if np.any(tau <= 0):
            raise InputError("tau_seq must be > 0")
        if np.unique(tau).size < 2:
            raise InputError("need at least two distinct tau_seq values")
        if sample_weight is None:
            w, absolute = np.ones_like(g), False
        else:
            w = check_samples(sample_weight, min_length=tau.size, name="weights")
            if w.size != tau.size or np.any(w <= 0):
                raise InputError("weights must be positive, one per point")
            absolute = True
        design = np.column_stack([1 / tau, np.ones_like(tau)])
        sw = np.sqrt(w)
        a = design * sw[:, None]
        if np.linalg.cond(a) > 1e12:
            raise InputError("degenerate design matrix")
        coef, *_ = np.linalg.lstsq(a, g * sw, rcond=None)
        cov = np.linalg.inv(a.T @ a)
        clamped = False
        if self.clamp and np.any(coef < 0):
            clamped = True
            coef, cov = self._clamped_fit(design, g, w, coef)
        resid = g - design @ coef
        if not absolute:
            dof = max(tau.size - 2, 1)
            cov = cov * float(resid ** 2 @ w) / dof
        self.result_ = DecayDecomposition(float(coef[0]), float(coef[1]), cov, clamped, resid)
        return self

    @staticmethod
    def _clamped_fit(design, g, w, coef):
        # refit the surviving column alone; the clamped one gets zero variance
        keep = 1 if coef[0] < 0 else 0
        col = design[:, keep]
        val = max(float(np.sum(w * col * g) / np.sum(w * col * col)), 0.0)
        out = np.zeros(2)
        out[keep] = val
        cov = np.zeros((2, 2))
        cov[keep, keep] = 1 / float(np.sum(w * col * col))
        return out, cov

    def predict(self, X):
        tau = np.ravel(np.asarray(X, dtype=float))
        return self.result_.back_action_coeff / tau + self.result_.gamma0


def fit_decay_decomposition(points, clamp=True):
    """Fit ``[(tau_seq, Gamma, sigma_Gamma), ...]`` and return a :class:`DecayDecomposition`."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] not in (2, 3):
        raise InputError("points must be (tau_seq, Gamma[, sigma]) rows")
    if arr.shape[0] < 3:
        raise InputError("need at least 3 points")
    weights = None
    if arr.shape[1] == 3:
        if np.any(arr[:, 2] <= 0):
            raise InputError("sigma must be > 0")
        weights = 1 / arr[:, 2] ** 2
    return BackActionDecomposition(clamp=clamp).fit(arr[:, 0], arr[:, 1], weights).result_
