"""Input validation helpers.

These follow the scikit-learn convention of ``check_*`` functions that
either return a cleaned copy of their input or raise.
"""

import numbers

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import InputError, PhysicsError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = -1e-10


def check_square_matrix(m, dims=(2, 4), name="matrix"):
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in dims:
        raise InputError(f"{name} must be square with dimension in {dims}, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InputError(f"{name} contains non-finite entries")
    return m


def check_hermitian(m, tol=HERMITIAN_TOL, name="operator"):
    m = check_square_matrix(m, name=name)
    if np.max(np.abs(m - m.conj().T)) > tol:
        raise PhysicsError(f"{name} is not Hermitian within {tol:g}")
    return m


def check_density_matrix(rho, dims=(2, 4), tol=TRACE_TOL):
    """Validate a density matrix and return it as a complex array.

    Hermiticity and unit trace are checked to ``tol``; eigenvalues may dip
    to ``-1e-10`` to allow for accumulated rounding. Nothing is renormalized.
    """
    rho = check_square_matrix(rho, dims=dims, name="density matrix")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise PhysicsError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise PhysicsError(f"density matrix trace is {tr.real:.15g}, expected 1")
    if np.linalg.eigvalsh(rho).min() < PSD_TOL:
        raise PhysicsError("density matrix has negative eigenvalues")
    return rho


def check_positive(value, name, allow_zero=False):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise InputError(f"{name} must be a finite real number, got {value!r}")
    if value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise InputError(f"{name} must be {bound}, got {value!r}")
    return float(value)


def check_fraction(value, name, low=0.0, high=1.0, low_open=False, high_open=False):
    value = float(value)
    bad_low = value <= low if low_open else value < low
    bad_high = value >= high if high_open else value > high
    if not np.isfinite(value) or bad_low or bad_high:
        lb = "(" if low_open else "["
        hb = ")" if high_open else "]"
        raise InputError(f"{name} must lie in {lb}{low}, {high}{hb}, got {value!r}")
    return value


def check_samples(values, min_length=1, name="trace"):
    """Return ``values`` as a finite 1-D float array of at least ``min_length`` samples."""
    try:
        arr = check_array(values, ensure_2d=False, dtype=float, input_name=name)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if arr.ndim != 1:
        raise InputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_length:
        raise InputError(f"{name} needs at least {min_length} samples, got {arr.size}")
    return arr
