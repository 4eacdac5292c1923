"""Linear-algebra kernel for one sensor spin-1/2 and one target spin-1/2.

Two-spin matrices are ordered ``sensor (x) target``, so basis index
``2*s + k`` holds sensor state ``s`` and target state ``k`` with
``0 = up / m=+1/2``. All angular frequencies are in rad/s, couplings in Hz,
times in seconds.

Unitaries are built from closed forms only: SU(2) rotations for single-spin
generators and diagonal phases for the secular coupling, so no matrix
exponential series is involved anywhere.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InputError, PhysicsError
from .validation import check_density_matrix, check_hermitian, check_square_matrix

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

_PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}

UP = np.array([[1, 0], [0, 0]], dtype=complex)
DOWN = np.array([[0, 0], [0, 1]], dtype=complex)


def pauli(axis):
    """Return the 2x2 Pauli matrix for ``axis`` in ``{'x', 'y', 'z'}``."""
    try:
        return _PAULI[axis].copy()
    except KeyError:
        raise InputError(f"unknown axis {axis!r}; expected 'x', 'y' or 'z'") from None


def spin_operator(axis):
    """Spin-1/2 operator ``sigma_axis / 2``."""
    return pauli(axis) / 2


def tensor(a, b):
    """Kronecker product of two single-spin matrices, first factor is the sensor."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise InputError(f"tensor expects two 2x2 matrices, got {a.shape} and {b.shape}")
    return np.kron(a, b)


def sensor_operator(axis):
    """``S_axis (x) 1`` on the two-spin space."""
    return tensor(spin_operator(axis), IDENTITY)


def target_operator(axis):
    """``1 (x) I_axis`` on the two-spin space."""
    return tensor(IDENTITY, spin_operator(axis))


def bloch_density(ix=0.0, iy=0.0, iz=0.0):
    """Single-spin density matrix with the given spin expectation values."""
    return IDENTITY / 2 + ix * SIGMA_X + iy * SIGMA_Y + iz * SIGMA_Z


def polarized_state(p=1.0):
    """``p |up><up| + (1 - p) 1/2``."""
    return p * UP + (1 - p) * IDENTITY / 2


def sensor_initial_state(fidelity=1.0):
    """Optically initialized sensor, ``(1 - f) 1 + (2f - 1) |0><0|``."""
    return (1 - fidelity) * IDENTITY + (2 * fidelity - 1) * UP


@dataclass(frozen=True)
class NuclearDrive:
    """Rotating-frame drive ``H = detuning I_z + rabi (1 + amp_error) I_phase``.

    ``I_phase = cos(phase) I_x + sin(phase) I_y``. Pulse durations are always
    derived from the nominal ``rabi`` so a nonzero ``amp_error`` over- or
    under-rotates.
    """

    rabi: float
    detuning: float = 0.0
    phase: float = 0.0
    amp_error: float = 0.0

    def __post_init__(self):
        for name in ("rabi", "detuning", "phase", "amp_error"):
            if not np.isfinite(getattr(self, name)):
                raise InputError(f"{name} must be finite")
        if self.rabi < 0:
            raise InputError("rabi frequency must be >= 0")
        if abs(self.amp_error) >= 1:
            raise InputError("|amp_error| must be < 1")

    def duration(self, angle):
        if angle == 0:
            return 0.0
        if self.rabi == 0:
            raise PhysicsError("a nonzero rotation angle needs a nonzero Rabi frequency")
        return abs(angle) / self.rabi

    def detuned_rabi(self):
        """``Lambda = sqrt((rabi (1+eps))^2 + detuning^2)``."""
        return float(np.hypot(self.rabi * (1 + self.amp_error), self.detuning))


def _su2(theta, n):
    """exp(-i theta/2 n.sigma) for a unit vector n."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return c * IDENTITY - 1j * s * (n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z)


def rotation_unitary(drive, angle):
    """Propagator of a nuclear pulse with nominal rotation ``angle``.

    The pulse lasts ``angle / drive.rabi`` and the propagator is
    ``exp(-i H t)`` evaluated in closed form with the detuned Rabi frequency.
    No global phase is removed: a resonant pi pulse is ``-i sigma_x``.
    """
    t = drive.duration(angle)
    lam = drive.detuned_rabi()
    if t == 0 or lam == 0:
        return IDENTITY.copy()
    drive_amp = drive.rabi * (1 + drive.amp_error)
    n = np.array([drive_amp * np.cos(drive.phase), drive_amp * np.sin(drive.phase), drive.detuning]) / lam
    return _su2(lam * t * np.sign(angle), n)


def ideal_rotation(angle, phase=0.0):
    """Instantaneous rotation by ``angle`` about the in-plane axis at ``phase``."""
    return _su2(angle, (np.cos(phase), np.sin(phase), 0.0))


def free_unitary(detuning, t):
    """exp(-i detuning I_z t)."""
    half = 0.5 * detuning * t
    return np.diag([np.exp(-1j * half), np.exp(1j * half)])


def coupling_unitary(a_zz, t):
    """exp(-i 2 pi a_zz S_z I_z t), diagonal in the product basis."""
    # S_z I_z eigenvalues in basis order |00>, |01>, |10>, |11>
    szi = np.array([0.25, -0.25, -0.25, 0.25])
    return np.diag(np.exp(-1j * 2 * np.pi * a_zz * t * szi))


def conjugate(rho, u):
    return u @ rho @ u.conj().T


def on_target(u, rho):
    """Lift a single-spin unitary to act on the target of ``rho`` (dim 2 or 4)."""
    return u if rho.shape[0] == 2 else np.kron(IDENTITY, u)


def on_sensor(u):
    return np.kron(u, IDENTITY)


def evolve_free(rho, detuning, t):
    """Free precession of the target, ``U = exp(-i detuning I_z t)``.

    Accepts a single-spin state or a two-spin state (acting on the target).
    """
    rho = check_density_matrix(rho)
    return conjugate(rho, on_target(free_unitary(detuning, t), rho))


def evolve_coupling(rho, a_zz, t):
    """Evolve a two-spin state under ``H = 2 pi a_zz S_z I_z`` for time ``t``."""
    rho = check_density_matrix(rho, dims=(4,))
    return conjugate(rho, coupling_unitary(a_zz, t))


def partial_trace(rho, keep="target"):
    """Reduce a two-spin state to the ``'sensor'`` or ``'target'`` factor."""
    rho = check_square_matrix(rho, dims=(4,), name="density matrix")
    r = rho.reshape(2, 2, 2, 2)
    if keep == "target":
        return np.einsum("ijik->jk", r)
    if keep == "sensor":
        return np.einsum("ijkj->ik", r)
    raise InputError(f"keep must be 'sensor' or 'target', got {keep!r}")


def expectation(rho, op):
    """Real expectation value ``Tr(rho O)`` of a Hermitian operator.

    Raises :class:`PhysicsError` if the imaginary part exceeds 1e-8, which
    only happens for non-Hermitian inputs.
    """
    rho = check_square_matrix(rho, name="density matrix")
    op = check_hermitian(op, tol=1e-10)
    if rho.shape != op.shape:
        raise InputError(f"dimension mismatch: state {rho.shape}, operator {op.shape}")
    value = np.trace(rho @ op)
    if abs(value.imag) > 1e-8:
        raise PhysicsError(f"expectation value has imaginary part {value.imag:g}")
    return float(value.real)


def bloch_vector(rho):
    """(<I_x>, <I_y>, <I_z>) of a single-spin state."""
    rho = np.asarray(rho)
    return np.array([
        rho[0, 1].real,
        -rho[0, 1].imag,
        0.5 * (rho[0, 0] - rho[1, 1]).real,
    ])
