import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdyne.exceptions import InputError, PhysicsError
from qdyne.spin import (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z, UP, DOWN, NuclearDrive, bloch_density,
                        bloch_vector, coupling_unitary, evolve_coupling, evolve_free, expectation,
                        partial_trace, pauli, polarized_state, rotation_unitary, spin_operator,
                        target_operator, tensor, conjugate)
from oracles import drive_hamiltonian, expm_series, rk4_propagator

angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)


def test_pauli_matrices():
    assert np.array_equal(pauli("x"), [[0, 1], [1, 0]])
    assert np.array_equal(pauli("y"), [[0, -1j], [1j, 0]])
    assert np.array_equal(pauli("z"), [[1, 0], [0, -1]])
    with pytest.raises(InputError):
        pauli("w")


def test_tensor_examples():
    assert np.allclose(tensor(IDENTITY / 2, IDENTITY / 2), np.eye(4) / 4)
    proj = tensor(UP, DOWN)
    assert proj[1, 1] == 1 and np.count_nonzero(proj) == 1
    assert np.array_equal(np.diag(tensor(SIGMA_Z, SIGMA_Z)).real, [1, -1, -1, 1])
    with pytest.raises(InputError):
        tensor(np.eye(4), IDENTITY)


def test_resonant_pi_pulse_is_minus_i_sigma_x():
    u = rotation_unitary(NuclearDrive(2 * math.pi * 15e3), math.pi)
    assert np.max(np.abs(u - (-1j) * SIGMA_X)) < 1e-12


def test_half_pi_pulse_equalizes_populations():
    u = rotation_unitary(NuclearDrive(2 * math.pi * 15e3), math.pi / 2)
    assert abs(expectation(conjugate(UP, u), spin_operator("z"))) < 1e-12


def test_detuned_pulse_matches_rk4_integration():
    drive = NuclearDrive(2 * math.pi * 25e3, 2 * math.pi * 3e3, 0.0, 0.04)
    u = rotation_unitary(drive, math.pi / 2)
    assert np.max(np.abs(u.conj().T @ u - IDENTITY)) < 1e-12
    h = drive_hamiltonian(drive.rabi, drive.detuning, 0.0, 0.04)
    ref = rk4_propagator(h, drive.duration(math.pi / 2))
    assert np.max(np.abs(u - ref)) < 1e-10
    # rotation angle Lambda t and tilt atan(detuning / driven rabi)
    lam_t = 2 * math.acos(np.clip(u[0, 0].real, -1, 1))
    assert lam_t == pytest.approx(drive.duration(math.pi / 2) * drive.detuned_rabi(), rel=1e-12)
    axis = np.array([-u[0, 1].imag, u[0, 1].real, -u[0, 0].imag]) / math.sin(lam_t / 2)
    tilt = math.atan2(axis[2], axis[0])
    assert tilt == pytest.approx(math.atan(drive.detuning / (drive.rabi * 1.04)), abs=1e-12)


def test_zero_rabi_with_angle_is_an_error():
    with pytest.raises(PhysicsError):
        rotation_unitary(NuclearDrive(0.0), math.pi)
    with pytest.raises(InputError):
        NuclearDrive(1.0, amp_error=1.0)


def test_evolve_free_examples():
    rho = 0.5 * (IDENTITY - SIGMA_Y)
    assert np.allclose(evolve_free(rho, 1e3, 0.0), rho, atol=1e-15)
    assert np.max(np.abs(evolve_free(rho, math.pi, 1.0) - 0.5 * (IDENTITY + SIGMA_Y))) < 1e-12


@given(st.floats(-10, 10), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_evolve_free_matches_series(beta, x, y, z):
    v = np.array([x, y, z])
    v = 0.5 * v / max(np.linalg.norm(v), 1.0)
    rho = bloch_density(*v)
    u = expm_series(-1j * beta * SIGMA_Z / 2)
    out = evolve_free(rho, beta, 1.0)
    assert np.max(np.abs(out - u @ rho @ u.conj().T)) < 1e-12
    assert bloch_vector(out)[2] == pytest.approx(v[2], abs=1e-12)


@given(st.floats(-1e4, 1e4), st.floats(0, 1e-3), st.floats(0, 1e-3))
def test_evolve_free_group_property(w, t1, t2):
    rho = bloch_density(0.3, -0.2, 0.1)
    a = evolve_free(evolve_free(rho, w, t1), w, t2)
    b = evolve_free(rho, w, t1 + t2)
    assert np.max(np.abs(a - b)) < 1e-12


def test_rotation_grid_gives_cosine_population():
    drive = NuclearDrive(2 * math.pi * 10e3)
    for theta in np.linspace(0, 2 * math.pi, 100):
        out = conjugate(UP, rotation_unitary(drive, theta))
        assert expectation(out, spin_operator("z")) == pytest.approx(0.5 * math.cos(theta), abs=1e-12)


@settings(max_examples=50)
@given(angles, angles, st.floats(-0.5, 0.5), st.floats(-5e4, 5e4))
def test_unitaries_are_unitary(angle, phase, eps, detuning):
    u = rotation_unitary(NuclearDrive(2 * math.pi * 20e3, detuning, phase, eps), angle)
    assert np.max(np.abs(u.conj().T @ u - IDENTITY)) < 1e-12


def test_coupling_examples():
    rho = tensor(bloch_density(0, -0.5, 0), bloch_density(0.2, 0.1, 0.3))
    assert np.allclose(evolve_coupling(rho, 6e3, 0.0), rho, atol=1e-15)
    diag = np.diag([0.4, 0.1, 0.3, 0.2]).astype(complex)
    assert np.allclose(np.diag(evolve_coupling(diag, 6e3, 1e-4)), np.diag(diag))
    u = coupling_unitary(1e3, 2e-4)
    ref = expm_series(-1j * 2 * math.pi * 1e3 * 2e-4 * np.kron(SIGMA_Z / 2, SIGMA_Z / 2))
    assert np.max(np.abs(u - ref)) < 1e-12


def test_partial_trace_examples():
    a, b = bloch_density(0.1, 0.2, 0.3), bloch_density(-0.3, 0.0, 0.2)
    assert np.max(np.abs(partial_trace(tensor(a, b), "target") - b)) < 1e-15
    assert np.max(np.abs(partial_trace(tensor(a, b), "sensor") - a)) < 1e-15
    psi = np.array([1, 0, 0, 1]) / math.sqrt(2)
    bell = np.outer(psi, psi.conj())
    for keep in ("sensor", "target"):
        assert np.allclose(partial_trace(bell, keep), IDENTITY / 2)
    with pytest.raises(InputError):
        partial_trace(bell, "both")


def test_partial_trace_after_ideal_coupling():
    # f = 1: the sensor stays in |0>, so the target precesses by phi = pi a tau
    phi = math.pi / 2
    rho = tensor(UP, bloch_density(0.5, 0, 0))
    out = partial_trace(evolve_coupling(rho, 1.0, phi / math.pi), "target")
    ix, iy, _ = bloch_vector(out)
    # the S_z = +1/2 manifold rotates the target by -phi about z
    assert 2 * ix == pytest.approx(math.cos(phi), abs=1e-12)
    assert 2 * abs(iy) == pytest.approx(math.sin(phi), abs=1e-12)


def test_expectation_examples():
    assert expectation(UP, spin_operator("z")) == 0.5
    for op in (SIGMA_X, SIGMA_Y, SIGMA_Z):
        assert expectation(IDENTITY / 2, op) == 0
    with pytest.raises(PhysicsError):
        expectation(np.array([[0.5, 1], [0, 0.5]]), SIGMA_Y)


def test_expectation_after_free_precession_rotation():
    # (pi/2) - free precession - (3pi/2) stores cos(w tau) / 2 in <I_z>
    w, tau = 2 * math.pi * 3e3, 83.333e-6
    drive = NuclearDrive(2 * math.pi * 15e3)
    rho = conjugate(polarized_state(), rotation_unitary(drive, math.pi / 2))
    rho = evolve_free(rho, w, tau)
    rho = conjugate(rho, rotation_unitary(drive, 3 * math.pi / 2))
    assert expectation(rho, spin_operator("z")) == pytest.approx(0.5 * math.cos(w * tau), abs=1e-12)


@given(st.floats(-1e5, 1e5), st.floats(0, 1e-3))
def test_evolution_preserves_trace_and_hermiticity(a, t):
    rho = tensor(bloch_density(0.1, -0.3, 0.2), bloch_density(0.2, 0.2, -0.1))
    out = evolve_coupling(evolve_free(rho, a, t), a, t)
    assert abs(np.trace(out) - 1) < 1e-12
    assert np.max(np.abs(out - out.conj().T)) < 1e-12


def test_target_operator_layout():
    assert np.array_equal(np.diag(target_operator("z")).real, [0.5, -0.5, 0.5, -0.5])
