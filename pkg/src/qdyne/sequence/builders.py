"""Builders for the three reference protocols.

All builders are deterministic and return plain :class:`Sequence` values that
can be serialized, edited and re-run.
"""

import math

from ..exceptions import InputError
from .elements import (FreeEvolution, Interaction, NuclearPulse, OpticalReadout, PhaseStep,
                       Polarize, RepeatBlock, SensorPulse, Sequence, WeakMeasurement)

HALF_PI = math.pi / 2
RAMSEY_PHASE = math.radians(72)

# Residual per-block overhead of the carbon protocol. The itemized times
# (10 us precession, 14.918 us Ramsey, 66 us of rf, 1 us repolarization,
# 10 us post-rf waits) sum to 101.918 us; the reported 105.5506 us sampling
# interval leaves 3.6326 us for readout and microwave overhead.
ENDOR_EXTRA_WAIT = 1e-6 + 10e-6 + 3.6326e-6


def _require_positive(**kwargs):
    for name, value in kwargs.items():
        if not value > 0:
            raise InputError(f"{name} must be > 0, got {value!r}")


def _require_count(m):
    if not isinstance(m, int) or m < 1:
        raise InputError(f"repetition count must be an integer >= 1, got {m!r}")


def build_n14_response(tau1=83.333e-6, tau2=10e-6, rabi_period=41e-6, detuning=0.0,
                       amp_error=0.0, m=30, readout_each_block=False, readout_fidelity=1.0):
    """Frequency-response protocol with projective nuclear readout.

    The start pulse ``(pi/2)`` is followed by ``m`` blocks of
    ``[wait tau1, pi/2, wait tau2, pi, wait tau2, pi/2]``, each lasting
    ``tau1 + 2 tau2 + rabi_period``. The nuclear projection is read right
    after the ``pi/2`` that ends the ``m``-th precession window, i.e. where
    the sensor would interrogate the stored ``I_z``.

    With ``readout_each_block`` a (non-destructive, ensemble-averaged)
    readout is placed in every block, giving the whole ``M = 1..m`` response
    curve from one run, sampled every block period.

    Parameters
    ----------
    tau1, tau2 : float
        Precession window and half of the echoed storage window [s].
    rabi_period : float
        Duration of a nominal 2 pi rotation [s]; sets ``rabi = 2 pi / rabi_period``.
    detuning : float
        rf offset from the nuclear resonance [rad/s].
    amp_error : float
        Relative Rabi-frequency calibration error.
    """
    _require_positive(tau1=tau1, tau2=tau2, rabi_period=rabi_period)
    _require_count(m)
    rabi = 2 * math.pi / rabi_period

    def rf(angle):
        return NuclearPulse(angle, 0.0, rabi, detuning, amp_error)

    readout = OpticalReadout(init_fidelity=readout_fidelity, target="nuclear")
    head = [FreeEvolution(tau1), rf(HALF_PI)]
    tail = [FreeEvolution(tau2), rf(math.pi), FreeEvolution(tau2), rf(HALF_PI)]
    if readout_each_block:
        body = (RepeatBlock(m, tuple(head + [readout] + tail)),)
    else:
        body = ((RepeatBlock(m - 1, tuple(head + tail)),) if m > 1 else ()) + tuple(head) + (readout,)
    return Sequence((rf(HALF_PI),) + body)


def build_endor_qdyne(t_free=10e-6, t_ramsey=14.918e-6, rabi_period=66e-6, a_zz=6e3,
                      phase_step=HALF_PI, extra_wait=ENDOR_EXTRA_WAIT, m=60, ramsey_phase=RAMSEY_PHASE,
                      polarization=1.0, readout_fidelity=1.0, contrast=0.3, mean_counts=0.02,
                      detuning=0.0):
    """Double-resonance heterodyne protocol.

    ``Polarize``, ``(pi/2)_ref`` and then ``m`` blocks of::

        phasestep (+phase_step), wait t_free, (3pi/2)_ref+k*step,
        (pi/2)_x, interact t_ramsey, (pi/2)_ramsey_phase, readout,
        wait extra_wait, (pi/2)_ref+k*step

    so the sampling interval is ``t_free + t_ramsey + rabi_period + extra_wait``.
    ``ramsey_phase`` is the phase of the second sensor pulse. At 90 deg the
    trace has zero mean; other values add a constant and scale the
    oscillation by ``sin(ramsey_phase)``.
    """
    _require_positive(t_free=t_free, t_ramsey=t_ramsey, rabi_period=rabi_period)
    if extra_wait < 0:
        raise InputError("extra_wait must be >= 0")
    _require_count(m)
    rabi = 2 * math.pi / rabi_period
    block = (
        PhaseStep(phase_step),
        FreeEvolution(t_free),
        NuclearPulse(3 * HALF_PI, 0.0, rabi, detuning),
        SensorPulse(HALF_PI, 0.0),
        Interaction(t_ramsey, a_zz),
        SensorPulse(HALF_PI, ramsey_phase),
        OpticalReadout(contrast, mean_counts, readout_fidelity),
        FreeEvolution(extra_wait),
        NuclearPulse(HALF_PI, 0.0, rabi, detuning),
    )
    return Sequence((Polarize(polarization), NuclearPulse(HALF_PI, 0.0, rabi, detuning),
                     RepeatBlock(m, block)))


def build_conventional_qdyne(alpha, sampling_interval, m, detuning=0.0, rabi=2 * math.pi * 15e3,
                             block_duration=0.0, measure_phase=0.0, readout_fidelity=1.0,
                             polarization=1.0):
    """Dynamical-decoupling heterodyne baseline.

    The sensing block is an effective transverse weak measurement of
    strength ``alpha`` lasting ``block_duration``; every block is padded with
    a wait so that it spans exactly ``sampling_interval``. ``detuning`` is the
    precession offset of the target in the rf frame, which sets the sampled
    signal frequency.
    """
    if not 0 <= alpha < HALF_PI:
        raise InputError("alpha must satisfy 0 <= alpha < pi/2")
    _require_positive(sampling_interval=sampling_interval)
    _require_count(m)
    if block_duration > sampling_interval:
        raise InputError("block_duration exceeds the sampling interval")
    block = (
        WeakMeasurement(alpha, measure_phase, block_duration),
        OpticalReadout(init_fidelity=readout_fidelity),
        FreeEvolution(sampling_interval - block_duration),
    )
    return Sequence((Polarize(polarization), NuclearPulse(HALF_PI, 0.0, rabi, detuning),
                     RepeatBlock(m, block)))


def with_nuclear_drive(seq, detuning=None, amp_error=None, rabi=None):
    """Copy of ``seq`` with the given fields replaced on every rf pulse."""
    def fix(items):
        out = []
        for it in items:
            if isinstance(it, RepeatBlock):
                out.append(RepeatBlock(it.count, fix(it.body)))
            elif isinstance(it, NuclearPulse):
                out.append(NuclearPulse(
                    it.angle, it.phase,
                    it.rabi if rabi is None else rabi,
                    it.detuning if detuning is None else detuning,
                    it.amp_error if amp_error is None else amp_error,
                ))
            else:
                out.append(it)
        return tuple(out)

    return Sequence(fix(seq.elements))
