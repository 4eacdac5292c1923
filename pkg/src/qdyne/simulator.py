"""Pulse-level simulation of sensor/target protocols.

The target spin is carried as a 2x2 density matrix while the sensor is idle
and as a 4x4 ``sensor (x) target`` state between sensor preparation and
optical readout. Each readout records one trace entry, traces the sensor
out and re-initializes it with the readout's fidelity.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import math
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import InputError, PhysicsError
from .sequence.elements import (FreeEvolution, Interaction, NuclearPulse, OpticalReadout,
                                PhaseStep, Polarize, SensorPulse, Sequence, WeakMeasurement)
from .sequence.builders import with_nuclear_drive
from .spin import (SIGMA_X, SIGMA_Y, NuclearDrive, conjugate, coupling_unitary, evolve_free,
                   free_unitary, ideal_rotation, on_sensor, on_target, partial_trace,
                   polarized_state, rotation_unitary, sensor_initial_state, sensor_operator,
                   tensor)
from .validation import check_density_matrix, check_fraction

# Coupling phase per unit a_zz*tau: H = 2 pi a_zz S_z I_z splits the target
# precession by +-pi a_zz for the two sensor states.
COUPLING_PHASE = math.pi

TRACE_KINDS = ("expectation_Iz", "expectation_Sz", "photon_counts")


@dataclass(frozen=True)
class SimConfig:
    """Simulation switches.

    Parameters
    ----------
    shot_noise : bool
        Record Poisson photon counts instead of exact expectation values.
    rng_seed : int
        Seed of the photon-count generator.
    shots_per_readout : int
        Repetitions summed into one recorded count.
    sensor_T2star : float, optional
        Sensor dephasing time [s]; scales the readout contrast by
        ``exp(-t_int / T2*)`` with ``t_int`` the interaction time since the
        sensor was prepared.
    sensor_T1 : float, optional
        Sensor lifetime [s]; scales every recorded value by ``exp(-t / T1)``
        with ``t`` the elapsed sequence time.
    nuclear_T2 : float, optional
        Pure dephasing time of the target [s], applied during every timed
        element.
    idle_coupling : float, optional
        Coupling [Hz] acting through the imperfectly initialized sensor
        during target free evolution. Defaults to the ``a_zz`` of the first
        interaction element in the sequence (0 if there is none).
    """

    shot_noise: bool = False
    rng_seed: int = 0
    shots_per_readout: int = 1
    sensor_T2star: Optional[float] = None
    sensor_T1: Optional[float] = None
    nuclear_T2: Optional[float] = None
    idle_coupling: Optional[float] = None

    def __post_init__(self):
        if not isinstance(self.shots_per_readout, (int, np.integer)) or self.shots_per_readout < 1:
            raise InputError("shots_per_readout must be an integer >= 1")
        for name in ("sensor_T2star", "sensor_T1", "nuclear_T2"):
            v = getattr(self, name)
            if v is not None and not (np.isfinite(v) and v > 0):
                raise InputError(f"{name} must be > 0 when given")

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(eq=False)
class TimeTrace:
    """Uniformly sampled trace with sampling interval ``dt`` [s]."""

    values: np.ndarray
    dt: float
    kind: str = "expectation_Sz"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise InputError("trace values must be one-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise InputError("trace values must be finite")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise InputError(f"sampling interval must be > 0, got {self.dt!r}")
        if self.kind not in TRACE_KINDS:
            raise InputError(f"unknown trace kind {self.kind!r}")

    def __len__(self):
        return self.values.size

    @property
    def times(self):
        return np.arange(self.values.size) * self.dt


@dataclass(frozen=True)
class BackActionState:
    """Target Bloch components ``(<I_x>, <I_z>)`` between weak measurements."""

    ix: float
    iz: float

    def __post_init__(self):
        if self.ix ** 2 + self.iz ** 2 > 0.25 + 1e-12:
            raise InputError("Bloch components exceed the pure-state norm 1/2")

    @property
    def norm(self):
        return math.hypot(self.ix, self.iz)


class BackActionEigenvalues(NamedTuple):
    plus: complex
    minus: complex
    closed_form: bool


# ---------------------------------------------------------------- closed forms

def heterodyne_expectation(n, detuning, tau):
    """``cos(detuning * n * tau)``, the ideal signal of the ``n``-th sample."""
    if n < 0:
        raise InputError("sample index must be >= 0")
    return math.cos(detuning * n * tau)


def _check_alpha(alpha):
    if not (np.isfinite(alpha) and 0 <= alpha < math.pi):
        raise InputError(f"alpha must lie in [0, pi), got {alpha!r}")


def weak_measure(rho_total, alpha):
    """Closed-form weak measurement of a product state.

    The sensor factor must have been prepared on the equator along ``-y``
    (``(pi/2)_x`` acting on ``|0>``), optionally shrunk by an imperfect
    initialization. After the coupling phase ``alpha`` and a ``(pi/2)_y``
    readout pulse the sensor population gives

        <S_z> = -1/2 * L * sin(alpha) * 2 <I_z>,   L = -2 <S_y>,

    which for a pure sensor and ``2<I_z> = cos(beta)`` is
    ``-1/2 cos(beta) sin(alpha)``. Averaging over both sensor outcomes
    leaves ``I_z`` untouched and shrinks the transverse components by
    ``cos(alpha)``.

    Returns
    -------
    signal : float
    rho_avg : ndarray, shape (2, 2)
    """
    _check_alpha(alpha)
    rho = check_density_matrix(rho_total, dims=(4,))
    rs = partial_trace(rho, keep="sensor")
    rk = partial_trace(rho, keep="target")
    if np.max(np.abs(rho - np.kron(rs, rk))) > 1e-9:
        raise PhysicsError("weak_measure needs a sensor-target product state")
    if abs(rs[0, 0] - rs[1, 1]) > 1e-9 or abs(rs[0, 1].real) > 1e-9:
        raise PhysicsError("sensor is not prepared on the -y equator")
    length = 2 * rs[0, 1].imag  # -2 <S_y>
    iz = 0.5 * (rk[0, 0] - rk[1, 1]).real
    signal = -0.5 * length * math.sin(alpha) * 2 * iz
    rho_avg = rk.copy()
    rho_avg[0, 1] *= math.cos(alpha)
    rho_avg[1, 0] *= math.cos(alpha)
    return float(signal), rho_avg


def back_action_matrix(beta, alpha):
    ca, cb, sb = math.cos(alpha), math.cos(beta), math.sin(beta)
    return np.array([[ca * cb, -sb], [ca * sb, cb]])


def back_action_recursion(start, beta, alpha, m):
    """Apply ``m`` rotate-then-measure steps to ``(<I_x>, <I_z>)``."""
    if not isinstance(m, (int, np.integer)) or m < 0:
        raise InputError("m must be an integer >= 0")
    v = np.linalg.matrix_power(back_action_matrix(beta, alpha), int(m)) @ [start.ix, start.iz]
    # clip rounding overshoot so the result stays a valid state
    scale = min(1.0, 0.5 / max(math.hypot(*v), 1e-300))
    return BackActionState(float(v[0] * scale), float(v[1] * scale))


def back_action_eigenvalues(beta, alpha):
    """Eigenvalues of the recursion matrix.

    Uses ``lambda = (cos b +- i sin b sqrt(1 - mu^2/sin^2 b)) cos^2(a/2)``
    with ``mu = tan^2(a/2)``. The square root is taken on the complex plane
    so the form also covers ``|sin b| < mu``. When ``sin b == 0`` and
    ``mu > 0`` it is undefined, and the numeric eigenvalues are returned
    with ``closed_form=False``.
    """
    mu = math.tan(alpha / 2) ** 2
    sb, cb = math.sin(beta), math.cos(beta)
    c2 = math.cos(alpha / 2) ** 2
    if abs(sb) < 1e-15:
        if mu == 0:
            return BackActionEigenvalues(complex(cb), complex(cb), True)
        ev = np.linalg.eigvals(back_action_matrix(beta, alpha))
        ev = sorted(ev, key=lambda z: (-z.imag, -z.real))
        return BackActionEigenvalues(complex(ev[0]), complex(ev[1]), False)
    root = np.sqrt(complex(1 - mu ** 2 / sb ** 2))
    plus = (cb + 1j * sb * root) * c2
    minus = (cb - 1j * sb * root) * c2
    return BackActionEigenvalues(complex(plus), complex(minus), True)


def infidelity_channel(rho_nuclear, f, a_zz, tau):
    """Target state after coupling to an imperfectly initialized sensor.

    Evaluates ``Tr_sensor[U (rho_sensor (x) rho) U^dagger]`` on the full 4x4
    space with ``rho_sensor = (1-f) 1 + (2f-1)|0><0|`` and ``U`` the secular
    coupling propagator over ``tau``.
    """
    f = check_fraction(f, "f", 0.5, 1.0, low_open=True)
    rho = check_density_matrix(rho_nuclear, dims=(2,))
    full = tensor(sensor_initial_state(f), rho)
    return partial_trace(conjugate(full, coupling_unitary(a_zz, tau)), keep="target")


def transverse_magnitude(f, phi):
    """``1/2 sqrt(cos^2 phi + (2f-1)^2 sin^2 phi)`` for an initially transverse target."""
    return 0.5 * math.sqrt(math.cos(phi) ** 2 + (2 * f - 1) ** 2 * math.sin(phi) ** 2)


def infidelity_decay_rate(f, a_zz, tau, mode="exact"):
    """Decay rate [1/s] of the transverse target magnetization per interval ``tau``.

    ``mode='exact'`` gives ``-ln(cos^2 phi + (2f-1)^2 sin^2 phi) / (2 tau)``,
    ``mode='taylor'`` its leading term ``2 f (1-f) sin^2 phi / tau``, with
    ``phi = pi a_zz tau``.
    """
    f = check_fraction(f, "f", 0.5, 1.0, low_open=True)
    if not tau > 0:
        raise InputError("tau must be > 0")
    phi = COUPLING_PHASE * a_zz * tau
    if mode == "exact":
        arg = math.cos(phi) ** 2 + (2 * f - 1) ** 2 * math.sin(phi) ** 2
        if arg <= 0:
            raise PhysicsError("transverse magnetization fully lost; decay rate is infinite")
        return -0.5 * math.log(arg) / tau
    if mode == "taylor":
        return 2 * f * (1 - f) * math.sin(phi) ** 2 / tau
    raise InputError(f"mode must be 'exact' or 'taylor', got {mode!r}")


# ---------------------------------------------------------------- simulator

_SZ = sensor_operator("z")


def _weak_unitary(alpha, phase):
    """exp(-i 2 alpha S_z I_phase) in closed form (the generator squares to 1/16)."""
    i_phi = 0.5 * (math.cos(phase) * SIGMA_X + math.sin(phase) * SIGMA_Y)
    gen = np.kron(0.5 * np.diag([1.0, -1.0]), i_phi)
    return math.cos(alpha / 2) * np.eye(4) - 4j * math.sin(alpha / 2) * gen


def _dephase(rho, t, t2):
    if t2 is None or t == 0:
        return rho
    k = math.exp(-t / t2)
    if rho.shape[0] == 2:
        out = rho.copy()
        out[0, 1] *= k
        out[1, 0] *= k
        return out
    # target coherences sit on odd offsets inside each sensor block
    mask = np.ones((4, 4))
    for i in range(4):
        for j in range(4):
            if (i % 2) != (j % 2):
                mask[i, j] = k
    return rho * mask


def _idle_channel(rho, f, a_zz, t):
    """Idle-sensor coupling in the frame co-rotating with the sensor ``|0>`` manifold.

    A perfectly initialized sensor then leaves the target untouched.
    """
    if f == 1.0 or a_zz == 0 or t == 0:
        return rho
    return evolve_free(infidelity_channel(rho, f, a_zz, t), -COUPLING_PHASE * a_zz, t)


def _first_fidelity(elements):
    for el in elements:
        if isinstance(el, OpticalReadout):
            return el.init_fidelity
    return 1.0


def _first_coupling(elements):
    for el in elements:
        if isinstance(el, Interaction):
            return el.a_zz
    return 0.0


def run_sequence(seq, cfg=None, rng=None):
    """Simulate ``seq`` and return one trace entry per optical readout.

    Exact mode records ``<S_z>`` after each sensor readout (or ``<I_z>`` for
    readouts with ``target='nuclear'``). With ``cfg.shot_noise`` the sensor
    values are turned into Poisson counts with mean
    ``shots * n0 * (1 + 2 C <S_z>)``.

    Parameters
    ----------
    seq : Sequence
    cfg : SimConfig, optional
    rng : numpy.random.Generator, optional
        Overrides the generator seeded from ``cfg.rng_seed``.

    Raises
    ------
    PhysicsError
        On an interaction without a prepared sensor, or on a readout list
        that mixes sensor and target readouts.
    """
    if not isinstance(seq, Sequence):
        raise InputError("run_sequence expects a Sequence")
    cfg = cfg or SimConfig()
    elements = list(seq.flatten())
    readouts = [el for el in elements if isinstance(el, OpticalReadout)]
    if not readouts:
        raise InputError("sequence contains no readout")
    targets = {el.target for el in readouts}
    if len(targets) > 1:
        raise PhysicsError("sequence mixes sensor and nuclear readouts")
    nuclear_kind = targets == {"nuclear"}
    if cfg.shot_noise and nuclear_kind:
        raise PhysicsError("photon counts need sensor readouts")
    if rng is None and cfg.shot_noise:
        rng = np.random.default_rng(cfg.rng_seed)

    a_idle = cfg.idle_coupling if cfg.idle_coupling is not None else _first_coupling(elements)
    fid = _first_fidelity(elements)
    nuc = polarized_state(1.0)
    full = None  # 4x4 state while the sensor is prepared
    ref_phase = 0.0
    detuning = 0.0
    t = 0.0
    t_int = 0.0
    values, times = [], []

    def prepare():
        return np.kron(sensor_initial_state(fid), nuc)

    for el in elements:
        if isinstance(el, Polarize):
            if full is not None:
                full = np.kron(partial_trace(full, keep="sensor"), polarized_state(el.polarization))
            else:
                nuc = polarized_state(el.polarization)
        elif isinstance(el, PhaseStep):
            ref_phase += el.step
        elif isinstance(el, NuclearPulse):
            drive = NuclearDrive(el.rabi, el.detuning, el.phase + ref_phase, el.amp_error)
            u = rotation_unitary(drive, el.angle)
            dur = el.duration
            if full is None:
                nuc = _dephase(conjugate(nuc, u), dur, cfg.nuclear_T2)
            else:
                full = _dephase(conjugate(full, on_target(u, full)), dur, cfg.nuclear_T2)
            detuning = el.detuning
            t += dur
        elif isinstance(el, FreeEvolution):
            dur = el.duration
            if full is None:
                nuc = _idle_channel(nuc, fid, a_idle, dur)
                nuc = _dephase(conjugate(nuc, free_unitary(detuning, dur)), dur, cfg.nuclear_T2)
            else:
                u = on_target(free_unitary(detuning, dur), full)
                full = _dephase(conjugate(full, u), dur, cfg.nuclear_T2)
            t += dur
        elif isinstance(el, SensorPulse):
            if full is None:
                full = prepare()
            full = conjugate(full, on_sensor(ideal_rotation(el.angle, el.phase)))
        elif isinstance(el, Interaction):
            if full is None:
                raise PhysicsError("interaction element without a preceding sensor preparation")
            dur = el.duration
            u = coupling_unitary(el.a_zz, dur) @ on_target(free_unitary(detuning, dur), full)
            full = _dephase(conjugate(full, u), dur, cfg.nuclear_T2)
            t += dur
            t_int += dur
        elif isinstance(el, WeakMeasurement):
            if full is not None:
                raise PhysicsError("weak measurement while the sensor is already prepared")
            full = prepare()
            full = conjugate(full, on_sensor(ideal_rotation(math.pi / 2, 0.0)))
            full = conjugate(full, _weak_unitary(el.alpha, el.phase + ref_phase))
            full = conjugate(full, on_sensor(ideal_rotation(math.pi / 2, math.pi / 2)))
            dur = el.duration
            if dur:
                u = on_target(free_unitary(detuning, dur), full)
                full = _dephase(conjugate(full, u), dur, cfg.nuclear_T2)
            t += dur
            t_int += dur
        elif isinstance(el, OpticalReadout):
            times.append(t)
            if el.target == "nuclear":
                state = nuc if full is None else partial_trace(full, keep="target")
                value = 0.5 * float((state[0, 0] - state[1, 1]).real)
            else:
                if full is None:
                    value = fid - 0.5
                else:
                    value = float(np.trace(full @ _SZ).real)
                    nuc = partial_trace(full, keep="target")
                    full = None
                if cfg.sensor_T2star is not None:
                    value *= math.exp(-t_int / cfg.sensor_T2star)
            if cfg.sensor_T1 is not None:
                value *= math.exp(-t / cfg.sensor_T1)
            if cfg.shot_noise:
                mean = cfg.shots_per_readout * el.mean_counts * (1 + 2 * el.contrast * value)
                value = float(rng.poisson(max(mean, 0.0)))
            values.append(value)
            fid = el.init_fidelity
            t_int = 0.0
        else:  # pragma: no cover - Sequence validates element types
            raise InputError(f"unsupported element {el!r}")

    if len(times) > 1:
        dt = float(np.mean(np.diff(times)))
    else:
        dt = times[0] if times[0] > 0 else 1.0
    kind = "photon_counts" if cfg.shot_noise else ("expectation_Iz" if nuclear_kind else "expectation_Sz")
    meta = {"sampling_interval_s": dt, "seed": cfg.rng_seed, "config": cfg.as_dict(),
            "uniform": bool(len(times) < 3 or np.ptp(np.diff(times)) <= 1e-12 * dt)}
    return TimeTrace(np.array(values), dt, kind, meta)


def _sweep_point(args):
    seq, cfg, ss = args
    rng = np.random.default_rng(ss) if cfg.shot_noise else None
    return run_sequence(seq, cfg, rng=rng)


def sweep_detuning(template, detunings, amp_error=None, rabi=None, cfg=None, n_jobs=1):
    """Run ``template`` once per rf detuning [rad/s].

    Every rf pulse of the template is rewritten with the detuning (and the
    optional amplitude error and Rabi frequency). Photon-mode sweeps give
    each point its own generator spawned from ``cfg.rng_seed``, so the
    result does not depend on ``n_jobs``.

    Returns
    -------
    list of (float, TimeTrace)
    """
    detunings = [float(d) for d in np.atleast_1d(detunings)]
    if not detunings:
        raise InputError("detuning list is empty")
    if not isinstance(n_jobs, (int, np.integer)) or n_jobs < 1:
        raise InputError("n_jobs must be an integer >= 1")
    cfg = cfg or SimConfig()
    streams = np.random.SeedSequence(cfg.rng_seed).spawn(len(detunings))
    tasks = [(with_nuclear_drive(template, detuning=d, amp_error=amp_error, rabi=rabi), cfg, ss)
             for d, ss in zip(detunings, streams)]
    if n_jobs == 1 or len(tasks) == 1:
        traces = [_sweep_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(n_jobs, len(tasks))) as pool:
            traces = list(pool.map(_sweep_point, tasks))
    return list(zip(detunings, traces))


__all__ = [
    "COUPLING_PHASE", "SimConfig", "TimeTrace", "BackActionState", "BackActionEigenvalues",
    "heterodyne_expectation", "weak_measure", "back_action_matrix", "back_action_recursion",
    "back_action_eigenvalues", "infidelity_channel", "transverse_magnitude",
    "infidelity_decay_rate", "run_sequence", "sweep_detuning",
]
