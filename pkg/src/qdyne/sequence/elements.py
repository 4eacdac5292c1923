"""Immutable pulse-program elements and timing analysis."""

from dataclasses import dataclass, field, fields
import math

import numpy as np

from ..exceptions import InputError

MAX_NESTING = 2


def _finite(obj):
    for f in fields(obj):
        v = getattr(obj, f.name)
        if isinstance(v, float) and not math.isfinite(v):
            raise InputError(f"{type(obj).__name__}.{f.name} must be finite, got {v}")


@dataclass(frozen=True)
class NuclearPulse:
    """rf pulse on the target spin. ``rabi`` and ``detuning`` in rad/s."""

    angle: float
    phase: float = 0.0
    rabi: float = 2 * math.pi * 15e3
    detuning: float = 0.0
    amp_error: float = 0.0

    def __post_init__(self):
        _finite(self)
        if self.rabi <= 0:
            raise InputError("rf pulse needs rabi > 0")
        if abs(self.amp_error) >= 1:
            raise InputError("rf pulse needs |eps| < 1")

    @property
    def duration(self):
        return abs(self.angle) / self.rabi


@dataclass(frozen=True)
class SensorPulse:
    """Ideal, instantaneous microwave pulse on the sensor spin."""

    angle: float
    phase: float = 0.0
    duration = 0.0

    def __post_init__(self):
        _finite(self)


@dataclass(frozen=True)
class FreeEvolution:
    duration: float

    def __post_init__(self):
        _finite(self)
        if self.duration < 0:
            raise InputError(f"negative duration {self.duration}")


@dataclass(frozen=True)
class Interaction:
    """Secular sensor-target coupling ``2 pi a_zz S_z I_z`` for ``duration`` seconds.

    ``a_zz`` is in Hz.
    """

    duration: float
    a_zz: float

    def __post_init__(self):
        _finite(self)
        if self.duration < 0:
            raise InputError(f"negative duration {self.duration}")


@dataclass(frozen=True)
class WeakMeasurement:
    """Effective transverse weak measurement of strength ``alpha``.

    Stands in for a dynamical-decoupling sensing block: the sensor is
    prepared, picks up a phase ``+-alpha`` conditioned on the target
    projection along the in-plane axis at ``phase``, and is rotated to the
    population basis. ``duration`` is dead time spent in the block.
    """

    alpha: float
    phase: float = 0.0
    duration: float = 0.0

    def __post_init__(self):
        _finite(self)
        if not 0 <= self.alpha < math.pi / 2:
            raise InputError("weak measurement strength must satisfy 0 <= alpha < pi/2")
        if self.duration < 0:
            raise InputError(f"negative duration {self.duration}")


@dataclass(frozen=True)
class OpticalReadout:
    """Optical readout and re-initialization of the sensor.

    ``target='nuclear'`` records the target projection directly, which is how
    an ideal repeated single-shot nuclear readout is represented.
    """

    contrast: float = 0.3
    mean_counts: float = 0.02
    init_fidelity: float = 1.0
    target: str = "sensor"
    duration = 0.0

    def __post_init__(self):
        _finite(self)
        if not 0 < self.contrast <= 1:
            raise InputError("readout contrast must lie in (0, 1]")
        if self.mean_counts < 0:
            raise InputError("mean counts must be >= 0")
        if not 0.5 < self.init_fidelity <= 1:
            raise InputError("init fidelity must lie in (0.5, 1]")
        if self.target not in ("sensor", "nuclear"):
            raise InputError("readout target must be 'sensor' or 'nuclear'")


@dataclass(frozen=True)
class Polarize:
    polarization: float = 1.0
    duration = 0.0

    def __post_init__(self):
        _finite(self)
        if not 0 <= self.polarization <= 1:
            raise InputError("polarization must lie in [0, 1]")


@dataclass(frozen=True)
class PhaseStep:
    """Advance the rf reference phase of all later rf pulses by ``step`` rad."""

    step: float
    duration = 0.0

    def __post_init__(self):
        _finite(self)


@dataclass(frozen=True)
class RepeatBlock:
    count: int
    body: tuple = ()

    def __post_init__(self):
        if not isinstance(self.count, int) or self.count < 1:
            raise InputError(f"repeat count must be an integer >= 1, got {self.count!r}")
        object.__setattr__(self, "body", tuple(self.body))
        if _depth(self.body) + 1 > MAX_NESTING:
            raise InputError(f"repeat blocks nest at most {MAX_NESTING} deep")


ELEMENT_TYPES = (NuclearPulse, SensorPulse, FreeEvolution, Interaction, WeakMeasurement,
                 OpticalReadout, Polarize, PhaseStep)


def _depth(items):
    return max((1 + _depth(it.body) for it in items if isinstance(it, RepeatBlock)), default=0)


@dataclass(frozen=True)
class Sequence:
    elements: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        for el in self.elements:
            if not isinstance(el, ELEMENT_TYPES + (RepeatBlock,)):
                raise InputError(f"not a sequence element: {el!r}")
        if _depth(self.elements) > MAX_NESTING:
            raise InputError(f"repeat blocks nest at most {MAX_NESTING} deep")

    def __iter__(self):
        return iter(self.elements)

    def __len__(self):
        return len(self.elements)

    def flatten(self):
        """Yield leaf elements in execution order, unrolling repeat blocks."""
        yield from _unroll(self.elements)

    def timing(self):
        return sequence_timing(self)


def _unroll(items):
    for it in items:
        if isinstance(it, RepeatBlock):
            for _ in range(it.count):
                yield from _unroll(it.body)
        else:
            yield it


def _duration(items):
    total = 0.0
    for it in items:
        total += it.count * _duration(it.body) if isinstance(it, RepeatBlock) else it.duration
    return total


@dataclass(frozen=True)
class SequenceTiming:
    """Duration and readout grid of a sequence.

    ``readout_times`` are the start times of every :class:`OpticalReadout`.
    ``sampling_interval`` is their mean spacing and ``uniform`` says whether
    all spacings agree to 1e-12 relative.
    """

    total_duration: float
    sampling_interval: float
    readout_count: int
    readout_times: tuple = field(repr=False, default=())
    uniform: bool = True


def sequence_timing(seq):
    t = 0.0
    times = []
    for el in seq.flatten():
        if isinstance(el, OpticalReadout):
            times.append(t)
        t += el.duration
    total = _duration(seq.elements)
    if len(times) > 1:
        steps = np.diff(times)
        dt = float(steps.mean())
        uniform = bool(np.all(np.abs(steps - dt) <= 1e-12 * max(dt, 1e-300) + 1e-18))
    else:
        dt, uniform = 0.0, True
    return SequenceTiming(total, dt, len(times), tuple(times), uniform)
