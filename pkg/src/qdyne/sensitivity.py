"""Sensitivity budget under measurement overhead.

A sampling interval ``dt`` splits into sensing, rf and free-precession
time. Only the sensing part collects signal, so the sensor sensitivity
degrades by ``sqrt(dt / T_sensing)``, while the frequency response scales
with ``gamma_eff = 1 - T_meas / dt``, ``T_meas = T_sensing + T_rf``.
"""

from dataclasses import asdict, dataclass
import math
import re

from scipy.optimize import minimize_scalar

from .constants import GAMMA_E, HBAR, MU0, NUCLEAR_GAMMA
from .exceptions import InputError
from .sequence.dsl import _convert
from .validation import check_positive

_FIELD_UNITS = {"T": 1.0, "mT": 1e-3, "uT": 1e-6, "µT": 1e-6, "nT": 1e-9, "pT": 1e-12}


@dataclass(frozen=True)
class SensitivityScenario:
    """One sensor configuration.

    Attributes
    ----------
    label : str
    B0 : float
        Bias field [T].
    eta_nv : float
        Sensor sensitivity without overhead [T/sqrt(Hz)].
    T_sensing, T_rf : float
        Sensing and basis-change time per sample [s].
    nuclear_rabi : float
        Nuclear Rabi frequency [Hz]; informational.
    T2star_nuclear : float
        Target dephasing time [s].
    nucleus : str
        ``'13C'`` or ``'1H'``.
    """

    label: str
    B0: float
    eta_nv: float
    T_sensing: float
    T_rf: float
    nuclear_rabi: float
    T2star_nuclear: float
    nucleus: str = "13C"

    def __post_init__(self):
        for name in ("B0", "eta_nv", "T_sensing", "T_rf", "nuclear_rabi", "T2star_nuclear"):
            check_positive(getattr(self, name), name)
        if self.nucleus not in NUCLEAR_GAMMA:
            raise InputError(f"unknown nucleus {self.nucleus!r}")

    @property
    def T_meas(self):
        return self.T_sensing + self.T_rf


@dataclass(frozen=True)
class SensitivityResult:
    dt_opt: float
    overhead_factor: float
    eta_eff: float
    gamma_eff: float
    rel_freq_uncertainty: float = None

    def to_dict(self):
        return asdict(self)


def optimal_sampling_interval(t_meas):
    """Minimizer of ``sqrt(dt) / (1 - t_meas/dt)``, which is ``3 t_meas``."""
    return 3 * check_positive(t_meas, "T_meas")


def numeric_optimal_sampling_interval(t_meas):
    """Same optimum found by bounded scalar minimization in ``log(dt / t_meas)``."""
    t_meas = check_positive(t_meas, "T_meas")

    def cost(u):
        x = math.exp(u)  # dt / t_meas
        return 0.5 * u - math.log1p(-1 / x)

    res = minimize_scalar(cost, bounds=(1e-9, math.log(1e4)), method="bounded",
                          options={"xatol": 1e-12})
    return t_meas * math.exp(res.x)


def effective_sensitivity(eta_nv, dt, t_sensing):
    """``eta_nv * sqrt(dt / t_sensing)``; needs ``dt >= t_sensing``."""
    eta_nv = check_positive(eta_nv, "eta_nv")
    dt = check_positive(dt, "dt")
    t_sensing = check_positive(t_sensing, "T_sensing")
    if dt < t_sensing:
        raise InputError("sampling interval shorter than the sensing time")
    return eta_nv * math.sqrt(dt / t_sensing)


def relative_frequency_uncertainty(scenario, signal_amp, dt=None):
    """``2 sqrt(2) eta_eff / (gamma_eff gamma_N B0 A T2*^(3/2))``.

    ``signal_amp`` is the target field amplitude at the sensor [T]; ``dt``
    defaults to the optimal sampling interval.
    """
    signal_amp = check_positive(signal_amp, "signal amplitude")
    dt = optimal_sampling_interval(scenario.T_meas) if dt is None else check_positive(dt, "dt")
    if dt <= scenario.T_meas:
        raise InputError("sampling interval leaves no free-precession time")
    gamma_eff = 1 - scenario.T_meas / dt
    eta = effective_sensitivity(scenario.eta_nv, dt, scenario.T_sensing)
    omega = NUCLEAR_GAMMA[scenario.nucleus] * scenario.B0
    return 2 * math.sqrt(2) * eta / (gamma_eff * omega * signal_amp * scenario.T2star_nuclear ** 1.5)


def evaluate_scenario(scenario, signal_amp=None):
    dt = optimal_sampling_interval(scenario.T_meas)
    rel = None if signal_amp is None else relative_frequency_uncertainty(scenario, signal_amp, dt)
    return SensitivityResult(dt, math.sqrt(dt / scenario.T_sensing),
                             effective_sensitivity(scenario.eta_nv, dt, scenario.T_sensing),
                             1 - scenario.T_meas / dt, rel)


def dipolar_azz(r, theta=0.0, nucleus="13C"):
    """Secular point-dipole coupling [Hz] between the sensor and a nucleus.

    ``(mu0 / 4 pi) gamma_e gamma_n hbar / r^3 (3 cos^2 theta - 1) / (2 pi)``
    with ``r`` in metres and ``theta`` the angle to the sensor axis.
    """
    r = check_positive(r, "r")
    try:
        gamma_n = NUCLEAR_GAMMA[nucleus]
    except KeyError:
        raise InputError(f"unknown nucleus {nucleus!r}") from None
    return (MU0 / (4 * math.pi) * GAMMA_E * gamma_n * HBAR / r ** 3
            * (3 * math.cos(theta) ** 2 - 1) / (2 * math.pi))


def distance_for_azz(azz, theta=0.0, nucleus="13C"):
    """Inverse of :func:`dipolar_azz` in ``r`` for a nonzero angular factor."""
    unit = dipolar_azz(1.0, theta, nucleus)
    if unit == 0 or azz == 0 or (unit > 0) != (azz > 0):
        raise InputError("no distance gives this coupling at this angle")
    return (unit / azz) ** (1 / 3)


# ---------------------------------------------------------------- scenario files

_KEYS = {
    "label": "word", "B0": "field", "eta_nv": "density", "T_sensing": "time", "T_rf": "time",
    "nuclear_rabi": "freq", "T2star_nuclear": "time", "nucleus": "text",
}


def _field(text, density):
    m = re.fullmatch(r"([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([A-Za-zµ]*)(/rtHz)?", text)
    if not m or (density and m.group(2) and not m.group(3)) or (not density and m.group(3)):
        raise InputError(f"malformed {'sensitivity' if density else 'field'} {text!r}")
    unit = m.group(2) or "T"
    if unit not in _FIELD_UNITS:
        raise InputError(f"unknown field unit {unit!r}")
    return float(m.group(1)) * _FIELD_UNITS[unit]


def parse_scenario(text):
    """Parse ``key = value`` lines into a :class:`SensitivityScenario`.

    Fields take ``T mT uT nT pT``; sensitivities the same with ``/rtHz``;
    times and frequencies use the sequence-file units.
    """
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = (s.strip() for s in line.partition("="))
        if not sep or not raw:
            raise InputError(f"line {lineno}: expected key = value")
        if key not in _KEYS:
            raise InputError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise InputError(f"line {lineno}: duplicate key {key!r}")
        kind = _KEYS[key]
        try:
            if kind in ("word", "text"):
                values[key] = raw
            elif kind in ("field", "density"):
                values[key] = _field(raw, kind == "density")
            else:
                values[key] = _convert(raw, kind)
        except InputError as exc:
            raise InputError(f"line {lineno}: {exc}") from None
    missing = set(_KEYS) - set(values) - {"nucleus"}
    if missing:
        raise InputError(f"scenario lacks {', '.join(sorted(missing))}")
    return SensitivityScenario(**values)


def load_scenario(path):
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


# Bias field, sensor sensitivity and timing of three reference configurations.
# T_rf is the difference between the listed T_meas and T_sensing.
REFERENCE_SCENARIOS = {
    "single_nv_deep": SensitivityScenario("single_nv_deep", 0.25, 900e-9, 60e-6, 70e-6,
                                          15e3, 1 / 600.0),
    "single_nv_shallow": SensitivityScenario("single_nv_shallow", 3.0, 140e-9, 300e-6, 4e-6,
                                             250e3, 1 / 27.0),
    "nv_ensemble": SensitivityScenario("nv_ensemble", 3.0, 30e-12, 10e-6, 4e-6, 250e3, 1 / 27.0),
}
