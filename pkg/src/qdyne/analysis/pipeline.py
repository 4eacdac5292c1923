"""Phase-corrected averaging of raw photon-count records.

Each record holds ``n_angles`` consecutive blocks of heterodyne samples
followed by a magnetometer section. The magnetometer section interleaves
Ramsey readouts with second-pulse phases 0, 120 and 240 degrees
(``c0, c120, c240, c0, ...``), from which the environmental phase of the
record is recovered. Records whose phase falls inside the acceptance window
are averaged.
"""

from dataclasses import dataclass
import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ..exceptions import EmptyResultError, InputError
from ..simulator import TimeTrace

MAGNETOMETER_PHASES = (0.0, 2 * math.pi / 3, 4 * math.pi / 3)


@dataclass(frozen=True)
class PhotonBlockLayout:
    n_angles: int = 5
    samples_per_angle: int = 60
    magnetometer_samples: int = 150

    def __post_init__(self):
        for name in ("n_angles", "samples_per_angle"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise InputError(f"{name} must be an integer >= 1")
        m = self.magnetometer_samples
        if not isinstance(m, (int, np.integer)) or m < 3 or m % 3:
            raise InputError("magnetometer_samples must be a positive multiple of 3")

    @property
    def qdyne_samples(self):
        return self.n_angles * self.samples_per_angle

    @property
    def total(self):
        return self.qdyne_samples + self.magnetometer_samples


def circular_distance(a, b):
    """|a - b| on the circle, in [0, pi]."""
    return np.abs(np.angle(np.exp(1j * (np.asarray(a) - np.asarray(b)))))


def magnetometer_phase(c0, c120, c240):
    """Phase ``theta`` of counts following ``1 + cos(psi_k + theta)`` at ``psi_k = 0, 120, 240 deg``.

    Returns a value in (-pi, pi].
    """
    c = np.array([c0, c120, c240], dtype=float)
    if not np.all(np.isfinite(c)) or np.any(c < 0):
        raise InputError("counts must be finite and >= 0")
    y = math.sqrt(3) * (c[2] - c[1])
    x = 2 * c[0] - c[1] - c[2]
    if math.hypot(x, y) <= 1e-12 * max(np.abs(c).max(), 1e-300):
        raise InputError("all three counts are equal; the phase is undefined")
    theta = math.atan2(y, x)
    return math.pi if theta == -math.pi else theta


class PhaseCorrector(BaseEstimator, TransformerMixin):
    """Acceptance-window averaging of raw records.

    Parameters
    ----------
    layout : PhotonBlockLayout
    window_center, window_halfwidth : float
        Window in radians. With ``double_sided`` a record is also accepted
        near ``-window_center``; those records have their heterodyne blocks
        mirrored about the block mean so both signs add up.

    Attributes
    ----------
    phases_ : ndarray
        Magnetometer phase of every record.
    accepted_ : ndarray of bool
    flipped_ : ndarray of bool
    blocks_ : ndarray, shape (n_angles, samples_per_angle)
        Average over accepted records.
    """

    def __init__(self, layout=None, window_center=math.pi / 2, window_halfwidth=math.pi / 6,
                 double_sided=True):
        self.layout = layout
        self.window_center = window_center
        self.window_halfwidth = window_halfwidth
        self.double_sided = double_sided

    def _records(self, X):
        layout = self.layout or PhotonBlockLayout()
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            if X.size % layout.total:
                raise InputError(f"record length {X.size} is not a multiple of {layout.total}")
            X = X.reshape(-1, layout.total)
        if X.ndim != 2 or X.shape[1] != layout.total or X.shape[0] == 0:
            raise InputError(f"raw data must have rows of length {layout.total}")
        if not np.all(np.isfinite(X)):
            raise InputError("raw data contains non-finite values")
        return layout, X

    def fit(self, X, y=None):
        layout, X = self._records(X)
        mag = X[:, layout.qdyne_samples:]
        sums = [mag[:, k::3].sum(axis=1) for k in range(3)]
        self.phases_ = np.array([magnetometer_phase(a, b, c) for a, b, c in zip(*sums)])
        near = circular_distance(self.phases_, self.window_center) <= self.window_halfwidth
        far = np.zeros_like(near)
        if self.double_sided:
            far = (circular_distance(self.phases_, -self.window_center) <= self.window_halfwidth) & ~near
        self.accepted_ = near | far
        self.flipped_ = far
        self.n_total_ = X.shape[0]
        if not self.accepted_.any():
            raise EmptyResultError("no record passed the phase acceptance window")
        blocks = X[self.accepted_, :layout.qdyne_samples].reshape(
            -1, layout.n_angles, layout.samples_per_angle)
        flip = self.flipped_[self.accepted_]
        means = blocks.mean(axis=2, keepdims=True)
        blocks[flip] = 2 * means[flip] - blocks[flip]
        self.blocks_ = blocks.mean(axis=0)
        return self

    def transform(self, X=None):
        """Averaged blocks of the fitted records; ``X`` is ignored."""
        return self.blocks_

    @property
    def acceptance_fraction_(self):
        return float(self.accepted_.sum()) / self.n_total_

    @property
    def amplitude_(self):
        """``sqrt(2)`` times the rms deviation of the averaged blocks from their means."""
        dev = self.blocks_ - self.blocks_.mean(axis=1, keepdims=True)
        return float(math.sqrt(2) * np.sqrt(np.mean(dev ** 2)))


@dataclass(eq=False)
class PipelineResult:
    traces: list
    accepted: int
    total: int
    amplitude: float
    phases: np.ndarray

    @property
    def acceptance_fraction(self):
        return self.accepted / self.total


def phase_correct_and_group(raw, layout=None, window_center=math.pi / 2,
                            window_halfwidth=math.pi / 6, dt=1.0, double_sided=True):
    """Average accepted records into one :class:`TimeTrace` per angle block."""
    est = PhaseCorrector(layout, window_center, window_halfwidth, double_sided).fit(raw)
    traces = [TimeTrace(b, dt, "photon_counts", {"angle_block": j})
              for j, b in enumerate(est.blocks_)]
    return PipelineResult(traces, int(est.accepted_.sum()), est.n_total_, est.amplitude_,
                          est.phases_)


def synthetic_raw_records(n_records, layout=None, beta=math.pi / 2, angle_step=math.radians(72),
                          mean_counts=200.0, contrast=0.3, phases=None, rng=None):
    """Poisson photon records with a random environmental phase per record.

    Heterodyne sample ``n`` of angle block ``j`` has mean
    ``n0 (1 + C sin(theta) cos(beta n + j angle_step))`` and magnetometer
    readout ``k`` has mean ``n0 (1 + C cos(psi_k + theta))``. ``theta`` is
    drawn uniformly on (-pi, pi] unless ``phases`` is given.

    Returns
    -------
    records : ndarray, shape (n_records, layout.total)
    phases : ndarray
    """
    layout = layout or PhotonBlockLayout()
    rng = rng if rng is not None else np.random.default_rng(0)
    if phases is None:
        phases = -rng.uniform(-math.pi, math.pi, n_records)  # negated: support (-pi, pi]
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (n_records,):
        raise InputError("need one phase per record")
    n = np.arange(layout.samples_per_angle)
    j = np.arange(layout.n_angles)[:, None]
    pattern = np.cos(beta * n + j * angle_step).ravel()
    psi = np.tile(MAGNETOMETER_PHASES, layout.magnetometer_samples // 3)
    q = mean_counts * (1 + contrast * np.sin(phases)[:, None] * pattern[None, :])
    m = mean_counts * (1 + contrast * np.cos(psi[None, :] + phases[:, None]))
    lam = np.hstack([q, m])
    return rng.poisson(lam).astype(float), phases
