"""One-sided FFT amplitude spectra with peak interpolation."""

from dataclasses import dataclass

import numpy as np

from ..exceptions import InputError
from ..validation import check_samples


@dataclass(eq=False)
class Spectrum:
    """Amplitude spectrum on ``freqs`` [Hz] of a trace sampled every ``dt``.

    ``amps`` is normalized so a unit-amplitude on-bin sinusoid shows a peak
    of height 1 and a constant ``c`` shows ``c`` in the DC bin.
    """

    freqs: np.ndarray
    amps: np.ndarray
    dt: float
    n_samples: int
    zero_pad_factor: int = 1

    @property
    def nyquist(self):
        return 0.5 / self.dt

    @property
    def resolution(self):
        """Natural bin width ``1 / (N dt)`` of the unpadded data."""
        return 1.0 / (self.n_samples * self.dt)

    def peak_index(self, fmin=0.0):
        mask = self.freqs >= fmin
        if not mask.any():
            raise InputError(f"no spectral bins at or above {fmin} Hz")
        idx = np.flatnonzero(mask)
        return int(idx[np.argmax(self.amps[idx])])

    def peak_frequency(self, fmin=0.0):
        """Peak frequency refined by a parabola through the log-amplitudes of three bins."""
        k = self.peak_index(fmin)
        if k == 0 or k == self.amps.size - 1:
            return float(self.freqs[k])
        a, b, c = np.log(np.maximum(self.amps[k - 1:k + 2], 1e-300))
        denom = a - 2 * b + c
        shift = 0.0 if denom == 0 else 0.5 * (a - c) / denom
        step = self.freqs[1] - self.freqs[0]
        return float(self.freqs[k] + np.clip(shift, -0.5, 0.5) * step)


def fft_amplitude_spectrum(values, dt, zero_pad_factor=8, remove_mean=False):
    """One-sided amplitude spectrum of a uniformly sampled trace.

    Parameters
    ----------
    values : array_like or TimeTrace
        At least four samples. A ``TimeTrace`` supplies its own ``dt``
        when ``dt`` is None.
    dt : float or None
        Sampling interval [s].
    zero_pad_factor : int
        The FFT length is ``zero_pad_factor * N``; amplitudes keep the
        normalization of the unpadded data.
    remove_mean : bool
        Subtract the sample mean first, which keeps DC leakage away from
        low-frequency peaks.
    """
    if hasattr(values, "values") and hasattr(values, "dt"):
        dt = values.dt if dt is None else dt
        values = values.values
    x = check_samples(values, min_length=4)
    if dt is None or not dt > 0:
        raise InputError("sampling interval must be > 0")
    if not isinstance(zero_pad_factor, (int, np.integer)) or zero_pad_factor < 1:
        raise InputError("zero_pad_factor must be an integer >= 1")
    n = x.size
    if remove_mean:
        x = x - x.mean()
    nfft = n * int(zero_pad_factor)
    spec = np.abs(np.fft.rfft(x, nfft)) / n
    spec[1:] *= 2
    if nfft % 2 == 0:
        spec[-1] /= 2  # Nyquist bin has no mirror partner
    freqs = np.fft.rfftfreq(nfft, dt)
    return Spectrum(freqs, spec, float(dt), n, int(zero_pad_factor))
