"""Spectra, fits, Cramer-Rao bounds, decay decomposition and raw-data correction."""

from .crlb import crlb_c_factor, crlb_sigma, crlb_variance, crlb_variance_limit, noise_density
from .decomposition import BackActionDecomposition, DecayDecomposition, fit_decay_decomposition
from .fitting import DecayingSinusoidRegressor, SinusoidFit, fit_decaying_sinusoid
from .pipeline import (PhaseCorrector, PhotonBlockLayout, PipelineResult, circular_distance,
                       magnetometer_phase, phase_correct_and_group, synthetic_raw_records)
from .spectrum import Spectrum, fft_amplitude_spectrum

__all__ = [
    "crlb_c_factor", "crlb_sigma", "crlb_variance", "crlb_variance_limit", "noise_density",
    "BackActionDecomposition", "DecayDecomposition", "fit_decay_decomposition",
    "DecayingSinusoidRegressor", "SinusoidFit", "fit_decaying_sinusoid",
    "PhaseCorrector", "PhotonBlockLayout", "PipelineResult", "circular_distance",
    "magnetometer_phase", "phase_correct_and_group", "synthetic_raw_records",
    "Spectrum", "fft_amplitude_spectrum",
]
