"""Analytic signal and instantaneous amplitude/frequency of IMFs."""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

EDGE_SAMPLES = 2


@dataclass
class InstantaneousProfile:
    """Instantaneous amplitude and frequency (cycles per sample).

    ``reliable`` is False on the first and last ``EDGE_SAMPLES`` samples,
    where the discrete transform and the one-sided derivative are
    distorted. Those samples are kept so vectors stay aligned with the
    input calendar.
    """

    amplitude: np.ndarray
    frequency: np.ndarray
    reliable: np.ndarray


def analytic_signal(x):
    """Analytic signal via the FFT.

    Positive frequencies are doubled, negative ones zeroed, DC and (for even
    length) Nyquist kept as is. The caller is expected to remove the mean.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n < 8:
        raise ValidationError("analytic_signal needs at least 8 samples, got {0}".format(n))
    spectrum = np.fft.fft(x)
    weights = np.zeros(n)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[n // 2] = 1.0
        weights[1:n // 2] = 2.0
    else:
        weights[1:(n + 1) // 2] = 2.0
    z = np.fft.ifft(spectrum * weights)
    # the real part is x up to FFT round-off; pin it exactly
    return x + 1j * z.imag


def instantaneous_profile(z):
    """Amplitude and frequency from an analytic signal.

    Frequency is the derivative of the unwrapped phase over ``2*pi``:
    central differences inside, one-sided at the two ends.
    """
    z = np.asarray(z, dtype=np.complex128)
    n = z.shape[0]
    if n < 2:
        raise ValidationError("need at least 2 samples")
    phase = np.unwrap(np.angle(z))
    frequency = np.gradient(phase) / (2.0 * np.pi)
    reliable = np.ones(n, dtype=bool)
    reliable[:EDGE_SAMPLES] = False
    reliable[n - EDGE_SAMPLES:] = False
    return InstantaneousProfile(np.abs(z), frequency, reliable)


def hilbert_spectrum(decomposition):
    """Instantaneous profiles for every IMF of a decomposition (mean removed)."""
    profiles = []
    for imf in decomposition.imfs:
        values = imf.values - np.mean(imf.values)
        profiles.append(instantaneous_profile(analytic_signal(values)))
    return profiles
