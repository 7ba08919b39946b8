"""Single-frequency spectral projection (discrete Fourier evaluation).

Used for beat-note extraction: only a handful of candidate frequencies are
ever needed, so there is no FFT here and no power-of-two constraint.
"""

from __future__ import annotations

import numpy as np

__all__ = ["spectral_amplitude", "refine_scan"]


def spectral_amplitude(samples, dt: float, f: float, t0: float = 0.0) -> complex:
    """Projection of a uniform time series onto ``exp(-i 2 pi f t)``.

    Returns ``(1/N) * sum_k y_k exp(+i 2 pi f t_k)`` so a real tone
    ``cos(2 pi f t)`` projects to magnitude 1/2 at its own frequency.

    Raises
    ------
    ValueError
        If fewer than two samples are given or ``|f|`` is at/above the
        Nyquist frequency of the sampling.
    """
    y = np.asarray(samples)
    if y.ndim != 1 or y.size < 2:
        raise ValueError("need at least two samples")
    if dt <= 0:
        raise ValueError("dt must be positive")
    nyquist = 0.5 / dt
    if abs(f) >= nyquist:
        raise ValueError(f"frequency {f} Hz is at or above Nyquist {nyquist} Hz")
    t = t0 + dt * np.arange(y.size)
    return complex(np.mean(y * np.exp(2j * np.pi * f * t)))


def refine_scan(samples, dt: float, f_grid, t0: float = 0.0):
    """Scan ``|spectral_amplitude|`` over a frequency grid and refine the peak.

    A local three-point parabolic interpolation over the scan maximum gives
    the refined frequency; the amplitude is re-evaluated there.

    Returns
    -------
    (f_star, amplitude, magnitudes) : (float, complex, ndarray)
    """
    y = np.asarray(samples)
    fs = np.asarray(f_grid, dtype=float)
    if fs.size < 3:
        raise ValueError("need at least three candidate frequencies")
    t = t0 + dt * np.arange(y.size)
    mags = np.empty(fs.size)
    chunk = max(1, int(4_000_000 // max(1, y.size)))
    for lo in range(0, fs.size, chunk):
        hi = min(fs.size, lo + chunk)
        basis = np.exp(2j * np.pi * np.outer(fs[lo:hi], t))
        mags[lo:hi] = np.abs(basis @ y) / y.size
    i = int(np.argmax(mags))
    if 0 < i < fs.size - 1:
        ym, y0, yp = mags[i - 1], mags[i], mags[i + 1]
        denom = ym - 2 * y0 + yp
        shift = 0.5 * (ym - yp) / denom if denom != 0 else 0.0
        shift = float(np.clip(shift, -0.5, 0.5))
    else:
        shift = 0.0
    f_star = fs[i] + shift * (fs[1] - fs[0])
    amp = spectral_amplitude(y, dt, f_star, t0=t0)
    return float(f_star), amp, mags
