"""Synthetic functional datasets for examples and tests."""

from __future__ import annotations

import numpy as np
from scipy.signal import lfilter

from .curves import CovariateType, Dataset


def make_bumps(n_per_class=(20, 20, 20), n_points: int = 50, noise: float = 0.3,
               seed: int = 0) -> Dataset:
    """Curves with a class-dependent bump, plus a second noisier covariate.

    Class 1 has a bump early in the domain, class 2 in the middle and
    class 3 none; the second covariate type carries a class-dependent step
    at ``t = 0.6`` that separates class 3 from the others.
    """
    rng = np.random.default_rng(seed)
    grid = np.linspace(0.0, 1.0, n_points)
    centers = [0.25, 0.5, None]
    first, second, labels = [], [], []
    for g, n_g in enumerate(n_per_class, start=1):
        for _ in range(n_g):
            base = np.sin(2 * np.pi * grid * rng.uniform(0.8, 1.2)) * 0.5
            c = centers[(g - 1) % len(centers)]
            bump = 0.0 if c is None else 1.5 * np.exp(-0.5 * ((grid - c) / 0.06) ** 2)
            first.append(base + bump + noise * rng.standard_normal(n_points))
            step = (1.0 if g == 3 else 0.0) * (grid > 0.6)
            second.append(step + 2 * noise * rng.standard_normal(n_points) + rng.normal())
            labels.append(g)
    return Dataset(
        (CovariateType("bump", grid, np.array(first)),
         CovariateType("step", grid, np.array(second))),
        np.array(labels),
        len(n_per_class),
    )


def make_periodograms(n_per_class: int = 100, n_freq: int = 256, seed: int = 0,
                      classes: int = 5, shift: float = 0.02) -> Dataset:
    """Log-periodograms of autoregressive signals with class-specific resonances.

    Each class has its own pair of spectral peaks; the first two classes
    are deliberately close to each other. Every curve is the log
    periodogram of an independent noisy realisation, so individual curves
    are very rough, as in speech recordings. ``shift`` is the standard
    deviation of a per-curve displacement of the peak frequencies (as a
    fraction of Nyquist), mimicking differences between speakers.
    """
    rng = np.random.default_rng(seed)
    # (frequency as a fraction of Nyquist, pole radius) per resonance
    formants = [
        [(0.10, 0.93), (0.16, 0.90)],
        [(0.09, 0.93), (0.13, 0.90)],
        [(0.03, 0.85), (0.40, 0.70)],
        [(0.04, 0.92), (0.35, 0.90)],
        [(0.60, 0.90), (0.80, 0.85)],
    ]
    n_samples = 2 * n_freq
    curves, labels = [], []
    for g in range(classes):
        poles = formants[g % len(formants)]
        for _ in range(n_per_class):
            a = np.array([1.0])
            for f, r in poles:
                f = np.clip(f + rng.normal(0, shift), 0.01, 0.99)
                a = np.convolve(a, [1.0, -2 * r * np.cos(np.pi * f), r * r])
            jitter = rng.normal(0, 0.1)
            e = rng.standard_normal(n_samples + 200)
            x = lfilter([1.0], a, e)[200:] * np.exp(jitter)
            spec = np.abs(np.fft.rfft(x * np.hanning(n_samples)))[1:n_freq + 1] ** 2
            curves.append(np.log(spec / n_samples + 1e-12))
            labels.append(g + 1)
    grid = np.arange(1, n_freq + 1, dtype=float)
    return Dataset((CovariateType("log_periodogram", grid, np.array(curves)),),
                   np.array(labels), classes)
