"""
A tour of the semi-metrics
==========================

Each semi-metric looks at one feature of a curve. Two curves can be close
under one family and far apart under another, which is what makes an
ensemble over families useful.
"""

import numpy as np

from fknn_cmlm.semimetrics import SemiMetric, distance, weight_profile

t = np.linspace(0.0, 1.0, 101)

# a smooth reference curve, the same curve shifted up, and one with a
# narrow spike at t = 0.7
x = np.sin(2 * np.pi * t)
shifted = x + 0.5
spiked = x + 2.0 * np.exp(-0.5 * ((t - 0.7) / 0.02) ** 2)

metrics = [
    SemiMetric.make("eucl"),
    SemiMetric.make("eucl", centered=True),
    SemiMetric.make("short_eucl", interval=(0.6, 0.8)),
    SemiMetric.make("scan", tau=0.7, sigma=0.05, scale=1.0),
    SemiMetric.make("mean"),
    SemiMetric.make("rel_areas", num_interval=(0.6, 0.8), den_interval=(0.0, 0.5)),
    SemiMetric.make("jump", points=(0.7, 0.6)),
    SemiMetric.make("max"),
    SemiMetric.make("min"),
    SemiMetric.make("points", points=(0.1, 0.5, 0.9)),
]

# %%
# Distances to the reference curve. The vertical shift is invisible to the
# centred and derivative-based views; the spike only shows where a family
# looks at t = 0.7.
print(f"{'semi-metric':<58}{'shifted':>9}{'spiked':>9}{'shifted, a=1':>14}")
for m in metrics:
    row = [distance(m, x, shifted, t), distance(m, x, spiked, t), distance(m, x, shifted, t, 1)]
    print(f"{m.label():<58}" + "".join(f"{d:>9.3f}" for d in row[:2]) + f"{row[2]:>14.3f}")

# %%
# The scan family weights the squared difference with a Gaussian bump
# scaled so that its peak equals ``scale`` (300 unless given).
profile = weight_profile(t, tau=0.7, sigma=0.05)
print("\nweight profile peak", profile.max(), "at t =", t[np.argmax(profile)])
print("weight at t = 0.5:", round(float(profile[50]), 3))
