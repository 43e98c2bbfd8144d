"""Where does the near field end for a 256-element 30 GHz array?

Computes the Rayleigh distance of the reference array, then checks how the
low-altitude deployment box (ground distance 0..200 m, altitude 0..30 m)
sits relative to it: every point in the box is a near-field location.
"""

import numpy as np

from nfxl import ArrayConfig, FieldLabel, UserPos, label_field, rayleigh_distance

cfg = ArrayConfig()  # N=256, 30 GHz, half-wavelength spacing, 15 m mast, 5 deg tilt
rd = rayleigh_distance(cfg)
print(f"array aperture: {cfg.aperture_m:.3f} m")
print(f"Rayleigh distance: {rd:.1f} m")

xs = np.linspace(0, 200, 81)
hs = np.linspace(0, 30, 13)
labels = []
max_range = 0.0
for x in xs:
    for h in hs:
        if x == 0 and h == cfg.bs_height_m:
            continue
        max_range = max(max_range, float(np.hypot(x, h - cfg.bs_height_m)))
        labels.append(label_field(cfg, UserPos(x, h)))

near = sum(1 for l in labels if l == FieldLabel.NEAR)
print(f"box sample points labeled near-field: {near}/{len(labels)}")
print(f"farthest box point: {max_range:.1f} m ({max_range / rd:.2f} x Rayleigh)")

for n in (16, 64, 256, 1024):
    print(f"N={n:5d}: Rayleigh distance {rayleigh_distance(ArrayConfig(n_antennas=n)):10.2f} m")
