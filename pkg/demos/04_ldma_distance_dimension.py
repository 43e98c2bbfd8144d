"""The distance dimension: serving two users that share one angle.

A far-field (SDMA) codebook can only point one steering beam at a given
angle, so two users at the same angle end up sharing it and interfere
almost completely.  The polar (LDMA) codebook separates them by focal
distance.  Sweeps the distance gap between the users and prints the mean
sum spectral efficiency of both codebooks.
"""

import math

import numpy as np

from nfxl import (
    ArrayConfig,
    PrecodeProblem,
    angular_codebook,
    location_precoder,
    near_channel,
    polar_codebook,
    sum_se,
    user_at,
)
from nfxl.geometry import _sub_rng, _uniform64

cfg = ArrayConfig()
P_TOT = 1000.0  # 30 dB transmit SNR over unit noise
sdma = angular_codebook(cfg, 256)
ldma = polar_codebook(cfg, 256, 8, 10.0)

print(f"{'gap [m]':>8} {'ldma':>8} {'sdma':>8} {'gain':>8}")
for gap in (0, 30, 60, 90, 120, 150, 180):
    se_l, se_s = [], []
    for i in range(50):
        rng = _sub_rng(77, i)
        ang = math.acos(float(_uniform64(rng, -0.5, 0.5)))
        radii = [20.0, 20.0 + gap]
        locs = [(math.cos(ang), r) for r in radii]
        h = np.column_stack(
            [near_channel(cfg, user_at(cfg, ang, r), normalized=True).entries for r in radii]
        )
        prob = PrecodeProblem(h, P_TOT, 1.0)
        se_l.append(sum_se(prob, location_precoder(prob, ldma, locs)))
        se_s.append(sum_se(prob, location_precoder(prob, sdma, locs)))
    print(f"{gap:8.0f} {np.mean(se_l):8.3f} {np.mean(se_s):8.3f} {np.mean(se_l) - np.mean(se_s):+8.3f}")
