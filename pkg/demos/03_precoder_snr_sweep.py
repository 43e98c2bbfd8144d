"""Sum spectral efficiency of the precoding schemes across transmit SNR.

Four random low-altitude users, exact spherical-wave channels, unit-gain
normalization.  Baselines: MRT with equal power, ZF with water-filling,
SDMA and LDMA codebooks pointed at the user locations.  The reference is
the lambda-parameterized optimal-structure precoder tuned by the
derivative-free oracle.
"""

import numpy as np

from nfxl import (
    ArrayConfig,
    PrecodeProblem,
    angular_codebook,
    location_precoder,
    mrt,
    near_channel,
    oracle_lambda,
    polar_codebook,
    sample_users,
    sum_se,
    waterfill,
    zf,
)
from nfxl.errors import RankDeficient
from nfxl.geometry import range_and_axis_cos

cfg = ArrayConfig(n_antennas=64)
K = 4
N_RECORDS = 10
sdma = angular_codebook(cfg, 64)
ldma = polar_codebook(cfg, 64, 8, 2.0)

scenarios = []
for i in range(N_RECORDS):
    users = sample_users(cfg, K, seed=1000 + i)
    h = np.column_stack([near_channel(cfg, u, normalized=True).entries for u in users])
    locs = []
    for u in users:
        r, c = range_and_axis_cos(cfg, u)
        locs.append((c, r))
    scenarios.append((h, locs))

print(f"{'snr_db':>7} {'mrt':>8} {'zf':>8} {'sdma':>8} {'ldma':>8} {'oracle':>8}")
for snr_db in (-10, 0, 10, 20, 30):
    p_tot = 10.0 ** (snr_db / 10.0)
    acc = {k: [] for k in ("mrt", "zf", "sdma", "ldma", "oracle")}
    for h, locs in scenarios:
        prob = PrecodeProblem(h, p_tot, 1.0)
        equal = np.full(K, p_tot / K)
        acc["mrt"].append(sum_se(prob, mrt(prob, equal)))
        try:
            w = zf(prob, equal).directions
            g = np.abs(np.einsum("nk,nk->k", h.conj(), w)) ** 2
            acc["zf"].append(sum_se(prob, zf(prob, waterfill(g, p_tot))))
        except RankDeficient:
            acc["zf"].append(float("nan"))
        acc["sdma"].append(sum_se(prob, location_precoder(prob, sdma, locs)))
        acc["ldma"].append(sum_se(prob, location_precoder(prob, ldma, locs)))
        acc["oracle"].append(oracle_lambda(prob, budget=6000).se)
    means = {k: np.mean(v) for k, v in acc.items()}
    print(
        f"{snr_db:7.0f} {means['mrt']:8.3f} {means['zf']:8.3f}"
        f" {means['sdma']:8.3f} {means['ldma']:8.3f} {means['oracle']:8.3f}"
    )
