"""Reproduce the headline separation: consistency scores of frozen-decoder
projections vs simulated physical recordings.

Decoder residuals reuse the same basis patterns frame after frame, so
their change statistics barely move over time (scores near 1). Physical
recordings mix intermittent camera shake, sensor noise, and object motion,
so the same statistics fluctuate and the scores drop.

Run: python demos/02_mpf_separation.py
"""

import numpy as np
from scipy.stats import mannwhitneyu

from mpfscope.consistency import score_stack
from mpfscope.residual import residual_normalized
from mpfscope.synthgen import SynthConfig, generate_sequence

N = 80

scores = {}
for regime in ("decoder", "physics"):
    cfg = SynthConfig(regime=regime, count=N, seed=42)
    qty, spa = [], []
    for i in range(N):
        s = score_stack(residual_normalized(generate_sequence(cfg, i)))
        qty.append(s.c_qty)
        spa.append(s.c_spa)
    scores[regime] = (np.array(qty), np.array(spa))
    print(f"{regime:8s}  C_qty {np.mean(qty):.4f} +- {np.std(qty):.4f}   "
          f"C_spa {np.mean(spa):.4f} +- {np.std(spa):.4f}")

dq, ds = scores["decoder"]
pq, ps = scores["physics"]
print()
print(f"C_qty gap: {dq.mean() - pq.mean():+.4f}   "
      f"Mann-Whitney p = {mannwhitneyu(dq, pq, alternative='greater').pvalue:.2e}")
print(f"C_spa gap: {ds.mean() - ps.mean():+.4f}   "
      f"Mann-Whitney p = {mannwhitneyu(ds, ps, alternative='greater').pvalue:.2e}")
print()
print("the decoder regime scores higher on both axes, mirroring the")
print("real-vs-synthetic ordering reported for production video corpora.")
