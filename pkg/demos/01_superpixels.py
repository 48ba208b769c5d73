"""Segment a few synthetic scenes with every algorithm and report quality.

Run: python3 demos/01_superpixels.py
"""

import time

from spxforest import synthetic
from spxforest.superpixel import ALGORITHMS, boundary_recall, default_params, undersegmentation_error

K_TARGET = 64

for name, gray, mask, truth in synthetic.segmentation_scenes(size=128, seed=3):
    if truth is None:
        continue
    print(f"\n{name}")
    for method in sorted(ALGORITHMS):
        t0 = time.perf_counter()
        seg = ALGORITHMS[method](gray, mask, default_params(method, K_TARGET, seed=17))
        dt = time.perf_counter() - t0
        seg.check(mask)
        br = boundary_recall(seg.labels, truth, valid=mask.valid)
        ue = undersegmentation_error(seg.labels, truth, valid=mask.valid)
        print(f"  {method:5s} k={seg.k_actual:3d}  recall={br:.3f}  underseg={ue:.3f}  {dt * 1000:6.1f} ms")
