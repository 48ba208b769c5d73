"""Compute per-superpixel Haralick features on a two-band desk scene and
compare the class means of a few of them.

Run: python3 demos/02_texture_features.py
"""

import numpy as np

from spxforest import synthetic
from spxforest.dataset import segment_stats
from spxforest.raster import DEFORESTATION, FOREST, pca_first_component
from spxforest.superpixel import default_params, slic
from spxforest.texture import FEATURE_NAMES, segment_features

raster, mask, labels = synthetic.desk_scene(size=192, seed=4)
gray = pca_first_component(raster, mask)
seg = slic(gray, mask, default_params("slic", 200, seed=0))
feats = segment_features(raster, seg)
print(f"{seg.k_actual} superpixels, {len(feats.excluded)} excluded from features")

# majority class per segment, pure segments only
stats = {r.segment_id: r for r in segment_stats(seg, labels)}
row = {int(s): i for i, s in enumerate(feats.segment_ids)}
pure = [(row[s], r.dominant_class) for s, r in stats.items() if r.homogeneity == 1.0 and s in row]
idx = np.array([i for i, _ in pure])
cls = np.array([c for _, c in pure])
print(f"{np.sum(cls == FOREST)} pure forest, {np.sum(cls == DEFORESTATION)} pure deforestation segments\n")
print(f"{'feature':32s} {'forest':>12s} {'cleared':>12s}")
for j, name in enumerate(FEATURE_NAMES):
    a = feats.values[idx[cls == FOREST], j].mean()
    b = feats.values[idx[cls == DEFORESTATION], j].mean()
    print(f"{name:32s} {a:12.4g} {b:12.4g}")
