"""Synthetic scenes for tests, demos and desk-scale runs of the pipeline."""

import numpy as np
from scipy import ndimage

from .raster import DEFORESTATION, FOREST, INVALID, GrayImage, LabelMap, Mask, Raster


def two_tone(height=32, width=32, edge=None, noise=0.0, seed=0, shape="vertical"):
    """Gray scene of two flat regions (0 and 1) plus optional Gaussian noise.

    ``shape`` is ``"vertical"`` (edge at column ``edge``), ``"disk"`` (a
    bright disc of radius ``edge``) or ``"diagonal"``.  Returns the image and
    the ground-truth region map.
    """
    yy, xx = np.mgrid[0:height, 0:width]
    if shape == "vertical":
        edge = width // 2 if edge is None else edge
        truth = (xx >= edge).astype(np.int64)
    elif shape == "disk":
        r = min(height, width) / 4 if edge is None else edge
        truth = ((yy - height / 2 + 0.5) ** 2 + (xx - width / 2 + 0.5) ** 2 <= r * r).astype(np.int64)
    elif shape == "diagonal":
        truth = (xx + 0.6 * yy >= (width + 0.6 * height) / 2).astype(np.int64)
    else:
        raise ValueError(f"unknown shape {shape!r}")
    img = truth.astype(np.float64)
    if noise:
        img = img + np.random.default_rng(seed).normal(0.0, noise, img.shape)
    return GrayImage(img), truth


def uniform(height=32, width=32, value=0.5):
    return GrayImage(np.full((height, width), float(value)))


def band_mask(height, width, rows=None):
    """Mask with a horizontal band of invalid rows (an excluded strip)."""
    valid = np.ones((height, width), dtype=bool)
    r0, r1 = rows if rows is not None else (height // 3, height // 3 + height // 8)
    valid[r0:r1, : width * 3 // 4] = False
    return Mask(valid)


def segmentation_scenes(size=128, seed=0):
    """Ten labelled scenes (name, gray, mask, truth-or-None) for invariant suites."""
    full = Mask.full(size, size)
    out = [
        ("uniform", uniform(size, size), full, None),
        ("uniform-masked", uniform(size, size, 0.3), band_mask(size, size), None),
    ]
    g, t = two_tone(size, size, edge=size // 2 - 3)
    out.append(("two-tone", g, full, t))
    g, t = two_tone(size, size, shape="disk", edge=size / 4.3)
    out.append(("two-tone-disk", g, full, t))
    g, t = two_tone(size, size, shape="diagonal")
    out.append(("two-tone-diagonal", g, full, t))
    g, t = two_tone(size, size, edge=size // 2 + 5, noise=0.05, seed=seed)
    out.append(("noisy-two-tone", g, full, t))
    g, t = two_tone(size, size, shape="disk", edge=size / 3.7, noise=0.05, seed=seed + 1)
    out.append(("noisy-two-tone-disk", g, full, t))
    g, t = two_tone(size, size, edge=size // 2 - 3)
    out.append(("two-tone-masked", g, band_mask(size, size), t))
    g, t = two_tone(size, size, shape="disk", edge=size / 4.3, noise=0.05, seed=seed + 2)
    out.append(("noisy-two-tone-disk-masked", g, band_mask(size, size, (8, 20)), t))
    rng = np.random.default_rng(seed + 3)
    out.append(("noisy-uniform", GrayImage(0.5 + rng.normal(0, 0.05, (size, size))), full, None))
    return out


def _blobs(shape, n, radius, rng):
    """Smooth random blobs: thresholded low-pass noise with about ``n`` patches."""
    h, w = shape
    field = np.zeros(shape)
    ys = rng.uniform(0, h, n)
    xs = rng.uniform(0, w, n)
    yy, xx = np.mgrid[0:h, 0:w]
    for y, x in zip(ys, xs):
        r = radius * rng.uniform(0.6, 1.4)
        field += np.exp(-((yy - y) ** 2 + (xx - x) ** 2) / (2 * r * r))
    wobble = ndimage.gaussian_filter(rng.normal(size=shape), radius / 2)
    field += 0.6 * wobble / (np.abs(wobble).max() + 1e-12)
    return field > 0.55


def desk_scene(size=256, seed=0, n_patches=9, patch_radius=None):
    """Two-band scene with textured forest and smoother, brighter clearings.

    Returns ``(raster, mask, label_map)``.  A strip of already-cleared land is
    masked out, as an exclusion map would do.
    """
    rng = np.random.default_rng(seed)
    h = w = size
    radius = patch_radius or size / 11
    defo = _blobs((h, w), n_patches, radius, rng)

    # forest: canopy texture of bright crowns on darker gaps
    crowns = ndimage.gaussian_filter(rng.normal(size=(h, w)), 1.0)
    crowns = crowns / crowns.std()
    fine = rng.normal(size=(h, w))
    # clearing: smooth soil/grass gradients
    smooth = ndimage.gaussian_filter(rng.normal(size=(h, w)), 6.0)
    smooth = smooth / smooth.std()

    nir = np.where(defo, 0.42 + 0.02 * smooth + 0.01 * fine, 0.30 + 0.06 * crowns + 0.02 * fine)
    red = np.where(defo, 0.16 + 0.015 * smooth + 0.006 * fine, 0.05 + 0.02 * crowns + 0.01 * fine)
    data = np.stack([nir, red]).astype(np.float32)

    valid = np.ones((h, w), dtype=bool)
    r0 = int(rng.integers(h // 5, h // 2))
    valid[r0 : r0 + h // 16, w // 3 :] = False

    labels = np.where(defo, DEFORESTATION, FOREST).astype(np.uint8)
    labels[~valid] = INVALID
    return Raster(data, ("B1", "B2")), Mask(valid), LabelMap(labels)


def write_desk_study(root, n_areas=3, size=256, seed=0, k_target=300, n_pure=10, n_mixed=10,
                     output="run", extra=None):
    """Write ``n_areas`` desk scenes plus a pipeline config under ``root``.

    Returns the config path.  ``extra`` adds or overrides config keys.
    """
    from pathlib import Path

    from .raster import save_label_map, save_raster

    root = Path(root)
    (root / "data").mkdir(parents=True, exist_ok=True)
    names = [f"a{i}" for i in range(n_areas)]
    lines = [f"seed = {seed}", f"output = {output}", f"areas = {','.join(names)}"]
    for i, n in enumerate(names):
        raster, _, labels = desk_scene(size, seed=seed * 1000 + i)
        save_raster(root / "data" / f"{n}.hdr", raster)
        save_label_map(root / "data" / f"{n}_labels.hdr", labels)
        lines += [f"area.{n}.raster = data/{n}.hdr", f"area.{n}.labels = data/{n}_labels.hdr"]
    conf = {
        "superpixel.k_target": k_target,
        "dataset.n_pure": n_pure,
        "dataset.n_mixed": n_mixed,
    }
    conf.update(extra or {})
    lines += [f"{k} = {v}" for k, v in conf.items()]
    path = root / "study.conf"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
