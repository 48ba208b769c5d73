"""Superpixel partitions of a masked gray image (CRS, ERGC, ETPS, RSS, SLIC)."""

from .algorithms import ALGORITHMS, DEFAULT_COMPACTNESS, crs, default_params, ergc, etps, rss, segment, slic
from .connectivity import enforce_connectivity, relabel_connected
from .segmentation import (
    METHODS,
    SENTINEL,
    Segmentation,
    SegmentationError,
    SuperpixelParams,
    boundary_recall,
    connected_components,
    load_segmentation,
    save_segmentation,
    undersegmentation_error,
)

__all__ = [
    "ALGORITHMS", "DEFAULT_COMPACTNESS", "METHODS", "SENTINEL", "Segmentation", "SegmentationError",
    "SuperpixelParams", "boundary_recall", "connected_components", "crs", "default_params",
    "enforce_connectivity", "ergc", "etps", "load_segmentation", "relabel_connected", "rss",
    "save_segmentation", "segment", "slic", "undersegmentation_error",
]
