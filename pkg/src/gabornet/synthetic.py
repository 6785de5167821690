"""Seeded synthetic classification scenes for desk-scale experiments.

Each class gets a smooth random mean spectrum (a few Gaussian bumps over the
band axis plus a linear trend) and a contiguous spatial region carved out of
smooth random fields, so the task is learnable from both spectral and spatial
structure without any external download.
"""

from __future__ import annotations

import numpy as np

from gabornet.data import GroundTruth, HsiCube


def synthetic_scene(
    bands: int = 103,
    height: int = 64,
    width: int = 64,
    n_classes: int = 9,
    noise: float = 0.4,
    seed: int = 0,
) -> tuple[HsiCube, GroundTruth]:
    """Generate a fully labeled (cube, ground truth) pair.

    Class regions: per class, a low-frequency random field plus a Gaussian
    bump at a class-specific anchor; the per-pixel label is the argmax field,
    which yields smooth contiguous regions and guarantees every class appears.
    Pixel spectra: class mean plus iid Gaussian noise.
    """
    if n_classes < 2:
        raise ValueError(f"need at least two classes, got {n_classes}")
    rng = np.random.default_rng(seed)

    rr, cc = np.meshgrid(
        np.linspace(0, 1, height), np.linspace(0, 1, width), indexing="ij"
    )
    anchors_r = rng.uniform(0.1, 0.9, n_classes)
    anchors_c = rng.uniform(0.1, 0.9, n_classes)
    fields = np.empty((n_classes, height, width))
    bumps = np.empty((n_classes, height, width))
    for c in range(n_classes):
        f = np.zeros((height, width))
        for _ in range(3):
            fr, fc = rng.uniform(0.3, 1.0, 2)
            ph = rng.uniform(0, 2 * np.pi, 2)
            f += rng.normal(0, 0.6) * np.cos(2 * np.pi * (fr * rr + ph[0])) * np.cos(
                2 * np.pi * (fc * cc + ph[1])
            )
        fields[c] = f
        d2 = (rr - anchors_r[c]) ** 2 + (cc - anchors_c[c]) ** 2
        bumps[c] = np.exp(-d2 / 0.035)
    # widen the anchor bumps until no class region collapses
    min_pixels = max(1, (height * width) // (n_classes * 10))
    scale = 3.0
    for _ in range(8):
        labels = (fields + scale * bumps).argmax(axis=0) + 1
        if np.bincount(labels.ravel(), minlength=n_classes + 1)[1:].min() >= min_pixels:
            break
        scale *= 1.6

    band_axis = np.linspace(0, 1, bands)
    spectra = np.empty((n_classes, bands))
    for c in range(n_classes):
        s = rng.normal(0, 0.3) + rng.normal(0, 0.5) * band_axis
        for _ in range(4):
            center = rng.uniform(0, 1)
            width_b = rng.uniform(0.03, 0.15)
            s = s + rng.normal(0, 1.2) * np.exp(-((band_axis - center) ** 2) / (2 * width_b**2))
        spectra[c] = s

    data = spectra[labels - 1].transpose(2, 0, 1)
    data = data + noise * rng.standard_normal((bands, height, width))
    cube = HsiCube(data=data.astype(np.float32))
    gt = GroundTruth(labels=labels.astype(np.int64), n_classes=n_classes)
    return cube, gt
