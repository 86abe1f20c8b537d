"""Gaussian-blob classification data used as a stand-in for the Kaggle sets."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .dataset import Dataset


@dataclass(frozen=True)
class SyntheticSpec:
    n_samples: int = 2000
    n_features: int = 8
    class_count: int = 2
    cluster_separation: float = 3.0
    label_noise: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < self.class_count or self.class_count < 2 or self.n_features < 1:
            raise ValueError("need n_samples >= class_count >= 2 and n_features >= 1")
        if self.cluster_separation <= 0:
            raise ValueError("cluster_separation must be positive")
        if not 0.0 <= self.label_noise < 0.5:
            raise ValueError("label_noise must lie in [0, 0.5)")

    def to_dict(self) -> dict:
        return asdict(self)


def class_centers(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    """Centers with every pairwise distance equal to the separation (unit-variance clusters).

    When there are at least as many features as classes the centers are a
    randomly rotated regular simplex; otherwise random directions rescaled
    so the closest pair sits exactly at the separation.
    """
    c, d, sep = spec.class_count, spec.n_features, spec.cluster_separation
    if c <= d:
        q, _ = np.linalg.qr(rng.normal(size=(d, d)))
        centers = (sep / np.sqrt(2.0)) * q[:, :c].T
        return centers - centers.mean(axis=0)
    centers = rng.normal(size=(c, d))
    gaps = np.linalg.norm(centers[:, None] - centers[None], axis=-1)
    gaps[np.diag_indices(c)] = np.inf
    return centers * (sep / gaps.min())


def synth_generate(spec: SyntheticSpec) -> Dataset:
    """Balanced class-conditional N(center, I) samples, with a fraction of labels flipped.

    Flipped labels are redrawn uniformly among the *other* classes.
    """
    rng = np.random.default_rng(spec.seed)
    centers = class_centers(spec, rng)
    labels = rng.permutation(np.arange(spec.n_samples) % spec.class_count)
    features = centers[labels] + rng.normal(size=(spec.n_samples, spec.n_features))
    n_flip = int(round(spec.label_noise * spec.n_samples))
    flip = rng.choice(spec.n_samples, size=n_flip, replace=False)
    shift = rng.integers(1, spec.class_count, size=n_flip)
    noisy = labels.copy()
    noisy[flip] = (labels[flip] + shift) % spec.class_count
    names = [f"x{i}" for i in range(spec.n_features)]
    classes = [f"class{i}" for i in range(spec.class_count)]
    return Dataset(features, noisy, spec.class_count, names, classes)
