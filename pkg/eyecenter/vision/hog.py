"""
HoG features anchored to eye-center estimates
Scale-normalized patch extraction, per-eye HoG descriptors and the binary
HoG-difference split features used by the regression trees
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import List, Sequence, Tuple

import numpy as np

from models import Point2
from eyecenter.utils.error_handlers import InvalidLandmarksError
from eyecenter.vision.geometry import EyeAnchor
from eyecenter.vision.imaging import ImageLike, as_float_image, sample_bilinear, smooth

ZERO_NORM_GUARD = 1e-12


class Eye(IntEnum):
    RIGHT = 0
    LEFT = 1


@dataclass(frozen=True)
class HogConfig:
    """
    HoG extraction parameters

    e_hog is the reference interocular distance at which patches are sampled;
    patches are W x W with W = patch_fraction * e_hog.
    """
    e_hog: float = 100.0
    patch_fraction: float = 0.4
    cells_per_side: int = 4
    orientation_bins: int = 6
    soft_binning: bool = False

    def __post_init__(self):
        if not self.e_hog > 0:
            raise ValueError(f"e_hog must be positive, got {self.e_hog}")
        if not 0 < self.patch_fraction <= 1:
            raise ValueError(f"patch_fraction must be in (0, 1], got {self.patch_fraction}")
        if self.cells_per_side < 1 or self.orientation_bins < 1:
            raise ValueError("cells_per_side and orientation_bins must be >= 1")
        if self.patch_size < self.cells_per_side:
            raise ValueError(f"patch of {self.patch_size} px cannot hold {self.cells_per_side} cells per side")

    @property
    def patch_size(self) -> int:
        return int(round(self.patch_fraction * self.e_hog))

    @property
    def dimension(self) -> int:
        return self.cells_per_side ** 2 * self.orientation_bins


class PatchSampler:
    """
    Samples W x W patches from an image rescaled by s = e_hog / |E_inter|

    The image is low-passed once when s < 1 so that resampling to the
    reference scale does not alias.
    """

    def __init__(self, image: ImageLike, anchor: EyeAnchor, cfg: HogConfig):
        distance = anchor.distance
        if not distance > 0:
            raise InvalidLandmarksError("non-positive interocular distance")
        self.cfg = cfg
        self.scale = cfg.e_hog / distance
        source = as_float_image(image)
        if self.scale < 1.0:
            source = smooth(source, 0.5 * np.sqrt(1.0 / self.scale ** 2 - 1.0))
        self.source = source
        w = cfg.patch_size
        self._offsets = (np.arange(w, dtype=np.float64) - (w - 1) / 2.0) / self.scale

    def patches(self, centers: np.ndarray) -> np.ndarray:
        """
        Extract patches at image-pixel centers

        Args:
            centers: (M, 2) array of (x, y) centers in image pixels

        Returns:
            (M, W, W) array of patches
        """
        centers = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
        xs = centers[:, 0, None, None] + self._offsets[None, None, :]
        ys = centers[:, 1, None, None] + self._offsets[None, :, None]
        xs, ys = np.broadcast_arrays(xs, ys)
        return sample_bilinear(self.source, xs, ys)

    def patch(self, center: Point2) -> np.ndarray:
        return self.patches(center.as_array()[None, :])[0]


def extract_patch(image: ImageLike, center: Point2, anchor: EyeAnchor, cfg: HogConfig) -> np.ndarray:
    """
    Extract the W x W patch centered at s*center of the image scaled by s

    Args:
        image: Grayscale image
        center: Patch center in image pixels
        anchor: Eye anchor giving the interocular distance
        cfg: HoG configuration

    Returns:
        (W, W) float patch; out-of-bounds samples clamp to the nearest edge pixel
    """
    return PatchSampler(image, anchor, cfg).patch(center)


def _orientation_bins(angles: np.ndarray, magnitudes: np.ndarray, bins: int, soft: bool):
    """Return (bin indices, weights) pairs for unsigned orientations in [0, pi)"""
    width = np.pi / bins
    if not soft:
        index = np.minimum((angles / width).astype(int), bins - 1)
        return [(index, magnitudes)]
    position = angles / width - 0.5
    lower = np.floor(position)
    frac = position - lower
    lower = lower.astype(int) % bins
    upper = (lower + 1) % bins
    return [(lower, magnitudes * (1.0 - frac)), (upper, magnitudes * frac)]


def compute_hog_batch(patches: np.ndarray, cfg: HogConfig = HogConfig()) -> np.ndarray:
    """
    HoG descriptors of a stack of square patches

    Centered-difference gradients, unsigned orientation binned by magnitude per
    cell, cell histograms concatenated in row-major cell order and L2
    normalized. Gradient-free patches yield the all-zero descriptor.

    Args:
        patches: (M, W, W) array
        cfg: HoG configuration (cells_per_side, orientation_bins, soft_binning)

    Returns:
        (M, cells_per_side**2 * orientation_bins) array
    """
    patches = np.asarray(patches, dtype=np.float64)
    if patches.ndim == 2:
        patches = patches[None]
    m, h, w = patches.shape
    cells, bins = cfg.cells_per_side, cfg.orientation_bins

    gy, gx = np.gradient(patches, axis=(1, 2))
    magnitude = np.hypot(gx, gy)
    angle = np.mod(np.arctan2(gy, gx), np.pi)
    # arctan2 can land exactly on pi after the modulo for tiny negative gy
    angle[angle >= np.pi] = 0.0

    cell_row = (np.arange(h) * cells) // h
    cell_col = (np.arange(w) * cells) // w
    cell_index = (cell_row[:, None] * cells + cell_col[None, :])[None, :, :]
    image_offset = (np.arange(m) * cells * cells * bins)[:, None, None]

    histogram = np.zeros(m * cells * cells * bins)
    for index, weight in _orientation_bins(angle, magnitude, bins, cfg.soft_binning):
        flat = (image_offset + cell_index * bins + index).ravel()
        histogram += np.bincount(flat, weights=weight.ravel(), minlength=histogram.size)
    histogram = histogram.reshape(m, cells * cells * bins)

    norms = np.linalg.norm(histogram, axis=1, keepdims=True)
    return np.where(norms >= ZERO_NORM_GUARD, histogram / np.maximum(norms, ZERO_NORM_GUARD), 0.0)


def compute_hog(patch: np.ndarray, cfg: HogConfig = HogConfig()) -> np.ndarray:
    """HoG descriptor of one W x W patch (96 values with the default config)"""
    return compute_hog_batch(np.asarray(patch)[None], cfg)[0]


def eye_descriptors(sampler: PatchSampler, right_centers: np.ndarray, left_centers: np.ndarray) -> np.ndarray:
    """
    Descriptors of both eyes for M shape estimates of one image

    Returns:
        (M, 2, D) array indexed by [sample, Eye, dimension]
    """
    right_centers = np.asarray(right_centers, dtype=np.float64).reshape(-1, 2)
    left_centers = np.asarray(left_centers, dtype=np.float64).reshape(-1, 2)
    patches = sampler.patches(np.concatenate([right_centers, left_centers]))
    descriptors = compute_hog_batch(patches, sampler.cfg)
    m = len(right_centers)
    return np.stack([descriptors[:m], descriptors[m:]], axis=1)


@dataclass(frozen=True)
class DiffFeature:
    """Binary split test (h[dim_a] - h[dim_b]) > threshold on one eye's descriptor"""
    eye: Eye
    dim_a: int
    dim_b: int
    threshold: float

    def __post_init__(self):
        if self.dim_a == self.dim_b:
            raise ValueError("a HoG difference feature needs two distinct dimensions")

    def evaluate(self, right: np.ndarray, left: np.ndarray) -> bool:
        h = right if self.eye == Eye.RIGHT else left
        return bool(h[self.dim_a] - h[self.dim_b] > self.threshold)

    def evaluate_batch(self, descriptors: np.ndarray) -> np.ndarray:
        """Vectorized evaluation over an (M, 2, D) descriptor stack"""
        h = descriptors[:, int(self.eye), :]
        return h[:, self.dim_a] - h[:, self.dim_b] > self.threshold


def eval_diff_feature(f: DiffFeature, right: np.ndarray, left: np.ndarray) -> bool:
    """Evaluate a HoG difference feature on the two eye descriptors"""
    return f.evaluate(right, left)


def sample_pool(rng: np.random.Generator, k: int = 20,
                threshold_range: Tuple[float, float] = (-0.3, 0.3),
                dimension: int = 96) -> List[DiffFeature]:
    """
    Draw a pool of K random HoG difference features

    Args:
        rng: Random generator
        k: Pool size (>= 1)
        threshold_range: Interval the thresholds are drawn from
        dimension: Descriptor length

    Returns:
        List of K DiffFeature
    """
    if k < 1:
        raise ValueError(f"pool size must be >= 1, got {k}")
    lo, hi = threshold_range
    pool = []
    for _ in range(k):
        eye = Eye(int(rng.integers(2)))
        dim_a, dim_b = rng.choice(dimension, size=2, replace=False)
        threshold = lo if lo == hi else float(rng.uniform(lo, hi))
        # thresholds are stored as float32 so saved models reproduce every split
        threshold = float(np.float32(threshold))
        pool.append(DiffFeature(eye, int(dim_a), int(dim_b), threshold))
    return pool


def pool_arrays(pool: Sequence[DiffFeature]) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Split a feature pool into (eyes, dim_a, dim_b, thresholds) arrays"""
    return (
        np.array([int(f.eye) for f in pool], dtype=np.int64),
        np.array([f.dim_a for f in pool], dtype=np.int64),
        np.array([f.dim_b for f in pool], dtype=np.int64),
        np.array([f.threshold for f in pool], dtype=np.float64),
    )
