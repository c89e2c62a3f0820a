"""
Raster helpers shared by the vision modules
Smoothing, clamped bilinear sampling and gradient fields
"""

from typing import Tuple, Union

import numpy as np
from scipy import ndimage

from models import GrayImage

ImageLike = Union[GrayImage, np.ndarray]


def as_float_image(image: ImageLike) -> np.ndarray:
    """Return the image as a float64 2-D array"""
    if isinstance(image, GrayImage):
        return image.as_float()
    array = np.asarray(image, dtype=np.float64)
    if array.ndim != 2 or array.size == 0:
        raise ValueError(f"expected a non-empty 2-D image, got shape {array.shape}")
    return array


def smooth(image: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian smoothing with edge replication; sigma <= 0 returns a copy"""
    if sigma <= 0:
        return np.array(image, dtype=np.float64, copy=True)
    return ndimage.gaussian_filter(image, sigma=sigma, mode='nearest')


def sample_bilinear(image: np.ndarray, xs, ys) -> np.ndarray:
    """
    Bilinear samples at (xs, ys); out-of-bounds positions clamp to the edge

    Args:
        image: 2-D float image
        xs: Column coordinates (any shape)
        ys: Row coordinates (same shape as xs)

    Returns:
        Array of samples with the shape of xs
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    h, w = image.shape
    # map_coordinates clamps the interpolation support but not the coordinate itself
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    coords = np.stack([ys.ravel(), xs.ravel()])
    return ndimage.map_coordinates(image, coords, order=1, mode='nearest').reshape(xs.shape)


def centered_gradients(image: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Centered-difference gradients (gx, gy); one-sided on the border"""
    gy, gx = np.gradient(image)
    return gx, gy


class GradientField:
    """Gradients of a Gaussian-smoothed image with bilinear lookup"""

    def __init__(self, image: ImageLike, sigma: float):
        self.sigma = sigma
        self.smoothed = smooth(as_float_image(image), sigma)
        self.gx, self.gy = centered_gradients(self.smoothed)

    @property
    def shape(self):
        return self.smoothed.shape

    def sample(self, xs, ys) -> Tuple[np.ndarray, np.ndarray]:
        return sample_bilinear(self.gx, xs, ys), sample_bilinear(self.gy, xs, ys)
