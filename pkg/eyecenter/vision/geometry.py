"""
Face-normalizing geometry
Eye anchors, the similarity transform to the normalized frame, eye closure
and eroded eye-mask tests
"""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from models import EyeContour, EyeCorners, Point2, Shape
from eyecenter.utils.error_handlers import InvalidLandmarksError

# T maps c_R to the origin and c_L to (1, 0), so the initial shape is constant
INITIAL_SHAPE = Shape(Point2(0.0, 0.0), Point2(1.0, 0.0))

DEFAULT_EROSION_FRAC = 0.05

PointLike = Union[Point2, np.ndarray]


@dataclass(frozen=True)
class EyeAnchor:
    """Per-eye corner midpoints of a face, image pixels"""
    c_right: Point2
    c_left: Point2

    @property
    def inter_ocular(self) -> np.ndarray:
        return self.c_left.as_array() - self.c_right.as_array()

    @property
    def distance(self) -> float:
        return float(np.hypot(*self.inter_ocular))


@dataclass(frozen=True, eq=False)
class NormalizationTransform:
    """Similarity T(p) = scale * R (p - c_R) written as scale * R p + t"""
    scale: float
    rotation: np.ndarray
    translation: np.ndarray

    def apply(self, p: PointLike):
        if isinstance(p, Point2):
            return Point2.from_array(self.apply(p.as_array()))
        p = np.asarray(p, dtype=np.float64)
        return self.scale * p @ self.rotation.T + self.translation

    def apply_inverse(self, p: PointLike):
        if isinstance(p, Point2):
            return Point2.from_array(self.apply_inverse(p.as_array()))
        p = np.asarray(p, dtype=np.float64)
        # R is orthonormal, so R^-1 = R^T
        return ((p - self.translation) / self.scale) @ self.rotation

    def inverse_shape(self, shape: Shape) -> Tuple[Point2, Point2]:
        """Map a normalized shape back to image pixels (right, left)"""
        return self.apply_inverse(shape.x_right), self.apply_inverse(shape.x_left)

    def shape_from_image(self, right: Point2, left: Point2) -> Shape:
        return Shape(self.apply(right), self.apply(left))


def build_transform(corners: EyeCorners) -> Tuple[EyeAnchor, NormalizationTransform]:
    """
    Build the eye anchor and the normalizing similarity from four corners

    Args:
        corners: Eye corners in image pixels

    Returns:
        Tuple of (EyeAnchor, NormalizationTransform)

    Raises:
        InvalidLandmarksError: if an eye's corners coincide or the
            interocular vector has zero length
    """
    if corners.right_outer == corners.right_inner:
        raise InvalidLandmarksError("right eye corners coincide")
    if corners.left_inner == corners.left_outer:
        raise InvalidLandmarksError("left eye corners coincide")

    anchor = EyeAnchor(
        c_right=corners.right_outer.midpoint(corners.right_inner),
        c_left=corners.left_inner.midpoint(corners.left_outer),
    )
    distance = anchor.distance
    if not distance > 1e-12:
        raise InvalidLandmarksError("zero-length interocular vector")

    ex, ey = anchor.inter_ocular / distance
    rotation = np.array([[ex, ey], [-ey, ex]])
    scale = 1.0 / distance
    translation = -scale * rotation @ anchor.c_right.as_array()
    return anchor, NormalizationTransform(scale=scale, rotation=rotation, translation=translation)


def initial_shape(anchor: EyeAnchor, transform: NormalizationTransform) -> Shape:
    """S^0 = (T(c_R), T(c_L)), which is ((0,0),(1,0)) by construction of T"""
    return INITIAL_SHAPE


def eye_size(outer: Point2, inner: Point2) -> float:
    """Eye size E: distance between an eye's two corners"""
    return outer.distance_to(inner)


def closure_ratio(contour: EyeContour) -> float:
    """
    Height-to-width ratio of an eye contour

    Square root of the minor/major eigenvalue ratio of the contour's
    second-moment matrix; equals b/a for an ellipse sampled uniformly in angle.

    Raises:
        InvalidLandmarksError: for fewer than 4 contour points
    """
    points = contour.points
    if len(points) < 4:
        raise InvalidLandmarksError(f"eye contour needs at least 4 points, got {len(points)}")
    centered = points - points.mean(axis=0)
    moments = centered.T @ centered / len(points)
    minor, major = np.linalg.eigvalsh(moments)
    if major <= 0:
        return 0.0
    return float(np.sqrt(max(minor, 0.0) / major))


def _inside_polygon(points: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    """Even-odd rule point-in-polygon test, vectorized over points"""
    px = points[:, 0:1]
    py = points[:, 1:2]
    x0, y0 = polygon[:, 0], polygon[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    straddles = (y0 > py) != (y1 > py)
    with np.errstate(divide='ignore', invalid='ignore'):
        x_cross = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
    crossings = straddles & (px < x_cross)
    return np.count_nonzero(crossings, axis=1) % 2 == 1


def _distance_to_boundary(points: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    """Euclidean distance from each point to the polygon's edges"""
    a = polygon
    b = np.roll(polygon, -1, axis=0)
    ab = b - a
    length_sq = np.maximum(np.einsum('ij,ij->i', ab, ab), 1e-300)
    ap = points[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum('mij,ij->mi', ap, ab) / length_sq, 0.0, 1.0)
    nearest = a[None, :, :] + t[..., None] * ab[None, :, :]
    return np.sqrt(((points[:, None, :] - nearest) ** 2).sum(axis=2)).min(axis=1)


def signed_distance(points, contour: EyeContour) -> np.ndarray:
    """Distance to the contour boundary, positive inside and negative outside"""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    distance = _distance_to_boundary(points, contour.points)
    return np.where(_inside_polygon(points, contour.points), distance, -distance)


def points_in_eye_mask(points, contour: EyeContour, erosion: float) -> np.ndarray:
    """Vectorized point_in_eye_mask over an (M, 2) array"""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    inside = _inside_polygon(points, contour.points)
    if erosion <= 0:
        return inside
    return inside & (_distance_to_boundary(points, contour.points) >= erosion)


def point_in_eye_mask(p: Point2, contour: EyeContour, erosion: float = 0.0) -> bool:
    """
    True iff p lies inside the contour at distance >= erosion from its boundary

    Args:
        p: Query point, image pixels
        contour: Eye-opening polygon
        erosion: Mask erosion in pixels (>= 0)
    """
    if erosion < 0:
        raise ValueError(f"erosion must be non-negative, got {erosion}")
    return bool(points_in_eye_mask(p.as_array()[None, :], contour, erosion)[0])


def mask_pixels(contour: EyeContour, erosion: float, shape: Tuple[int, int]) -> np.ndarray:
    """
    Integer pixel centers (x, y) inside the eroded mask, in row-major scan order

    Args:
        contour: Eye-opening polygon
        erosion: Mask erosion in pixels
        shape: (height, width) of the image; pixels are clipped to it
    """
    h, w = shape
    lo = np.floor(contour.points.min(axis=0)).astype(int)
    hi = np.ceil(contour.points.max(axis=0)).astype(int)
    x0, y0 = max(lo[0], 0), max(lo[1], 0)
    x1, y1 = min(hi[0], w - 1), min(hi[1], h - 1)
    if x1 < x0 or y1 < y0:
        return np.empty((0, 2), dtype=int)
    ys, xs = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    grid = np.column_stack([xs.ravel(), ys.ravel()])
    keep = points_in_eye_mask(grid.astype(np.float64), contour, erosion)
    return grid[keep]
