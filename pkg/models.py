"""
Domain models for the eyecenter toolkit
Immutable value types shared by the vision modules, services and repositories

Models:
    - Point2, EyeCorners, EyeContour, Shape: landmark geometry
    - GrayImage: 8-bit grayscale raster
    - EyeAnnotation: corners, contours and iris centers of one face image
    - CircleEstimate, Candidate: iris hypotheses
    - EyeDetection, DetectionResult: pipeline output per image
    - ErrorRecord, AccuracyCurve: evaluation records
    - CorpusRecord, CorpusManifest: synthetic corpus listing
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple
import math

import numpy as np


@dataclass(frozen=True)
class Point2:
    """2-D point in image pixels or normalized face units"""
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"Point2 components must be finite, got ({self.x}, {self.y})")

    @classmethod
    def from_array(cls, values) -> 'Point2':
        return cls(float(values[0]), float(values[1]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=np.float64)

    def distance_to(self, other: 'Point2') -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def midpoint(self, other: 'Point2') -> 'Point2':
        return Point2((self.x + other.x) / 2.0, (self.y + other.y) / 2.0)

    def to_dict(self):
        return {'x': self.x, 'y': self.y}


@dataclass(frozen=True)
class EyeCorners:
    """
    The four eye corners in image pixels

    The right eye is the subject's right eye, which appears at smaller image x
    for an upright face.
    """
    right_outer: Point2
    right_inner: Point2
    left_inner: Point2
    left_outer: Point2

    def right_pair(self) -> Tuple[Point2, Point2]:
        return self.right_outer, self.right_inner

    def left_pair(self) -> Tuple[Point2, Point2]:
        return self.left_inner, self.left_outer

    def as_array(self) -> np.ndarray:
        return np.array([p.as_array() for p in self.points()])

    def points(self) -> Tuple[Point2, Point2, Point2, Point2]:
        return self.right_outer, self.right_inner, self.left_inner, self.left_outer

    @classmethod
    def from_array(cls, values) -> 'EyeCorners':
        values = np.asarray(values, dtype=np.float64).reshape(4, 2)
        return cls(*(Point2.from_array(v) for v in values))

    def to_dict(self):
        return {
            'right_outer': self.right_outer.to_dict(),
            'right_inner': self.right_inner.to_dict(),
            'left_inner': self.left_inner.to_dict(),
            'left_outer': self.left_outer.to_dict(),
        }


@dataclass(frozen=True, eq=False)
class EyeContour:
    """Ordered eye-opening polygon of one eye, image pixels, shape (N, 2)"""
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64).reshape(-1, 2)
        pts.setflags(write=False)
        object.__setattr__(self, 'points', pts)

    def __len__(self):
        return len(self.points)

    def __eq__(self, other):
        return isinstance(other, EyeContour) and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash(self.points.tobytes())

    def centroid(self) -> Point2:
        return Point2.from_array(self.points.mean(axis=0))

    def transformed(self, fn) -> 'EyeContour':
        return EyeContour(np.array([fn(p) for p in self.points]))


@dataclass(frozen=True)
class Shape:
    """Pair of eye centers, stored exclusively in the face-normalized frame"""
    x_right: Point2
    x_left: Point2

    def as_vector(self) -> np.ndarray:
        return np.array([self.x_right.x, self.x_right.y, self.x_left.x, self.x_left.y], dtype=np.float64)

    @classmethod
    def from_vector(cls, values) -> 'Shape':
        values = np.asarray(values, dtype=np.float64).reshape(4)
        return cls(Point2(float(values[0]), float(values[1])), Point2(float(values[2]), float(values[3])))


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Row-major 8-bit grayscale image"""
    pixels: np.ndarray
    image_id: str = ''

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 2:
            raise ValueError(f"GrayImage expects a 2-D array, got shape {pixels.shape}")
        if pixels.dtype != np.uint8:
            pixels = np.clip(np.rint(pixels), 0, 255).astype(np.uint8)
        object.__setattr__(self, 'pixels', pixels)

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    def as_float(self) -> np.ndarray:
        return self.pixels.astype(np.float64)

    def contains(self, p: Point2) -> bool:
        return 0.0 <= p.x <= self.width - 1 and 0.0 <= p.y <= self.height - 1

    def __eq__(self, other):
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)

    __hash__ = None


class AnnotationSource(Enum):
    """Origin of an annotation's iris centers"""
    MANUAL = 'manual'
    AUTO = 'auto'
    SYNTHETIC = 'synthetic'


@dataclass(frozen=True)
class EyeAnnotation:
    """Landmarks and iris centers of one face image"""
    image_id: str
    corners: EyeCorners
    centers: Tuple[Point2, Point2]
    contours: Optional[Tuple[EyeContour, EyeContour]] = None
    source: AnnotationSource = AnnotationSource.MANUAL
    image_path: str = ''
    image_size: Optional[Tuple[int, int]] = None
    occlusion: Optional[Tuple[float, float]] = None

    @property
    def right_center(self) -> Point2:
        return self.centers[0]

    @property
    def left_center(self) -> Point2:
        return self.centers[1]

    def to_dict(self):
        return {
            'image_id': self.image_id,
            'image_path': self.image_path,
            'source': self.source.value,
            'corners': self.corners.to_dict(),
            'centers': [c.to_dict() for c in self.centers],
            'has_contours': self.contours is not None,
        }


@dataclass(frozen=True)
class CircleEstimate:
    """Iris circle (a, b, r) in pixels with fit diagnostics"""
    a: float
    b: float
    r: float
    final_cost: float = 0.0
    iterations: int = 0
    inlier_fraction: float = 0.0
    refined: bool = True
    cost_trace: Tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"circle radius must be positive, got {self.r}")

    @property
    def center(self) -> Point2:
        return Point2(self.a, self.b)


@dataclass(frozen=True)
class Candidate:
    """Eye-center hypothesis from the gradient-voting detector"""
    position: Point2
    radius: float
    score: float


class Stage(Enum):
    """How a detected eye center was produced"""
    REGRESSED = 'regressed'
    REFINED = 'refined'
    CONTOUR_FALLBACK = 'contour_fallback'
    HANDCRAFTED_FALLBACK = 'handcrafted_fallback'


@dataclass(frozen=True)
class EyeDetection:
    """Detected center of one eye"""
    center: Point2
    stage: Stage
    closure_ratio: float
    radius: Optional[float] = None
    clamped: bool = False
    flagged: bool = False

    def to_dict(self):
        return {
            'center': self.center.to_dict(),
            'radius': self.radius,
            'stage': self.stage.value,
            'closure_ratio': self.closure_ratio,
            'clamped': self.clamped,
            'flagged': self.flagged,
        }


@dataclass(frozen=True)
class DetectionResult:
    """Both eye detections of one image"""
    image_id: str
    right: EyeDetection
    left: EyeDetection

    @property
    def centers(self) -> Tuple[Point2, Point2]:
        return self.right.center, self.left.center

    def to_dict(self):
        return {'image_id': self.image_id, 'right': self.right.to_dict(), 'left': self.left.to_dict()}


@dataclass(frozen=True)
class ErrorRecord:
    """Normalized eye-center error of one image"""
    image_id: str
    e_right: float
    e_left: float
    d: float
    e: float

    def to_dict(self):
        return {'image_id': self.image_id, 'e_right': self.e_right, 'e_left': self.e_left,
                'd': self.d, 'e': self.e}


@dataclass(frozen=True)
class AccuracyCurve:
    """Fraction of images with normalized error at or below each threshold"""
    thresholds: Tuple[float, ...]
    fractions: Tuple[float, ...]

    def fraction_at(self, threshold: float) -> float:
        return self.fractions[self.thresholds.index(threshold)]

    def to_dict(self):
        return {'thresholds': list(self.thresholds), 'fractions': list(self.fractions)}


@dataclass(frozen=True)
class CorpusRecord:
    """One generated image of a synthetic corpus"""
    image_id: str
    image: str
    split: str
    pixels_sha256: str

    def to_dict(self):
        return {'image_id': self.image_id, 'image': self.image, 'split': self.split,
                'pixels_sha256': self.pixels_sha256}


@dataclass(frozen=True)
class CorpusManifest:
    """Deterministic listing of a synthetic corpus and its train/test split"""
    seed: int
    params: dict
    records: Tuple[CorpusRecord, ...]
    digest: str
    annotations: str = 'annotations.txt'

    @property
    def count(self) -> int:
        return len(self.records)

    def split_ids(self, split: str) -> Tuple[str, ...]:
        return tuple(r.image_id for r in self.records if r.split == split)

    def to_dict(self):
        return {
            'format': 'eyecenter-corpus',
            'version': 1,
            'seed': self.seed,
            'count': self.count,
            'params': self.params,
            'annotations': self.annotations,
            'digest': self.digest,
            'records': [r.to_dict() for r in self.records],
        }
