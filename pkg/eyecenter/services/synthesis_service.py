"""
Synthesis Service Layer
Procedural face-pair renderer with exact ground truth, flip augmentation and
deterministic corpus generation
"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage

from models import (
    AnnotationSource,
    CorpusManifest,
    CorpusRecord,
    EyeAnnotation,
    EyeContour,
    EyeCorners,
    GrayImage,
    Point2,
)
from eyecenter.decorators import audit_log, log_errors
from eyecenter.events import EventType, event_manager
from eyecenter.repositories import AnnotationRepository, CorpusRepository, ImageRepository
from eyecenter.repositories.annotation_repository import dumps_annotations
from eyecenter.utils import ordered_map

logger = logging.getLogger('eyecenter.synthesis')

SKIN_LEVEL = 150.0
SCLERA_LEVEL = 220.0
IRIS_LEVEL = 70.0
IRIS_GRADE = 15.0
PUPIL_LEVEL = 25.0
PUPIL_GRADE = 10.0
PUPIL_RADIUS_FRAC = 0.4
CONTOUR_POINTS = 16


@dataclass(frozen=True)
class SynthParams:
    """
    Synthetic face-pair parameters

    Ranges are sampled uniformly per image. The eye width E is half the
    interocular distance; iris radius and gaze offsets are fractions of E.
    """
    image_size: Tuple[int, int] = (384, 286)
    interocular_range: Tuple[float, float] = (90.0, 110.0)
    iris_radius_frac: float = 0.2
    gaze_offset_range: Tuple[float, float] = (-0.1, 0.1)
    closure_range: Tuple[float, float] = (0.45, 0.65)
    roll_range_deg: Tuple[float, float] = (0.0, 0.0)
    face_jitter_px: float = 10.0
    noise_sigma: float = 0.0
    blur_sigma: float = 0.0
    illumination_gradient: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        for name in ('interocular_range', 'gaze_offset_range', 'closure_range', 'roll_range_deg'):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} must be well-ordered, got ({lo}, {hi})")
        if not 0.05 < self.iris_radius_frac < 0.6:
            raise ValueError(f"iris_radius_frac must be in (0.05, 0.6), got {self.iris_radius_frac}")
        if not (0 < self.closure_range[0] and self.closure_range[1] <= 1):
            raise ValueError(f"closure_range must lie in (0, 1], got {self.closure_range}")
        if self.interocular_range[0] <= 0:
            raise ValueError("interocular distance must be positive")
        if min(self.noise_sigma, self.blur_sigma, self.face_jitter_px) < 0:
            raise ValueError("noise, blur and jitter must be non-negative")
        width, height = self.image_size
        reach = 0.75 * self.interocular_range[1] + self.face_jitter_px
        if 2 * reach >= width or self.interocular_range[1] / 2 + 2 * self.face_jitter_px >= height:
            raise ValueError(f"a {width}x{height} image cannot hold the requested face")

    def to_dict(self):
        return json.loads(json.dumps(asdict(self)))


def _uniform(rng: np.random.Generator, bounds: Tuple[float, float]) -> float:
    lo, hi = bounds
    return float(lo) if lo == hi else float(rng.uniform(lo, hi))


def _coverage(signed_distance: np.ndarray) -> np.ndarray:
    """Pixel coverage from a signed distance in pixels (positive inside)"""
    return np.clip(0.5 + signed_distance, 0.0, 1.0)


@dataclass(frozen=True)
class _EyeLayout:
    middle: np.ndarray
    axis: np.ndarray
    normal: np.ndarray
    half_width: float
    half_height: float
    iris_center: np.ndarray

    def contour(self) -> EyeContour:
        theta = 2.0 * np.pi * np.arange(CONTOUR_POINTS) / CONTOUR_POINTS
        points = (self.middle[None, :]
                  + self.half_width * np.cos(theta)[:, None] * self.axis[None, :]
                  + self.half_height * np.sin(theta)[:, None] * self.normal[None, :])
        return EyeContour(points)


def _paint_eye(canvas: np.ndarray, xs: np.ndarray, ys: np.ndarray, eye: _EyeLayout, radius: float) -> float:
    """Draw sclera, iris and pupil of one eye in place; returns the hidden fraction of the iris"""
    dx, dy = xs - eye.middle[0], ys - eye.middle[1]
    along = dx * eye.axis[0] + dy * eye.axis[1]
    across = dx * eye.normal[0] + dy * eye.normal[1]
    a, b = eye.half_width, eye.half_height

    level = (along / a) ** 2 + (across / b) ** 2 - 1.0
    slope = 2.0 * np.sqrt(along ** 2 / a ** 4 + across ** 2 / b ** 4)
    opening = _coverage(-level / np.maximum(slope, 1e-9))
    canvas *= 1.0 - opening
    canvas += SCLERA_LEVEL * opening

    rho = np.hypot(xs - eye.iris_center[0], ys - eye.iris_center[1])
    disk = _coverage(radius - rho)
    iris = disk * opening
    iris_value = IRIS_LEVEL + IRIS_GRADE * np.clip(rho / radius, 0.0, 1.0)
    canvas *= 1.0 - iris
    canvas += iris_value * iris

    pupil_radius = PUPIL_RADIUS_FRAC * radius
    pupil = _coverage(pupil_radius - rho) * opening
    pupil_value = PUPIL_LEVEL + PUPIL_GRADE * np.clip(rho / pupil_radius, 0.0, 1.0)
    canvas *= 1.0 - pupil
    canvas += pupil_value * pupil

    total = float(disk.sum())
    return 0.0 if total <= 0 else float(1.0 - iris.sum() / total)


def render_synthetic_eye(params: SynthParams, rng: Optional[np.random.Generator] = None,
                         image_id: str = 'synth') -> Tuple[GrayImage, EyeAnnotation]:
    """
    Render a face pair of eyes with exact sub-pixel ground truth

    Bright sclera ellipses with per-eye closure, anti-aliased dark iris disks
    clipped by the lids, darker graded pupils, a linear illumination gradient,
    Gaussian noise and Gaussian blur. Corners sit on each ellipse's long axis.

    Args:
        params: Rendering parameters
        rng: Random generator (default: seeded from params.rng_seed)
        image_id: Identifier of the sample

    Returns:
        Tuple of (GrayImage, EyeAnnotation)
    """
    rng = rng if rng is not None else np.random.default_rng(params.rng_seed)
    width, height = params.image_size

    interocular = _uniform(rng, params.interocular_range)
    e = 0.5 * interocular
    roll = np.deg2rad(_uniform(rng, params.roll_range_deg))
    axis = np.array([np.cos(roll), np.sin(roll)])
    normal = np.array([-np.sin(roll), np.cos(roll)])
    jitter = (params.face_jitter_px, params.face_jitter_px)
    face = np.array([width / 2.0 + _uniform(rng, (-jitter[0], jitter[0])),
                     height / 2.0 + _uniform(rng, (-jitter[1], jitter[1]))])
    gaze = (_uniform(rng, params.gaze_offset_range) * e * axis
            + 0.5 * _uniform(rng, params.gaze_offset_range) * e * normal)
    closures = (_uniform(rng, params.closure_range), _uniform(rng, params.closure_range))

    eyes = []
    for side, closure in zip((-1.0, 1.0), closures):
        middle = face + side * 0.5 * interocular * axis
        eyes.append(_EyeLayout(middle, axis, normal, e / 2.0, closure * e / 2.0, middle + gaze))

    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    canvas = SKIN_LEVEL + params.illumination_gradient * (xs - width / 2.0) / width
    radius = params.iris_radius_frac * e
    occlusion = tuple(_paint_eye(canvas, xs, ys, eye, radius) for eye in eyes)

    if params.noise_sigma > 0:
        canvas = canvas + rng.normal(0.0, params.noise_sigma, canvas.shape)
    if params.blur_sigma > 0:
        canvas = ndimage.gaussian_filter(canvas, params.blur_sigma, mode='nearest')
    pixels = np.clip(np.rint(canvas), 0, 255).astype(np.uint8)

    right, left = eyes
    corners = EyeCorners(
        right_outer=Point2.from_array(right.middle - right.half_width * axis),
        right_inner=Point2.from_array(right.middle + right.half_width * axis),
        left_inner=Point2.from_array(left.middle - left.half_width * axis),
        left_outer=Point2.from_array(left.middle + left.half_width * axis),
    )
    annotation = EyeAnnotation(
        image_id=image_id,
        corners=corners,
        centers=(Point2.from_array(right.iris_center), Point2.from_array(left.iris_center)),
        contours=(right.contour(), left.contour()),
        source=AnnotationSource.SYNTHETIC,
        image_size=(width, height),
        occlusion=occlusion,
    )
    return GrayImage(pixels, image_id=image_id), annotation


def flip_sample(image: GrayImage, annotation: EyeAnnotation) -> Tuple[GrayImage, EyeAnnotation]:
    """
    Mirror an image and its annotation horizontally

    x maps to W - 1 - x and the eyes swap roles, so the subject's right eye
    is again the one at smaller x.
    """
    width = image.width

    def mirror(p: Point2) -> Point2:
        return Point2(width - 1 - p.x, p.y)

    c = annotation.corners
    corners = EyeCorners(
        right_outer=mirror(c.left_outer),
        right_inner=mirror(c.left_inner),
        left_inner=mirror(c.right_inner),
        left_outer=mirror(c.right_outer),
    )
    contours = None
    if annotation.contours is not None:
        right, left = annotation.contours
        contours = (left.transformed(lambda p: (width - 1 - p[0], p[1])),
                    right.transformed(lambda p: (width - 1 - p[0], p[1])))
    occlusion = None if annotation.occlusion is None else (annotation.occlusion[1], annotation.occlusion[0])
    flipped_id = f"{annotation.image_id}_flip"
    flipped = replace(
        annotation,
        image_id=flipped_id,
        corners=corners,
        centers=(mirror(annotation.left_center), mirror(annotation.right_center)),
        contours=contours,
        occlusion=occlusion,
        image_path='',
    )
    return GrayImage(np.ascontiguousarray(image.pixels[:, ::-1]), image_id=flipped_id), flipped


def pixels_digest(image: GrayImage) -> str:
    h = hashlib.sha256()
    h.update(f"{image.width}x{image.height}:".encode('ascii'))
    h.update(image.pixels.tobytes())
    return h.hexdigest()


def assign_splits(image_ids: List[str], seed: int, test_fraction: float) -> List[str]:
    """
    Seed-derived hash split with exact sizes

    The round(count * test_fraction) ids with the smallest seeded hash form the test split.
    """
    if not 0 <= test_fraction < 1:
        raise ValueError(f"test_fraction must be in [0, 1), got {test_fraction}")
    n_test = int(round(len(image_ids) * test_fraction))
    ranked = sorted(image_ids, key=lambda i: hashlib.sha256(f"{seed}:{i}".encode('utf-8')).hexdigest())
    test = set(ranked[:n_test])
    return ['test' if i in test else 'train' for i in image_ids]


def build_corpus(params: SynthParams, count: int, seed: Optional[int] = None, test_fraction: float = 0.2,
                 threads: int = 1) -> Tuple[List[Tuple[GrayImage, EyeAnnotation]], CorpusManifest]:
    """
    Render a corpus with per-item seeds spawned from one seed

    Args:
        params: Rendering parameters
        count: Number of images
        seed: Corpus seed (default: params.rng_seed)
        test_fraction: Share of images in the test split
        threads: Worker count; output does not depend on it

    Returns:
        Tuple of ((image, annotation) items, CorpusManifest)
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    seed = params.rng_seed if seed is None else seed
    children = np.random.SeedSequence(seed).spawn(count)
    image_ids = [f"synth_{i:05d}" for i in range(count)]

    def render(i):
        image, annotation = render_synthetic_eye(params, np.random.default_rng(children[i]), image_ids[i])
        return image, replace(annotation, image_path=f"images/{image_ids[i]}.png")

    items = ordered_map(render, range(count), threads=threads)
    splits = assign_splits(image_ids, seed, test_fraction)
    records = tuple(CorpusRecord(a.image_id, a.image_path, split, pixels_digest(image))
                    for (image, a), split in zip(items, splits))

    digest = hashlib.sha256()
    digest.update(json.dumps({'seed': seed, 'params': params.to_dict()}, sort_keys=True).encode('utf-8'))
    for record in records:
        digest.update(f"\n{record.image_id} {record.split} {record.pixels_sha256}".encode('utf-8'))
    digest.update(dumps_annotations([a for _, a in items]).encode('utf-8'))

    manifest = CorpusManifest(seed=seed, params=params.to_dict(), records=records, digest=digest.hexdigest())
    return items, manifest


class SynthesisService:
    """Service layer for synthetic corpus generation"""

    def __init__(self, image_repo: ImageRepository, annotation_repo: AnnotationRepository,
                 corpus_repo: CorpusRepository):
        self.image_repo = image_repo
        self.annotation_repo = annotation_repo
        self.corpus_repo = corpus_repo

    @log_errors
    @audit_log("Synthetic corpus generated")
    def generate_corpus(self, out_dir, params: SynthParams, count: int, seed: Optional[int] = None,
                        test_fraction: float = 0.2, threads: int = 1) -> CorpusManifest:
        """
        Render a corpus and write it to a directory

        Layout: images/<id>.png, annotations.txt (all records), train.txt and
        test.txt (per split) and manifest.json.

        Returns:
            CorpusManifest
        """
        out_dir = Path(out_dir)
        items, manifest = build_corpus(params, count, seed, test_fraction, threads)

        ordered_map(lambda item: self.image_repo.save(item[0], out_dir / item[1].image_path),
                    items, threads=threads)
        annotations = [a for _, a in items]
        split_of = {r.image_id: r.split for r in manifest.records}
        self.annotation_repo.save(annotations, out_dir / manifest.annotations)
        for split in ('train', 'test'):
            self.annotation_repo.save([a for a in annotations if split_of[a.image_id] == split],
                                      out_dir / f"{split}.txt")
        self.corpus_repo.save(manifest, out_dir)

        event_manager.publish(EventType.CORPUS_BUILT, count=count, digest=manifest.digest, path=str(out_dir))
        logger.info(f"Generated {count} synthetic images in {out_dir} (digest {manifest.digest[:12]})")
        return manifest

    def load_corpus(self, path, split: Optional[str] = None) -> List[Tuple[GrayImage, EyeAnnotation]]:
        """Load (image, annotation) pairs of a generated corpus, optionally one split"""
        path = Path(path)
        manifest = self.corpus_repo.load(path)
        wanted = None if split is None else set(manifest.split_ids(split))
        annotations = self.annotation_repo.load(path / manifest.annotations)
        return [(self.image_repo.load(a.image_path, a.image_id), a) for a in annotations
                if wanted is None or a.image_id in wanted]
