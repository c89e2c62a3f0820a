"""
Cascaded regression of eye-center shapes
Regression trees over HoG-difference splits, boosted forests per cascade level,
the PCA shape prior used to initialize training and the inference loop
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from models import GrayImage, Point2, Shape
from eyecenter.utils.error_handlers import ModelConfigMismatchError, ModelInvariantError
from eyecenter.vision.geometry import INITIAL_SHAPE, EyeAnchor, NormalizationTransform
from eyecenter.vision.hog import DiffFeature, HogConfig, PatchSampler, eye_descriptors

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    """Cascade training parameters"""
    oversample: int = 50
    translation_range_x: Tuple[float, float] = (-0.1, 0.1)
    translation_range_y: Tuple[float, float] = (-0.03, 0.03)
    pool_size: int = 20
    trees_per_level: int = 200
    tree_depth: int = 4
    levels: int = 10
    shrinkage: float = 0.1
    threshold_range: Tuple[float, float] = (-0.3, 0.3)
    rng_seed: int = 0
    threads: int = 1

    def __post_init__(self):
        for name in ('oversample', 'pool_size', 'trees_per_level', 'tree_depth', 'levels', 'threads'):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0 < self.shrinkage <= 1:
            raise ValueError(f"shrinkage must be in (0, 1], got {self.shrinkage}")
        for name in ('translation_range_x', 'translation_range_y', 'threshold_range'):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} must be well-ordered, got ({lo}, {hi})")


class RegressionTree:
    """
    Complete binary tree stored in heap order

    depth counts node levels, so a tree of depth d evaluates d - 1 splits and
    holds 2**(d-1) leaves. Internal node i sends samples failing its test to
    2i + 1 and passing samples to 2i + 2.
    """

    def __init__(self, features: Sequence[DiffFeature], deltas: np.ndarray):
        deltas = np.asarray(deltas, dtype=np.float32).reshape(-1, 4)
        n_leaves = len(deltas)
        if n_leaves < 1 or n_leaves & (n_leaves - 1):
            raise ModelInvariantError(f"leaf count must be a power of two, got {n_leaves}")
        if len(features) != n_leaves - 1:
            raise ModelInvariantError(
                f"tree with {n_leaves} leaves needs {n_leaves - 1} split features, got {len(features)}")
        if not np.all(np.isfinite(deltas)):
            raise ModelInvariantError("leaf deltas must be finite")
        deltas.setflags(write=False)
        self.features: Tuple[DiffFeature, ...] = tuple(features)
        self.deltas = deltas

    @property
    def depth(self) -> int:
        return int(np.log2(len(self.deltas))) + 1

    @property
    def n_internal(self) -> int:
        return len(self.features)

    def leaf_index(self, right: np.ndarray, left: np.ndarray) -> int:
        node = 0
        while node < self.n_internal:
            node = 2 * node + (2 if self.features[node].evaluate(right, left) else 1)
        return node - self.n_internal

    def leaf_indices(self, descriptors: np.ndarray) -> np.ndarray:
        """Leaf reached by each of M samples given (M, 2, D) descriptors"""
        node = np.zeros(len(descriptors), dtype=np.int64)
        for _ in range(self.depth - 1):
            passes = np.zeros(len(descriptors), dtype=bool)
            for index in np.unique(node):
                at_node = node == index
                passes[at_node] = self.features[index].evaluate_batch(descriptors[at_node])
            node = 2 * node + np.where(passes, 2, 1)
        return node - self.n_internal

    def predict(self, right: np.ndarray, left: np.ndarray) -> np.ndarray:
        return self.deltas[self.leaf_index(right, left)]

    def __eq__(self, other):
        return (isinstance(other, RegressionTree) and self.features == other.features
                and np.array_equal(self.deltas, other.deltas))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ForestLevel:
    """The boosted trees of one cascade level; their reached deltas add up to the level's update"""
    trees: Tuple[RegressionTree, ...]

    def __post_init__(self):
        object.__setattr__(self, 'trees', tuple(self.trees))
        if not self.trees:
            raise ModelInvariantError("a forest level needs at least one tree")
        if len({tree.depth for tree in self.trees}) != 1:
            raise ModelInvariantError("all trees of a level must share their depth")

    @property
    def depth(self) -> int:
        return self.trees[0].depth

    def __eq__(self, other):
        return isinstance(other, ForestLevel) and self.trees == other.trees

    __hash__ = None


@dataclass(frozen=True, eq=False)
class PcaShapeModel:
    """Mean shape, orthonormal basis (rows) and non-increasing variances"""
    mean_shape: np.ndarray
    basis: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean_shape, dtype=np.float64).reshape(4)
        basis = np.array(self.basis, dtype=np.float64).reshape(-1, 4)
        variances = np.array(self.variances, dtype=np.float64).reshape(-1)
        if len(basis) != len(variances):
            raise ModelInvariantError("PCA basis and variances differ in length")
        if np.any(variances < 0) or np.any(np.diff(variances) > 0):
            raise ModelInvariantError("PCA variances must be non-negative and non-increasing")
        if len(basis) and not np.allclose(basis @ basis.T, np.eye(len(basis)), atol=1e-6):
            raise ModelInvariantError("PCA basis is not orthonormal")
        for array in (mean, basis, variances):
            array.setflags(write=False)
        object.__setattr__(self, 'mean_shape', mean)
        object.__setattr__(self, 'basis', basis)
        object.__setattr__(self, 'variances', variances)

    def __eq__(self, other):
        return (isinstance(other, PcaShapeModel)
                and np.array_equal(self.mean_shape, other.mean_shape)
                and np.array_equal(self.basis, other.basis)
                and np.array_equal(self.variances, other.variances))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class CascadeModel:
    """Trained cascade: forest levels, the HoG config they were trained with, nu and the shape prior"""
    levels: Tuple[ForestLevel, ...]
    hog_config: HogConfig
    shrinkage: float
    shape_prior: PcaShapeModel
    format_version: int = MODEL_FORMAT_VERSION

    def __post_init__(self):
        object.__setattr__(self, 'levels', tuple(self.levels))
        if not self.levels:
            raise ModelInvariantError("a cascade needs at least one level")
        if not 0 < self.shrinkage <= 1:
            raise ModelInvariantError(f"shrinkage must be in (0, 1], got {self.shrinkage}")
        dimension = self.hog_config.dimension
        for level in self.levels:
            for tree in level.trees:
                for feature in tree.features:
                    if not (0 <= feature.dim_a < dimension and 0 <= feature.dim_b < dimension):
                        raise ModelInvariantError(
                            f"split feature dimension out of range for {dimension}-d descriptors")

    @property
    def tree_count(self) -> int:
        return sum(len(level.trees) for level in self.levels)

    def __eq__(self, other):
        return (isinstance(other, CascadeModel) and self.levels == other.levels
                and self.hog_config == other.hog_config and self.shrinkage == other.shrinkage
                and self.shape_prior == other.shape_prior and self.format_version == other.format_version)

    __hash__ = None


@dataclass
class PredictionTrace:
    """Operation counts and per-level updates of one prediction"""
    comparisons: int = 0
    additions: int = 0
    level_deltas: List[np.ndarray] = field(default_factory=list)
    shapes: List[Shape] = field(default_factory=list)


def predict(model: CascadeModel, image: GrayImage, anchor: EyeAnchor, t: NormalizationTransform,
            hog_config: Optional[HogConfig] = None, trace: Optional[PredictionTrace] = None) -> Shape:
    """
    Run the cascade from the initial shape ((0,0),(1,0))

    Args:
        model: Trained cascade
        image: Grayscale face image
        anchor: Eye anchor of the face
        t: Normalizing transform of the face
        hog_config: Expected HoG configuration; must match the model's when given
        trace: Optional PredictionTrace filled with counts and per-level deltas

    Returns:
        Final shape in the normalized frame

    Raises:
        ModelConfigMismatchError: if hog_config differs from the model's
    """
    if hog_config is not None and hog_config != model.hog_config:
        raise ModelConfigMismatchError(
            f"model was trained with {model.hog_config}, detector is configured with {hog_config}")

    sampler = PatchSampler(image, anchor, model.hog_config)
    estimate = INITIAL_SHAPE.as_vector()
    if trace is not None:
        trace.shapes.append(Shape.from_vector(estimate))

    for level in model.levels:
        right = t.apply_inverse(estimate[:2])
        left = t.apply_inverse(estimate[2:])
        descriptors = eye_descriptors(sampler, right, left)[0]
        h_right, h_left = descriptors[0], descriptors[1]

        update = np.zeros(4)
        for tree in level.trees:
            update += tree.predict(h_right, h_left)
        estimate = estimate + update

        if trace is not None:
            trace.comparisons += len(level.trees) * (level.depth - 1)
            trace.additions += 4 * len(level.trees)
            trace.level_deltas.append(update)
            trace.shapes.append(Shape.from_vector(estimate))

    return Shape.from_vector(estimate)


def build_shape_prior(training_shapes: Sequence[Shape]) -> PcaShapeModel:
    """
    PCA shape prior over translation-aligned training shapes

    Each shape is translated so its mean point coincides with the mean point
    of the global mean shape, then all four principal components are kept.

    Args:
        training_shapes: Normalized ground-truth shapes (at least 2)

    Returns:
        PcaShapeModel
    """
    if len(training_shapes) < 2:
        raise ValueError(f"a shape prior needs at least 2 shapes, got {len(training_shapes)}")

    vectors = np.array([s.as_vector() for s in training_shapes])
    points = vectors.reshape(-1, 2, 2)
    target_center = points.mean(axis=(0, 1))
    aligned = points - points.mean(axis=1, keepdims=True) + target_center
    aligned = aligned.reshape(-1, 4)

    mean = aligned.mean(axis=0)
    covariance = np.cov(aligned, rowvar=False)
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    order = np.argsort(eigenvalues)[::-1]
    variances = np.clip(eigenvalues[order], 0.0, None)
    # eigh rounding can leave ties slightly out of order after the clip
    variances = np.minimum.accumulate(variances)
    # float32-representable values survive the 9-digit model text format bit for bit
    return PcaShapeModel(
        _as_float32(mean), _as_float32(eigenvectors[:, order].T), _as_float32(variances))


def _as_float32(values: np.ndarray) -> np.ndarray:
    return np.asarray(values, dtype=np.float32).astype(np.float64)


def sample_initial_shapes(prior: PcaShapeModel, cfg: TrainConfig, rng: np.random.Generator,
                          count: Optional[int] = None) -> List[Shape]:
    """
    Random plausible initial shapes for one training image

    Coefficients are uniform in +-2 sqrt(lambda_k); the synthesized shape is
    recentered on the mean shape's mean point, then both eyes are translated
    by one shared offset drawn from the configured ranges.

    Args:
        prior: PCA shape model
        cfg: Training configuration (oversample and translation ranges)
        rng: Random generator
        count: Number of shapes; defaults to cfg.oversample

    Returns:
        List of Shape
    """
    count = cfg.oversample if count is None else count
    bounds = 2.0 * np.sqrt(prior.variances)
    mean_center = prior.mean_shape.reshape(2, 2).mean(axis=0)

    shapes = []
    for _ in range(count):
        coefficients = rng.uniform(-bounds, bounds) if len(bounds) else np.zeros(0)
        vector = prior.mean_shape + coefficients @ prior.basis
        points = vector.reshape(2, 2)
        points = points - points.mean(axis=0) + mean_center
        shift = np.array([
            _uniform(rng, cfg.translation_range_x),
            _uniform(rng, cfg.translation_range_y),
        ])
        shapes.append(Shape.from_vector((points + shift).reshape(4)))
    return shapes


def _uniform(rng: np.random.Generator, bounds: Tuple[float, float]) -> float:
    lo, hi = bounds
    return lo if lo == hi else float(rng.uniform(lo, hi))


def shape_to_image(shape: Shape, t: NormalizationTransform) -> Tuple[Point2, Point2]:
    """Right and left centers of a normalized shape in image pixels"""
    return t.inverse_shape(shape)
