"""
Gradient-boosted training of the eye-center cascade
Fits regression trees level by level on normalized shape residuals and
publishes the residual trace through the event system
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from models import EyeAnnotation, GrayImage, Shape
from eyecenter.events import EventType, event_manager
from eyecenter.utils import EmptyCorpusError, InvalidLandmarksError, ordered_map
from eyecenter.vision.cascade import (
    CascadeModel,
    ForestLevel,
    PcaShapeModel,
    RegressionTree,
    TrainConfig,
    build_shape_prior,
    sample_initial_shapes,
)
from eyecenter.vision.geometry import build_transform
from eyecenter.vision.hog import HogConfig, PatchSampler, eye_descriptors, pool_arrays, sample_pool

logger = logging.getLogger('eyecenter.training')


@dataclass
class TrainingTrace:
    """Residual history of one training run"""
    tree_sse: List[List[float]] = field(default_factory=list)
    level_rms: List[float] = field(default_factory=list)
    initial_rms: float = 0.0

    def to_dict(self):
        return {'initial_rms': self.initial_rms, 'level_rms': list(self.level_rms),
                'tree_sse': [list(level) for level in self.tree_sse]}


@dataclass
class _FaceFrame:
    """Per-image state prepared once before training"""
    image: GrayImage
    anchor: object
    transform: object
    target: np.ndarray


class CascadeTrainer:
    """
    Trains a CascadeModel with per-tree residual updates

    Features are computed once per level at the level-entry estimates; trees
    within a level are fit sequentially on the running residuals.
    """

    def __init__(self, cfg: TrainConfig, hog_config: HogConfig = HogConfig()):
        self.cfg = cfg
        self.hog_config = hog_config

    def prepare(self, corpus: Sequence[Tuple[GrayImage, EyeAnnotation]]) -> List[_FaceFrame]:
        """Build anchors, transforms and normalized targets, naming the first bad item"""
        if not corpus:
            raise EmptyCorpusError("training corpus is empty")
        frames = []
        for index, (image, annotation) in enumerate(corpus):
            if annotation is None or annotation.corners is None or annotation.centers is None:
                raise InvalidLandmarksError(f"item {index} has no landmarks",
                                            payload={'index': index})
            try:
                anchor, transform = build_transform(annotation.corners)
            except InvalidLandmarksError as e:
                raise InvalidLandmarksError(f"item {index} ({annotation.image_id}): {e.message}",
                                            payload={'index': index, 'image_id': annotation.image_id})
            target = transform.shape_from_image(*annotation.centers).as_vector()
            frames.append(_FaceFrame(image, anchor, transform, target))
        return frames

    def train(self, corpus: Sequence[Tuple[GrayImage, EyeAnnotation]]) -> Tuple[CascadeModel, TrainingTrace]:
        """
        Train a cascade on (image, annotation) pairs

        Returns:
            Tuple of (CascadeModel, TrainingTrace)
        """
        frames = self.prepare(corpus)
        rng = np.random.default_rng(self.cfg.rng_seed)
        prior = build_shape_prior([Shape.from_vector(f.target) for f in frames]
                                  if len(frames) >= 2 else [Shape.from_vector(frames[0].target)] * 2)

        owners = []
        initial = []
        for index, _ in enumerate(frames):
            for shape in sample_initial_shapes(prior, self.cfg, rng):
                owners.append(index)
                initial.append(shape.as_vector())
        return self.fit(frames, np.array(owners), np.array(initial), prior, rng)

    def fit(self, frames: Sequence[_FaceFrame], owners: np.ndarray, estimates: np.ndarray,
            prior: PcaShapeModel, rng: np.random.Generator) -> Tuple[CascadeModel, TrainingTrace]:
        """
        Boost the forests from explicit initial estimates

        Args:
            frames: Prepared images
            owners: (N,) image index of every training sample
            estimates: (N, 4) initial normalized shapes
            prior: Shape prior stored with the model
            rng: Random generator for split pools

        Returns:
            Tuple of (CascadeModel, TrainingTrace)
        """
        cfg = self.cfg
        estimates = np.array(estimates, dtype=np.float64).reshape(-1, 4)
        targets = np.array([frames[i].target for i in owners]).reshape(-1, 4)
        residuals = targets - estimates

        trace = TrainingTrace(initial_rms=_rms(residuals))
        event_manager.publish(EventType.TRAINING_STARTED, images=len(frames), samples=len(estimates),
                              levels=cfg.levels, trees_per_level=cfg.trees_per_level)
        logger.info(f"Training on {len(frames)} images, {len(estimates)} samples, "
                    f"{cfg.levels} levels x {cfg.trees_per_level} trees")

        levels = []
        for level_index in range(cfg.levels):
            descriptors = self._descriptors(frames, owners, estimates)
            trees = []
            level_sse = []
            for tree_index in range(cfg.trees_per_level):
                tree, leaves = self._fit_tree(descriptors, residuals, rng)
                # apply the stored float32 deltas so training and inference agree exactly
                step = tree.deltas[leaves].astype(np.float64)
                estimates = estimates + step
                residuals = targets - estimates
                trees.append(tree)
                sse = float(np.sum(residuals ** 2))
                level_sse.append(sse)
                event_manager.publish(EventType.TREE_FITTED, level=level_index, tree=tree_index, sse=sse)
            levels.append(ForestLevel(tuple(trees)))
            trace.tree_sse.append(level_sse)
            rms = _rms(residuals)
            trace.level_rms.append(rms)
            event_manager.publish(EventType.TRAINING_LEVEL_COMPLETED, level=level_index, rms_residual=rms)

        model = CascadeModel(tuple(levels), self.hog_config, cfg.shrinkage, prior)
        event_manager.publish(EventType.TRAINING_COMPLETED, levels=cfg.levels,
                              rms_residual=trace.level_rms[-1] if trace.level_rms else trace.initial_rms)
        return model, trace

    def _descriptors(self, frames: Sequence[_FaceFrame], owners: np.ndarray, estimates: np.ndarray) -> np.ndarray:
        """(N, 2, D) descriptors at the current estimates, computed image by image"""
        by_image = [np.flatnonzero(owners == i) for i in range(len(frames))]

        def describe(i):
            rows = by_image[i]
            if len(rows) == 0:
                return rows, np.zeros((0, 2, self.hog_config.dimension))
            frame = frames[i]
            sampler = PatchSampler(frame.image, frame.anchor, self.hog_config)
            right = frame.transform.apply_inverse(estimates[rows, :2])
            left = frame.transform.apply_inverse(estimates[rows, 2:])
            return rows, eye_descriptors(sampler, right, left)

        descriptors = np.zeros((len(estimates), 2, self.hog_config.dimension))
        for rows, values in ordered_map(describe, range(len(frames)), threads=self.cfg.threads):
            descriptors[rows] = values
        return descriptors

    def _fit_tree(self, descriptors: np.ndarray, residuals: np.ndarray,
                  rng: np.random.Generator) -> Tuple[RegressionTree, np.ndarray]:
        """Grow one complete tree; returns the tree and the leaf reached by each sample"""
        cfg = self.cfg
        n_internal = 2 ** (cfg.tree_depth - 1) - 1
        node_of = np.zeros(len(residuals), dtype=np.int64)
        features = []

        for node in range(n_internal):
            members = np.flatnonzero(node_of == node)
            pool = sample_pool(rng, cfg.pool_size, cfg.threshold_range, self.hog_config.dimension)
            best = best_split(pool, descriptors[members], residuals[members])
            feature = pool[best]
            features.append(feature)
            passes = feature.evaluate_batch(descriptors[members])
            node_of[members] = 2 * node + np.where(passes, 2, 1)

        leaves = node_of - n_internal
        n_leaves = n_internal + 1
        deltas = np.zeros((n_leaves, 4))
        counts = np.bincount(leaves, minlength=n_leaves)
        for k in range(4):
            sums = np.bincount(leaves, weights=residuals[:, k], minlength=n_leaves)
            deltas[:, k] = np.where(counts > 0, cfg.shrinkage * sums / np.maximum(counts, 1), 0.0)
        return RegressionTree(features, deltas), leaves


def best_split(pool, descriptors: np.ndarray, residuals: np.ndarray) -> int:
    """
    Index of the pool feature that minimizes the summed squared residual error

    Minimizing the post-split SSE is the same as maximizing
    |sum_L|^2 / n_L + |sum_R|^2 / n_R; ties keep the earliest feature.
    """
    if len(descriptors) == 0:
        return 0
    eyes, dim_a, dim_b, thresholds = pool_arrays(pool)
    h = descriptors[:, eyes, :]
    columns = np.arange(len(pool))
    values = h[:, columns, dim_a] - h[:, columns, dim_b]
    passes = (values > thresholds[None, :]).astype(np.float64)

    total = residuals.sum(axis=0)
    sum_true = passes.T @ residuals
    sum_false = total[None, :] - sum_true
    n_true = passes.sum(axis=0)
    n_false = len(residuals) - n_true
    gain = (np.einsum('kd,kd->k', sum_true, sum_true) / np.maximum(n_true, 1)
            + np.einsum('kd,kd->k', sum_false, sum_false) / np.maximum(n_false, 1))
    return int(np.argmax(gain))


def _rms(residuals: np.ndarray) -> float:
    """Root mean squared norm of the 4-d normalized residuals"""
    if len(residuals) == 0:
        return 0.0
    return float(np.sqrt(np.mean(np.sum(residuals ** 2, axis=1))))


def train_cascade(corpus: Sequence[Tuple[GrayImage, EyeAnnotation]], cfg: TrainConfig,
                  hog_config: Optional[HogConfig] = None) -> Tuple[CascadeModel, TrainingTrace]:
    """
    Train a cascade on (image, annotation) pairs

    Args:
        corpus: Non-empty sequence of images with corners and centers
        cfg: Training configuration
        hog_config: HoG configuration; defaults to HogConfig()

    Returns:
        Tuple of (CascadeModel, TrainingTrace)

    Raises:
        EmptyCorpusError: for an empty corpus
        InvalidLandmarksError: naming the first item without usable landmarks
    """
    return CascadeTrainer(cfg, hog_config or HogConfig()).train(corpus)
