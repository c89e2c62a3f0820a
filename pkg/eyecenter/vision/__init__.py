"""
Vision Package
Geometry, features, regression cascade, circle refinement and voting detector
"""

from .geometry import (
    INITIAL_SHAPE,
    EyeAnchor,
    NormalizationTransform,
    build_transform,
    closure_ratio,
    eye_size,
    initial_shape,
    point_in_eye_mask,
)
from .hog import DiffFeature, Eye, HogConfig, compute_hog, eval_diff_feature, extract_patch, sample_pool
from .cascade import (
    CascadeModel,
    ForestLevel,
    PcaShapeModel,
    PredictionTrace,
    RegressionTree,
    TrainConfig,
    build_shape_prior,
    predict,
    sample_initial_shapes,
)
from .training import CascadeTrainer, TrainingTrace, train_cascade
from .circlefit import (
    EdgePointSet,
    RobustFitConfig,
    extract_edge_points,
    plain_circle_cost,
    refine,
    robust_fit,
    tukey_rho,
)
from .voting import (
    HandcraftedEye,
    VoteConfig,
    VotingField,
    detect_handcrafted,
    find_candidates,
    hill_climb,
    score_at,
)

__all__ = [
    'INITIAL_SHAPE', 'EyeAnchor', 'NormalizationTransform', 'build_transform', 'closure_ratio',
    'eye_size', 'initial_shape', 'point_in_eye_mask',
    'DiffFeature', 'Eye', 'HogConfig', 'compute_hog', 'eval_diff_feature', 'extract_patch', 'sample_pool',
    'CascadeModel', 'ForestLevel', 'PcaShapeModel', 'PredictionTrace', 'RegressionTree', 'TrainConfig',
    'build_shape_prior', 'predict', 'sample_initial_shapes',
    'CascadeTrainer', 'TrainingTrace', 'train_cascade',
    'EdgePointSet', 'RobustFitConfig', 'extract_edge_points', 'plain_circle_cost', 'refine',
    'robust_fit', 'tukey_rho',
    'HandcraftedEye', 'VoteConfig', 'VotingField', 'detect_handcrafted', 'find_candidates',
    'hill_climb', 'score_at',
]
