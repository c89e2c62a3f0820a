"""
Centralized Configuration
Manages all toolkit settings and the typed configs of the algorithm modules
"""
import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


class Config:
    """Base configuration class"""

    DEBUG = False
    TESTING = False

    # Runtime
    THREADS = int(os.getenv('EYECENTER_THREADS', 1))
    SEED = int(os.getenv('EYECENTER_SEED', 0))

    # HoG feature extraction
    E_HOG = float(os.getenv('EYECENTER_EHOG', 100.0))
    PATCH_FRACTION = 0.4
    CELLS_PER_SIDE = 4
    ORIENTATION_BINS = 6
    SOFT_ORIENTATION_BINNING = False

    # Cascade training
    LEVELS = 10
    TREES_PER_LEVEL = 200
    TREE_DEPTH = 4
    SHRINKAGE = 0.1
    POOL_SIZE = 20
    OVERSAMPLE = 50
    TRANSLATION_RANGE_X = (-0.1, 0.1)
    TRANSLATION_RANGE_Y = (-0.03, 0.03)
    THRESHOLD_RANGE = (-0.3, 0.3)

    # Robust circle refinement
    FIT_WEIGHTS = (1.0, 0.1, 0.1)
    FIT_MAX_ITERATIONS = 30
    FIT_REL_TOLERANCE = 1e-4

    # Hand-crafted voting detector
    VOTE_RADIUS_BAND = (0.3, 0.5)
    VOTE_DEFAULT_IRIS_RADIUS_FRAC = 0.2
    VOTE_CANDIDATE_THRESHOLD_FRAC = 0.8

    # Closed-eye gating
    REFINE_THRESHOLD = 0.3
    REGRESS_THRESHOLD = 0.15
    USE_REFINEMENT = True

    # Evaluation
    EVAL_THRESHOLDS = (0.025, 0.05, 0.1, 0.25)

    # Performance monitoring (seconds per image)
    SLOW_DETECTION_SECONDS = 0.01

    # Logging Configuration
    LOG_LEVEL = os.getenv('EYECENTER_LOG_LEVEL', 'INFO')
    LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

    @classmethod
    def hog_config(cls):
        """Build the HoG configuration for this profile"""
        from eyecenter.vision.hog import HogConfig
        return HogConfig(
            e_hog=cls.E_HOG,
            patch_fraction=cls.PATCH_FRACTION,
            cells_per_side=cls.CELLS_PER_SIDE,
            orientation_bins=cls.ORIENTATION_BINS,
            soft_binning=cls.SOFT_ORIENTATION_BINNING,
        )

    @classmethod
    def train_config(cls, **overrides):
        """Build the cascade training configuration for this profile"""
        from eyecenter.vision.cascade import TrainConfig
        values = dict(
            oversample=cls.OVERSAMPLE,
            translation_range_x=cls.TRANSLATION_RANGE_X,
            translation_range_y=cls.TRANSLATION_RANGE_Y,
            pool_size=cls.POOL_SIZE,
            trees_per_level=cls.TREES_PER_LEVEL,
            tree_depth=cls.TREE_DEPTH,
            levels=cls.LEVELS,
            shrinkage=cls.SHRINKAGE,
            threshold_range=cls.THRESHOLD_RANGE,
            rng_seed=cls.SEED,
            threads=cls.THREADS,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return TrainConfig(**values)

    @classmethod
    def fit_config(cls):
        """Build the robust circle fit configuration for this profile"""
        from eyecenter.vision.circlefit import RobustFitConfig
        w1, w2, w3 = cls.FIT_WEIGHTS
        return RobustFitConfig(
            w1=w1, w2=w2, w3=w3,
            max_iterations=cls.FIT_MAX_ITERATIONS,
            rel_tolerance=cls.FIT_REL_TOLERANCE,
        )

    @classmethod
    def vote_config(cls):
        """Build the voting detector configuration for this profile"""
        from eyecenter.vision.voting import VoteConfig
        return VoteConfig(
            radius_band=cls.VOTE_RADIUS_BAND,
            default_iris_radius_frac=cls.VOTE_DEFAULT_IRIS_RADIUS_FRAC,
            candidate_threshold_frac=cls.VOTE_CANDIDATE_THRESHOLD_FRAC,
        )

    @classmethod
    def pipeline_config(cls, **overrides):
        """Build the closed-eye gating configuration for this profile"""
        from eyecenter.services.detection_service import PipelineConfig
        values = dict(
            refine_threshold=cls.REFINE_THRESHOLD,
            regress_threshold=cls.REGRESS_THRESHOLD,
            use_refinement=cls.USE_REFINEMENT,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return PipelineConfig(**values)


class DevelopmentConfig(Config):
    """Development environment configuration"""
    DEBUG = True
    SLOW_DETECTION_SECONDS = 0.05


class ProductionConfig(Config):
    """Production environment configuration"""
    DEBUG = False
    TESTING = False
    LOG_LEVEL = os.getenv('EYECENTER_LOG_LEVEL', 'WARNING')


class TestingConfig(Config):
    """Testing environment configuration"""
    TESTING = True
    DEBUG = True

    # Small cascade so unit tests train in seconds
    LEVELS = 3
    TREES_PER_LEVEL = 20
    TREE_DEPTH = 3
    OVERSAMPLE = 5

    # Timing budgets are meaningless on shared CI machines
    SLOW_DETECTION_SECONDS = 10.0


# Configuration dictionary
config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': DevelopmentConfig
}


def get_config(env_name=None):
    """
    Get configuration object for specified environment

    Args:
        env_name: Environment name ('development', 'production', 'testing')

    Returns:
        Configuration class for the specified environment
    """
    if env_name is None:
        env_name = os.getenv('EYECENTER_ENV', 'development')

    return config.get(env_name, config['default'])
