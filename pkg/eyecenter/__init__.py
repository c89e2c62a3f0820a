"""
Application Factory
Creates and wires the eyecenter toolkit: configuration, logging, repositories,
services and the event system
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

from config import get_config

from eyecenter.events import event_manager, register_all_observers
from eyecenter.repositories import (
    AnnotationRepository,
    CorpusRepository,
    ImageRepository,
    ModelRepository,
)
from eyecenter.services import (
    DatasetService,
    DetectionService,
    EvaluationService,
    SynthesisService,
    TrainingService,
)


@dataclass
class EyeCenterApp:
    """Configured toolkit instance"""
    config: type
    model_repo: ModelRepository
    annotation_repo: AnnotationRepository
    image_repo: ImageRepository
    corpus_repo: CorpusRepository
    dataset_service: DatasetService
    detection_service: DetectionService
    training_service: TrainingService
    evaluation_service: EvaluationService
    synthesis_service: SynthesisService
    observers: Dict[str, object] = field(default_factory=dict)

    @property
    def threads(self) -> int:
        return self.config.THREADS

    @property
    def seed(self) -> int:
        return self.config.SEED


def create_app(config_name: Optional[str] = None, log_level: Optional[str] = None) -> EyeCenterApp:
    """
    Application Factory

    Creates the toolkit with:
    - Logging from the profile's level and format
    - File repositories
    - Services built from the profile's typed configs
    - Event observers

    Args:
        config_name: Configuration environment ('development', 'testing', 'production')
        log_level: Overrides the profile's log level

    Returns:
        Configured EyeCenterApp instance
    """
    config_class = get_config(config_name)

    init_logging(log_level or config_class.LOG_LEVEL, config_class.LOG_FORMAT)

    model_repo = ModelRepository()
    annotation_repo = AnnotationRepository()
    image_repo = ImageRepository()
    corpus_repo = CorpusRepository()

    hog_config = config_class.hog_config()
    detection_service = DetectionService(
        pipeline_cfg=config_class.pipeline_config(),
        fit_cfg=config_class.fit_config(),
        vote_cfg=config_class.vote_config(),
        hog_config=hog_config,
    )
    training_service = TrainingService(config_class.train_config(), hog_config, detection_service)
    evaluation_service = EvaluationService(detection_service, config_class.EVAL_THRESHOLDS)
    synthesis_service = SynthesisService(image_repo, annotation_repo, corpus_repo)
    dataset_service = DatasetService(image_repo, annotation_repo)

    observers = init_event_system(config_class.SLOW_DETECTION_SECONDS)

    return EyeCenterApp(
        config=config_class,
        model_repo=model_repo,
        annotation_repo=annotation_repo,
        image_repo=image_repo,
        corpus_repo=corpus_repo,
        dataset_service=dataset_service,
        detection_service=detection_service,
        training_service=training_service,
        evaluation_service=evaluation_service,
        synthesis_service=synthesis_service,
        observers=observers,
    )


def init_logging(level: str, fmt: str):
    """Configure the root 'eyecenter' logger once per process"""
    logger = logging.getLogger('eyecenter')
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(fmt))
        logger.addHandler(handler)
    logger.setLevel(getattr(logging, str(level).upper(), logging.INFO))


def init_event_system(slow_threshold: float):
    """Reset subscriptions and register the standard observers"""
    event_manager.clear()
    return register_all_observers(event_manager, slow_threshold)


# Export for easy import
__all__ = ['create_app', 'EyeCenterApp']
