"""
Service Layer Package
Exports all service classes
"""

from eyecenter.services.detection_service import DetectionService, PipelineConfig
from eyecenter.services.training_service import TrainingService
from eyecenter.services.evaluation_service import EvaluationService
from eyecenter.services.synthesis_service import SynthesisService, SynthParams
from eyecenter.services.dataset_service import DatasetService

__all__ = [
    'DetectionService',
    'PipelineConfig',
    'TrainingService',
    'EvaluationService',
    'SynthesisService',
    'SynthParams',
    'DatasetService',
]
