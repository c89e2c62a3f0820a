"""
Evaluation Service Layer
Normalized eye-center error, threshold accuracy curves and method comparison reports
"""

import logging
import math
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from models import AccuracyCurve, DetectionResult, ErrorRecord, EyeAnnotation, GrayImage, Point2, Stage
from eyecenter.decorators import log_errors
from eyecenter.services.detection_service import DetectionService, PipelineConfig
from eyecenter.utils import MetricError, UsageError, ordered_map
from eyecenter.vision.cascade import CascadeModel

logger = logging.getLogger('eyecenter.evaluation')

DEFAULT_THRESHOLDS = (0.025, 0.05, 0.1, 0.25)

# fine threshold grid for plotting exports
CURVE_GRID = tuple(round(0.005 * k, 3) for k in range(51))

ModelSet = Union[None, CascadeModel, Mapping[str, CascadeModel]]


def normalized_error(est: Sequence[Point2], truth: Sequence[Point2], image_id: str = '') -> ErrorRecord:
    """
    Worst per-eye error divided by the true inter-center distance

    Args:
        est: Estimated (right, left) centers
        truth: Ground-truth (right, left) centers

    Returns:
        ErrorRecord

    Raises:
        MetricError: if the ground-truth centers coincide
    """
    d = truth[0].distance_to(truth[1])
    if not d > 0:
        raise MetricError(f"{image_id or 'record'}: ground-truth eye centers coincide")
    e_right = est[0].distance_to(truth[0])
    e_left = est[1].distance_to(truth[1])
    return ErrorRecord(image_id, e_right, e_left, d, max(e_right, e_left) / d)


def accuracy_at(records: Sequence[ErrorRecord], thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> AccuracyCurve:
    """Fraction of records with e <= threshold, per ascending threshold"""
    if not records:
        raise MetricError("accuracy needs at least one error record")
    thresholds = tuple(sorted(float(t) for t in thresholds))
    errors = np.array([r.e for r in records])
    fractions = tuple(float(np.count_nonzero(errors <= t)) / len(errors) for t in thresholds)
    return AccuracyCurve(thresholds, fractions)


def parse_thresholds(text: str) -> Tuple[float, ...]:
    """Comma-separated thresholds such as '0.025,0.05,0.1,0.25'"""
    try:
        values = tuple(float(v) for v in text.split(',') if v.strip())
    except ValueError:
        raise UsageError(f"thresholds must be comma-separated numbers, got '{text}'")
    if not values or any(not (math.isfinite(v) and v >= 0) for v in values):
        raise UsageError(f"thresholds must be non-negative numbers, got '{text}'")
    return values


@dataclass(frozen=True)
class Method:
    """A detector variant of the comparison harness"""
    name: str
    use_model: bool
    use_refinement: bool = True


METHODS = {
    'regressor+refine': Method('regressor+refine', use_model=True, use_refinement=True),
    'regressor': Method('regressor', use_model=True, use_refinement=False),
    'handcrafted': Method('handcrafted', use_model=False),
}


@dataclass
class MethodReport:
    """Errors and summary statistics of one method on one corpus"""
    name: str
    records: List[ErrorRecord]
    curve: AccuracyCurve
    stage_histogram: Dict[str, int] = field(default_factory=dict)
    seconds_per_image: Optional[float] = None

    @property
    def mean_error(self) -> float:
        return float(np.mean([r.e for r in self.records]))

    @property
    def median_error(self) -> float:
        return float(np.median([r.e for r in self.records]))

    def to_dict(self):
        return {
            'name': self.name,
            'images': len(self.records),
            'curve': self.curve.to_dict(),
            'mean_error': self.mean_error,
            'median_error': self.median_error,
            'stage_histogram': dict(sorted(self.stage_histogram.items())),
            'seconds_per_image': self.seconds_per_image,
        }


@dataclass
class ComparisonReport:
    """Side-by-side method reports with per-image deltas against the first method"""
    thresholds: Tuple[float, ...]
    methods: List[MethodReport]

    def per_image(self) -> List[Dict]:
        """Per-image errors of every method and their difference to the first method"""
        if not self.methods:
            return []
        base = self.methods[0]
        rows = []
        for k, record in enumerate(base.records):
            errors = {m.name: m.records[k].e for m in self.methods}
            deltas = {m.name: m.records[k].e - record.e for m in self.methods[1:]}
            rows.append({'image_id': record.image_id, 'errors': errors, 'deltas': deltas})
        return rows

    def to_dict(self):
        return {
            'thresholds': list(self.thresholds),
            'methods': [m.to_dict() for m in self.methods],
            'per_image': self.per_image(),
        }

    def to_text(self) -> str:
        """Per-threshold accuracy table followed by stage histograms"""
        headers = [f"e<={t:g}" for t in self.thresholds] + ['mean', 'median', 'ms/image']
        name_width = max([len('method')] + [len(m.name) for m in self.methods])
        lines = ["  ".join(['method'.ljust(name_width)] + [h.rjust(9) for h in headers])]
        for m in self.methods:
            cells = [f"{100.0 * f:.2f}%" for f in m.curve.fractions]
            cells += [f"{m.mean_error:.4f}", f"{m.median_error:.4f}"]
            cells.append('-' if m.seconds_per_image is None else f"{1000.0 * m.seconds_per_image:.2f}")
            lines.append("  ".join([m.name.ljust(name_width)] + [c.rjust(9) for c in cells]))
        lines.append("")
        for m in self.methods:
            histogram = ", ".join(f"{stage}={count}" for stage, count in sorted(m.stage_histogram.items()))
            lines.append(f"stages[{m.name}]: {histogram or '-'}")
        return "\n".join(lines) + "\n"

    def curve_table(self, grid: Sequence[float] = CURVE_GRID) -> str:
        """Plain columnar accuracy curves: threshold then one fraction column per method"""
        curves = [accuracy_at(m.records, grid) for m in self.methods]
        lines = ["# threshold " + " ".join(m.name for m in self.methods)]
        for k, t in enumerate(curves[0].thresholds if curves else ()):
            lines.append(" ".join([f"{t:g}"] + [f"{c.fractions[k]:.6f}" for c in curves]))
        return "\n".join(lines) + "\n"


def stage_histogram(results: Sequence[DetectionResult]) -> Dict[str, int]:
    """Count of eyes per detection stage"""
    counts = Counter(eye.stage.value for r in results for eye in (r.right, r.left))
    return {stage.value: counts.get(stage.value, 0) for stage in Stage if counts.get(stage.value, 0)}


def score_predictions(name: str, predictions: Sequence[DetectionResult], truth: Sequence[EyeAnnotation],
                      thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
                      seconds_per_image: Optional[float] = None) -> MethodReport:
    """
    Errors of predictions against ground truth, in ground-truth order

    Raises:
        MetricError: for a ground-truth image without prediction
    """
    by_id = {p.image_id: p for p in predictions}
    records, matched = [], []
    for annotation in truth:
        prediction = by_id.get(annotation.image_id)
        if prediction is None:
            raise MetricError(f"no prediction for image '{annotation.image_id}'",
                              payload={'image_id': annotation.image_id})
        matched.append(prediction)
        records.append(normalized_error(prediction.centers, annotation.centers, annotation.image_id))
    return MethodReport(name, records, accuracy_at(records, thresholds), stage_histogram(matched),
                        seconds_per_image)


class EvaluationService:
    """Service layer for accuracy evaluation"""

    def __init__(self, detection_service: DetectionService, thresholds: Sequence[float] = DEFAULT_THRESHOLDS):
        self.detection_service = detection_service
        self.thresholds = tuple(thresholds)

    def evaluate_predictions(self, predictions: Sequence[DetectionResult], truth: Sequence[EyeAnnotation],
                             thresholds: Optional[Sequence[float]] = None) -> ComparisonReport:
        """Report for a stored detections file"""
        thresholds = tuple(sorted(thresholds or self.thresholds))
        return ComparisonReport(thresholds, [score_predictions('predictions', predictions, truth, thresholds)])

    def run_method(self, method: Method, model: Optional[CascadeModel],
                   items: Sequence[Tuple[GrayImage, EyeAnnotation]], thresholds: Sequence[float],
                   threads: int = 1, name: Optional[str] = None) -> MethodReport:
        """
        Detect and score one method

        The timing covers detection only; images are already decoded. The
        report is named after the method unless name is given.
        """
        if method.use_model and model is None:
            raise UsageError(f"method '{method.name}' needs a model")
        service = self.detection_service
        cfg = PipelineConfig(service.pipeline_cfg.refine_threshold, service.pipeline_cfg.regress_threshold,
                             use_refinement=method.use_refinement)

        def timed(item):
            image, annotation = item
            start = time.perf_counter()
            if method.use_model:
                result = service.detect(model, image, annotation, cfg)
            else:
                result = service.handcrafted_result(image, annotation)
            return result, time.perf_counter() - start

        outcomes = ordered_map(timed, items, threads=threads)
        results = [r for r, _ in outcomes]
        seconds = float(np.mean([s for _, s in outcomes])) if outcomes else None
        return score_predictions(name or method.name, results, [a for _, a in items], thresholds, seconds)

    @log_errors
    def compare_methods(self, models: ModelSet, items: Sequence[Tuple[GrayImage, EyeAnnotation]],
                        methods: Sequence[str] = tuple(METHODS), thresholds: Optional[Sequence[float]] = None,
                        threads: int = 1) -> ComparisonReport:
        """
        Evaluate detector variants on one corpus

        Model-based methods run once per model. A single cascade keeps the
        plain method names; named models report as '<name>:<method>', so
        cascades trained on manual and on automatic labels sit side by side.

        Args:
            models: None, one trained cascade, or a name -> cascade mapping;
                methods needing a model are skipped when there is none
            items: (image, ground-truth annotation) pairs
            methods: Names from METHODS, in report order
            thresholds: Accuracy thresholds (default: the service's)
            threads: Worker count

        Returns:
            ComparisonReport
        """
        thresholds = tuple(sorted(thresholds or self.thresholds))
        unknown = [m for m in methods if m not in METHODS]
        if unknown:
            raise UsageError(f"unknown method(s) {', '.join(unknown)} (expected {', '.join(METHODS)})")
        named = named_models(models)
        reports = []
        for name in methods:
            method = METHODS[name]
            if not method.use_model:
                reports.append(self.run_method(method, None, items, thresholds, threads))
                logger.info(f"Evaluated {name} on {len(items)} images")
                continue
            if not named:
                logger.info(f"Skipping method '{name}' without a model")
            for label, model in named:
                row = f"{label}:{name}" if label else name
                reports.append(self.run_method(method, model, items, thresholds, threads, name=row))
                logger.info(f"Evaluated {row} on {len(items)} images")
        return ComparisonReport(thresholds, reports)


def named_models(models: ModelSet) -> List[Tuple[str, CascadeModel]]:
    """(label, cascade) pairs in input order; a bare cascade gets an empty label"""
    if models is None:
        return []
    if isinstance(models, CascadeModel):
        return [('', models)]
    pairs = list(models.items())
    if any(not label for label, _ in pairs) and len(pairs) > 1:
        raise UsageError("every model needs a name when several are compared")
    return pairs
