"""
Event Observers - Concrete implementations of event handlers
Log events, keep the training residual trace and watch per-image detection time
"""

import logging
from typing import Dict, List

from .event_manager import Event, EventManager, EventType


class LoggingObserver:
    """
    Observer that logs all events to the toolkit log
    """

    def __init__(self):
        self.logger = logging.getLogger('eyecenter.events')

    def update(self, event: Event):
        """
        Main update method called by EventManager
        Routes to specific handler based on event type
        """
        handler_map = {
            EventType.TRAINING_STARTED: self.on_training_started,
            EventType.TRAINING_LEVEL_COMPLETED: self.on_level_completed,
            EventType.TRAINING_COMPLETED: self.on_training_completed,
            EventType.ANNOTATION_SKIPPED: self.on_annotation_skipped,
            EventType.SYSTEM_ERROR: self.on_error,
        }

        handler = handler_map.get(event.event_type)
        if handler:
            handler(event)
        else:
            self.logger.debug(f"Event: {event.event_type.value}, Data: {event.data}")

    def on_training_started(self, event: Event):
        data = event.data
        self.logger.info(
            f"Training started - Images: {data.get('images')}, "
            f"Samples: {data.get('samples')}, Levels: {data.get('levels')}"
        )

    def on_level_completed(self, event: Event):
        data = event.data
        self.logger.info(
            f"Level {data.get('level')} done - "
            f"RMS normalized residual: {data.get('rms_residual', float('nan')):.6f}"
        )

    def on_training_completed(self, event: Event):
        data = event.data
        self.logger.info(
            f"Training completed - Levels: {data.get('levels')}, "
            f"Final RMS residual: {data.get('rms_residual', float('nan')):.6f}"
        )

    def on_annotation_skipped(self, event: Event):
        data = event.data
        self.logger.warning(f"Skipped {data.get('image_id')}: {data.get('reason')}")

    def on_error(self, event: Event):
        data = event.data
        self.logger.error(f"System Error: {data.get('error')}, Details: {data.get('details', 'N/A')}")


class TrainingMonitor:
    """
    Observer that keeps the residual trace of the most recent training run
    """

    def __init__(self):
        self.tree_sse: List[List[float]] = []
        self.level_rms: List[float] = []

    def update(self, event: Event):
        if event.event_type == EventType.TRAINING_STARTED:
            self.tree_sse = []
            self.level_rms = []
        elif event.event_type == EventType.TREE_FITTED:
            level = event.data['level']
            while len(self.tree_sse) <= level:
                self.tree_sse.append([])
            self.tree_sse[level].append(event.data['sse'])
        elif event.event_type == EventType.TRAINING_LEVEL_COMPLETED:
            self.level_rms.append(event.data['rms_residual'])

    def is_monotone(self) -> bool:
        """True if the residual never grew, per tree and per level"""
        flat = [v for level in self.tree_sse for v in level]
        return (all(b <= a for a, b in zip(flat, flat[1:]))
                and all(b <= a for a, b in zip(self.level_rms, self.level_rms[1:])))


class PerformanceMonitor:
    """
    Observer that records per-image detection wall time and flags slow images
    """

    def __init__(self, slow_threshold: float = 0.01):
        self.slow_threshold = slow_threshold
        self.timings: Dict[str, float] = {}
        self.slow_images: List[str] = []
        self.logger = logging.getLogger('eyecenter.performance')

    def update(self, event: Event):
        if event.event_type != EventType.DETECTION_COMPLETED:
            return
        image_id = event.data.get('image_id', '')
        seconds = float(event.data.get('seconds', 0.0))
        self.timings[image_id] = seconds
        if seconds > self.slow_threshold:
            self.slow_images.append(image_id)
            self.logger.warning(f"Slow detection: {image_id} took {seconds * 1000:.1f} ms")

    def mean_seconds(self) -> float:
        return sum(self.timings.values()) / len(self.timings) if self.timings else 0.0


def register_all_observers(manager: EventManager, slow_threshold: float = 0.01):
    """
    Register the standard observers on an event manager

    Returns:
        Dict of the registered observer instances by name
    """
    logging_observer = LoggingObserver()
    training_monitor = TrainingMonitor()
    performance_monitor = PerformanceMonitor(slow_threshold)

    for event_type in EventType:
        manager.subscribe(event_type, logging_observer)
    for event_type in (EventType.TRAINING_STARTED, EventType.TREE_FITTED,
                       EventType.TRAINING_LEVEL_COMPLETED):
        manager.subscribe(event_type, training_monitor)
    manager.subscribe(EventType.DETECTION_COMPLETED, performance_monitor)

    return {
        'logging': logging_observer,
        'training': training_monitor,
        'performance': performance_monitor,
    }
