"""
Pytest configuration and shared fixtures for eyecenter tests.

Provides the testing toolkit instance, small synthetic faces and corpora,
and a cleared event manager for every test.
"""

import sys
from pathlib import Path

import pytest

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from config import TestingConfig
from eyecenter import create_app
from eyecenter.events import EventManager
from eyecenter.services.synthesis_service import SynthParams, build_corpus, render_synthetic_eye
from eyecenter.vision.cascade import TrainConfig


@pytest.fixture(autouse=True)
def clean_events():
    """Every test starts and ends without event subscribers"""
    EventManager().clear()
    yield
    EventManager().clear()


@pytest.fixture(scope='function')
def app():
    """Create the toolkit with the testing profile"""
    return create_app('testing')


@pytest.fixture
def app_config():
    """Provide access to testing configuration"""
    return TestingConfig


@pytest.fixture
def open_eye_params():
    """
    Open eyes with a large iris and no nuisance factors

    The iris radius (0.4 E) sits inside the voting radius band, so the
    hand-crafted detector finds it reliably.
    """
    return SynthParams(
        image_size=(320, 240),
        interocular_range=(100.0, 100.0),
        iris_radius_frac=0.4,
        gaze_offset_range=(0.0, 0.0),
        closure_range=(1.0, 1.0),
        face_jitter_px=0.0,
    )


@pytest.fixture
def open_eye_face(open_eye_params):
    """One rendered open-eye face as (GrayImage, EyeAnnotation)"""
    return render_synthetic_eye(open_eye_params, image_id='open_face')


@pytest.fixture
def varied_params():
    """Small faces with position and gaze variation"""
    return SynthParams(
        image_size=(256, 192),
        interocular_range=(80.0, 100.0),
        iris_radius_frac=0.3,
        gaze_offset_range=(-0.1, 0.1),
        closure_range=(0.6, 0.9),
        face_jitter_px=6.0,
    )


@pytest.fixture
def small_corpus(varied_params):
    """Six rendered faces"""
    items, _ = build_corpus(varied_params, 6, seed=7)
    return items


@pytest.fixture
def tiny_train_config():
    """A cascade small enough to train in a unit test"""
    return TrainConfig(oversample=4, trees_per_level=6, tree_depth=3, levels=2, rng_seed=3)
