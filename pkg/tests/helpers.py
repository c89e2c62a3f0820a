"""
Test helpers
Synthetic rasters and contours with known geometry
"""

import numpy as np

from eyecenter.vision.cascade import CascadeModel, ForestLevel, PcaShapeModel, RegressionTree
from eyecenter.vision.hog import DiffFeature, Eye, HogConfig
from models import EyeContour, EyeCorners, Point2


def circle_contour(cx, cy, radius, n=32):
    """Polygon approximating a circle"""
    theta = 2.0 * np.pi * np.arange(n) / n
    return EyeContour(np.column_stack([cx + radius * np.cos(theta), cy + radius * np.sin(theta)]))


def ellipse_points(a, b, n=16, angle_deg=0.0, center=(0.0, 0.0)):
    theta = 2.0 * np.pi * np.arange(n) / n
    points = np.column_stack([a * np.cos(theta), b * np.sin(theta)])
    phi = np.deg2rad(angle_deg)
    rotation = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
    return points @ rotation.T + np.asarray(center)


def dark_disk_image(width, height, centers, radius, background=220.0, disk=60.0):
    """Bright image with anti-aliased dark disks"""
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    canvas = np.full((height, width), background)
    for cx, cy in centers:
        coverage = np.clip(0.5 + radius - np.hypot(xs - cx, ys - cy), 0.0, 1.0)
        canvas = canvas * (1.0 - coverage) + disk * coverage
    return np.clip(np.rint(canvas), 0, 255).astype(np.uint8)


def corners_from_anchors(c_right, c_left, half_width=10.0):
    """Eye corners on the line through two eye anchors"""
    c_right = np.asarray(c_right, dtype=np.float64)
    c_left = np.asarray(c_left, dtype=np.float64)
    u = (c_left - c_right) / np.hypot(*(c_left - c_right))
    return EyeCorners(
        right_outer=Point2.from_array(c_right - half_width * u),
        right_inner=Point2.from_array(c_right + half_width * u),
        left_inner=Point2.from_array(c_left - half_width * u),
        left_outer=Point2.from_array(c_left + half_width * u),
    )


def constant_model(delta=(0.0, 0.0, 0.0, 0.0), levels=1, depth=2):
    """Cascade whose every leaf adds the same normalized-shape delta"""
    n_leaves = 2 ** (depth - 1)
    features = [DiffFeature(Eye.RIGHT, k, k + 1, 0.0) for k in range(n_leaves - 1)]
    tree = RegressionTree(features, np.tile(np.asarray(delta, dtype=np.float64), (n_leaves, 1)))
    prior = PcaShapeModel(np.array([0.0, 0.0, 1.0, 0.0]), np.eye(4), np.zeros(4))
    return CascadeModel(tuple(ForestLevel((tree,)) for _ in range(levels)), HogConfig(), 0.1, prior)
