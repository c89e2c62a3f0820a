"""
Image Repository
Decodes raster files to 8-bit grayscale and writes images and detection overlays
"""

import logging
from pathlib import Path
from typing import Optional, Sequence

import cv2
import numpy as np

from models import DetectionResult, GrayImage
from eyecenter.repositories.base_repository import FileRepository, PathLike
from eyecenter.utils.error_handlers import ImageDecodeError

logger = logging.getLogger('eyecenter.images')

CROSS_COLOR = (0, 0, 255)
CIRCLE_COLOR = (0, 255, 0)
# cv2 drawing takes fixed-point coordinates with this many fractional bits
DRAW_SHIFT = 4


def decode_image(data: bytes, image_id: str = '') -> GrayImage:
    """
    Decode an encoded raster to grayscale

    Color images are converted with the fixed luma weights 0.299 R + 0.587 G
    + 0.114 B; 16-bit images keep their high byte.

    Raises:
        ImageDecodeError: for unsupported, truncated or corrupt data
    """
    buffer = np.frombuffer(data, dtype=np.uint8)
    if buffer.size == 0:
        raise ImageDecodeError(f"{image_id or 'image'}: empty file")
    pixels = cv2.imdecode(buffer, cv2.IMREAD_UNCHANGED)
    if pixels is None or pixels.size == 0:
        raise ImageDecodeError(f"{image_id or 'image'}: unsupported or corrupt image data")

    if pixels.dtype == np.uint16:
        pixels = (pixels >> 8).astype(np.uint8)
    elif pixels.dtype != np.uint8:
        raise ImageDecodeError(f"{image_id or 'image'}: unsupported sample type {pixels.dtype}")

    if pixels.ndim == 3:
        channels = pixels.shape[2]
        if channels == 1:
            pixels = pixels[:, :, 0]
        elif channels == 3:
            pixels = cv2.cvtColor(pixels, cv2.COLOR_BGR2GRAY)
        elif channels == 4:
            pixels = cv2.cvtColor(pixels, cv2.COLOR_BGRA2GRAY)
        else:
            raise ImageDecodeError(f"{image_id or 'image'}: unsupported channel count {channels}")
    return GrayImage(np.ascontiguousarray(pixels), image_id=image_id)


def encode_image(pixels: np.ndarray, suffix: str = '.png') -> bytes:
    ok, encoded = cv2.imencode(suffix, pixels)
    if not ok:
        raise ImageDecodeError(f"cannot encode image as {suffix}")
    return encoded.tobytes()


def render_overlay(image: GrayImage, result: DetectionResult) -> np.ndarray:
    """BGR copy of the image with a cross at each center and the fitted circle when known"""
    canvas = cv2.cvtColor(image.pixels, cv2.COLOR_GRAY2BGR)
    scale = 1 << DRAW_SHIFT
    size = max(5, int(round(0.02 * max(image.width, image.height))))
    for eye in (result.right, result.left):
        x, y = eye.center.x, eye.center.y
        cv2.drawMarker(canvas, (int(round(x)), int(round(y))), CROSS_COLOR,
                       markerType=cv2.MARKER_CROSS, markerSize=size, thickness=1)
        if eye.radius:
            cv2.circle(canvas, (int(round(x * scale)), int(round(y * scale))), int(round(eye.radius * scale)),
                       CIRCLE_COLOR, thickness=1, lineType=cv2.LINE_AA, shift=DRAW_SHIFT)
    return canvas


class ImageRepository(FileRepository[GrayImage]):
    """Repository for raster images"""

    def load(self, path: PathLike, image_id: Optional[str] = None) -> GrayImage:
        """
        Load an image as 8-bit grayscale

        Args:
            path: Image file
            image_id: Identifier stored on the image (default: file stem)

        Returns:
            GrayImage
        """
        resolved = self.resolve(path)
        if not resolved.exists():
            raise ImageDecodeError(f"image not found: {resolved}")
        return decode_image(resolved.read_bytes(), image_id if image_id is not None else resolved.stem)

    def save(self, image: GrayImage, path: PathLike) -> Path:
        """Atomically write an image; the format follows the file suffix"""
        target = self.resolve(path)
        return self.write_bytes(target, encode_image(image.pixels, target.suffix or '.png'))

    def save_overlay(self, image: GrayImage, result: DetectionResult, path: PathLike) -> Path:
        target = self.resolve(path)
        return self.write_bytes(target, encode_image(render_overlay(image, result), target.suffix or '.png'))

    def save_overlays(self, items: Sequence, out_dir: PathLike) -> int:
        """Write one overlay PNG per (image, result) pair; returns the count"""
        out_dir = Path(out_dir)
        for image, result in items:
            self.save_overlay(image, result, out_dir / f"{result.image_id}.png")
        logger.info(f"Wrote {len(items)} overlays to {out_dir}")
        return len(items)
