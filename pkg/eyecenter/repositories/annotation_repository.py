"""
Annotation Repository
Native annotation files, BioID-style and GI4E-style adapters, and detection files
"""

import logging
import math
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

from models import (
    AnnotationSource,
    DetectionResult,
    EyeAnnotation,
    EyeContour,
    EyeCorners,
    EyeDetection,
    Point2,
    Stage,
)
from eyecenter.repositories.base_repository import FileRepository, PathLike
from eyecenter.utils.error_handlers import AnnotationParseError, UsageError

logger = logging.getLogger('eyecenter.annotation')

NATIVE_MAGIC = 'eyecenter-annotations'
NATIVE_VERSION = 1
DETECTIONS_MAGIC = 'eyecenter-detections'
DETECTIONS_VERSION = 1

FORMATS = ('native', 'bioid', 'gi4e')

# BioID 20-point markup: outer/inner corner of the subject's right eye, then inner/outer of the left
BIOID_CORNER_INDICES = (9, 10, 11, 12)


class BioidEyes(NamedTuple):
    """Eye positions as labelled in a BioID .eye file"""
    left: Point2
    right: Point2


def _point(x: float, y: float, line: Optional[int] = None, record: Optional[int] = None) -> Point2:
    if not (math.isfinite(x) and math.isfinite(y)):
        raise AnnotationParseError(f"non-finite coordinate ({x}, {y})", line=line, record=record)
    if x < 0 or y < 0:
        raise AnnotationParseError(f"negative coordinate ({x}, {y})", line=line, record=record)
    return Point2(x, y)


def _numbers(tokens: Sequence[str], line: int, record: Optional[int] = None) -> List[float]:
    try:
        return [float(t) for t in tokens]
    except ValueError:
        raise AnnotationParseError(f"non-numeric value in {' '.join(tokens)!r}", line=line, record=record)


def _check_bounds(annotation: EyeAnnotation, record: Optional[int] = None, line: Optional[int] = None):
    """Reject landmarks outside the declared image size"""
    if annotation.image_size is None:
        return
    width, height = annotation.image_size
    points = list(annotation.corners.points()) + list(annotation.centers)
    for p in points:
        if p.x > width - 1 or p.y > height - 1:
            raise AnnotationParseError(
                f"{annotation.image_id}: coordinate ({p.x}, {p.y}) outside a {width}x{height} image",
                line=line, record=record)


# ---------------------------------------------------------------------------
# BioID
# ---------------------------------------------------------------------------

def parse_bioid_eyes(text: str) -> BioidEyes:
    """
    Parse a BioID .eye file: one header line, then 'LX LY RX RY'

    Raises:
        AnnotationParseError: wrong token count, missing data line or negative coordinates
    """
    lines = [(n, line) for n, line in enumerate(text.splitlines(), start=1) if line.strip()]
    if len(lines) < 2:
        raise AnnotationParseError("BioID eye file has no coordinate line", line=len(lines) + 1)
    number, data = lines[1]
    tokens = data.split()
    if len(tokens) != 4:
        raise AnnotationParseError(f"expected 4 coordinates, got {len(tokens)}", line=number)
    lx, ly, rx, ry = _numbers(tokens, number)
    return BioidEyes(left=_point(lx, ly, line=number), right=_point(rx, ry, line=number))


def parse_bioid_pts(text: str) -> List[Point2]:
    """Parse a 20-point .pts markup file ('version', 'n_points', '{', points, '}')"""
    points = []
    inside = False
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if line == '{':
            inside = True
        elif line == '}':
            inside = False
        elif inside and line:
            tokens = line.split()
            if len(tokens) != 2:
                raise AnnotationParseError("expected an 'x y' pair", line=number)
            x, y = _numbers(tokens, number)
            points.append(_point(x, y, line=number))
    return points


def _bioid_sibling(eye_file: Path, suffix: str) -> Optional[Path]:
    for name in (eye_file.stem + suffix, eye_file.stem.lower() + suffix):
        candidate = eye_file.with_name(name)
        if candidate.exists():
            return candidate
    return None


# ---------------------------------------------------------------------------
# GI4E
# ---------------------------------------------------------------------------

def parse_gi4e_line(line: str, number: int, base_dir: Path) -> EyeAnnotation:
    """
    One GI4E line: image name followed by six x y pairs

    Points run across the image from left to right: outer corner, iris center
    and inner corner of the image-left eye, then inner corner, iris center and
    outer corner of the image-right eye. The image-left eye is the subject's
    right eye.
    """
    tokens = line.split()
    if len(tokens) != 13:
        raise AnnotationParseError(f"expected image name and 6 coordinate pairs, got {len(tokens)} fields",
                                   line=number)
    values = _numbers(tokens[1:], number)
    p = [_point(values[2 * k], values[2 * k + 1], line=number) for k in range(6)]
    if not (p[0].x < p[2].x < p[3].x < p[5].x):
        raise AnnotationParseError("corner x coordinates are not in left-to-right order", line=number)
    corners = EyeCorners(right_outer=p[0], right_inner=p[2], left_inner=p[3], left_outer=p[5])
    name = tokens[0]
    return EyeAnnotation(image_id=Path(name).stem, corners=corners, centers=(p[1], p[4]),
                         source=AnnotationSource.MANUAL, image_path=str(base_dir / name))


# ---------------------------------------------------------------------------
# Native format
# ---------------------------------------------------------------------------

def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def dumps_annotations(annotations: Sequence[EyeAnnotation]) -> str:
    """Serialize annotations to the native text format"""
    lines = [f"{NATIVE_MAGIC} {NATIVE_VERSION}"]
    for a in annotations:
        lines.append(f"record {a.image_id}")
        lines.append(f"path {a.image_path}" if a.image_path else "path -")
        lines.append(f"source {a.source.value}")
        if a.image_size is not None:
            lines.append(f"size {a.image_size[0]} {a.image_size[1]}")
        lines.append("corners " + _fmt(v for p in a.corners.points() for v in (p.x, p.y)))
        lines.append("centers " + _fmt(v for p in a.centers for v in (p.x, p.y)))
        if a.contours is not None:
            for side, contour in zip(('right', 'left'), a.contours):
                lines.append(f"contour {side} {len(contour)} " + _fmt(contour.points.ravel()))
        if a.occlusion is not None:
            lines.append("occlusion " + _fmt(a.occlusion))
        lines.append("end")
    return "\n".join(lines) + "\n"


def loads_annotations(text: str, base_dir: Optional[Path] = None) -> List[EyeAnnotation]:
    """
    Parse the native annotation format

    Raises:
        AnnotationParseError: with the line and record index of the first problem
    """
    lines = [(n, line.strip()) for n, line in enumerate(text.splitlines(), start=1)
             if line.strip() and not line.lstrip().startswith('#')]
    if not lines:
        raise AnnotationParseError("annotation file is empty", line=1)
    header = lines[0][1].split()
    if len(header) != 2 or header[0] != NATIVE_MAGIC:
        raise AnnotationParseError("missing native annotation header", line=lines[0][0])
    if header[1] != str(NATIVE_VERSION):
        raise AnnotationParseError(f"unsupported annotation format version {header[1]}", line=lines[0][0])

    annotations = []
    fields: Dict[str, object] = {}
    record = -1
    for number, line in lines[1:]:
        tag, _, rest = line.partition(' ')
        tokens = rest.split()
        if tag == 'record':
            if fields:
                raise AnnotationParseError("record not terminated by 'end'", line=number, record=record)
            record += 1
            fields = {'image_id': rest.strip(), 'line': number}
        elif not fields:
            raise AnnotationParseError(f"'{tag}' outside a record", line=number)
        elif tag == 'path':
            fields['path'] = '' if rest.strip() == '-' else rest.strip()
        elif tag == 'source':
            try:
                fields['source'] = AnnotationSource(rest.strip())
            except ValueError:
                raise AnnotationParseError(f"unknown source '{rest.strip()}'", line=number, record=record)
        elif tag == 'size':
            if len(tokens) != 2:
                raise AnnotationParseError("size needs width and height", line=number, record=record)
            fields['size'] = (int(_numbers(tokens, number, record)[0]), int(_numbers(tokens, number, record)[1]))
        elif tag in ('corners', 'centers'):
            expected = 8 if tag == 'corners' else 4
            if len(tokens) != expected:
                raise AnnotationParseError(f"'{tag}' needs {expected} values, got {len(tokens)}",
                                           line=number, record=record)
            values = _numbers(tokens, number, record)
            fields[tag] = [_point(values[2 * k], values[2 * k + 1], number, record) for k in range(expected // 2)]
        elif tag == 'contour':
            if len(tokens) < 2 or tokens[0] not in ('right', 'left'):
                raise AnnotationParseError("contour needs a side and a point count", line=number, record=record)
            count = int(_numbers(tokens[1:2], number, record)[0])
            values = _numbers(tokens[2:], number, record)
            if len(values) != 2 * count:
                raise AnnotationParseError(f"contour declares {count} points, has {len(values) / 2:g}",
                                           line=number, record=record)
            fields[f'contour_{tokens[0]}'] = EyeContour([values[i:i + 2] for i in range(0, len(values), 2)])
        elif tag == 'occlusion':
            values = _numbers(tokens, number, record)
            if len(values) != 2:
                raise AnnotationParseError("occlusion needs two fractions", line=number, record=record)
            fields['occlusion'] = (values[0], values[1])
        elif tag == 'end':
            annotations.append(_build_native(fields, record, base_dir))
            fields = {}
        else:
            raise AnnotationParseError(f"unknown tag '{tag}'", line=number, record=record)
    if fields:
        raise AnnotationParseError("file ends inside a record", line=lines[-1][0], record=record)
    return annotations


def _build_native(fields: Dict[str, object], record: int, base_dir: Optional[Path]) -> EyeAnnotation:
    line = fields['line']
    if 'corners' not in fields:
        raise AnnotationParseError(f"record '{fields['image_id']}' has no corners", line=line, record=record)
    if 'centers' not in fields:
        raise AnnotationParseError(f"record '{fields['image_id']}' has no centers", line=line, record=record)
    contours = None
    if 'contour_right' in fields or 'contour_left' in fields:
        if not ('contour_right' in fields and 'contour_left' in fields):
            raise AnnotationParseError("both eye contours are required when one is given", line=line, record=record)
        contours = (fields['contour_right'], fields['contour_left'])
    path = fields.get('path', '')
    if path and base_dir is not None and not Path(path).is_absolute():
        path = str(base_dir / path)
    annotation = EyeAnnotation(
        image_id=fields['image_id'],
        corners=EyeCorners(*fields['corners']),
        centers=tuple(fields['centers']),
        contours=contours,
        source=fields.get('source', AnnotationSource.MANUAL),
        image_path=path,
        image_size=fields.get('size'),
        occlusion=fields.get('occlusion'),
    )
    _check_bounds(annotation, record=record, line=line)
    return annotation


# ---------------------------------------------------------------------------
# Detection files
# ---------------------------------------------------------------------------

DETECTION_COLUMNS = ('image_id',
                     'right_x', 'right_y', 'right_radius', 'right_stage', 'right_closure', 'right_flags',
                     'left_x', 'left_y', 'left_radius', 'left_stage', 'left_closure', 'left_flags')


def _eye_fields(d: EyeDetection) -> List[str]:
    flags = ('c' if d.clamped else '') + ('f' if d.flagged else '') or '-'
    radius = '-' if d.radius is None else repr(float(d.radius))
    return [repr(d.center.x), repr(d.center.y), radius, d.stage.value, repr(float(d.closure_ratio)), flags]


def dumps_detections(results: Sequence[DetectionResult]) -> str:
    """Tab-separated detections, one image per line, after a versioned header"""
    lines = [f"{DETECTIONS_MAGIC} {DETECTIONS_VERSION}", "# " + "\t".join(DETECTION_COLUMNS)]
    for r in results:
        lines.append("\t".join([r.image_id] + _eye_fields(r.right) + _eye_fields(r.left)))
    return "\n".join(lines) + "\n"


def _parse_eye(fields: Sequence[str], number: int) -> EyeDetection:
    x, y, radius, stage, closure, flags = fields
    try:
        return EyeDetection(
            center=Point2(float(x), float(y)),
            stage=Stage(stage),
            closure_ratio=float(closure),
            radius=None if radius == '-' else float(radius),
            clamped='c' in flags,
            flagged='f' in flags,
        )
    except ValueError as e:
        raise AnnotationParseError(f"bad detection field: {e}", line=number)


def loads_detections(text: str) -> List[DetectionResult]:
    """Parse a detections file written by dumps_detections"""
    lines = text.splitlines()
    if not lines or lines[0].split() != [DETECTIONS_MAGIC, str(DETECTIONS_VERSION)]:
        raise AnnotationParseError("missing detections header", line=1)
    results = []
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.startswith('#'):
            continue
        fields = line.split('\t')
        if len(fields) != len(DETECTION_COLUMNS):
            raise AnnotationParseError(f"expected {len(DETECTION_COLUMNS)} fields, got {len(fields)}", line=number)
        results.append(DetectionResult(fields[0], _parse_eye(fields[1:7], number), _parse_eye(fields[7:13], number)))
    return results


class AnnotationRepository(FileRepository[List[EyeAnnotation]]):
    """Repository for annotation and detection files"""

    def load(self, path: PathLike, fmt: str = 'native') -> List[EyeAnnotation]:
        """
        Load annotations in one of the supported formats

        Args:
            path: Native file, GI4E list file, or a BioID directory / .eye file
            fmt: 'native', 'bioid' or 'gi4e'

        Returns:
            List of EyeAnnotation in native right-then-left order
        """
        if fmt not in FORMATS:
            raise UsageError(f"unknown annotation format '{fmt}' (expected one of {', '.join(FORMATS)})")
        path = self.resolve(path)
        if fmt == 'native':
            annotations = loads_annotations(path.read_text(encoding='utf-8'), base_dir=path.parent)
        elif fmt == 'gi4e':
            annotations = self._load_gi4e(path)
        else:
            annotations = self._load_bioid(path)
        logger.info(f"Loaded {len(annotations)} {fmt} annotations from {path}")
        return annotations

    def save(self, annotations: Sequence[EyeAnnotation], path: PathLike) -> Path:
        return self.write_text(path, dumps_annotations(annotations))

    def load_bioid_eyes(self, path: PathLike) -> BioidEyes:
        return parse_bioid_eyes(self.read_text(path))

    def _load_gi4e(self, path: Path) -> List[EyeAnnotation]:
        annotations = []
        for number, line in enumerate(path.read_text(encoding='utf-8').splitlines(), start=1):
            if line.strip() and not line.lstrip().startswith('#'):
                annotations.append(parse_gi4e_line(line, number, path.parent))
        return annotations

    def _load_bioid(self, path: Path) -> List[EyeAnnotation]:
        eye_files = sorted(path.glob('*.eye')) if path.is_dir() else [path]
        annotations = []
        for record, eye_file in enumerate(eye_files):
            try:
                eyes = parse_bioid_eyes(eye_file.read_text(encoding='utf-8'))
            except AnnotationParseError as e:
                raise AnnotationParseError(f"{eye_file.name}: {e.message}", record=record)
            pts_file = _bioid_sibling(eye_file, '.pts')
            if pts_file is None:
                raise AnnotationParseError(f"{eye_file.name}: no .pts markup with eye corners", record=record)
            points = parse_bioid_pts(pts_file.read_text(encoding='utf-8'))
            if len(points) <= max(BIOID_CORNER_INDICES):
                raise AnnotationParseError(f"{pts_file.name}: expected 20 points, got {len(points)}", record=record)
            corners = EyeCorners(*(points[i] for i in BIOID_CORNER_INDICES))
            # the subject's right eye is the one at smaller image x
            right, left = sorted((eyes.left, eyes.right), key=lambda p: p.x)
            image = _bioid_sibling(eye_file, '.pgm')
            annotations.append(EyeAnnotation(
                image_id=eye_file.stem, corners=corners, centers=(right, left),
                source=AnnotationSource.MANUAL, image_path=str(image) if image else '',
            ))
        return annotations

    def save_detections(self, results: Sequence[DetectionResult], path: PathLike) -> Path:
        return self.write_text(path, dumps_detections(results))

    def load_detections(self, path: PathLike) -> List[DetectionResult]:
        return loads_detections(self.read_text(path))
