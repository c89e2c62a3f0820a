"""
Model Repository
Versioned line-oriented text format for trained cascades
"""

import logging
from typing import Callable, Iterator, List, Optional, Tuple

import numpy as np

from eyecenter.repositories.base_repository import FileRepository, PathLike
from eyecenter.utils.error_handlers import (
    ModelFormatError,
    ModelInvariantError,
    ModelTruncatedError,
    ModelVersionError,
)
from eyecenter.vision.cascade import (
    MODEL_FORMAT_VERSION,
    CascadeModel,
    ForestLevel,
    PcaShapeModel,
    RegressionTree,
)
from eyecenter.vision.hog import DiffFeature, Eye, HogConfig

logger = logging.getLogger('eyecenter.models')

MAGIC = 'eyecenter-cascade'


def _f32(value) -> str:
    """float32 value with 9 significant digits, enough to restore it exactly"""
    return format(float(np.float32(value)), '.9g')


def _float32(text: str) -> float:
    return float(np.float32(text))


def dumps_model(model: CascadeModel) -> str:
    """
    Serialize a cascade to text

    Returns:
        Model text, terminated by an 'end' line
    """
    hog = model.hog_config
    prior = model.shape_prior
    lines = [
        f"{MAGIC} {model.format_version}",
        f"hog {hog.e_hog!r} {hog.patch_fraction!r} {hog.cells_per_side} {hog.orientation_bins} {int(hog.soft_binning)}",
        f"shrinkage {model.shrinkage!r}",
        f"prior {len(prior.variances)}",
        "mean " + " ".join(_f32(v) for v in prior.mean_shape),
    ]
    for row in prior.basis:
        lines.append("basis " + " ".join(_f32(v) for v in row))
    lines.append("variances " + " ".join(_f32(v) for v in prior.variances))
    lines.append(f"levels {len(model.levels)}")
    for index, level in enumerate(model.levels):
        lines.append(f"level {index} {len(level.trees)} {level.depth}")
        for tree in level.trees:
            lines.append("tree")
            for feature in tree.features:
                lines.append(f"split {int(feature.eye)} {feature.dim_a} {feature.dim_b} {_f32(feature.threshold)}")
            for delta in tree.deltas:
                lines.append("leaf " + " ".join(_f32(v) for v in delta))
    lines.append("end")
    return "\n".join(lines) + "\n"


class _Reader:
    """Line cursor that reports positions and premature end of stream"""

    def __init__(self, text: str):
        self._lines: Iterator[Tuple[int, str]] = (
            (number, line.strip()) for number, line in enumerate(text.splitlines(), start=1)
            if line.strip() and not line.lstrip().startswith('#'))
        self.line = 0

    def next(self, tag: str, count: Optional[int] = None) -> List[str]:
        try:
            self.line, text = next(self._lines)
        except StopIteration:
            raise ModelTruncatedError(f"model stream ended while expecting '{tag}'", payload={'line': self.line})
        tokens = text.split()
        if tokens[0] != tag:
            raise ModelFormatError(f"expected '{tag}' on line {self.line}, found '{tokens[0]}'",
                                   payload={'line': self.line})
        values = tokens[1:]
        if count is not None and len(values) != count:
            raise ModelFormatError(f"'{tag}' on line {self.line} needs {count} values, got {len(values)}",
                                   payload={'line': self.line})
        return values

    def floats(self, tag: str, count: Optional[int] = None) -> List[float]:
        values = self.next(tag, count)
        try:
            return [float(v) for v in values]
        except ValueError:
            raise ModelFormatError(f"non-numeric value in '{tag}' on line {self.line}", payload={'line': self.line})

    def float32s(self, tag: str, count: Optional[int] = None) -> List[float]:
        """Values parsed straight to float32, then widened"""
        values = self.next(tag, count)
        try:
            return [float(np.float32(v)) for v in values]
        except ValueError:
            raise ModelFormatError(f"non-numeric value in '{tag}' on line {self.line}", payload={'line': self.line})

    def ints(self, tag: str, count: Optional[int] = None) -> List[int]:
        values = self.next(tag, count)
        try:
            return [int(v) for v in values]
        except ValueError:
            raise ModelFormatError(f"non-integer value in '{tag}' on line {self.line}", payload={'line': self.line})

    def typed(self, tag: str, *converters: Callable[[str], object]) -> List[object]:
        """One value per converter, each parsed by its converter"""
        values = self.next(tag, len(converters))
        try:
            return [convert(v) for convert, v in zip(converters, values)]
        except ValueError:
            raise ModelFormatError(f"malformed value in '{tag}' on line {self.line}", payload={'line': self.line})


def loads_model(text: str) -> CascadeModel:
    """
    Parse model text

    Raises:
        ModelVersionError: for a missing or unknown format version
        ModelTruncatedError: when the stream ends before 'end'
        ModelFormatError: for malformed lines
        ModelInvariantError: when the parsed model violates a structural invariant
    """
    reader = _Reader(text)
    try:
        header = reader.next(MAGIC, 1)
    except ModelTruncatedError:
        raise ModelTruncatedError("model stream is empty")
    except ModelFormatError:
        raise ModelVersionError("not an eyecenter cascade model (missing header)")
    if header[0] != str(MODEL_FORMAT_VERSION):
        raise ModelVersionError(f"unsupported model format version {header[0]} (expected {MODEL_FORMAT_VERSION})")

    try:
        e_hog, patch_fraction, cells, bins, soft = reader.typed('hog', float, float, int, int, int)
        hog_config = HogConfig(e_hog, patch_fraction, cells, bins, bool(soft))
        shrinkage = reader.floats('shrinkage', 1)[0]

        components = reader.ints('prior', 1)[0]
        mean = reader.float32s('mean', 4)
        basis = [reader.float32s('basis', 4) for _ in range(components)]
        variances = reader.float32s('variances', components)
        prior = PcaShapeModel(np.array(mean), np.array(basis).reshape(-1, 4), np.array(variances))

        level_count = reader.ints('levels', 1)[0]
        levels = []
        for expected_index in range(level_count):
            index, tree_count, depth = reader.ints('level', 3)
            if index != expected_index or depth < 1 or tree_count < 1:
                raise ModelInvariantError(f"bad level header on line {reader.line}")
            n_internal = 2 ** (depth - 1) - 1
            trees = []
            for _ in range(tree_count):
                reader.next('tree', 0)
                features = []
                for _ in range(n_internal):
                    eye, dim_a, dim_b, threshold = reader.typed('split', int, int, int, _float32)
                    features.append(DiffFeature(Eye(eye), dim_a, dim_b, threshold))
                deltas = [reader.float32s('leaf', 4) for _ in range(n_internal + 1)]
                trees.append(RegressionTree(features, np.array(deltas)))
            levels.append(ForestLevel(tuple(trees)))
        reader.next('end', 0)
        return CascadeModel(tuple(levels), hog_config, shrinkage, prior, format_version=MODEL_FORMAT_VERSION)
    except ModelFormatError:
        raise
    except ValueError as e:
        raise ModelInvariantError(f"invalid model near line {reader.line}: {e}", payload={'line': reader.line})


class ModelRepository(FileRepository[CascadeModel]):
    """Repository for trained cascade models"""

    def save(self, model: CascadeModel, path: PathLike):
        """
        Atomically write a model file

        Args:
            model: Trained cascade
            path: Destination

        Returns:
            Resolved path
        """
        target = self.write_text(path, dumps_model(model))
        logger.info(f"Saved model with {len(model.levels)} levels to {target}")
        return target

    def load(self, path: PathLike) -> CascadeModel:
        """
        Read a model file

        Args:
            path: Model file

        Returns:
            CascadeModel; nothing is returned for a damaged file
        """
        model = loads_model(self.read_text(path))
        logger.debug(f"Loaded model from {self.resolve(path)} ({model.tree_count} trees)")
        return model
