"""
Base Repository Pattern Implementation
Abstracts file storage so services never touch paths or partial writes directly
"""

import os
import tempfile
from pathlib import Path
from typing import Generic, Optional, TypeVar, Union

T = TypeVar('T')

PathLike = Union[str, os.PathLike]


class FileRepository(Generic[T]):
    """
    Base repository providing atomic file access under an optional root

    Every write lands in a temporary file of the destination directory and is
    renamed into place, so readers never observe a partial file.
    """

    def __init__(self, root: Optional[PathLike] = None):
        """
        Initialize repository

        Args:
            root: Directory relative paths are resolved against (default: cwd)
        """
        self.root = Path(root) if root is not None else None

    def resolve(self, path: PathLike) -> Path:
        """
        Resolve a path against the repository root

        Args:
            path: Absolute or root-relative path

        Returns:
            Resolved Path
        """
        path = Path(path)
        if self.root is not None and not path.is_absolute():
            return self.root / path
        return path

    def exists(self, path: PathLike) -> bool:
        return self.resolve(path).exists()

    def read_bytes(self, path: PathLike) -> bytes:
        return self.resolve(path).read_bytes()

    def read_text(self, path: PathLike) -> str:
        return self.resolve(path).read_text(encoding='utf-8')

    def write_bytes(self, path: PathLike, data: bytes) -> Path:
        """
        Atomically write bytes

        Args:
            path: Destination
            data: Content

        Returns:
            Resolved destination path
        """
        target = self.resolve(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(prefix=f'.{target.name}.', suffix='.tmp', dir=target.parent)
        try:
            with os.fdopen(fd, 'wb') as handle:
                handle.write(data)
                handle.flush()
                os.fsync(handle.fileno())
            os.replace(tmp_name, target)
        except BaseException:
            try:
                os.unlink(tmp_name)
            except FileNotFoundError:
                pass
            raise
        return target

    def write_text(self, path: PathLike, text: str) -> Path:
        return self.write_bytes(path, text.encode('utf-8'))
