"""
Corpus Repository
Reads and writes synthetic corpus manifests
"""

import json
import logging
from pathlib import Path

from models import CorpusManifest, CorpusRecord
from eyecenter.repositories.base_repository import FileRepository, PathLike
from eyecenter.utils.error_handlers import DataError

logger = logging.getLogger('eyecenter.corpus')

MANIFEST_NAME = 'manifest.json'


class CorpusRepository(FileRepository[CorpusManifest]):
    """Repository for corpus manifests"""

    def save(self, manifest: CorpusManifest, path: PathLike) -> Path:
        """
        Atomically write a manifest as sorted, indented JSON

        Args:
            manifest: Corpus manifest
            path: Manifest file or corpus directory

        Returns:
            Resolved manifest path
        """
        target = self._manifest_path(path)
        text = json.dumps(manifest.to_dict(), indent=2, sort_keys=True)
        return self.write_text(target, text + "\n")

    def load(self, path: PathLike) -> CorpusManifest:
        """
        Read a manifest

        Args:
            path: Manifest file or corpus directory

        Returns:
            CorpusManifest
        """
        target = self._manifest_path(path)
        try:
            data = json.loads(self.read_text(target))
            records = tuple(CorpusRecord(r['image_id'], r['image'], r['split'], r['pixels_sha256'])
                            for r in data['records'])
            return CorpusManifest(seed=int(data['seed']), params=dict(data['params']), records=records,
                                  digest=data['digest'], annotations=data.get('annotations', 'annotations.txt'))
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"malformed corpus manifest {target}: {e}")

    def _manifest_path(self, path: PathLike) -> Path:
        path = self.resolve(path)
        return path / MANIFEST_NAME if path.suffix != '.json' else path
