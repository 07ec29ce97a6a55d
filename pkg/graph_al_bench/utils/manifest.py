"""
Run manifest: everything needed to reproduce a sweep, written next to its
results before the first run starts.
"""
import hashlib
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from .. import __version__

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"


def file_checksum(path: Path, chunk_size: int = 1 << 20) -> str:
    digest = hashlib.sha256()
    with Path(path).open('rb') as f:
        for chunk in iter(lambda: f.read(chunk_size), b''):
            digest.update(chunk)
    return digest.hexdigest()


def dataset_checksums(directory: Path) -> Dict[str, str]:
    """sha256 of every regular file directly inside the dataset directory."""
    directory = Path(directory)
    if not directory.is_dir():
        return {}
    return {p.name: file_checksum(p) for p in sorted(directory.iterdir()) if p.is_file()}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class RunManifest(BaseModel):
    command: str
    version: str = __version__
    config: Dict[str, Any]
    seeds: List[int] = Field(default_factory=list)
    strategies: List[str] = Field(default_factory=list)
    dataset_checksums: Dict[str, str] = Field(default_factory=dict)
    started_at: str = Field(default_factory=_now)
    finished_at: Optional[str] = None
    status: str = "running"
    error: Optional[str] = None
    outputs: Dict[str, str] = Field(default_factory=dict)
    results: Dict[str, float] = Field(default_factory=dict)

    def write(self, directory: Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / MANIFEST_FILE
        path.write_text(json.dumps(self.model_dump(mode='json'), indent=2), encoding='utf-8')
        return path

    def finish(self, directory: Path, status: str = "completed",
               error: Optional[str] = None) -> Path:
        self.finished_at = _now()
        self.status = status
        self.error = error
        logger.info(f"Manifest marked {status}")
        return self.write(directory)

    @classmethod
    def read(cls, path: Path) -> 'RunManifest':
        return cls.model_validate_json(Path(path).read_text(encoding='utf-8'))
