import hashlib
import time
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterator

from pydantic import BaseModel, Field

from common.utils import get_flow_aware_logger
from ksrecon import __version__

logger = get_flow_aware_logger("ksrecon.persistence.manifest")

MANIFEST_NAME = "manifest.json"


def file_digest(path: str | Path) -> str:
    """64-bit BLAKE2b hex digest of a file's bytes"""
    digest = hashlib.blake2b(digest_size=8)
    with Path(path).open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class RunManifest(BaseModel):
    """Provenance record written into every output directory"""

    command: str
    tool_version: str = __version__
    config: dict[str, Any] = Field(default_factory=dict)
    seeds: dict[str, int] = Field(default_factory=dict)
    inputs: dict[str, str] = Field(default_factory=dict)
    outputs: dict[str, str] = Field(default_factory=dict)
    timings: dict[str, float] = Field(default_factory=dict)
    started_at: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    error: str | None = None

    def add_input(self, path: str | Path) -> None:
        self.inputs[str(path)] = file_digest(path)

    def add_output(self, path: str | Path) -> None:
        self.outputs[str(path)] = file_digest(path)

    def write(self, out_dir: str | Path) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / MANIFEST_NAME
        path.write_text(self.model_dump_json(indent=2))
        logger.info(f"Wrote {path}")
        return path


@contextmanager
def timed(manifest: RunManifest, name: str) -> Iterator[None]:
    """Record the wall-clock duration of a step under manifest.timings[name]"""
    started = time.perf_counter()
    try:
        yield
    finally:
        manifest.timings[name] = time.perf_counter() - started
