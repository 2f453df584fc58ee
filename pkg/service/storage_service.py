"""
Artifact storage for command outputs.

Every artifact carries the config hash and the seed of the run that made it
and nothing time-dependent, so re-running a config reproduces the files byte
for byte.
"""

import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from PIL import Image
from PIL.PngImagePlugin import PngInfo

logger = logging.getLogger(__name__)


class ArtifactStorageService:
    """Writes CSV, JSON and PNG artifacts under one output directory"""

    CONTENT_TYPES = {
        ".csv": "text/csv",
        ".json": "application/json",
        ".png": "image/png",
    }

    def __init__(self, root: Path, config_hash: str, seed: int):
        self.root = Path(root)
        self.config_hash = config_hash
        self.seed = seed
        self.written: List[str] = []

    def _save(self, name: str, content: bytes) -> str:
        path = self.root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(content)
        self.written.append(name)
        logger.debug("wrote %s (%s, %d bytes)", path, self.content_type(name) or "binary", len(content))
        return name

    def write_csv(self, name: str, body: str) -> str:
        """CSV with the run identity as leading comment lines"""
        header = f"# config_hash={self.config_hash}\n# seed={self.seed}\n"
        return self._save(name, (header + body).encode("utf-8"))

    def write_json(self, name: str, payload: Dict[str, Any]) -> str:
        document = {"config_hash": self.config_hash, "seed": self.seed, **payload}
        text = json.dumps(document, sort_keys=True, indent=2, allow_nan=True, default=_encode)
        return self._save(name, (text + "\n").encode("utf-8"))

    def write_png(self, name: str, image: Image.Image) -> str:
        """8-bit grayscale PNG; the run identity goes into tEXt chunks"""
        info = PngInfo()
        info.add_text("config_hash", self.config_hash)
        info.add_text("seed", str(self.seed))
        buffer = io.BytesIO()
        image.convert("L").save(buffer, format="PNG", pnginfo=info, optimize=False)
        return self._save(name, buffer.getvalue())

    def read(self, name: str) -> bytes:
        return (self.root / name).read_bytes()

    def list_files(self) -> List[str]:
        if not self.root.exists():
            return []
        return sorted(str(p.relative_to(self.root)) for p in self.root.rglob("*") if p.is_file())

    @staticmethod
    def content_type(name: str) -> Optional[str]:
        return ArtifactStorageService.CONTENT_TYPES.get(Path(name).suffix.lower())


def _encode(value: Any) -> Any:
    if isinstance(value, complex):
        return [value.real, value.imag]
    if hasattr(value, "model_dump"):
        return value.model_dump(mode="json")
    if hasattr(value, "tolist"):
        return value.tolist()
    raise TypeError(f"cannot serialise {type(value).__name__}")
