"""Folio image access: local paths or URLs, cached by content hash.

A fetch stores the original bytes under their sha256 and remembers the
uri -> hash mapping in a small index, so a URL is downloaded once and a
local file is re-read only when its content changes the hash lookup.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..geometry import GridDims
from ..imageio import decode_image


@dataclass(frozen=True)
class CachedImage:
    key: str
    path: Path
    dims: GridDims


class ImageCache:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._index_path = self.root / "index.json"
        self._index: dict[str, str] = {}
        if self._index_path.exists():
            self._index = json.loads(self._index_path.read_text(encoding="utf-8"))

    def fetch(self, uri: str, timeout: float = 60.0) -> CachedImage:
        cached_key = self._index.get(uri)
        if cached_key is not None:
            path = self._blob_path(cached_key)
            if path.exists():
                return self._entry(cached_key)
        if uri.startswith(("http://", "https://")):
            import httpx

            response = httpx.get(uri, timeout=timeout, follow_redirects=True)
            response.raise_for_status()
            payload = response.content
        else:
            payload = Path(uri).read_bytes()
        key = hashlib.sha256(payload).hexdigest()
        blob = self._blob_path(key)
        if not blob.exists():
            blob.write_bytes(payload)
        self._index[uri] = key
        self._save_index()
        return self._entry(key)

    def _entry(self, key: str) -> CachedImage:
        arr = self.load_array(key)
        return CachedImage(key=key, path=self._blob_path(key),
                           dims=GridDims(width=arr.shape[1], height=arr.shape[0]))

    def _blob_path(self, key: str) -> Path:
        return self.root / f"{key}.img"

    def _save_index(self) -> None:
        self._index_path.write_text(
            json.dumps(self._index, sort_keys=True, indent=2), encoding="utf-8")

    def load_array(self, key: str) -> np.ndarray:
        return decode_image(self._blob_path(key).read_bytes())

    def read_bytes(self, key: str) -> bytes:
        return self._blob_path(key).read_bytes()

    def media_type(self, key: str) -> str:
        payload = self.read_bytes(key)
        if payload[:8] == b"\x89PNG\r\n\x1a\n":
            return "image/png"
        if payload[:2] == b"\xff\xd8":
            return "image/jpeg"
        return "application/octet-stream"
