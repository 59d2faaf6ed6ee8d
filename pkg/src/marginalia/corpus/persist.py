"""Project files: one JSON document per project.

Serialization is canonical (sorted keys, fixed separators, entity lists
sorted by id) so saving the same project twice produces identical bytes.
Loading verifies the format version and referential integrity before
returning a store.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from .model import Project
from .store import ProjectStore


def project_to_json(project: Project) -> str:
    return json.dumps(project.to_dict(), sort_keys=True, ensure_ascii=False,
                      indent=2) + "\n"


def save_project(store: ProjectStore, path: str | Path) -> Path:
    """Write atomically: serialize to a sibling temp file, then rename.

    The temp name is unique per call so concurrent saves of the same project
    race only on the final rename, which is atomic; the file on disk is
    always one complete serialization."""
    path = Path(path)
    with store.lock:
        text = project_to_json(store.project)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".",
                                    suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise
    return path


def load_project(path: str | Path) -> ProjectStore:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return ProjectStore(Project.from_dict(data))
