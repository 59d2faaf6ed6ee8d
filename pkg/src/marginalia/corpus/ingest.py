"""Bulk import of legacy catalogue records.

Two record shapes exist in the wild: image-level tags ("this folio shows a
falcon somewhere") and rough boxes from an earlier campaign. Both become
annotations with legacy provenance so they stay distinguishable from anything
drawn or validated in this system. Imports are forgiving: a bad record is
reported and skipped, the rest of the batch goes through.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from ..geometry import BBox
from .model import Geometry, ProjectError, UnknownEntity
from .store import ProjectStore
from .vocab import resolve_label


@dataclass(frozen=True)
class TagRecord:
    folio_key: str
    label_text: str


@dataclass(frozen=True)
class BoxRecord:
    """Corners stay raw here; BBox validation happens at import so a
    degenerate box fails its row, not the whole file."""

    folio_key: str
    label_text: str
    corners: tuple[int, int, int, int]


@dataclass
class ImportReport:
    created: list[str] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    warnings: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {"created": list(self.created), "failures": list(self.failures),
                "warnings": list(self.warnings)}


def import_image_tags(store: ProjectStore, records: list[TagRecord],
                      mode: str = "create_or_match",
                      actor: str = "import") -> ImportReport:
    report = ImportReport()
    for index, record in enumerate(records):
        try:
            store.project.folio(record.folio_key)
            label = resolve_label(store, record.label_text, mode=mode, actor=actor)
            ann = store.create_annotation(record.folio_key, "legacy_image_level",
                                          label_id=label.id, actor=actor)
            report.created.append(ann.id)
        except (ProjectError, ValueError) as exc:
            report.failures.append({"index": index, "record": _record_dict(record),
                                    "reason": str(exc)})
    return report


def import_boxes(store: ProjectStore, records: list[BoxRecord],
                 mode: str = "create_or_match",
                 actor: str = "import") -> ImportReport:
    """Boxes partially outside the folio are clipped with a warning; boxes
    entirely outside fail."""
    report = ImportReport()
    for index, record in enumerate(records):
        try:
            folio = store.project.folio(record.folio_key)
            label = resolve_label(store, record.label_text, mode=mode, actor=actor)
            box, clipped = _clip_box(record.corners, folio.dims.width,
                                     folio.dims.height)
            if box is None:
                raise ProjectError(
                    f"box {list(record.corners)} lies entirely outside folio "
                    f"{record.folio_key} ({folio.dims.width}x{folio.dims.height})")
            ann = store.create_annotation(record.folio_key, "legacy_box",
                                          geometry=Geometry.from_box(box),
                                          label_id=label.id, actor=actor)
            report.created.append(ann.id)
            if clipped:
                report.warnings.append(
                    {"index": index, "annotation": ann.id,
                     "reason": f"box clipped from {list(record.corners)} to "
                               f"[{box.x_min}, {box.y_min}, {box.x_max}, "
                               f"{box.y_max}]"})
        except (ProjectError, ValueError) as exc:
            report.failures.append({"index": index, "record": _record_dict(record),
                                    "reason": str(exc)})
    return report


def _clip_box(corners: tuple[int, int, int, int], width: int,
              height: int) -> tuple[BBox | None, bool]:
    x_min, y_min, x_max, y_max = corners
    if x_min >= x_max or y_min >= y_max:
        raise ValueError(f"degenerate box {list(corners)}")
    clipped = (max(x_min, 0), max(y_min, 0), min(x_max, width),
               min(y_max, height))
    if clipped[0] >= clipped[2] or clipped[1] >= clipped[3]:
        return None, True
    return BBox(*clipped), clipped != tuple(corners)


def _record_dict(record) -> dict:
    if isinstance(record, BoxRecord):
        return {"folio_key": record.folio_key, "label": record.label_text,
                "corners": list(record.corners)}
    return {"folio_key": record.folio_key, "label": record.label_text}


# -- record file parsing ------------------------------------------------------
#
# CSV columns: folio_key,label[,x_min,y_min,x_max,y_max]
# JSON: a list of objects with the same keys.

def parse_records(text: str, fmt: str) -> tuple[list[TagRecord], list[BoxRecord]]:
    if fmt == "csv":
        rows = _csv_rows(text)
    elif fmt == "json":
        rows = _json_rows(text)
    else:
        raise ValueError(f"unknown record format {fmt!r}")
    tags: list[TagRecord] = []
    boxes: list[BoxRecord] = []
    for line, row in rows:
        try:
            record = _row_to_record(row)
        except (KeyError, ValueError, TypeError) as exc:
            raise ValueError(f"record {line}: {exc}") from exc
        if isinstance(record, BoxRecord):
            boxes.append(record)
        else:
            tags.append(record)
    return tags, boxes


def _csv_rows(text: str):
    reader = csv.reader(io.StringIO(text))
    for line, cells in enumerate(reader, start=1):
        if not cells or all(not c.strip() for c in cells):
            continue
        if line == 1 and cells[0].strip().lower() == "folio_key":
            continue  # optional header
        if len(cells) == 2:
            yield line, {"folio_key": cells[0], "label": cells[1]}
        elif len(cells) == 6:
            yield line, {"folio_key": cells[0], "label": cells[1],
                         "x_min": cells[2], "y_min": cells[3],
                         "x_max": cells[4], "y_max": cells[5]}
        else:
            raise ValueError(f"record {line}: expected 2 or 6 columns, "
                             f"got {len(cells)}")


def _json_rows(text: str):
    data = json.loads(text)
    if not isinstance(data, list):
        raise ValueError("record file must hold a JSON list")
    for line, row in enumerate(data, start=1):
        if not isinstance(row, dict):
            raise ValueError(f"record {line}: expected an object")
        yield line, row


def _row_to_record(row: dict) -> TagRecord | BoxRecord:
    folio_key = str(row["folio_key"]).strip()
    label = str(row["label"]).strip()
    if not folio_key or not label:
        raise ValueError("folio_key and label must be non-empty")
    corner_keys = ("x_min", "y_min", "x_max", "y_max")
    present = [k for k in corner_keys if row.get(k) not in (None, "")]
    if not present:
        return TagRecord(folio_key=folio_key, label_text=label)
    if len(present) != 4:
        raise ValueError("box records need all four of x_min,y_min,x_max,y_max")
    corners = tuple(int(row[k]) for k in corner_keys)
    return BoxRecord(folio_key=folio_key, label_text=label, corners=corners)


def load_record_file(path: str) -> tuple[list[TagRecord], list[BoxRecord]]:
    fmt = "json" if path.endswith(".json") else "csv"
    with open(path, encoding="utf-8") as handle:
        return parse_records(handle.read(), fmt)
