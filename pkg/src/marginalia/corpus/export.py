"""COCO export and project statistics.

The export is deterministic: entity lists are sorted by their ids, numeric
COCO ids are assigned from those orders, and no wall-clock field is written.
Exporting the same project twice therefore yields identical bytes.

Segmentation uses the cached simplified polygons. Holes are emitted as
additional rings on the same annotation and are meant to be combined
even-odd, which round-trips through the rasterizer. Annotations that cannot
be expressed (no mask, or no label to map to a category) are skipped and
counted in the report.
"""

from __future__ import annotations

import json
import posixpath
from urllib.parse import urlparse

from .model import Annotation, Project

EXPORT_MODES = ("validated_only", "all_instances")


def export_coco(project: Project, mode: str = "validated_only") -> tuple[dict, dict]:
    if mode not in EXPORT_MODES:
        raise ValueError(f"unknown export mode {mode!r}")

    image_ids = {fid: i + 1 for i, fid in enumerate(sorted(project.folios))}
    category_ids = {lid: i + 1 for i, lid in enumerate(sorted(project.labels))}

    images = []
    for folio_id in sorted(project.folios):
        folio = project.folios[folio_id]
        images.append({
            "id": image_ids[folio_id],
            "file_name": _file_name(folio.image_uri, folio_id),
            "width": folio.dims.width,
            "height": folio.dims.height,
        })

    categories = []
    for label_id in sorted(project.labels):
        label = project.labels[label_id]
        parent = project.labels.get(label.parent) if label.parent else None
        categories.append({
            "id": category_ids[label_id],
            "name": label.lemma,
            "supercategory": parent.lemma if parent else "",
        })

    report = {"exported": 0, "skipped_image_level": 0, "skipped_box_only": 0,
              "skipped_unlabeled": 0, "skipped_status": 0}
    annotations = []
    next_id = 1
    for ann_id in sorted(project.annotations):
        ann = project.annotations[ann_id]
        skip = _skip_reason(ann, mode)
        if skip:
            report[skip] += 1
            continue
        box = ann.geometry.bbox
        annotations.append({
            "id": next_id,
            "image_id": image_ids[ann.folio_id],
            "category_id": category_ids[ann.label_id],
            "segmentation": [_flat_ring(ring)
                             for poly in ann.geometry.polygons
                             for ring in poly.rings()],
            "bbox": [box.x_min, box.y_min, box.width, box.height],
            "area": ann.geometry.mask.area,
            "iscrowd": 0,
        })
        next_id += 1
        report["exported"] += 1

    document = {
        "info": {"description": f"project {project.project_id}", "version": "1"},
        "licenses": [],
        "images": images,
        "categories": categories,
        "annotations": annotations,
    }
    return document, report


def _skip_reason(ann: Annotation, mode: str) -> str | None:
    if ann.geometry is None:
        return "skipped_image_level"
    if ann.geometry.mask is None:
        return "skipped_box_only"
    if ann.label_id is None:
        return "skipped_unlabeled"
    if mode == "validated_only" and ann.status != "validated":
        return "skipped_status"
    return None


def _flat_ring(ring) -> list[float]:
    return [float(coord) for vertex in ring for coord in vertex]


def _file_name(image_uri: str, folio_id: str) -> str:
    if image_uri.startswith(("http://", "https://")):
        name = posixpath.basename(urlparse(image_uri).path)
    else:
        name = posixpath.basename(image_uri.replace("\\", "/"))
    return name or f"{folio_id}.png"


def coco_json(document: dict) -> str:
    return json.dumps(document, sort_keys=True, ensure_ascii=False, indent=2) + "\n"


# -- statistics ---------------------------------------------------------------

def project_stats(project: Project) -> dict:
    """Annotation counts partitioned three ways; each partition sums to total."""
    total = len(project.annotations)
    by_status: dict[str, int] = {}
    by_provenance: dict[str, int] = {}
    by_label: dict[str, int] = {}
    by_folio: dict[str, int] = {}
    for ann in project.annotations.values():
        by_status[ann.status] = by_status.get(ann.status, 0) + 1
        by_provenance[ann.provenance] = by_provenance.get(ann.provenance, 0) + 1
        label_key = ann.label_id if ann.label_id is not None else "(unlabeled)"
        by_label[label_key] = by_label.get(label_key, 0) + 1
        by_folio[ann.folio_id] = by_folio.get(ann.folio_id, 0) + 1
    return {
        "total_annotations": total,
        "folios": len(project.folios),
        "labels": len(project.labels),
        "by_status": dict(sorted(by_status.items())),
        "by_provenance": dict(sorted(by_provenance.items())),
        "by_label": dict(sorted(by_label.items())),
        "by_folio": dict(sorted(by_folio.items())),
    }
