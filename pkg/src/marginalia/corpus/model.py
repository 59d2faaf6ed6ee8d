"""Project data model: vocabulary, folios, annotations, events.

Everything serializes to plain dicts (JSON-safe) and back; the project file
and the event log reuse the same codecs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..geometry import (
    BBox,
    BinaryMask,
    GridDims,
    Polygon,
    mask_iou,
    polygon_from_dict,
    polygon_to_dict,
    polygonize,
    rasterize_all,
)

FORMAT_VERSION = "1"

PROVENANCES = ("legacy_image_level", "legacy_box", "auto", "text_grounded",
               "prompted", "manual")
STATUSES = ("draft", "validated", "rejected")
LEGAL_TRANSITIONS = {("draft", "validated"), ("draft", "rejected"), ("rejected", "draft")}

# polygon cache / export simplification: compact polygons, but never at the
# cost of fidelity (fall back to the exact crack outline below this IoU)
SIMPLIFY_TOLERANCE = 1.0
SIMPLIFY_MIN_IOU = 0.99


class ProjectError(Exception):
    pass


class UnknownEntity(ProjectError):
    pass


class IllegalTransition(ProjectError):
    pass


class IntegrityError(ProjectError):
    pass


class VersionError(ProjectError):
    pass


# -- vocabulary ---------------------------------------------------------------

@dataclass
class Label:
    """Controlled-vocabulary entry: French lemma, optional English gloss."""

    id: str
    lemma: str
    gloss: str | None = None
    language: str = "fr"
    aliases: tuple[str, ...] = ()
    parent: str | None = None

    def __post_init__(self):
        if not self.id or not self.lemma:
            raise ValueError("label needs an id and a lemma")
        object.__setattr__(self, "aliases", tuple(self.aliases))

    def to_dict(self) -> dict:
        return {"id": self.id, "lemma": self.lemma, "gloss": self.gloss,
                "language": self.language, "aliases": list(self.aliases),
                "parent": self.parent}

    @classmethod
    def from_dict(cls, data: dict) -> "Label":
        return cls(id=data["id"], lemma=data["lemma"], gloss=data.get("gloss"),
                   language=data.get("language", "fr"),
                   aliases=tuple(data.get("aliases", [])),
                   parent=data.get("parent"))


@dataclass(frozen=True)
class ConceptRule:
    """Fires a concept suggestion when required labels co-occur on a folio."""

    concept: str
    required: tuple[tuple[str, int], ...]

    def __post_init__(self):
        req = tuple((str(label), int(count)) for label, count in self.required)
        object.__setattr__(self, "required", req)
        if not req:
            raise ValueError("rule requires at least one label")
        if any(count < 1 for _, count in req):
            raise ValueError("required counts must be >= 1")
        if any(label == self.concept for label, _ in req):
            raise ValueError(f"rule for {self.concept!r} cannot require itself")

    def to_dict(self) -> dict:
        return {"concept": self.concept,
                "required": [[label, count] for label, count in self.required]}

    @classmethod
    def from_dict(cls, data: dict) -> "ConceptRule":
        return cls(concept=data["concept"],
                   required=tuple((r[0], r[1]) for r in data["required"]))


# -- folios and annotations ---------------------------------------------------

@dataclass
class Folio:
    id: str
    shelfmark: str
    folio_ref: str
    image_uri: str
    dims: GridDims

    def to_dict(self) -> dict:
        return {"id": self.id, "shelfmark": self.shelfmark,
                "folio_ref": self.folio_ref, "image_uri": self.image_uri,
                "dims": {"width": self.dims.width, "height": self.dims.height}}

    @classmethod
    def from_dict(cls, data: dict) -> "Folio":
        return cls(id=data["id"], shelfmark=data["shelfmark"],
                   folio_ref=data["folio_ref"], image_uri=data["image_uri"],
                   dims=GridDims(**data["dims"]))


def cached_polygons(mask: BinaryMask, tolerance: float = SIMPLIFY_TOLERANCE) -> tuple[Polygon, ...]:
    """Simplified polygons for display/export, exact when simplification
    would drop the round-trip IoU below the floor."""
    polys = polygonize(mask, tolerance)
    if tolerance > 0 and polys:
        back = rasterize_all(polys, mask.dims)
        if mask_iou(back, mask) < SIMPLIFY_MIN_IOU:
            polys = polygonize(mask, 0.0)
    return tuple(polys)


@dataclass
class Geometry:
    """Mask plus cached derived forms; box-only for legacy box records."""

    bbox: BBox
    mask: BinaryMask | None = None
    polygons: tuple[Polygon, ...] = ()

    @classmethod
    def from_mask(cls, mask: BinaryMask) -> "Geometry":
        if mask.is_empty:
            raise ValueError("annotation mask must be non-empty")
        return cls(bbox=mask.bbox(), mask=mask, polygons=cached_polygons(mask))

    @classmethod
    def from_box(cls, box: BBox) -> "Geometry":
        return cls(bbox=box)

    def to_dict(self) -> dict:
        data: dict = {"bbox": {"x_min": self.bbox.x_min, "y_min": self.bbox.y_min,
                               "x_max": self.bbox.x_max, "y_max": self.bbox.y_max}}
        if self.mask is not None:
            data["mask"] = {"dims": {"width": self.mask.dims.width,
                                     "height": self.mask.dims.height},
                            "runs": list(self.mask.runs)}
            data["polygons"] = [polygon_to_dict(p) for p in self.polygons]
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Geometry":
        box = BBox(**data["bbox"])
        mask = None
        polygons: tuple[Polygon, ...] = ()
        if "mask" in data:
            mask = BinaryMask(dims=GridDims(**data["mask"]["dims"]),
                              runs=tuple(data["mask"]["runs"]))
            polygons = tuple(polygon_from_dict(p) for p in data.get("polygons", []))
        return cls(bbox=box, mask=mask, polygons=polygons)


@dataclass
class Annotation:
    id: str
    folio_id: str
    provenance: str
    status: str = "draft"
    geometry: Geometry | None = None
    label_id: str | None = None
    created_by: str = "system"
    created_at: float = 0.0
    updated_at: float = 0.0
    promoted_from: str | None = None
    consumed: bool = False

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if self.provenance == "legacy_image_level":
            if self.geometry is not None:
                raise ValueError("image-level legacy annotations carry no geometry")
        elif self.provenance == "legacy_box":
            if self.geometry is None:
                raise ValueError("legacy box annotations need a bbox")
        else:
            if self.geometry is None or self.geometry.mask is None:
                raise ValueError(f"{self.provenance} annotations need a mask")

    @property
    def has_mask(self) -> bool:
        return self.geometry is not None and self.geometry.mask is not None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "folio_id": self.folio_id,
            "provenance": self.provenance,
            "status": self.status,
            "geometry": self.geometry.to_dict() if self.geometry else None,
            "label_id": self.label_id,
            "created_by": self.created_by,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "promoted_from": self.promoted_from,
            "consumed": self.consumed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Annotation":
        geometry = Geometry.from_dict(data["geometry"]) if data.get("geometry") else None
        return cls(id=data["id"], folio_id=data["folio_id"],
                   provenance=data["provenance"], status=data["status"],
                   geometry=geometry, label_id=data.get("label_id"),
                   created_by=data.get("created_by", "system"),
                   created_at=data.get("created_at", 0.0),
                   updated_at=data.get("updated_at", 0.0),
                   promoted_from=data.get("promoted_from"),
                   consumed=data.get("consumed", False))


# -- automask configuration ---------------------------------------------------

@dataclass(frozen=True)
class AutomaskConfig:
    """Filter thresholds for whole-image proposal generation."""

    min_quality: float = 0.7
    min_area: int = 100
    nms_iou: float = 0.7
    max_proposals: int = 500

    def __post_init__(self):
        if not 0.0 <= self.min_quality <= 1.0:
            raise ValueError("min_quality outside [0, 1]")
        if self.min_area < 0:
            raise ValueError("min_area must be >= 0")
        if not 0.0 <= self.nms_iou <= 1.0:
            raise ValueError("nms_iou outside [0, 1]")
        if self.max_proposals < 1:
            raise ValueError("max_proposals must be >= 1")

    def to_dict(self) -> dict:
        return {"min_quality": self.min_quality, "min_area": self.min_area,
                "nms_iou": self.nms_iou, "max_proposals": self.max_proposals}

    @classmethod
    def from_dict(cls, data: dict) -> "AutomaskConfig":
        return cls(**data)


# -- events and the project container ----------------------------------------

@dataclass(frozen=True)
class Event:
    seq: int
    ts: float
    actor: str
    action: str
    payload: dict

    def to_dict(self) -> dict:
        return {"seq": self.seq, "ts": self.ts, "actor": self.actor,
                "action": self.action, "payload": self.payload}

    @classmethod
    def from_dict(cls, data: dict) -> "Event":
        return cls(seq=data["seq"], ts=data["ts"], actor=data["actor"],
                   action=data["action"], payload=data["payload"])


@dataclass
class Project:
    project_id: str
    format_version: str = FORMAT_VERSION
    folios: dict[str, Folio] = field(default_factory=dict)
    labels: dict[str, Label] = field(default_factory=dict)
    rules: list[ConceptRule] = field(default_factory=list)
    annotations: dict[str, Annotation] = field(default_factory=dict)
    events: list[Event] = field(default_factory=list)
    automask_config: AutomaskConfig = field(default_factory=AutomaskConfig)
    annotation_seq: int = 0

    def folio(self, folio_id: str) -> Folio:
        try:
            return self.folios[folio_id]
        except KeyError:
            raise UnknownEntity(f"unknown folio {folio_id!r}") from None

    def label(self, label_id: str) -> Label:
        try:
            return self.labels[label_id]
        except KeyError:
            raise UnknownEntity(f"unknown label {label_id!r}") from None

    def annotation(self, annotation_id: str) -> Annotation:
        try:
            return self.annotations[annotation_id]
        except KeyError:
            raise UnknownEntity(f"unknown annotation {annotation_id!r}") from None

    def annotations_for_folio(self, folio_id: str) -> list[Annotation]:
        return [a for a in self.annotations.values() if a.folio_id == folio_id]

    def promotions_of(self, source_id: str) -> list[Annotation]:
        """Instances promoted from a legacy annotation (reverse link)."""
        return [a for a in self.annotations.values() if a.promoted_from == source_id]

    def check_integrity(self) -> None:
        """Raise IntegrityError unless all references resolve."""
        for ann in self.annotations.values():
            if ann.folio_id not in self.folios:
                raise IntegrityError(
                    f"annotation {ann.id} references missing folio {ann.folio_id!r}")
            if ann.label_id is not None and ann.label_id not in self.labels:
                raise IntegrityError(
                    f"annotation {ann.id} references missing label {ann.label_id!r}")
        for label in self.labels.values():
            if label.parent is not None and label.parent not in self.labels:
                raise IntegrityError(
                    f"label {label.id} references missing parent {label.parent!r}")
        self._check_parent_cycles()
        for rule in self.rules:
            for required_label, _ in rule.required:
                if required_label not in self.labels:
                    raise IntegrityError(
                        f"rule for {rule.concept!r} requires missing label "
                        f"{required_label!r}")

    def _check_parent_cycles(self) -> None:
        for start in self.labels:
            seen = set()
            current: str | None = start
            while current is not None:
                if current in seen:
                    raise IntegrityError(f"label parent cycle through {start!r}")
                seen.add(current)
                current = self.labels[current].parent if current in self.labels else None

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "project_id": self.project_id,
            "automask_config": self.automask_config.to_dict(),
            "folios": [self.folios[k].to_dict() for k in sorted(self.folios)],
            "labels": [self.labels[k].to_dict() for k in sorted(self.labels)],
            "rules": [r.to_dict() for r in self.rules],
            "annotations": [self.annotations[k].to_dict()
                            for k in sorted(self.annotations)],
            "annotation_seq": self.annotation_seq,
            "events": [e.to_dict() for e in self.events],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Project":
        version = data.get("format_version")
        if version != FORMAT_VERSION:
            raise VersionError(
                f"unsupported project format_version {version!r} "
                f"(this build reads {FORMAT_VERSION!r})")
        project = cls(
            project_id=data["project_id"],
            format_version=version,
            automask_config=AutomaskConfig.from_dict(data.get("automask_config", {})),
            annotation_seq=data.get("annotation_seq", 0),
        )
        for item in data.get("folios", []):
            folio = Folio.from_dict(item)
            project.folios[folio.id] = folio
        for item in data.get("labels", []):
            label = Label.from_dict(item)
            project.labels[label.id] = label
        project.rules = [ConceptRule.from_dict(item) for item in data.get("rules", [])]
        for item in data.get("annotations", []):
            ann = Annotation.from_dict(item)
            project.annotations[ann.id] = ann
        project.events = [Event.from_dict(item) for item in data.get("events", [])]
        project.check_integrity()
        return project
