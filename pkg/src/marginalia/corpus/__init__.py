"""Legacy-metadata corpus: project model, event-sourced store, vocabulary,
imports, persistence, and COCO export."""

from .export import EXPORT_MODES, coco_json, export_coco, project_stats
from .images import CachedImage, ImageCache
from .ingest import (
    BoxRecord,
    ImportReport,
    TagRecord,
    import_boxes,
    import_image_tags,
    load_record_file,
    parse_records,
)
from .model import (
    Annotation,
    AutomaskConfig,
    ConceptRule,
    Event,
    FORMAT_VERSION,
    Folio,
    Geometry,
    IllegalTransition,
    IntegrityError,
    Label,
    LEGAL_TRANSITIONS,
    PROVENANCES,
    Project,
    ProjectError,
    STATUSES,
    UnknownEntity,
    VersionError,
    cached_polygons,
)
from .persist import load_project, project_to_json, save_project
from .store import ProjectStore
from .vocab import (
    RESOLVE_MODES,
    STANDARD_LABELS,
    STANDARD_RULES,
    find_label,
    infer_concepts,
    mint_label_id,
    resolve_label,
    seed_rules,
    seed_vocabulary,
)

__all__ = [
    "Annotation",
    "AutomaskConfig",
    "BoxRecord",
    "CachedImage",
    "ConceptRule",
    "EXPORT_MODES",
    "Event",
    "FORMAT_VERSION",
    "Folio",
    "Geometry",
    "IllegalTransition",
    "ImageCache",
    "ImportReport",
    "IntegrityError",
    "LEGAL_TRANSITIONS",
    "Label",
    "PROVENANCES",
    "Project",
    "ProjectError",
    "ProjectStore",
    "RESOLVE_MODES",
    "STANDARD_LABELS",
    "STANDARD_RULES",
    "STATUSES",
    "TagRecord",
    "UnknownEntity",
    "VersionError",
    "cached_polygons",
    "coco_json",
    "export_coco",
    "find_label",
    "import_boxes",
    "import_image_tags",
    "infer_concepts",
    "load_project",
    "load_record_file",
    "mint_label_id",
    "parse_records",
    "project_stats",
    "project_to_json",
    "resolve_label",
    "save_project",
    "seed_rules",
    "seed_vocabulary",
]
