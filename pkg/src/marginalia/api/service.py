"""HTTP service wiring the corpus, pipeline, provider, and suggestion
modules together for the browser UI and remote scripts.

Projects are JSON files under a root directory, loaded at startup and saved
after every mutation, so killing the process loses nothing. Mutations go
through each project's single-writer store lock; the event log stays
linear under concurrent clients. Segmentation stays stateless: prompts go
in, proposals come out, and only an explicit annotation-create call turns a
proposal into a draft. Long-running automask generation runs as background
jobs the client polls.

Every error response carries one {code, message, details?} object.
"""

from __future__ import annotations

import threading
import uuid
from contextlib import asynccontextmanager
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from ..corpus import (
    AutomaskConfig,
    Folio,
    Geometry,
    IllegalTransition,
    ImageCache,
    IntegrityError,
    Label,
    ProjectError,
    ProjectStore,
    UnknownEntity,
    VersionError,
    coco_json,
    export_coco,
    infer_concepts,
    load_project,
    mint_label_id,
    project_stats,
    save_project,
)
from ..geometry import (
    BBox,
    BinaryMask,
    GridDims,
    Proposal,
    assign_drop,
    consumed_fraction,
)
from ..pipeline import generate_automask, ground_annotations, validate
from ..provider.base import (
    Capability,
    CapabilityMissing,
    ProviderError,
    PromptSet,
    PointPrompt,
    SegmentationProvider,
)
from ..provider.mock import MockProvider
from ..provider.remote import RemoteProvider
from ..suggest import SegmentIndex, Suggestion
from .config import ServiceConfig

_STATUS_BY_CODE = {
    "capability_missing": 501,
    "malformed_prompt": 422,
    "timeout": 504,
    "provider_unavailable": 502,
}


class Job:
    def __init__(self, job_id: str):
        self.id = job_id
        self.status = "queued"
        self.result: dict | None = None
        self.error: dict | None = None

    def to_dict(self) -> dict:
        data = {"id": self.id, "status": self.status}
        if self.result is not None:
            data["result"] = self.result
        if self.error is not None:
            data["error"] = self.error
        return data


class JobRegistry:
    """In-memory background jobs, one thread each; ids are per-process."""

    def __init__(self):
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()

    def submit(self, fn) -> Job:
        job = Job(uuid.uuid4().hex[:12])
        with self._lock:
            self._jobs[job.id] = job

        def run():
            job.status = "running"
            try:
                job.result = fn()
                job.status = "done"
            except ProviderError as exc:
                job.error = {"code": exc.code, "message": str(exc)}
                job.status = "error"
            except Exception as exc:  # noqa: BLE001 - job boundary
                job.error = {"code": "internal", "message": str(exc)}
                job.status = "error"

        threading.Thread(target=run, daemon=True).start()
        return job

    def get(self, job_id: str) -> Job:
        with self._lock:
            job = self._jobs.get(job_id)
        if job is None:
            raise UnknownEntity(f"unknown job {job_id!r}")
        return job


class AppState:
    def __init__(self, config: ServiceConfig, provider: SegmentationProvider | None):
        self.config = config
        config.project_root.mkdir(parents=True, exist_ok=True)
        self.cache = ImageCache(config.cache_dir)
        if provider is not None:
            self.provider = provider
        elif config.provider_url:
            self.provider = RemoteProvider(config.provider_url,
                                           timeout=config.provider_timeout)
        else:
            self.provider = MockProvider()
        self.stores: dict[str, ProjectStore] = {}
        self.indexes: dict[str, SegmentIndex] = {}
        self.jobs = JobRegistry()
        for path in sorted(config.project_root.glob("*.json")):
            store = load_project(path)
            self.stores[store.project.project_id] = store

    # -- project plumbing -----------------------------------------------------

    def project_path(self, project_id: str) -> Path:
        return self.config.project_root / f"{project_id}.json"

    def store(self, project_id: str) -> ProjectStore:
        try:
            return self.stores[project_id]
        except KeyError:
            raise UnknownEntity(f"unknown project {project_id!r}") from None

    def save(self, project_id: str) -> None:
        save_project(self.stores[project_id], self.project_path(project_id))

    def save_all(self) -> None:
        for project_id in self.stores:
            self.save(project_id)

    def resolve_folio(self, folio_id: str) -> tuple[str, Folio]:
        """Folio paths carry no project; search projects in sorted order."""
        for project_id in sorted(self.stores):
            folio = self.stores[project_id].project.folios.get(folio_id)
            if folio is not None:
                return project_id, folio
        raise UnknownEntity(f"unknown folio {folio_id!r}")

    def resolve_annotation(self, annotation_id: str) -> str:
        for project_id in sorted(self.stores):
            if annotation_id in self.stores[project_id].project.annotations:
                return project_id
        raise UnknownEntity(f"unknown annotation {annotation_id!r}")

    def folio_image(self, folio: Folio) -> np.ndarray:
        return self.cache.load_array(self.cache.fetch(folio.image_uri).key)

    def image_loader(self, project_id: str):
        def load(folio_id: str) -> np.ndarray:
            return self.folio_image(self.store(project_id).project.folio(folio_id))
        return load

    # -- suggestion index lifecycle -------------------------------------------

    def index(self, project_id: str) -> SegmentIndex:
        if project_id not in self.indexes:
            self.indexes[project_id] = SegmentIndex.build(
                self.store(project_id), self.provider, self.image_loader(project_id))
        return self.indexes[project_id]

    def touch_index(self, project_id: str, annotation_id: str) -> None:
        index = self.indexes.get(project_id)
        if index is not None:
            index.refresh(self.store(project_id), self.provider,
                          self.image_loader(project_id), annotation_id)

    def require_capability(self, capability: Capability) -> None:
        descriptor = self.provider.describe()
        if capability not in descriptor.capabilities:
            raise CapabilityMissing(
                f"provider {descriptor.name!r} does not advertise "
                f"{capability.name.lower()}")


# -- request bodies -----------------------------------------------------------

class ProjectBody(BaseModel):
    project_id: str
    seed_vocabulary: bool = False


class FolioBody(BaseModel):
    image_uri: str
    id: str | None = None
    shelfmark: str = ""
    folio_ref: str = ""


class PointBody(BaseModel):
    x: float
    y: float
    polarity: str


class BoxBody(BaseModel):
    x_min: int
    y_min: int
    x_max: int
    y_max: int


class PromptsBody(BaseModel):
    points: list[PointBody] = []
    box: BoxBody | None = None


class SegmentBody(BaseModel):
    prompts: PromptsBody


class MaskBody(BaseModel):
    runs: list[int]
    dims: dict


class AutomaskBody(BaseModel):
    config: dict | None = None


class GroundBody(BaseModel):
    phrases: list[str]
    actor: str = "grounding"


class AnnotationBody(BaseModel):
    folio_id: str
    mask: MaskBody
    label_id: str | None = None
    provenance: str = "manual"
    actor: str = "ui"


class AnnotationPatch(BaseModel):
    label_id: str | None = None
    clear_label: bool = False
    mask: MaskBody | None = None
    actor: str = "ui"


class ValidateBody(BaseModel):
    decision: str
    actor: str
    mask: MaskBody | None = None


class PromoteBody(BaseModel):
    mask: MaskBody
    actor: str = "ui"


class DropBody(BaseModel):
    box: BoxBody
    label_id: str
    actor: str = "ui"


class LabelBody(BaseModel):
    lemma: str
    id: str | None = None
    gloss: str | None = None
    language: str = "fr"
    aliases: list[str] = []
    parent: str | None = None


class SuggestBody(BaseModel):
    seed_ids: list[str]
    threshold: float


class SuggestionDecisionBody(BaseModel):
    project_id: str
    suggestion: dict
    actor: str = "reviewer"


# -- payload helpers ----------------------------------------------------------

def _parse_mask(body: MaskBody) -> BinaryMask:
    return BinaryMask(dims=GridDims(**body.dims), runs=tuple(body.runs))


def _parse_box(body: BoxBody) -> BBox:
    return BBox(body.x_min, body.y_min, body.x_max, body.y_max)


def _proposal_payload(proposal: Proposal) -> dict:
    geometry = Geometry.from_mask(proposal.mask)
    payload = geometry.to_dict()
    payload["quality"] = proposal.quality
    payload["source"] = proposal.source
    payload["area"] = proposal.mask.area
    return payload


def _error_response(status: int, code: str, message: str,
                    details=None) -> JSONResponse:
    body = {"code": code, "message": message}
    if details is not None:
        body["details"] = details
    return JSONResponse(status_code=status, content=body)


# -- the application ----------------------------------------------------------

def create_app(config: ServiceConfig | None = None,
               provider: SegmentationProvider | None = None) -> FastAPI:
    if config is None:
        config = ServiceConfig()
    state = AppState(config, provider)

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        yield
        state.save_all()

    app = FastAPI(title="marginalia", version="0.1.0", lifespan=lifespan)
    app.state.marginalia = state

    @app.exception_handler(ProviderError)
    def provider_error(request: Request, exc: ProviderError):
        return _error_response(_STATUS_BY_CODE.get(exc.code, 502), exc.code, str(exc))

    @app.exception_handler(UnknownEntity)
    def unknown_entity(request: Request, exc: UnknownEntity):
        return _error_response(404, "not_found", str(exc))

    @app.exception_handler(IllegalTransition)
    def illegal_transition(request: Request, exc: IllegalTransition):
        return _error_response(409, "illegal_transition", str(exc))

    @app.exception_handler(VersionError)
    def version_error(request: Request, exc: VersionError):
        return _error_response(409, "format_version", str(exc))

    @app.exception_handler(IntegrityError)
    def integrity_error(request: Request, exc: IntegrityError):
        return _error_response(409, "integrity", str(exc))

    @app.exception_handler(ProjectError)
    def project_error(request: Request, exc: ProjectError):
        return _error_response(409, "conflict", str(exc))

    @app.exception_handler(ValueError)
    def value_error(request: Request, exc: ValueError):
        return _error_response(422, "invalid_request", str(exc))

    @app.exception_handler(RequestValidationError)
    def validation_error(request: Request, exc: RequestValidationError):
        return _error_response(422, "invalid_request", "request body failed validation",
                               details=exc.errors())

    # -- health and projects --------------------------------------------------

    @app.get("/v1/health")
    def health():
        try:
            descriptor = state.provider.describe()
            provider_info = {"name": descriptor.name,
                             "capabilities": descriptor.capability_names()}
        except ProviderError as exc:
            provider_info = {"error": {"code": exc.code, "message": str(exc)}}
        return {"status": "ok", "provider": provider_info}

    @app.get("/v1/projects")
    def list_projects():
        return {"projects": sorted(state.stores)}

    @app.post("/v1/projects", status_code=201)
    def create_project(body: ProjectBody):
        if body.project_id in state.stores or state.project_path(body.project_id).exists():
            raise ProjectError(f"project {body.project_id!r} already exists")
        if not body.project_id or "/" in body.project_id:
            raise ValueError("project_id must be a non-empty slug")
        store = ProjectStore.create(body.project_id)
        if body.seed_vocabulary:
            from ..corpus.vocab import seed_rules, seed_vocabulary
            seed_vocabulary(store)
            seed_rules(store)
        state.stores[body.project_id] = store
        state.save(body.project_id)
        return {"project_id": body.project_id}

    # -- folios ---------------------------------------------------------------

    @app.get("/v1/projects/{project_id}/folios")
    def list_folios(project_id: str):
        project = state.store(project_id).project
        return {"folios": [project.folios[fid].to_dict()
                           for fid in sorted(project.folios)]}

    @app.post("/v1/projects/{project_id}/folios", status_code=201)
    def register_folio(project_id: str, body: FolioBody):
        store = state.store(project_id)
        cached = state.cache.fetch(body.image_uri)
        folio_id = body.id or _mint_folio_id(store, body.image_uri)
        folio = Folio(id=folio_id, shelfmark=body.shelfmark,
                      folio_ref=body.folio_ref, image_uri=body.image_uri,
                      dims=cached.dims)
        store.add_folio(folio)
        state.save(project_id)
        return folio.to_dict()

    @app.get("/v1/folios/{folio_id}/image")
    def folio_image(folio_id: str):
        _, folio = state.resolve_folio(folio_id)
        cached = state.cache.fetch(folio.image_uri)
        return Response(content=state.cache.read_bytes(cached.key),
                        media_type=state.cache.media_type(cached.key))

    # -- stateless segmentation ----------------------------------------------

    @app.post("/v1/folios/{folio_id}/segment")
    def segment(folio_id: str, body: SegmentBody):
        state.require_capability(Capability.PROMPT_SEGMENTATION)
        _, folio = state.resolve_folio(folio_id)
        image = state.folio_image(folio)
        points = tuple(PointPrompt(p.x, p.y, p.polarity)
                       for p in body.prompts.points)
        box = _parse_box(body.prompts.box) if body.prompts.box else None
        prompts = PromptSet(points=points, box=box)
        prompts.check_bounds(folio.dims.width, folio.dims.height)
        proposals = state.provider.segment_with_prompts(image, prompts)
        return {"proposals": [_proposal_payload(p) for p in proposals]}

    @app.post("/v1/folios/{folio_id}/automask", status_code=202)
    def automask(folio_id: str, body: AutomaskBody):
        state.require_capability(Capability.AUTO_SEGMENTATION)
        project_id, folio = state.resolve_folio(folio_id)
        image = state.folio_image(folio)
        base = state.store(project_id).project.automask_config
        mask_config = (AutomaskConfig.from_dict({**base.to_dict(), **body.config})
                       if body.config else base)

        def run():
            proposals = generate_automask(image, state.provider, mask_config)
            return {"folio_id": folio_id,
                    "config": mask_config.to_dict(),
                    "proposals": [_proposal_payload(p) for p in proposals]}

        job = state.jobs.submit(run)
        return {"job_id": job.id}

    @app.get("/v1/jobs/{job_id}")
    def job_status(job_id: str):
        return state.jobs.get(job_id).to_dict()

    @app.post("/v1/folios/{folio_id}/ground", status_code=201)
    def ground(folio_id: str, body: GroundBody):
        state.require_capability(Capability.TEXT_DETECTION)
        state.require_capability(Capability.PROMPT_SEGMENTATION)
        project_id, folio = state.resolve_folio(folio_id)
        image = state.folio_image(folio)
        store = state.store(project_id)
        result = ground_annotations(store, folio_id, image, body.phrases,
                                    state.provider, actor=body.actor)
        for ann in result.created:
            state.touch_index(project_id, ann.id)
        state.save(project_id)
        return result.to_dict()

    # -- annotations ----------------------------------------------------------

    @app.get("/v1/projects/{project_id}/annotations")
    def list_annotations(project_id: str, folio: str | None = None,
                         status: str | None = None):
        project = state.store(project_id).project
        payloads = []
        for ann_id in sorted(project.annotations):
            ann = project.annotations[ann_id]
            if folio is not None and ann.folio_id != folio:
                continue
            if status is not None and ann.status != status:
                continue
            payloads.append(ann.to_dict())
        return {"annotations": payloads}

    @app.post("/v1/projects/{project_id}/annotations", status_code=201)
    def create_annotation(project_id: str, body: AnnotationBody):
        store = state.store(project_id)
        geometry = Geometry.from_mask(_parse_mask(body.mask))
        ann = store.create_annotation(body.folio_id, body.provenance,
                                      geometry=geometry, label_id=body.label_id,
                                      actor=body.actor)
        state.touch_index(project_id, ann.id)
        state.save(project_id)
        return ann.to_dict()

    @app.get("/v1/projects/{project_id}/annotations/{annotation_id}")
    def get_annotation(project_id: str, annotation_id: str):
        return state.store(project_id).project.annotation(annotation_id).to_dict()

    @app.patch("/v1/projects/{project_id}/annotations/{annotation_id}")
    def patch_annotation(project_id: str, annotation_id: str, body: AnnotationPatch):
        store = state.store(project_id)
        if body.mask is None and body.label_id is None and not body.clear_label:
            raise ValueError("nothing to change: give mask, label_id, or clear_label")
        if body.mask is not None:
            geometry = Geometry.from_mask(_parse_mask(body.mask))
            store.edit_geometry(annotation_id, geometry, actor=body.actor)
        if body.label_id is not None or body.clear_label:
            store.set_label(annotation_id, None if body.clear_label else body.label_id,
                            actor=body.actor)
        state.touch_index(project_id, annotation_id)
        state.save(project_id)
        return store.project.annotation(annotation_id).to_dict()

    @app.delete("/v1/projects/{project_id}/annotations/{annotation_id}", status_code=204)
    def delete_annotation(project_id: str, annotation_id: str, actor: str = "ui"):
        store = state.store(project_id)
        store.delete_annotation(annotation_id, actor=actor)
        state.touch_index(project_id, annotation_id)
        state.save(project_id)
        return Response(status_code=204)

    @app.post("/v1/annotations/{annotation_id}/validate")
    def validate_annotation(annotation_id: str, body: ValidateBody):
        project_id = state.resolve_annotation(annotation_id)
        store = state.store(project_id)
        mask = _parse_mask(body.mask) if body.mask is not None else None
        ann = validate(store, annotation_id, body.decision, body.actor, geometry=mask)
        state.touch_index(project_id, annotation_id)
        state.save(project_id)
        return ann.to_dict()

    @app.post("/v1/annotations/{annotation_id}/promote", status_code=201)
    def promote_annotation(annotation_id: str, body: PromoteBody):
        project_id = state.resolve_annotation(annotation_id)
        store = state.store(project_id)
        geometry = Geometry.from_mask(_parse_mask(body.mask))
        ann = store.promote(annotation_id, geometry, actor=body.actor)
        state.touch_index(project_id, ann.id)
        state.save(project_id)
        return ann.to_dict()

    @app.post("/v1/folios/{folio_id}/assign_drop")
    def assign_drop_route(folio_id: str, body: DropBody):
        project_id, _ = state.resolve_folio(folio_id)
        store = state.store(project_id)
        store.project.label(body.label_id)
        candidates = [(ann.id, ann.geometry.mask)
                      for ann in store.project.annotations_for_folio(folio_id)
                      if ann.has_mask]
        drop = _parse_box(body.box)
        chosen = assign_drop(drop, candidates)
        fractions = {ann_id: consumed_fraction(mask, drop)
                     for ann_id, mask in candidates}
        if chosen is not None:
            store.set_label(chosen, body.label_id, actor=body.actor)
            state.touch_index(project_id, chosen)
            state.save(project_id)
        return {"annotation_id": chosen, "fractions": fractions}

    # -- labels and concepts --------------------------------------------------

    @app.get("/v1/projects/{project_id}/labels")
    def list_labels(project_id: str):
        project = state.store(project_id).project
        return {"labels": [project.labels[lid].to_dict()
                           for lid in sorted(project.labels)]}

    @app.post("/v1/projects/{project_id}/labels", status_code=201)
    def create_label(project_id: str, body: LabelBody):
        store = state.store(project_id)
        label_id = body.id or mint_label_id(store.project, body.lemma)
        label = Label(id=label_id, lemma=body.lemma, gloss=body.gloss,
                      language=body.language, aliases=tuple(body.aliases),
                      parent=body.parent)
        store.add_label(label)
        state.save(project_id)
        return label.to_dict()

    @app.get("/v1/projects/{project_id}/concepts/{folio_id}")
    def concepts(project_id: str, folio_id: str):
        project = state.store(project_id).project
        return {"suggestions": infer_concepts(project, folio_id)}

    # -- batch label suggestions ----------------------------------------------

    @app.post("/v1/projects/{project_id}/suggest")
    def suggest(project_id: str, body: SuggestBody):
        store = state.store(project_id)
        index = state.index(project_id)
        suggestions = index.propose_batch(store, body.seed_ids, body.threshold)
        return {"suggestions": [s.to_dict() for s in suggestions]}

    @app.get("/v1/projects/{project_id}/annotations/{annotation_id}/neighbors")
    def neighbors(project_id: str, annotation_id: str, k: int = 5):
        index = state.index(project_id)
        pairs = index.knn_unlabeled(annotation_id, k)
        return {"neighbors": [{"annotation_id": ann_id, "similarity": sim}
                              for ann_id, sim in pairs]}

    @app.post("/v1/suggestions/accept")
    def accept_suggestion(body: SuggestionDecisionBody):
        store = state.store(body.project_id)
        suggestion = Suggestion.from_dict(body.suggestion)
        index = state.index(body.project_id)
        ann = index.accept(store, suggestion, actor=body.actor)
        state.save(body.project_id)
        return ann.to_dict()

    @app.post("/v1/suggestions/reject")
    def reject_suggestion(body: SuggestionDecisionBody):
        store = state.store(body.project_id)
        suggestion = Suggestion.from_dict(body.suggestion)
        index = state.index(body.project_id)
        index.reject(store, suggestion, actor=body.actor)
        state.save(body.project_id)
        return {"rejected": suggestion.to_dict()}

    # -- export and stats -----------------------------------------------------

    @app.post("/v1/projects/{project_id}/export")
    def export(project_id: str, mode: str = "coco",
               include: str = "validated_only", report: bool = False):
        if mode != "coco":
            raise ValueError(f"unknown export mode {mode!r}")
        project = state.store(project_id).project
        document, export_report = export_coco(project, mode=include)
        if report:
            return {"document": document, "report": export_report}
        return Response(content=coco_json(document), media_type="application/json")

    @app.get("/v1/projects/{project_id}/stats")
    def stats(project_id: str):
        return project_stats(state.store(project_id).project)

    return app


def _mint_folio_id(store: ProjectStore, image_uri: str) -> str:
    base = Path(image_uri).stem or "folio"
    if base not in store.project.folios:
        return base
    n = 2
    while f"{base}-{n}" in store.project.folios:
        n += 1
    return f"{base}-{n}"
