"""Event-sourced project store.

Every mutation is expressed as an event, applied to the in-memory project by
a single reducer, then appended to the project's log. Replaying the log from
an empty project reconstructs the same state, so the log is the authority and
the materialized project is a cache. Minted ids and timestamps are recorded
inside event payloads, which keeps replay deterministic.

Mutations are serialized through a re-entrant lock (single writer); reads of
the materialized project are plain attribute access.
"""

from __future__ import annotations

import threading
import time
from typing import Callable, Iterable, Sequence

from ..textfold import fold
from .model import (
    Annotation,
    AutomaskConfig,
    ConceptRule,
    Event,
    Folio,
    Geometry,
    IllegalTransition,
    IntegrityError,
    Label,
    LEGAL_TRANSITIONS,
    Project,
    ProjectError,
    UnknownEntity,
)


class ProjectStore:
    def __init__(self, project: Project, clock: Callable[[], float] = time.time):
        self.project = project
        self._clock = clock
        self._lock = threading.RLock()

    @classmethod
    def create(cls, project_id: str,
               clock: Callable[[], float] = time.time) -> "ProjectStore":
        store = cls(Project(project_id=project_id), clock=clock)
        store._commit("project_created", "system", {"project_id": project_id})
        return store

    @classmethod
    def replay(cls, events: Iterable[Event],
               clock: Callable[[], float] = time.time) -> "ProjectStore":
        """Rebuild a project purely from its event log."""
        events = list(events)
        if not events or events[0].action != "project_created":
            raise ProjectError("event log must start with project_created")
        project = Project(project_id=events[0].payload["project_id"])
        for event in events:
            _apply(project, event)
            project.events.append(event)
        project.check_integrity()
        return cls(project, clock=clock)

    @property
    def lock(self) -> threading.RLock:
        return self._lock

    # -- internal commit path -------------------------------------------------

    def _commit(self, action: str, actor: str, payload: dict) -> Event:
        with self._lock:
            event = Event(seq=len(self.project.events) + 1, ts=self._clock(),
                          actor=actor, action=action, payload=payload)
            _apply(self.project, event)
            self.project.events.append(event)
            return event

    def _next_annotation_id(self) -> tuple[int, str]:
        seq = self.project.annotation_seq + 1
        return seq, f"a{seq:04d}"

    # -- folios, labels, rules, config ---------------------------------------

    def add_folio(self, folio: Folio, actor: str = "system") -> Folio:
        with self._lock:
            if folio.id in self.project.folios:
                raise ProjectError(f"folio {folio.id!r} already exists")
            self._commit("folio_added", actor, {"folio": folio.to_dict()})
            return self.project.folios[folio.id]

    def add_label(self, label: Label, actor: str = "system") -> Label:
        with self._lock:
            self._check_label_invariants(label)
            self._commit("label_added", actor, {"label": label.to_dict()})
            return self.project.labels[label.id]

    def _check_label_invariants(self, label: Label) -> None:
        if label.id in self.project.labels:
            raise ProjectError(f"label id {label.id!r} already exists")
        if label.parent is not None and label.parent not in self.project.labels:
            raise UnknownEntity(f"unknown parent label {label.parent!r}")
        names = {fold(label.lemma)} | {fold(a) for a in label.aliases}
        for other in self.project.labels.values():
            other_names = {fold(other.lemma)} | {fold(a) for a in other.aliases}
            shared = names & other_names
            if shared:
                raise IntegrityError(
                    f"label {label.id!r} collides with {other.id!r} on "
                    f"{sorted(shared)}")

    def add_rule(self, rule: ConceptRule, actor: str = "system") -> ConceptRule:
        with self._lock:
            for required_label, _ in rule.required:
                if required_label not in self.project.labels:
                    raise UnknownEntity(f"unknown label {required_label!r} in rule")
            self._commit("rule_added", actor, {"rule": rule.to_dict()})
            return self.project.rules[-1]

    def set_automask_config(self, config: AutomaskConfig,
                            actor: str = "system") -> AutomaskConfig:
        self._commit("automask_config_set", actor, {"config": config.to_dict()})
        return self.project.automask_config

    # -- annotation lifecycle -------------------------------------------------

    def create_annotation(self, folio_id: str, provenance: str,
                          geometry: Geometry | None = None,
                          label_id: str | None = None,
                          actor: str = "system",
                          status: str = "draft",
                          promoted_from: str | None = None) -> Annotation:
        with self._lock:
            folio = self.project.folio(folio_id)
            if label_id is not None:
                self.project.label(label_id)
            if geometry is not None and geometry.mask is not None:
                if geometry.mask.dims != folio.dims:
                    raise ProjectError(
                        f"mask dims {geometry.mask.dims} do not match folio "
                        f"dims {folio.dims}")
            seq, annotation_id = self._next_annotation_id()
            now = self._clock()
            ann = Annotation(id=annotation_id, folio_id=folio_id,
                             provenance=provenance, status=status,
                             geometry=geometry, label_id=label_id,
                             created_by=actor, created_at=now, updated_at=now,
                             promoted_from=promoted_from)
            self._commit("annotation_created", actor,
                         {"seq": seq, "annotation": ann.to_dict()})
            return self.project.annotations[annotation_id]

    def promote(self, source_id: str, geometry: Geometry,
                actor: str = "system") -> Annotation:
        """Turn a legacy annotation into a draft instance annotation.

        The source keeps its record but is marked consumed; the new draft
        carries a promoted_from link back to it.
        """
        with self._lock:
            source = self.project.annotation(source_id)
            if source.provenance not in ("legacy_image_level", "legacy_box"):
                raise ProjectError(
                    f"annotation {source_id} has provenance {source.provenance!r}, "
                    "only legacy annotations can be promoted")
            if source.consumed:
                raise ProjectError(f"annotation {source_id} was already promoted")
            if geometry.mask is None:
                raise ProjectError("promotion requires a mask")
            folio = self.project.folio(source.folio_id)
            if geometry.mask.dims != folio.dims:
                raise ProjectError("promotion mask dims do not match the folio")
            if source.provenance == "legacy_box":
                if not _boxes_intersect(geometry.bbox, source.geometry.bbox):
                    raise ProjectError(
                        "promotion mask does not touch the legacy box")
            seq, annotation_id = self._next_annotation_id()
            now = self._clock()
            ann = Annotation(id=annotation_id, folio_id=source.folio_id,
                             provenance="prompted", status="draft",
                             geometry=geometry, label_id=source.label_id,
                             created_by=actor, created_at=now, updated_at=now,
                             promoted_from=source_id)
            self._commit("annotation_promoted", actor,
                         {"seq": seq, "source_id": source_id,
                          "annotation": ann.to_dict()})
            return self.project.annotations[annotation_id]

    def transition(self, annotation_id: str, to_status: str,
                   actor: str = "system") -> Annotation:
        with self._lock:
            ann = self.project.annotation(annotation_id)
            if (ann.status, to_status) not in LEGAL_TRANSITIONS:
                raise IllegalTransition(
                    f"annotation {annotation_id} cannot move "
                    f"{ann.status} -> {to_status}")
            self._commit("annotation_status_changed", actor,
                         {"id": annotation_id, "from": ann.status,
                          "to": to_status})
            return self.project.annotations[annotation_id]

    def edit_geometry(self, annotation_id: str, geometry: Geometry,
                      actor: str = "system") -> Annotation:
        """Replace a draft's geometry; the event keeps before and after."""
        with self._lock:
            ann = self.project.annotation(annotation_id)
            if ann.status != "draft":
                raise IllegalTransition(
                    f"annotation {annotation_id} is {ann.status}; "
                    "only drafts can be edited")
            if ann.geometry is None or ann.geometry.mask is None:
                raise ProjectError("cannot edit geometry of a geometry-less "
                                   "annotation; promote it instead")
            if geometry.mask is None:
                raise ProjectError("edited geometry requires a mask")
            folio = self.project.folio(ann.folio_id)
            if geometry.mask.dims != folio.dims:
                raise ProjectError("edited mask dims do not match the folio")
            self._commit("annotation_edited", actor,
                         {"id": annotation_id,
                          "before": ann.geometry.to_dict(),
                          "after": geometry.to_dict()})
            return self.project.annotations[annotation_id]

    def set_label(self, annotation_id: str, label_id: str | None,
                  actor: str = "system") -> Annotation:
        with self._lock:
            ann = self.project.annotation(annotation_id)
            if label_id is not None:
                self.project.label(label_id)
            self._commit("annotation_label_set", actor,
                         {"id": annotation_id, "from": ann.label_id,
                          "to": label_id})
            return self.project.annotations[annotation_id]

    def delete_annotation(self, annotation_id: str, actor: str = "system") -> None:
        with self._lock:
            self.project.annotation(annotation_id)
            self._commit("annotation_deleted", actor, {"id": annotation_id})

    # -- suggestion audit trail ----------------------------------------------

    def accept_suggestion(self, target_id: str, label_id: str, seed_id: str,
                          similarity: float, actor: str = "system") -> Annotation:
        """Apply a batch-label suggestion: label the target, keep it a draft."""
        with self._lock:
            ann = self.project.annotation(target_id)
            self.project.label(label_id)
            self.project.annotation(seed_id)
            if ann.label_id is not None:
                raise ProjectError(f"annotation {target_id} is already labeled")
            self._commit("suggestion_accepted", actor,
                         {"target_id": target_id, "label_id": label_id,
                          "seed_id": seed_id, "similarity": similarity})
            return self.project.annotations[target_id]

    def reject_suggestion(self, target_id: str, label_id: str, seed_id: str,
                          similarity: float, actor: str = "system") -> None:
        with self._lock:
            self.project.annotation(target_id)
            self._commit("suggestion_rejected", actor,
                         {"target_id": target_id, "label_id": label_id,
                          "seed_id": seed_id, "similarity": similarity})


def _boxes_intersect(a, b) -> bool:
    return (a.x_min < b.x_max and b.x_min < a.x_max
            and a.y_min < b.y_max and b.y_min < a.y_max)


# -- the reducer --------------------------------------------------------------

def _apply(project: Project, event: Event) -> None:
    handler = _HANDLERS.get(event.action)
    if handler is None:
        raise ProjectError(f"unknown event action {event.action!r}")
    handler(project, event)


def _on_project_created(project: Project, event: Event) -> None:
    project.project_id = event.payload["project_id"]


def _on_folio_added(project: Project, event: Event) -> None:
    folio = Folio.from_dict(event.payload["folio"])
    project.folios[folio.id] = folio


def _on_label_added(project: Project, event: Event) -> None:
    label = Label.from_dict(event.payload["label"])
    project.labels[label.id] = label


def _on_rule_added(project: Project, event: Event) -> None:
    project.rules.append(ConceptRule.from_dict(event.payload["rule"]))


def _on_automask_config_set(project: Project, event: Event) -> None:
    project.automask_config = AutomaskConfig.from_dict(event.payload["config"])


def _on_annotation_created(project: Project, event: Event) -> None:
    ann = Annotation.from_dict(event.payload["annotation"])
    project.annotations[ann.id] = ann
    project.annotation_seq = event.payload["seq"]


def _on_annotation_promoted(project: Project, event: Event) -> None:
    ann = Annotation.from_dict(event.payload["annotation"])
    project.annotations[ann.id] = ann
    project.annotation_seq = event.payload["seq"]
    source = project.annotations[event.payload["source_id"]]
    source.consumed = True
    source.updated_at = event.ts


def _on_annotation_status_changed(project: Project, event: Event) -> None:
    ann = project.annotations[event.payload["id"]]
    ann.status = event.payload["to"]
    ann.updated_at = event.ts


def _on_annotation_edited(project: Project, event: Event) -> None:
    ann = project.annotations[event.payload["id"]]
    ann.geometry = Geometry.from_dict(event.payload["after"])
    ann.updated_at = event.ts


def _on_annotation_label_set(project: Project, event: Event) -> None:
    ann = project.annotations[event.payload["id"]]
    ann.label_id = event.payload["to"]
    ann.updated_at = event.ts


def _on_annotation_deleted(project: Project, event: Event) -> None:
    del project.annotations[event.payload["id"]]


def _on_suggestion_accepted(project: Project, event: Event) -> None:
    ann = project.annotations[event.payload["target_id"]]
    ann.label_id = event.payload["label_id"]
    ann.updated_at = event.ts


def _on_suggestion_rejected(project: Project, event: Event) -> None:
    pass  # audit-only: the decision is the record


_HANDLERS = {
    "project_created": _on_project_created,
    "folio_added": _on_folio_added,
    "label_added": _on_label_added,
    "rule_added": _on_rule_added,
    "automask_config_set": _on_automask_config_set,
    "annotation_created": _on_annotation_created,
    "annotation_promoted": _on_annotation_promoted,
    "annotation_status_changed": _on_annotation_status_changed,
    "annotation_edited": _on_annotation_edited,
    "annotation_label_set": _on_annotation_label_set,
    "annotation_deleted": _on_annotation_deleted,
    "suggestion_accepted": _on_suggestion_accepted,
    "suggestion_rejected": _on_suggestion_rejected,
}
