"""Label resolution against the controlled vocabulary.

Legacy records arrive with free-text terms in inconsistent casing and with
or without diacritics ("Aureole", "auréole"). Resolution folds both sides
and checks lemma, gloss, then aliases, so "ROCHER" and "rocher" land on the
same label. In create_or_match mode an unmatched term mints a new label,
which makes the operation idempotent: the second occurrence matches the
label the first one created.
"""

from __future__ import annotations

import re

from ..textfold import fold
from .model import Annotation, ConceptRule, Label, Project, UnknownEntity
from .store import ProjectStore

RESOLVE_MODES = ("match_only", "create_or_match")


def find_label(project: Project, text: str) -> Label | None:
    """Case- and diacritic-insensitive lookup; lemma beats gloss beats alias."""
    folded = fold(text)
    ids = sorted(project.labels)
    for label_id in ids:
        if fold(project.labels[label_id].lemma) == folded:
            return project.labels[label_id]
    for label_id in ids:
        label = project.labels[label_id]
        if label.gloss is not None and fold(label.gloss) == folded:
            return label
    for label_id in ids:
        if folded in {fold(a) for a in project.labels[label_id].aliases}:
            return project.labels[label_id]
    return None


def resolve_label(store: ProjectStore, text: str,
                  mode: str = "match_only", actor: str = "system") -> Label:
    if mode not in RESOLVE_MODES:
        raise ValueError(f"unknown resolve mode {mode!r}")
    if not text.strip():
        raise ValueError("label text is empty")
    with store.lock:
        found = find_label(store.project, text)
        if found is not None:
            return found
        if mode == "match_only":
            raise UnknownEntity(f"no label matches {text!r}")
        label = Label(id=mint_label_id(store.project, text), lemma=text.strip())
        return store.add_label(label, actor=actor)


def mint_label_id(project: Project, text: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", fold(text)).strip("-") or "label"
    if slug not in project.labels:
        return slug
    n = 2
    while f"{slug}-{n}" in project.labels:
        n += 1
    return f"{slug}-{n}"


# -- concept inference --------------------------------------------------------

def infer_concepts(project: Project, folio_id: str,
                   rules: list[ConceptRule] | None = None) -> list[dict]:
    """Suggest folio-level concepts from validated instance annotations.

    A rule fires when the folio holds at least the required count of
    validated, localized annotations for every required label. Suggestions
    come back in rule order with the supporting annotation ids; nothing is
    written to the project.
    """
    project.folio(folio_id)
    if rules is None:
        rules = project.rules
    counts: dict[str, list[Annotation]] = {}
    for ann in project.annotations_for_folio(folio_id):
        if ann.status == "validated" and ann.geometry is not None and ann.label_id:
            counts.setdefault(ann.label_id, []).append(ann)
    suggestions = []
    for rule in rules:
        if all(len(counts.get(label, ())) >= need for label, need in rule.required):
            supporting = sorted(
                ann.id for label, _ in rule.required for ann in counts.get(label, ()))
            suggestions.append({"concept": rule.concept, "supporting": supporting})
    return suggestions


# -- starter vocabulary -------------------------------------------------------

def seed_vocabulary(store: ProjectStore, actor: str = "system") -> list[Label]:
    """Install the stock iconographic vocabulary used by the demo corpus."""
    created = []
    for label in STANDARD_LABELS:
        if label.id not in store.project.labels:
            created.append(store.add_label(label, actor=actor))
    return created


STANDARD_LABELS = (
    Label(id="figure", lemma="figure", gloss="figure"),
    Label(id="animal", lemma="animal", gloss="animal"),
    Label(id="objet", lemma="objet", gloss="object"),
    Label(id="decor", lemma="décor", gloss="scenery"),
    Label(id="moine", lemma="moine", gloss="monk", parent="figure"),
    Label(id="dragon", lemma="dragon", gloss="dragon", parent="animal"),
    Label(id="faucon", lemma="faucon", gloss="falcon", parent="animal"),
    Label(id="renard", lemma="renard", gloss="fox", parent="animal"),
    Label(id="crosse", lemma="crosse", gloss="crozier", parent="objet"),
    Label(id="mitre", lemma="mitre", gloss="miter", parent="objet"),
    Label(id="codex", lemma="codex", gloss="book", parent="objet"),
    Label(id="rocher", lemma="rocher", gloss="rock", parent="decor"),
    Label(id="arbre", lemma="arbre", gloss="tree", parent="decor"),
    Label(id="estrade", lemma="estrade", gloss="rostrum", parent="decor"),
    Label(id="aureole", lemma="auréole", gloss="halo", parent="objet"),
)

STANDARD_RULES = (
    ConceptRule(concept="scène d'investiture",
                required=(("moine", 1), ("crosse", 1))),
    ConceptRule(concept="chasse au vol", required=(("faucon", 1),)),
    ConceptRule(concept="bestiaire", required=(("dragon", 1), ("renard", 1))),
)


def seed_rules(store: ProjectStore, actor: str = "system") -> list[ConceptRule]:
    existing = {r.concept for r in store.project.rules}
    added = []
    for rule in STANDARD_RULES:
        if rule.concept not in existing:
            added.append(store.add_rule(rule, actor=actor))
    return added
