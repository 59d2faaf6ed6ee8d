"""Nearest-neighbor batch labeling over segment embeddings.

The index keeps one normalized embedding per masked annotation plus a
labeled flag. Queries are exact brute-force cosine scans; at corpus scale
(hundreds to low thousands of segments) this is fast, trivially correct,
and the reference any fancier index would have to match anyway.

Suggestions never mutate the project by themselves. Accepting one applies
the label and leaves the annotation a draft, because batch labeling does
not substitute for validation; both decisions land in the event log.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .corpus.model import Annotation, ProjectError, UnknownEntity
from .corpus.store import ProjectStore
from .provider.base import Embedding, ProviderError, SegmentationProvider

ImageLoader = Callable[[str], np.ndarray]


@dataclass(frozen=True)
class Suggestion:
    target_id: str
    label_id: str
    similarity: float
    seed_id: str

    def __post_init__(self):
        if not -1.0 <= self.similarity <= 1.0 + 1e-9:
            raise ValueError(f"similarity {self.similarity} outside [-1, 1]")

    def to_dict(self) -> dict:
        return {"target_id": self.target_id, "label_id": self.label_id,
                "similarity": self.similarity, "seed_id": self.seed_id}

    @classmethod
    def from_dict(cls, data: dict) -> "Suggestion":
        return cls(target_id=data["target_id"], label_id=data["label_id"],
                   similarity=data["similarity"], seed_id=data["seed_id"])


class SegmentIndex:
    """Embeddings for every annotation that has a mask."""

    def __init__(self):
        self._embeddings: dict[str, Embedding] = {}
        self._labeled: dict[str, bool] = {}
        self.failures: list[dict] = []

    @classmethod
    def build(cls, store: ProjectStore, provider: SegmentationProvider,
              image_loader: ImageLoader) -> "SegmentIndex":
        """Embed all masked annotations; failures skip the entry and are
        kept on index.failures."""
        index = cls()
        for ann_id in sorted(store.project.annotations):
            index.refresh(store, provider, image_loader, ann_id)
        return index

    def refresh(self, store: ProjectStore, provider: SegmentationProvider,
                image_loader: ImageLoader, annotation_id: str) -> None:
        """Bring one annotation's entry in line with the project: embed it,
        re-embed after edits, or drop it if deleted or mask-less."""
        ann = store.project.annotations.get(annotation_id)
        if ann is None or not ann.has_mask:
            self.remove(annotation_id)
            return
        try:
            image = image_loader(ann.folio_id)
            embedding = provider.embed_segment(image, ann.geometry.mask)
        except (ProviderError, ValueError, OSError) as exc:
            self.remove(annotation_id)
            self.failures.append({"annotation": annotation_id, "reason": str(exc)})
            return
        self._embeddings[annotation_id] = embedding
        self._labeled[annotation_id] = ann.label_id is not None

    def add_entry(self, annotation_id: str, embedding: Embedding,
                  labeled: bool) -> None:
        """Insert a precomputed embedding (alternative backends, tests)."""
        self._embeddings[annotation_id] = embedding
        self._labeled[annotation_id] = labeled

    def remove(self, annotation_id: str) -> None:
        self._embeddings.pop(annotation_id, None)
        self._labeled.pop(annotation_id, None)

    def mark_labeled(self, annotation_id: str, labeled: bool = True) -> None:
        if annotation_id in self._labeled:
            self._labeled[annotation_id] = labeled

    def __len__(self) -> int:
        return len(self._embeddings)

    def __contains__(self, annotation_id: str) -> bool:
        return annotation_id in self._embeddings

    def ids(self) -> list[str]:
        return sorted(self._embeddings)

    def embedding(self, annotation_id: str) -> Embedding:
        try:
            return self._embeddings[annotation_id]
        except KeyError:
            raise UnknownEntity(f"annotation {annotation_id!r} is not indexed") from None

    def _unlabeled_matrix(self, exclude: set[str]) -> tuple[list[str], np.ndarray]:
        ids = [i for i in sorted(self._embeddings)
               if not self._labeled[i] and i not in exclude]
        if not ids:
            return ids, np.zeros((0, 0))
        return ids, np.stack([self._embeddings[i].vector for i in ids])

    def knn_unlabeled(self, query_id: str, k: int) -> list[tuple[str, float]]:
        """Top-k unlabeled neighbors by cosine, ties broken by id ascending.

        The query itself and every labeled segment are excluded. k may
        exceed the unlabeled population; you get everyone, ranked.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        query = self.embedding(query_id)
        ids, matrix = self._unlabeled_matrix(exclude={query_id})
        if not ids:
            return []
        sims = matrix @ query.vector
        order = sorted(range(len(ids)), key=lambda i: (-sims[i], ids[i]))
        return [(ids[i], float(sims[i])) for i in order[:k]]

    def propose_batch(self, store: ProjectStore, seed_ids: list[str],
                      threshold: float) -> list[Suggestion]:
        """One suggestion per unlabeled segment whose best seed similarity
        reaches the threshold; the best seed is recorded (ties go to the
        lexicographically first seed). Raising the threshold can only
        shrink the result."""
        if not -1.0 <= threshold <= 1.0:
            raise ValueError(f"threshold {threshold} outside [-1, 1]")
        if not seed_ids:
            raise ValueError("at least one seed is required")
        label_id = self._seed_label(store, seed_ids)
        seeds = sorted(set(seed_ids))
        seed_matrix = np.stack([self.embedding(s).vector for s in seeds])
        ids, matrix = self._unlabeled_matrix(exclude=set(seeds))
        suggestions = []
        if ids:
            sims = matrix @ seed_matrix.T
            best = sims.argmax(axis=1)  # argmax takes the first on ties
            for row, target in enumerate(ids):
                similarity = float(sims[row, best[row]])
                if similarity >= threshold:
                    suggestions.append(Suggestion(
                        target_id=target, label_id=label_id,
                        similarity=min(similarity, 1.0),
                        seed_id=seeds[best[row]]))
        suggestions.sort(key=lambda s: (-s.similarity, s.target_id))
        return suggestions

    def _seed_label(self, store: ProjectStore, seed_ids: list[str]) -> str:
        labels = set()
        for seed_id in seed_ids:
            ann = store.project.annotation(seed_id)
            if ann.label_id is None:
                raise ProjectError(f"seed {seed_id} is unlabeled")
            if seed_id not in self._embeddings:
                raise UnknownEntity(f"seed {seed_id} is not indexed")
            labels.add(ann.label_id)
        if len(labels) != 1:
            raise ProjectError(
                f"seeds carry mixed labels {sorted(labels)}; pick one label")
        return labels.pop()

    def accept(self, store: ProjectStore, suggestion: Suggestion,
               actor: str = "reviewer") -> Annotation:
        """Apply the suggested label; the target stays a draft and leaves
        the unlabeled pool."""
        ann = store.accept_suggestion(
            suggestion.target_id, suggestion.label_id, suggestion.seed_id,
            suggestion.similarity, actor=actor)
        self.mark_labeled(suggestion.target_id)
        return ann

    def reject(self, store: ProjectStore, suggestion: Suggestion,
               actor: str = "reviewer") -> None:
        """Record the rejection; the target remains suggestible."""
        store.reject_suggestion(
            suggestion.target_id, suggestion.label_id, suggestion.seed_id,
            suggestion.similarity, actor=actor)
