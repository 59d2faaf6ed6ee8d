"""Legacy catalogue rescue: tags and boxes in, validated instances out.

Imports image-level tags and rough boxes the way the CLI does, promotes one
of each onto a real mask obtained by clicking, and walks the validation
state machine. Prints the event log at the end: every step is one event.
"""

import numpy as np

from marginalia.corpus import (
    BoxRecord,
    Folio,
    Geometry,
    ProjectStore,
    TagRecord,
    import_boxes,
    import_image_tags,
    seed_vocabulary,
)
from marginalia.fixtures import fixture_by_name
from marginalia.pipeline import validate
from marginalia.provider import MockProvider, PointPrompt, PromptSet


def clicked_mask(provider, fx, label):
    ys, xs = np.nonzero(fx.region_mask(label).to_array())
    prompts = PromptSet(points=(
        PointPrompt(float(xs[0]) + 0.5, float(ys[0]) + 0.5, "positive"),))
    [proposal] = provider.segment_with_prompts(fx.image, prompts)
    return proposal.mask


def main():
    fx = fixture_by_name("margins")
    provider = MockProvider()
    store = ProjectStore.create("legacy-demo")
    seed_vocabulary(store)
    store.add_folio(Folio(id=fx.name, shelfmark="BnF fr. 95", folio_ref="102r",
                          image_uri=f"{fx.name}.png", dims=fx.dims))

    tags = import_image_tags(store, [TagRecord(fx.name, "dragon"),
                                     TagRecord(fx.name, "basilic")])
    codex_box = fx.region_mask("codex").bbox()
    boxes = import_boxes(store, [BoxRecord(
        fx.name, "codex", (int(codex_box.x_min), int(codex_box.y_min),
                           int(codex_box.x_max), int(codex_box.y_max)))])
    print(f"imported {len(tags.created)} tags and {len(boxes.created)} boxes")

    promoted = store.promote(boxes.created[0],
                             Geometry.from_mask(clicked_mask(provider, fx, "codex")),
                             actor="curator")
    print(f"promoted {boxes.created[0]} -> {promoted.id} "
          f"({promoted.provenance}, label {promoted.label_id})")

    validate(store, promoted.id, "reject", "reviewer")
    validate(store, promoted.id, "reopen", "reviewer")
    validate(store, promoted.id, "accept", "reviewer")
    print(f"{promoted.id} is now {store.project.annotation(promoted.id).status}")

    print("event log:")
    for event in store.project.events:
        print(f"  {event.seq:3d}  {event.action:22s} by {event.actor}")


if __name__ == "__main__":
    main()
