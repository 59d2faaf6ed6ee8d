"""Batch labeling by nearest neighbors.

Labels one segment by hand, then asks the embedding index which other
unlabeled segments look like it. Accepting a suggestion applies the label
but leaves the annotation a draft for human validation.
"""

from marginalia.corpus import Folio, Geometry, ProjectStore, seed_vocabulary
from marginalia.fixtures import fixture_by_name
from marginalia.provider import MockProvider
from marginalia.suggest import SegmentIndex


def main():
    fx = fixture_by_name("menagerie")
    provider = MockProvider()
    store = ProjectStore.create("suggest-demo")
    seed_vocabulary(store)
    store.add_folio(Folio(id=fx.name, shelfmark="BnF fr. 95", folio_ref="7r",
                          image_uri=f"{fx.name}.png", dims=fx.dims))

    seed = None
    for label in fx.labels():
        geometry = Geometry.from_mask(fx.region_mask(label))
        if label == "dragon":
            seed = store.create_annotation(fx.name, "manual", geometry=geometry,
                                           label_id="dragon", actor="curator")
        else:
            store.create_annotation(fx.name, "auto", geometry=geometry)

    index = SegmentIndex.build(store, provider, lambda folio_id: fx.image)
    print(f"indexed {len(index)} segments, seed is {seed.id} (dragon)")

    suggestions = index.propose_batch(store, [seed.id], threshold=0.0)
    print("suggestions, best first:")
    for s in suggestions:
        print(f"  {s.target_id}  similarity {s.similarity:.4f}  "
              f"(via seed {s.seed_id})")

    best = suggestions[0]
    accepted = index.accept(store, best, actor="reviewer")
    print(f"accepted {best.target_id}: label={accepted.label_id}, "
          f"status={accepted.status}")
    index.reject(store, suggestions[-1], actor="reviewer")
    print(f"rejected {suggestions[-1].target_id}; both decisions are in the "
          f"event log:")
    for event in store.project.events[-2:]:
        print(f"  {event.seq:3d}  {event.action}  {event.payload['target_id']}")


if __name__ == "__main__":
    main()
