"""Automask: propose an annotation for every blob on a folio.

Runs segment-everything, then shows how the quality/area/NMS filters trim
the proposal list before anything is persisted as drafts.
"""

from marginalia.corpus import AutomaskConfig, Folio, ProjectStore
from marginalia.fixtures import fixture_by_name
from marginalia.pipeline import generate_automask, persist_proposals
from marginalia.provider import MockProvider


def main():
    fx = fixture_by_name("menagerie")
    provider = MockProvider()

    raw = provider.segment_everything(fx.image)
    print(f"{fx.name}: segment_everything found {len(raw)} components")
    for p in sorted(raw, key=lambda p: -p.mask.area):
        print(f"  area {p.mask.area:5d}  quality {p.quality:.3f}")

    config = AutomaskConfig(min_quality=0.3, min_area=200, nms_iou=0.7,
                            max_proposals=10)
    kept = generate_automask(fx.image, provider, config)
    print(f"after filters (min_quality {config.min_quality}, "
          f"min_area {config.min_area}): {len(kept)} proposals")

    store = ProjectStore.create("automask-demo")
    store.add_folio(Folio(id=fx.name, shelfmark="BnF fr. 95", folio_ref="61v",
                          image_uri=f"{fx.name}.png", dims=fx.dims))
    drafts = persist_proposals(store, fx.name, kept)
    print(f"persisted {len(drafts)} unlabeled drafts:")
    for ann in drafts:
        print(f"  {ann.id}  provenance={ann.provenance}  status={ann.status}")


if __name__ == "__main__":
    main()
