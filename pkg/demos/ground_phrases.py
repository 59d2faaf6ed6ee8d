"""Text grounding: from catalogue phrases to labeled draft masks.

Detects each phrase as a box, segments inside the box, resolves the phrase
against the vocabulary, and files one draft annotation per hit. Unknown
phrases are reported, not fatal.
"""

from marginalia.corpus import Folio, ProjectStore, seed_vocabulary
from marginalia.fixtures import fixture_by_name
from marginalia.pipeline import ground_annotations
from marginalia.provider import MockProvider


def main():
    fx = fixture_by_name("initial")
    provider = MockProvider()
    provider.register(fx.image, fx.regions)

    store = ProjectStore.create("grounding-demo")
    seed_vocabulary(store)
    store.add_folio(Folio(id=fx.name, shelfmark="BnF lat. 18", folio_ref="12r",
                          image_uri=f"{fx.name}.png", dims=fx.dims))

    phrases = ["Crosse", "MOINE", "arbre", "licorne"]
    print(f"grounding {phrases} on {fx.name}")
    result = ground_annotations(store, fx.name, fx.image, phrases, provider)

    for ann in result.created:
        label = store.project.label(ann.label_id)
        print(f"  {ann.id}: phrase resolved to {label.lemma!r}, "
              f"mask {ann.geometry.mask.area} px, provenance {ann.provenance}")
    for failure in result.failures:
        print(f"  {failure['phrase']!r} failed: {failure['reason']}")

    print(f"{len(result.created)} drafts created, "
          f"{len(result.failures)} phrases unmatched")


if __name__ == "__main__":
    main()
