"""COCO export: validated instances only, repeatable byte for byte.

Builds a small project, validates some annotations and leaves others as
drafts, then exports twice to show the output is deterministic and the
report explains every skipped record.
"""

import tempfile
from pathlib import Path

from marginalia.corpus import (
    Folio,
    Geometry,
    ProjectStore,
    TagRecord,
    coco_json,
    export_coco,
    import_image_tags,
    seed_vocabulary,
)
from marginalia.fixtures import fixture_by_name


def main():
    fx = fixture_by_name("initial")
    store = ProjectStore.create("export-demo")
    seed_vocabulary(store)
    store.add_folio(Folio(id=fx.name, shelfmark="BnF lat. 18", folio_ref="53v",
                          image_uri=f"{fx.name}.png", dims=fx.dims))

    for label in fx.labels():
        geometry = Geometry.from_mask(fx.region_mask(label))
        ann = store.create_annotation(fx.name, "manual", geometry=geometry,
                                      label_id=label.replace("é", "e"))
        if label != "arbre":  # leave one draft behind on purpose
            store.transition(ann.id, "validated", actor="reviewer")
    import_image_tags(store, [TagRecord(fx.name, "moine")])  # no geometry

    document, report = export_coco(store.project)
    print(f"images：{len(document['images'])}  "
          f"categories: {len(document['categories'])}  "
          f"annotations: {len(document['annotations'])}")
    print(f"report: {report}")

    crosse = next(a for a in document["annotations"])
    print(f"first annotation: {len(crosse['segmentation'])} ring(s) "
          f"(the crosse has a hole, so exterior + hole)")

    out = Path(tempfile.mkdtemp()) / "instances.json"
    out.write_text(coco_json(document), encoding="utf-8")
    again = coco_json(export_coco(store.project)[0])
    print(f"wrote {out} ({out.stat().st_size} bytes); "
          f"second export identical: {again == out.read_text()}")


if __name__ == "__main__":
    main()
