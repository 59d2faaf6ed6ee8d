"""Project store: events and replay, persistence, vocabulary, legacy imports,
promotion, COCO export, and statistics."""

import itertools
import json

import numpy as np
import pytest

from marginalia.corpus import (
    AutomaskConfig,
    BoxRecord,
    ConceptRule,
    Folio,
    Geometry,
    IllegalTransition,
    IntegrityError,
    Label,
    Project,
    ProjectError,
    ProjectStore,
    TagRecord,
    UnknownEntity,
    VersionError,
    coco_json,
    export_coco,
    find_label,
    import_boxes,
    import_image_tags,
    infer_concepts,
    load_project,
    mint_label_id,
    parse_records,
    project_stats,
    project_to_json,
    resolve_label,
    save_project,
    seed_rules,
    seed_vocabulary,
)
from marginalia.fixtures import fixture_by_name
from marginalia.geometry import BBox, mask_from_array, mask_iou, rasterize_all
from oracles import pixel_iou


def _clocked_store(project_id="p"):
    counter = itertools.count(1_700_000_000)
    return ProjectStore.create(project_id, clock=lambda: float(next(counter)))


def _fixture_store(name="two_disks"):
    fx = fixture_by_name(name)
    store = _clocked_store()
    store.add_folio(Folio(id=fx.name, shelfmark="BnF lat. 18", folio_ref="53v",
                          image_uri=f"{fx.name}.png", dims=fx.dims))
    seed_vocabulary(store)
    return store, fx


# -- events and replay --------------------------------------------------------

def test_every_mutation_appends_one_event():
    store, fx = _fixture_store()
    n0 = len(store.project.events)
    geometry = Geometry.from_mask(fx.region_mask("rocher"))
    ann = store.create_annotation(fx.name, "manual", geometry=geometry)
    store.set_label(ann.id, "rocher")
    store.transition(ann.id, "validated")
    assert len(store.project.events) == n0 + 3
    assert [e.seq for e in store.project.events] == \
        list(range(1, len(store.project.events) + 1))


def test_replay_reconstructs_state():
    store, fx = _fixture_store()
    geometry = Geometry.from_mask(fx.region_mask("rocher"))
    ann = store.create_annotation(fx.name, "manual", geometry=geometry,
                                  label_id="rocher", actor="alice")
    store.transition(ann.id, "validated", actor="bob")
    other = store.create_annotation(fx.name, "manual", geometry=geometry)
    store.delete_annotation(other.id)

    replayed = ProjectStore.replay(store.project.events)
    assert project_to_json(replayed.project) == project_to_json(store.project)


def test_replay_requires_creation_event():
    store, _ = _fixture_store()
    with pytest.raises(ProjectError):
        ProjectStore.replay(store.project.events[1:])


def test_reducer_uses_event_time_not_wall_clock():
    store, fx = _fixture_store()
    geometry = Geometry.from_mask(fx.region_mask("rocher"))
    ann = store.create_annotation(fx.name, "manual", geometry=geometry)
    created_at = ann.created_at
    store.transition(ann.id, "rejected")
    assert store.project.annotation(ann.id).updated_at > created_at
    assert store.project.annotation(ann.id).created_at == created_at


# -- persistence --------------------------------------------------------------

def test_save_load_round_trip_bytes(tmp_path):
    store, fx = _fixture_store()
    geometry = Geometry.from_mask(fx.region_mask("auréole"))
    store.create_annotation(fx.name, "manual", geometry=geometry,
                            label_id="aureole")
    path = save_project(store, tmp_path / "p.json")
    loaded = load_project(path)
    second = save_project(loaded, tmp_path / "p2.json")
    assert path.read_bytes() == second.read_bytes()
    assert project_to_json(loaded.project) == project_to_json(store.project)


def test_load_rejects_unknown_version(tmp_path):
    store, _ = _fixture_store()
    path = save_project(store, tmp_path / "p.json")
    data = json.loads(path.read_text())
    data["format_version"] = "99"
    path.write_text(json.dumps(data))
    with pytest.raises(VersionError):
        load_project(path)


def test_load_rejects_broken_references(tmp_path):
    store, fx = _fixture_store()
    geometry = Geometry.from_mask(fx.region_mask("rocher"))
    store.create_annotation(fx.name, "manual", geometry=geometry,
                            label_id="rocher")
    path = save_project(store, tmp_path / "p.json")
    data = json.loads(path.read_text())
    data["folios"] = []
    path.write_text(json.dumps(data))
    with pytest.raises(IntegrityError):
        load_project(path)


# -- vocabulary ---------------------------------------------------------------

def test_resolve_label_folds_case_and_diacritics():
    store, _ = _fixture_store()
    assert resolve_label(store, "AURÉOLE").id == "aureole"
    assert resolve_label(store, "aureole").id == "aureole"
    assert resolve_label(store, "Rocher").id == "rocher"
    # gloss matches too
    assert resolve_label(store, "halo").id == "aureole"


def test_resolve_label_create_is_idempotent():
    store = _clocked_store()
    first = resolve_label(store, "Basilic", mode="create_or_match")
    second = resolve_label(store, "basilic", mode="create_or_match")
    assert first.id == second.id
    assert len(store.project.labels) == 1
    with pytest.raises(UnknownEntity):
        resolve_label(store, "griffon", mode="match_only")


def test_mint_label_id_disambiguates():
    store = _clocked_store()
    store.add_label(Label(id="lion", lemma="lion"))
    assert mint_label_id(store.project, "Lion!") == "lion-2"
    assert mint_label_id(store.project, "Éléphant") == "elephant"


def test_alias_shadowing_rejected():
    store = _clocked_store()
    store.add_label(Label(id="moine", lemma="moine"))
    with pytest.raises(IntegrityError):
        store.add_label(Label(id="frere", lemma="frère", aliases=("Moine",)))
    with pytest.raises(IntegrityError):
        store.add_label(Label(id="x", lemma="moine", aliases=()))  # dup check
    assert find_label(store.project, "MOINE").id == "moine"


def test_label_parent_must_exist():
    store = _clocked_store()
    with pytest.raises(UnknownEntity):
        store.add_label(Label(id="moine", lemma="moine", parent="figure"))


def test_infer_concepts_counts_validated_instances():
    store, fx = _fixture_store()
    seed_rules(store)
    store.add_rule(ConceptRule(concept="paysage sacré",
                               required=(("rocher", 1), ("aureole", 1))))
    g1 = Geometry.from_mask(fx.region_mask("rocher"))
    g2 = Geometry.from_mask(fx.region_mask("auréole"))
    a1 = store.create_annotation(fx.name, "manual", geometry=g1, label_id="rocher")
    a2 = store.create_annotation(fx.name, "manual", geometry=g2, label_id="aureole")
    assert infer_concepts(store.project, fx.name) == []  # drafts don't count
    store.transition(a1.id, "validated")
    store.transition(a2.id, "validated")
    found = infer_concepts(store.project, fx.name)
    assert [s["concept"] for s in found] == ["paysage sacré"]
    assert found[0]["supporting"] == sorted([a1.id, a2.id])


# -- legacy imports -----------------------------------------------------------

def test_import_tags_partial_failure():
    store, fx = _fixture_store()
    report = import_image_tags(store, [
        TagRecord(fx.name, "Rocher"),
        TagRecord("missing_folio", "rocher"),
        TagRecord(fx.name, "Basilic"),
    ])
    assert len(report.created) == 2
    assert len(report.failures) == 1
    assert report.failures[0]["index"] == 1
    tagged = store.project.annotation(report.created[0])
    assert tagged.provenance == "legacy_image_level"
    assert tagged.geometry is None
    assert "basilic" in store.project.labels  # minted on the fly


def test_import_boxes_clipping_and_rejection():
    store, fx = _fixture_store()
    w, h = fx.dims.width, fx.dims.height
    report = import_boxes(store, [
        BoxRecord(fx.name, "rocher", (4, 4, 20, 20)),
        BoxRecord(fx.name, "rocher", (-10, -10, 20, 20)),   # clipped
        BoxRecord(fx.name, "rocher", (w + 5, 0, w + 9, 5)),  # outside
        BoxRecord(fx.name, "rocher", (9, 9, 9, 12)),         # degenerate
    ])
    assert len(report.created) == 2
    assert len(report.warnings) == 1
    assert len(report.failures) == 2
    clipped = store.project.annotation(report.warnings[0]["annotation"])
    assert clipped.geometry.bbox == BBox(0, 0, 20, 20)
    assert clipped.provenance == "legacy_box"
    assert clipped.geometry.mask is None


def test_parse_records_csv_and_json():
    tags, boxes = parse_records(
        "folio_key,label\nf1,rocher\nf2,moine,1,2,9,8\n", "csv")
    assert tags == [TagRecord("f1", "rocher")]
    assert boxes == [BoxRecord("f2", "moine", (1, 2, 9, 8))]
    tags, boxes = parse_records(
        json.dumps([{"folio_key": "f1", "label": "arbre"},
                    {"folio_key": "f1", "label": "arbre",
                     "x_min": 0, "y_min": 1, "x_max": 5, "y_max": 6}]), "json")
    assert len(tags) == 1 and len(boxes) == 1
    with pytest.raises(ValueError):
        parse_records("f1,rocher,3\n", "csv")
    with pytest.raises(ValueError):
        parse_records(json.dumps([{"folio_key": "f1", "label": "x",
                                   "x_min": 1}]), "json")


# -- promotion ----------------------------------------------------------------

def test_promote_legacy_box_to_instance():
    store, fx = _fixture_store()
    report = import_boxes(store, [BoxRecord(fx.name, "rocher", (8, 8, 24, 24))])
    source_id = report.created[0]
    mask = fx.region_mask("rocher")
    promoted = store.promote(source_id, Geometry.from_mask(mask), actor="alice")
    assert promoted.provenance == "prompted"
    assert promoted.status == "draft"
    assert promoted.label_id == "rocher"
    assert promoted.promoted_from == source_id
    source = store.project.annotation(source_id)
    assert source.consumed
    assert store.project.promotions_of(source_id) == [promoted]
    with pytest.raises(ProjectError):
        store.promote(source_id, Geometry.from_mask(mask))  # already consumed


def test_promote_box_requires_overlap():
    store, fx = _fixture_store()
    report = import_boxes(store, [BoxRecord(fx.name, "rocher", (40, 2, 60, 10))])
    mask = fx.region_mask("rocher")  # bbox (8, 8, 24, 24): no overlap
    with pytest.raises(ProjectError):
        store.promote(report.created[0], Geometry.from_mask(mask))


def test_promote_refuses_non_legacy():
    store, fx = _fixture_store()
    geometry = Geometry.from_mask(fx.region_mask("rocher"))
    ann = store.create_annotation(fx.name, "manual", geometry=geometry)
    with pytest.raises(ProjectError):
        store.promote(ann.id, geometry)


def test_image_level_tag_promotes_without_box_constraint():
    store, fx = _fixture_store()
    report = import_image_tags(store, [TagRecord(fx.name, "auréole")])
    promoted = store.promote(report.created[0],
                             Geometry.from_mask(fx.region_mask("auréole")))
    assert promoted.label_id == "aureole"


# -- lifecycle guards ---------------------------------------------------------

def test_geometry_edit_only_on_masked_drafts():
    store, fx = _fixture_store()
    report = import_image_tags(store, [TagRecord(fx.name, "rocher")])
    with pytest.raises(ProjectError):
        store.edit_geometry(report.created[0],
                            Geometry.from_mask(fx.region_mask("rocher")))


def test_mask_dims_must_match_folio():
    store, fx = _fixture_store()
    other = fixture_by_name("margins")  # 128x128 vs 64x64
    with pytest.raises(ProjectError):
        store.create_annotation(
            fx.name, "manual",
            geometry=Geometry.from_mask(other.region_mask("codex")))


def test_delete_removes_annotation_but_keeps_history():
    store, fx = _fixture_store()
    geometry = Geometry.from_mask(fx.region_mask("rocher"))
    ann = store.create_annotation(fx.name, "manual", geometry=geometry)
    store.delete_annotation(ann.id)
    assert ann.id not in store.project.annotations
    assert store.project.events[-1].action == "annotation_deleted"
    replayed = ProjectStore.replay(store.project.events)
    assert ann.id not in replayed.project.annotations


# -- export -------------------------------------------------------------------

def _validated_project():
    store, fx = _fixture_store()
    for region, label in (("rocher", "rocher"), ("auréole", "aureole")):
        geometry = Geometry.from_mask(fx.region_mask(region))
        ann = store.create_annotation(fx.name, "manual", geometry=geometry,
                                      label_id=label)
        store.transition(ann.id, "validated")
    # noise that must not be exported in validated_only mode
    draft_geo = Geometry.from_mask(fx.region_mask("rocher"))
    store.create_annotation(fx.name, "manual", geometry=draft_geo,
                            label_id="rocher")
    import_image_tags(store, [TagRecord(fx.name, "moine")])
    return store, fx


def test_export_counts_and_structure():
    store, fx = _fixture_store()
    geometry = Geometry.from_mask(fx.region_mask("rocher"))
    ann = store.create_annotation(fx.name, "manual", geometry=geometry,
                                  label_id="rocher")
    store.transition(ann.id, "validated")
    document, report = export_coco(store.project)
    assert report["exported"] == 1
    assert {img["id"] for img in document["images"]} == {1}
    assert document["images"][0]["width"] == fx.dims.width
    ann_ids = [a["id"] for a in document["annotations"]]
    assert len(ann_ids) == len(set(ann_ids))
    category_ids = {c["id"] for c in document["categories"]}
    assert all(a["category_id"] in category_ids for a in document["annotations"])
    coco = document["annotations"][0]
    assert coco["iscrowd"] == 0
    assert coco["area"] == geometry.mask.area
    assert all(len(ring) >= 6 and len(ring) % 2 == 0
               for ring in coco["segmentation"])


def test_export_modes_and_skip_report():
    store, _ = _validated_project()
    _, report = export_coco(store.project, mode="validated_only")
    assert report["exported"] == 2
    assert report["skipped_status"] == 1
    assert report["skipped_image_level"] == 1
    document, report = export_coco(store.project, mode="all_instances")
    assert report["exported"] == 3
    with pytest.raises(ValueError):
        export_coco(store.project, mode="everything")


def test_export_is_byte_stable():
    store_a, _ = _validated_project()
    store_b, _ = _validated_project()
    doc_a, _ = export_coco(store_a.project)
    doc_b, _ = export_coco(store_b.project)
    assert coco_json(doc_a) == coco_json(doc_b)
    assert coco_json(doc_a) == coco_json(export_coco(store_a.project)[0])


def test_exported_polygons_rerasterize_close():
    store, fx = _fixture_store("initial")  # includes an annulus with a hole
    for label in fx.labels():
        geometry = Geometry.from_mask(fx.region_mask(label))
        ann = store.create_annotation(
            fx.name, "manual", geometry=geometry,
            label_id=resolve_label(store, label, mode="create_or_match").id)
        store.transition(ann.id, "validated")
    document, _ = export_coco(store.project)
    by_ann = {a.geometry.mask.runs: a for a in store.project.annotations.values()
              if a.has_mask}
    assert len(document["annotations"]) == len(fx.labels())
    for ann in store.project.annotations.values():
        if not ann.has_mask:
            continue
        back = rasterize_all(ann.geometry.polygons, ann.geometry.mask.dims)
        assert mask_iou(back, ann.geometry.mask) >= 0.99


def test_export_holes_round_trip_even_odd():
    fx = fixture_by_name("initial")
    mask = fx.region_mask("crosse")
    geometry = Geometry.from_mask(mask)
    rings = [ring for poly in geometry.polygons for ring in poly.rings()]
    assert len(rings) >= 2  # exterior plus at least one hole
    back = rasterize_all(geometry.polygons, mask.dims)
    assert pixel_iou(back.to_array(), mask.to_array()) >= 0.99


def test_stats_partitions_sum_to_total():
    store, _ = _validated_project()
    stats = project_stats(store.project)
    total = stats["total_annotations"]
    for key in ("by_status", "by_provenance", "by_label", "by_folio"):
        assert sum(stats[key].values()) == total


def test_automask_config_event():
    store, _ = _fixture_store()
    store.set_automask_config(AutomaskConfig(min_quality=0.5, min_area=10,
                                             nms_iou=0.8, max_proposals=50))
    assert store.project.automask_config.min_area == 10
    replayed = ProjectStore.replay(store.project.events)
    assert replayed.project.automask_config == store.project.automask_config
