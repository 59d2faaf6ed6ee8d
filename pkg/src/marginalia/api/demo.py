"""Self-contained demo corpus for trying the service without a model backend.

Writes the synthetic folio images to disk, registers their ground truth with
a mock provider, and creates a ready-to-annotate project with the stock
vocabulary. Everything is deterministic, so restarting the demo server
reuses the same files.
"""

from __future__ import annotations

from pathlib import Path

from ..corpus import Folio, ProjectStore, save_project
from ..corpus.vocab import seed_rules, seed_vocabulary
from ..fixtures import save_fixture, standard_fixtures
from ..provider.mock import MockProvider

DEMO_PROJECT_ID = "atelier"

_SHELFMARKS = {
    "two_disks": ("BnF lat. 18", "12r"),
    "areas": ("BnF lat. 18", "12v"),
    "margins": ("BnF lat. 18", "53v"),
    "initial": ("BnF fr. 95", "7r"),
    "menagerie": ("BnF fr. 95", "61v"),
    "blank": ("BnF fr. 95", "102r"),
}


def bootstrap_demo(project_root: str | Path,
                   image_dir: str | Path | None = None) -> MockProvider:
    project_root = Path(project_root)
    project_root.mkdir(parents=True, exist_ok=True)
    if image_dir is None:
        image_dir = project_root / "demo_images"
    image_dir = Path(image_dir)
    image_dir.mkdir(parents=True, exist_ok=True)

    provider = MockProvider(name="mock-demo")
    project_path = project_root / f"{DEMO_PROJECT_ID}.json"
    store = None
    if not project_path.exists():
        store = ProjectStore.create(DEMO_PROJECT_ID)
        seed_vocabulary(store)
        seed_rules(store)

    for fixture in standard_fixtures():
        image_path = image_dir / f"{fixture.name}.png"
        if not image_path.exists():
            save_fixture(fixture, image_dir)
        provider.register(fixture.image, fixture.regions)
        if store is not None:
            shelfmark, folio_ref = _SHELFMARKS[fixture.name]
            store.add_folio(Folio(id=fixture.name, shelfmark=shelfmark,
                                  folio_ref=folio_ref,
                                  image_uri=str(image_path),
                                  dims=fixture.dims))
    if store is not None:
        save_project(store, project_path)
    return provider
