"""Synthetic folio fixtures with ground-truth sidecars.

Every fixture is a flat-color "parchment" image with hard-edged shapes and a
list of labeled regions; shapes never touch and keep disjoint bounding
boxes, so each labeled region is exactly one 4-connected component of the
mock provider's foreground.  All coordinates are fixed, making every
derived quantity (component masks, areas, boxes) reproducible by hand.

Sidecars serialize as JSON next to the PNG:
    {"regions": [{"label": "...", "polygon": {"exterior": [...], "holes": [...]}}]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import (
    BinaryMask,
    GridDims,
    polygon_from_dict,
    polygon_to_dict,
    polygonize,
    rasterize,
    rle_encode,
)
from .imageio import save_png
from .provider.mock import TruthRegion

PARCHMENT = (214, 198, 160)


@dataclass
class Fixture:
    name: str
    image: np.ndarray
    regions: list[TruthRegion]

    @property
    def dims(self) -> GridDims:
        return GridDims(width=self.image.shape[1], height=self.image.shape[0])

    def labels(self) -> list[str]:
        return sorted(region.label for region in self.regions)

    def region_mask(self, label: str) -> BinaryMask:
        for region in self.regions:
            if region.label == label:
                return rasterize(region.polygon, self.dims)
        raise KeyError(f"no region labeled {label!r} in fixture {self.name}")


def blank_canvas(width: int, height: int) -> np.ndarray:
    image = np.empty((height, width, 3), dtype=np.uint8)
    image[:] = PARCHMENT
    return image


def disk(width: int, height: int, cx: float, cy: float, r: float) -> np.ndarray:
    xs = np.arange(width) + 0.5
    ys = np.arange(height) + 0.5
    return (xs[None, :] - cx) ** 2 + (ys[:, None] - cy) ** 2 <= r * r


def rect(width: int, height: int, x0: int, y0: int, w: int, h: int) -> np.ndarray:
    grid = np.zeros((height, width), dtype=bool)
    grid[y0:y0 + h, x0:x0 + w] = True
    return grid


def annulus(width: int, height: int, cx: float, cy: float,
            r_outer: float, r_inner: float) -> np.ndarray:
    return disk(width, height, cx, cy, r_outer) & ~disk(width, height, cx, cy, r_inner)


def _add_shape(fixture: Fixture, shape: np.ndarray, color: tuple[int, int, int],
               label: str | None) -> None:
    fixture.image[shape] = color
    if label is not None:
        polys = polygonize(rle_encode(shape))
        if len(polys) != 1:
            raise ValueError(f"shape for {label!r} must be one component, got {len(polys)}")
        fixture.regions.append(TruthRegion(label=label, polygon=polys[0]))


def _fixture(name: str, width: int, height: int) -> Fixture:
    return Fixture(name=name, image=blank_canvas(width, height), regions=[])


def two_disks() -> Fixture:
    """Two equal-radius disks whose colors occupy disjoint histogram bins."""
    fx = _fixture("two_disks", 64, 64)
    _add_shape(fx, disk(64, 64, 16, 16, 8), (220, 100, 40), "rocher")
    _add_shape(fx, disk(64, 64, 46, 42, 8), (40, 170, 220), "auréole")
    return fx


def areas() -> Fixture:
    """Component areas exactly {400, 50} for filter arithmetic."""
    fx = _fixture("areas", 64, 64)
    _add_shape(fx, rect(64, 64, 8, 8, 20, 20), (120, 60, 40), "estrade")
    _add_shape(fx, rect(64, 64, 40, 40, 5, 10), (60, 120, 70), "mitre")
    return fx


def margins() -> Fixture:
    """Central text block with three marginal creatures."""
    fx = _fixture("margins", 128, 128)
    _add_shape(fx, rect(128, 128, 36, 28, 56, 72), (90, 70, 50), "codex")
    blob = disk(128, 128, 16, 102, 9) | disk(128, 128, 24, 108, 7)
    _add_shape(fx, blob, (50, 140, 60), "dragon")
    _add_shape(fx, disk(128, 128, 108, 18, 10), (150, 90, 30), "faucon")
    _add_shape(fx, rect(128, 128, 102, 96, 18, 12), (210, 110, 40), "renard")
    return fx


def initial() -> Fixture:
    """Ring with a hole (letter counter), a monk blob, and a small tree."""
    fx = _fixture("initial", 96, 96)
    _add_shape(fx, annulus(96, 96, 26, 30, 16, 9), (40, 60, 150), "crosse")
    moine = disk(96, 96, 70, 26, 10) | rect(96, 96, 64, 26, 12, 16)
    _add_shape(fx, moine, (100, 40, 110), "moine")
    _add_shape(fx, rect(96, 96, 60, 66, 14, 20), (40, 110, 50), "arbre")
    return fx


def menagerie() -> Fixture:
    """Five separated creatures on a large folio."""
    fx = _fixture("menagerie", 256, 256)
    dragon = disk(256, 256, 50, 52, 18) | disk(256, 256, 68, 64, 12)
    _add_shape(fx, dragon, (60, 150, 70), "dragon")
    _add_shape(fx, disk(256, 256, 190, 44, 20), (160, 100, 30), "faucon")
    _add_shape(fx, rect(256, 256, 168, 180, 48, 30), (220, 120, 40), "renard")
    _add_shape(fx, disk(256, 256, 60, 190, 24), (110, 50, 120), "moine")
    crosse = rect(256, 256, 140, 100, 8, 56) | rect(256, 256, 140, 100, 28, 8)
    _add_shape(fx, crosse, (50, 70, 160), "crosse")
    return fx


def blank() -> Fixture:
    """Uniform parchment; nothing to segment, empty sidecar."""
    return _fixture("blank", 32, 32)


def standard_fixtures() -> list[Fixture]:
    return [two_disks(), areas(), margins(), initial(), menagerie(), blank()]


def fixture_by_name(name: str) -> Fixture:
    for fx in standard_fixtures():
        if fx.name == name:
            return fx
    raise KeyError(f"unknown fixture {name!r}")


# -- disk persistence ---------------------------------------------------------

def save_fixture(fixture: Fixture, directory: str | Path) -> tuple[Path, Path]:
    """Write `<name>.png` and its `<name>.json` sidecar; returns both paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    png_path = directory / f"{fixture.name}.png"
    sidecar_path = directory / f"{fixture.name}.json"
    save_png(fixture.image, png_path)
    payload = {"regions": [
        {"label": region.label, "polygon": polygon_to_dict(region.polygon)}
        for region in fixture.regions
    ]}
    sidecar_path.write_text(json.dumps(payload, ensure_ascii=False, indent=2),
                            encoding="utf-8")
    return png_path, sidecar_path


def load_sidecar(path: str | Path) -> list[TruthRegion]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return [TruthRegion(label=item["label"], polygon=polygon_from_dict(item["polygon"]))
            for item in payload["regions"]]


def write_fixture_set(directory: str | Path) -> list[Path]:
    """Materialize the whole standard fixture set; returns the PNG paths."""
    paths = []
    for fixture in standard_fixtures():
        png_path, _ = save_fixture(fixture, directory)
        paths.append(png_path)
    return paths
