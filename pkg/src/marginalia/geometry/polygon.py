"""Mask <-> polygon conversion.

Contours are traced along pixel cracks (the unit edges between pixels), so a
polygonized mask at tolerance 0 rasterizes back to the identical mask.
Foreground components are 4-connected; every component yields one exterior
ring plus one ring per enclosed hole.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .rle import BinaryMask, GridDims, rle_encode

Point = tuple[float, float]

# Directions for crack walking: east, south, west, north (y grows downward).
_E, _S, _W, _N = 0, 1, 2, 3
_STEP = {_E: (1, 0), _S: (0, 1), _W: (-1, 0), _N: (0, -1)}
# Turning right keeps the walk hugging the pixel whose border it follows,
# which is what separates diagonally-touching parts of a 4-connected trace.
_RIGHT = {_E: _S, _S: _W, _W: _N, _N: _E}
_LEFT = {_E: _N, _N: _W, _W: _S, _S: _E}

_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class Polygon:
    """Exterior ring plus optional hole rings, in (x, y) pixel coordinates.

    Rings are closed implicitly (last vertex connects back to the first) and
    must have at least three vertices.
    """

    exterior: tuple[Point, ...]
    holes: tuple[tuple[Point, ...], ...] = field(default=())

    def __post_init__(self):
        for ring in (self.exterior, *self.holes):
            if len(ring) < 3:
                raise ValueError(f"ring needs >= 3 vertices, got {len(ring)}")

    def rings(self) -> list[tuple[Point, ...]]:
        return [self.exterior, *self.holes]

    def translated(self, dx: float, dy: float) -> "Polygon":
        move = lambda ring: tuple((x + dx, y + dy) for x, y in ring)
        return Polygon(move(self.exterior), tuple(move(h) for h in self.holes))

    def scaled(self, factor: float) -> "Polygon":
        grow = lambda ring: tuple((x * factor, y * factor) for x, y in ring)
        return Polygon(grow(self.exterior), tuple(grow(h) for h in self.holes))


def polygon_to_dict(polygon: Polygon) -> dict:
    return {
        "exterior": [[x, y] for x, y in polygon.exterior],
        "holes": [[[x, y] for x, y in hole] for hole in polygon.holes],
    }


def polygon_from_dict(data: dict) -> Polygon:
    return Polygon(
        exterior=tuple((float(x), float(y)) for x, y in data["exterior"]),
        holes=tuple(tuple((float(x), float(y)) for x, y in hole)
                    for hole in data.get("holes", [])),
    )


def ring_signed_area(ring: tuple[Point, ...] | list[Point]) -> float:
    """Shoelace sum / 2; positive for exterior rings as traced here."""
    pts = np.asarray(ring, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    return float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)) / 2.0


def _boundary_edges(fg: np.ndarray) -> dict[Point, list[int]]:
    """Directed crack edges of a padded boolean grid, foreground kept on the
    walker's right.  Returns start-vertex -> sorted outgoing directions."""
    h, w = fg.shape
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = fg
    core = padded[1:-1, 1:-1]
    edges: dict[Point, list[int]] = {}

    def add(xs: np.ndarray, ys: np.ndarray, direction: int) -> None:
        for x, y in zip(xs.tolist(), ys.tolist()):
            edges.setdefault((x, y), []).append(direction)

    # top edge (bg above): walk east from (i, j)
    ys, xs = np.nonzero(core & ~padded[:-2, 1:-1])
    add(xs, ys, _E)
    # right edge (bg right): walk south from (i+1, j)
    ys, xs = np.nonzero(core & ~padded[1:-1, 2:])
    add(xs + 1, ys, _S)
    # bottom edge (bg below): walk west from (i+1, j+1)
    ys, xs = np.nonzero(core & ~padded[2:, 1:-1])
    add(xs + 1, ys + 1, _W)
    # left edge (bg left): walk north from (i, j+1)
    ys, xs = np.nonzero(core & ~padded[1:-1, :-2])
    add(xs, ys + 1, _N)

    for dirs in edges.values():
        dirs.sort()
    return edges


def _walk_ring(edges: dict[Point, list[int]], start: Point, direction: int) -> list[Point]:
    """Consume one closed crack loop, recording only direction changes.

    At a vertex where two diagonal foreground pixels of the same component
    meet there are two outgoing cracks; preferring the right turn keeps the
    walk on the pixel it is already hugging, which makes the loop pass
    through the pinch twice instead of crossing over to the far side.
    """
    ring: list[Point] = [start]
    vertex, heading = start, direction
    while True:
        edges[vertex].remove(heading)
        if not edges[vertex]:
            del edges[vertex]
        dx, dy = _STEP[heading]
        vertex = (vertex[0] + dx, vertex[1] + dy)
        choices = edges.get(vertex)
        if choices is None:
            break  # every outgoing crack here is spent: loop closed at start
        for cand in (_RIGHT[heading], heading, _LEFT[heading]):
            if cand in choices:
                nxt = cand
                break
        if nxt != heading:
            ring.append(vertex)
        heading = nxt
    return ring


def _trace_rings(fg: np.ndarray) -> list[list[Point]]:
    """All closed crack loops of a boolean grid, deterministically ordered.

    Exterior loops come out with positive shoelace area, holes negative.
    """
    edges = _boundary_edges(fg)
    rings: list[list[Point]] = []
    # Deterministic scan: vertices in (y, x) order, directions ascending.
    order = sorted(edges.keys(), key=lambda v: (v[1], v[0]))
    for vertex in order:
        while vertex in edges:
            direction = edges[vertex][0]
            ring = _walk_ring(edges, vertex, direction)
            rings.append(ring)
    return rings


def _collapse_collinear(ring: list[Point]) -> list[Point]:
    """Remove vertices lying on the straight segment between their neighbors."""
    if len(ring) < 3:
        return ring
    out: list[Point] = []
    n = len(ring)
    for i in range(n):
        px, py = ring[i - 1]
        cx, cy = ring[i]
        nx, ny = ring[(i + 1) % n]
        if (cx - px) * (ny - py) == (cy - py) * (nx - px):
            continue
        out.append(ring[i])
    return out if len(out) >= 3 else ring


def _point_segment_distance(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(pts - a, axis=1)
    t = np.clip((pts - a) @ ab / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(pts - proj, axis=1)


def _dp_chain(pts: np.ndarray, tolerance: float) -> list[int]:
    """Indices kept by Douglas-Peucker on an open chain (endpoints retained)."""
    keep = [0, len(pts) - 1]
    stack = [(0, len(pts) - 1)]
    while stack:
        lo, hi = stack.pop()
        if hi - lo < 2:
            continue
        inner = pts[lo + 1:hi]
        dists = _point_segment_distance(inner, pts[lo], pts[hi])
        worst = int(np.argmax(dists))
        if dists[worst] > tolerance:
            mid = lo + 1 + worst
            keep.append(mid)
            stack.append((lo, mid))
            stack.append((mid, hi))
    return sorted(set(keep))


def simplify_ring(ring: tuple[Point, ...], tolerance: float) -> tuple[Point, ...]:
    """Douglas-Peucker for a closed ring.

    The ring is split at vertex 0 and at the vertex farthest from it, each
    half simplified independently.  Falls back to the input when the result
    would degenerate (fewer than 3 vertices or zero area).
    """
    if tolerance <= 0 or len(ring) <= 4:
        return ring
    pts = np.asarray(ring, dtype=float)
    far = int(np.argmax(np.linalg.norm(pts - pts[0], axis=1)))
    if far == 0:
        return ring
    first = pts[:far + 1]
    second = np.vstack([pts[far:], pts[:1]])
    kept_a = [tuple(first[i]) for i in _dp_chain(first, tolerance)]
    kept_b = [tuple(second[i]) for i in _dp_chain(second, tolerance)]
    merged = kept_a[:-1] + kept_b[:-1]
    if len(merged) < 3 or abs(ring_signed_area(merged)) == 0.0:
        return ring
    return tuple((float(x), float(y)) for x, y in merged)


def polygonize(mask: BinaryMask, tolerance: float = 0.0) -> list[Polygon]:
    """One polygon per 4-connected foreground component, holes included.

    Contours follow pixel cracks; `tolerance` > 0 applies Douglas-Peucker
    simplification (0 keeps the exact crack outline, minus collinear
    vertices).  An empty mask yields an empty list.
    """
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    if mask.is_empty:
        return []
    grid = mask.to_array()
    labels, count = ndimage.label(grid, structure=_FOUR_CONNECTED)
    polys: list[Polygon] = []
    slices = ndimage.find_objects(labels)
    for idx in range(1, count + 1):
        sl = slices[idx - 1]
        sub = labels[sl] == idx
        x0, y0 = sl[1].start, sl[0].start
        rings = _trace_rings(sub)
        exterior: tuple[Point, ...] | None = None
        holes: list[tuple[Point, ...]] = []
        for ring in rings:
            ring = _collapse_collinear(ring)
            shifted = tuple((float(x + x0), float(y + y0)) for x, y in ring)
            if ring_signed_area(shifted) > 0:
                exterior = shifted
            else:
                holes.append(shifted)
        if exterior is None:  # pragma: no cover - a component always has one
            continue
        if tolerance > 0:
            exterior = simplify_ring(exterior, tolerance)
            holes = [simplify_ring(h, tolerance) for h in holes]
        polys.append(Polygon(exterior=exterior, holes=tuple(holes)))
    return polys


def _rasterize_rings(rings: list[tuple[Point, ...]], dims: GridDims) -> np.ndarray:
    """Even-odd fill of a ring set, sampling at pixel centers."""
    grid = np.zeros((dims.height, dims.width), dtype=bool)
    segs = []
    for ring in rings:
        pts = np.asarray(ring, dtype=float)
        if len(pts) < 3:
            continue
        nxt = np.roll(pts, -1, axis=0)
        segs.append((pts, nxt))
    if not segs:
        return grid
    a = np.vstack([s[0] for s in segs])
    b = np.vstack([s[1] for s in segs])
    ay, by = a[:, 1], b[:, 1]
    ax, bx = a[:, 0], b[:, 0]
    centers_x = np.arange(dims.width) + 0.5
    y_lo = np.minimum(ay, by)
    y_hi = np.maximum(ay, by)
    for j in range(dims.height):
        yc = j + 0.5
        hit = (y_lo <= yc) & (yc < y_hi)  # half-open: vertices count once
        if not hit.any():
            continue
        t = (yc - ay[hit]) / (by[hit] - ay[hit])
        xs = np.sort(ax[hit] + t * (bx[hit] - ax[hit]))
        parity = np.searchsorted(xs, centers_x, side="left") % 2
        grid[j] = parity.astype(bool)
    return grid


def rasterize(polygon: Polygon, dims: GridDims) -> BinaryMask:
    """Fill a polygon: pixel (i, j) is set iff its center (i+.5, j+.5) is
    inside under the even-odd rule; hole rings cancel the exterior."""
    return rle_encode(_rasterize_rings(polygon.rings(), dims))


def rasterize_all(polygons: list[Polygon], dims: GridDims) -> BinaryMask:
    """Union of independently rasterized polygons."""
    grid = np.zeros((dims.height, dims.width), dtype=bool)
    for poly in polygons:
        grid |= _rasterize_rings(poly.rings(), dims)
    return rle_encode(grid)


def crack_perimeter(mask: BinaryMask) -> int:
    """Total length of foreground/background cracks, grid border included."""
    if mask.is_empty:
        return 0
    grid = mask.to_array()
    padded = np.zeros((grid.shape[0] + 2, grid.shape[1] + 2), dtype=bool)
    padded[1:-1, 1:-1] = grid
    core = padded[1:-1, 1:-1]
    total = (core & ~padded[:-2, 1:-1]).sum() + (core & ~padded[2:, 1:-1]).sum() \
        + (core & ~padded[1:-1, :-2]).sum() + (core & ~padded[1:-1, 2:]).sum()
    return int(total)


def compactness(mask: BinaryMask) -> float:
    """4*pi*A / P^2 with the crack-edge perimeter, clamped to [0, 1]."""
    perimeter = crack_perimeter(mask)
    if perimeter == 0:
        return 0.0
    value = 4.0 * np.pi * mask.area / float(perimeter) ** 2
    return float(min(max(value, 0.0), 1.0))
