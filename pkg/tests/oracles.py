"""Independent reference implementations used to check the real code.

Everything here is deliberately naive: breadth-first flood fill instead of
labeling kernels, per-pixel crossing counts instead of scanlines, pairwise
python loops instead of vectorized math. Slow and obviously correct; the
production modules must agree with these, never the other way around.
"""

from __future__ import annotations

from collections import deque

import numpy as np


def flood_fill_components(image: np.ndarray, background: tuple[int, int, int]) -> list[np.ndarray]:
    """4-connected components of non-background pixels via BFS.

    Returns one boolean (H, W) array per component, ordered by the raster
    position of each component's first-visited pixel.
    """
    height, width = image.shape[:2]
    bg = np.array(background, dtype=image.dtype)
    foreground = np.any(image != bg, axis=2)
    seen = np.zeros((height, width), dtype=bool)
    components = []
    for y in range(height):
        for x in range(width):
            if not foreground[y, x] or seen[y, x]:
                continue
            member = np.zeros((height, width), dtype=bool)
            queue = deque([(y, x)])
            seen[y, x] = True
            while queue:
                cy, cx = queue.popleft()
                member[cy, cx] = True
                for ny, nx in ((cy - 1, cx), (cy + 1, cx), (cy, cx - 1), (cy, cx + 1)):
                    if 0 <= ny < height and 0 <= nx < width \
                            and foreground[ny, nx] and not seen[ny, nx]:
                        seen[ny, nx] = True
                        queue.append((ny, nx))
            components.append(member)
    return components


def most_frequent_color(image: np.ndarray) -> tuple[int, int, int]:
    counts: dict[tuple[int, int, int], int] = {}
    for row in image.reshape(-1, 3):
        key = (int(row[0]), int(row[1]), int(row[2]))
        counts[key] = counts.get(key, 0) + 1
    return max(counts, key=lambda k: (counts[k], tuple(-c for c in k)))


def point_in_rings(x: float, y: float, rings) -> bool:
    """Even-odd membership test by counting ray crossings, one edge at a time."""
    crossings = 0
    for ring in rings:
        n = len(ring)
        for i in range(n):
            x1, y1 = ring[i]
            x2, y2 = ring[(i + 1) % n]
            if (y1 <= y < y2) or (y2 <= y < y1):
                x_at = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
                if x_at > x:
                    crossings += 1
    return crossings % 2 == 1


def rasterize_rings(rings, width: int, height: int) -> np.ndarray:
    """Pixel-center even-odd rasterization, checked pixel by pixel."""
    grid = np.zeros((height, width), dtype=bool)
    for y in range(height):
        for x in range(width):
            grid[y, x] = point_in_rings(x + 0.5, y + 0.5, rings)
    return grid


def pixel_iou(a: np.ndarray, b: np.ndarray) -> float:
    inter = int(np.sum(a & b))
    union = int(np.sum(a | b))
    return 1.0 if union == 0 else inter / union


def greedy_nms(scored: list[tuple[float, np.ndarray]], threshold: float) -> list[int]:
    """Indices surviving greedy NMS; order by score descending, input order
    on ties; drop iff IoU with any kept strictly exceeds the threshold."""
    order = sorted(range(len(scored)), key=lambda i: (-scored[i][0], i))
    kept: list[int] = []
    for i in order:
        if all(pixel_iou(scored[i][1], scored[j][1]) <= threshold for j in kept):
            kept.append(i)
    return kept


def brute_force_knn(vectors: dict[str, np.ndarray], query: np.ndarray,
                    k: int, exclude: set[str]) -> list[tuple[str, float]]:
    scored = []
    for key in vectors:
        if key in exclude:
            continue
        sim = float(np.dot(vectors[key], query))
        scored.append((key, sim))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:k]


def fraction_in_box(mask: np.ndarray, box) -> float:
    """Share of mask pixels whose centers fall inside the half-open box."""
    ys, xs = np.nonzero(mask)
    if len(ys) == 0:
        raise ValueError("empty mask")
    inside = 0
    for y, x in zip(ys, xs):
        if box.x_min <= x + 0.5 < box.x_max and box.y_min <= y + 0.5 < box.y_max:
            inside += 1
    return inside / len(ys)


def random_blob(rng: np.random.Generator, size: int,
                walkers: int = 3, steps: int = 40) -> np.ndarray:
    """Connected 4-connected blob grown by random walks from the center."""
    grid = np.zeros((size, size), dtype=bool)
    for _ in range(walkers):
        y, x = size // 2, size // 2
        grid[y, x] = True
        for _ in range(steps):
            dy, dx = [(0, 1), (0, -1), (1, 0), (-1, 0)][rng.integers(4)]
            y = min(max(y + dy, 0), size - 1)
            x = min(max(x + dx, 0), size - 1)
            grid[y, x] = True
    return grid
