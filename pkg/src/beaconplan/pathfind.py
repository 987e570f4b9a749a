"""Indoor walking-path extraction and room segmentation.

The walkable corridor network is the largest interior free-space region of
the plan.  Free space touching the image border is page margin and never a
path or room candidate.  Restricted zones are simple polygons with integer
access levels: at or above the caller's cutoff they block traversal
outright, below it they merely annotate graph edges downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoWalkableAreaError, ZoneError
from .imagecore import BinaryImage, LabelImage, dilate, label_regions

# Fraction of total plan pixels below which an enclosed area is noise, not a room.
DEFAULT_MIN_ROOM_FRACTION = 0.0025


@dataclass
class Zone:
    """Restricted area: closed polygon in pixel-corner coordinates plus a level.

    Level 0 means full public access; higher levels are progressively more
    restricted, with the project-wide maximum meaning no public access.
    """

    polygon: list[tuple[float, float]]
    level: int

    def __post_init__(self):
        if len(self.polygon) < 3:
            raise ZoneError(f"polygon needs >= 3 vertices, got {len(self.polygon)}")
        if self.level < 0:
            raise ZoneError(f"level must be >= 0, got {self.level}")
        if _self_intersects(self.polygon):
            raise ZoneError("polygon is self-intersecting")


@dataclass
class IndoorPath:
    """One connected free-space component chosen as the walking path."""

    mask: BinaryImage  # True = walkable pixel
    source_label: int
    area: int

    def __post_init__(self):
        if self.area != self.mask.count():
            raise ValueError("area does not match mask population")


@dataclass
class RoomSegment:
    mask: BinaryImage
    area: int
    bbox: tuple[int, int, int, int]  # (min_x, min_y, max_x, max_y), inclusive


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _segments_cross(p1, p2, p3, p4):
    """True when open segments p1-p2 and p3-p4 properly intersect."""
    d1 = _orient(*p3, *p4, *p1)
    d2 = _orient(*p3, *p4, *p2)
    d3 = _orient(*p1, *p2, *p3)
    d4 = _orient(*p1, *p2, *p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != d2 and d3 != d4


def _self_intersects(poly) -> bool:
    n = len(poly)
    for i in range(n):
        for j in range(i + 1, n):
            if abs(i - j) in (0, 1) or (i == 0 and j == n - 1):
                continue  # adjacent edges share a vertex
            if _segments_cross(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]):
                return True
    return False


def rasterize_polygon(polygon, shape) -> np.ndarray:
    """Mask of pixels whose centres (x+0.5, y+0.5) fall inside the polygon.

    Even-odd rule, vectorised crossing count restricted to the polygon's
    bounding box.
    """
    h, w = shape
    xs = np.array([p[0] for p in polygon], dtype=np.float64)
    ys = np.array([p[1] for p in polygon], dtype=np.float64)
    x0 = max(0, int(math.floor(xs.min() - 0.5)))
    x1 = min(w - 1, int(math.ceil(xs.max())))
    y0 = max(0, int(math.floor(ys.min() - 0.5)))
    y1 = min(h - 1, int(math.ceil(ys.max())))
    mask = np.zeros(shape, dtype=bool)
    if x0 > x1 or y0 > y1:
        return mask
    cx = np.arange(x0, x1 + 1, dtype=np.float64)[None, :] + 0.5
    cy = np.arange(y0, y1 + 1, dtype=np.float64)[:, None] + 0.5
    inside = np.zeros((y1 - y0 + 1, x1 - x0 + 1), dtype=bool)
    n = len(polygon)
    for i in range(n):
        ax, ay = xs[i], ys[i]
        bx, by = xs[(i + 1) % n], ys[(i + 1) % n]
        if ay == by:
            continue
        straddles = (ay > cy) != (by > cy)
        x_cross = (bx - ax) * (cy - ay) / (by - ay) + ax
        inside ^= straddles & (cx < x_cross)
    mask[y0:y1 + 1, x0:x1 + 1] = inside
    return mask


def _check_bounds(zone: Zone, index: int, shape):
    h, w = shape
    for vx, vy in zone.polygon:
        if not (0 <= vx <= w and 0 <= vy <= h):
            raise ZoneError(
                f"zone {index}: vertex ({vx}, {vy}) outside plan bounds {w}x{h}",
                zone_index=index,
            )


def apply_zones(bin_img: BinaryImage, zones: list[Zone], access_cutoff: int) -> BinaryImage:
    """Block free space inside every zone at or above the access cutoff.

    Zones below the cutoff leave the pixel classes untouched; their levels
    are picked up later by :func:`zone_level_grid` for edge annotation.
    """
    if access_cutoff < 0:
        raise ValueError(f"access cutoff must be >= 0, got {access_cutoff}")
    shape = bin_img.bits.shape
    blocked = np.zeros(shape, dtype=bool)
    for i, zone in enumerate(zones):
        _check_bounds(zone, i, shape)
        if zone.level >= access_cutoff:
            blocked |= rasterize_polygon(zone.polygon, shape)
    if not blocked.any():
        return BinaryImage(bin_img.bits.copy())
    return BinaryImage(bin_img.bits | blocked)


def zone_level_grid(zones: list[Zone], access_cutoff: int, shape) -> np.ndarray:
    """Per-pixel maximum level over sub-cutoff zones (0 where none applies)."""
    levels = np.zeros(shape, dtype=np.int32)
    for i, zone in enumerate(zones):
        _check_bounds(zone, i, shape)
        if 0 < zone.level < access_cutoff:
            inside = rasterize_polygon(zone.polygon, shape)
            levels[inside] = np.maximum(levels[inside], zone.level)
    return levels


def extract_indoor_path(labels: LabelImage, exclude_border: bool = True) -> IndoorPath:
    """Pick the maximum-area free-space region; ties go to the lowest label.

    Border-touching regions are page margin and excluded by default.
    """
    candidates = [s for s in labels.region_stats
                  if not (exclude_border and s.touches_border)]
    if not candidates:
        raise NoWalkableAreaError("no interior free-space region in plan")
    best = max(candidates, key=lambda s: (s.area, -s.label))
    return IndoorPath(
        mask=BinaryImage(labels.labels == best.label),
        source_label=best.label,
        area=best.area,
    )


def segment_rooms(bin_img: BinaryImage, path: IndoorPath,
                  min_area: int | None = None,
                  dilation_radius: int = 1) -> list[RoomSegment]:
    """Extract enclosed rooms after thickening line-work to close door gaps.

    Drops the indoor path itself, the page margin, and anything smaller
    than ``min_area`` (default 0.25% of the plan).
    """
    if bin_img.bits.shape != path.mask.bits.shape:
        raise ValueError("path was extracted from a different plan")
    if min_area is None:
        min_area = int(DEFAULT_MIN_ROOM_FRACTION * bin_img.bits.size)
    thick = dilate(bin_img, dilation_radius)
    labelled = label_regions(thick, target="free-space")
    path_bits = path.mask.bits
    rooms = []
    for stat in labelled.region_stats:
        if stat.touches_border or stat.area < min_area:
            continue
        mask = labelled.labels == stat.label
        if (mask & path_bits).any():
            continue  # this is the (possibly shrunken) walking path
        rooms.append(RoomSegment(mask=BinaryImage(mask), area=stat.area, bbox=stat.bbox))
    return rooms
