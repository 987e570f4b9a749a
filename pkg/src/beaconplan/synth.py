"""Synthetic floor-plan generator with exact ground truth.

Produces page-margin + outer-wall + corridor-ladder plans with rooms whose
door and stair symbols are stamped from the same patches the template
library carries, so detector behaviour can be scored against known symbol
centres.  Also renders the patch corpus the bundled door classifier is
trained on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from PIL import Image
from scipy import ndimage

from .detect import Template
from .imagecore import RasterImage

INK = 0
PAPER = 255
WALL_T = 2  # wall line thickness in pixels


def door_symbol(size: int = 37) -> np.ndarray:
    """Door plan symbol: jamb stubs, leaf, and quarter swing arc.

    The jamb sits on the bottom two rows so the patch can replace a wall
    segment; the arc opens upward (into the room side).
    """
    s = size
    patch = np.full((s, s), PAPER, dtype=np.uint8)
    jamb_top = s - WALL_T
    patch[jamb_top:, 0:3] = INK            # left jamb stub
    patch[jamb_top:, s - 3:] = INK         # right jamb stub
    hinge_y, hinge_x = jamb_top, 3
    radius = s - 7
    patch[hinge_y - radius:jamb_top, hinge_x - 1:hinge_x + 1] = INK  # leaf
    for t in np.linspace(0.0, np.pi / 2, 6 * s):
        y = int(round(hinge_y - radius * np.sin(t)))
        x = int(round(hinge_x + radius * np.cos(t)))
        if 0 <= y < s and 0 <= x < s:
            patch[y, x] = INK
            if x + 1 < s:
                patch[y, x + 1] = INK      # 2-px stroke keeps the arc sealed
    return patch


def stair_symbol(size: int = 37, rungs: int = 5) -> np.ndarray:
    """Stair plan symbol: side rails, top cap, and evenly spaced treads.

    Open entrance on the bottom edge between rail stubs; the first tread
    seals the shaft from the room behind it.
    """
    s = size
    patch = np.full((s, s), PAPER, dtype=np.uint8)
    patch[:, 1:3] = INK                    # rails
    patch[:, s - 3:s - 1] = INK
    patch[0:WALL_T, 1:s - 1] = INK         # top cap
    ys = np.linspace(4, s - 7, rungs).astype(int)
    for y in ys:
        patch[y:y + WALL_T, 2:s - 2] = INK
    patch[s - WALL_T:, 0:3] = INK          # jamb stubs at the entrance
    patch[s - WALL_T:, s - 3:] = INK
    return patch


def default_templates(size: int = 37, dpi: float = 200.0) -> list[Template]:
    """The symbol library stamped into synthetic plans."""
    hint = size / dpi  # drawing inches at the generator's native resolution
    return [
        Template("door", door_symbol(size), group=1, physical_hint=hint),
        Template("stair", stair_symbol(size), group=1, physical_hint=hint),
    ]


@dataclass(frozen=True)
class SymbolTruth:
    x: int
    y: int
    kind: str


@dataclass
class SyntheticPlan:
    image: RasterImage
    truths: list[SymbolTruth]
    scale: float  # drawing inches per physical foot
    map_orientation: str = "N"
    corridor_probe: tuple[int, int] = (0, 0)  # (x, y) guaranteed corridor pixel


class _Canvas:
    def __init__(self, width, height):
        self.px = np.full((height, width), PAPER, dtype=np.uint8)

    def rect(self, x0, y0, x1, y1):
        """Filled ink rectangle, end-exclusive."""
        self.px[y0:y1, x0:x1] = INK

    def box(self, x0, y0, x1, y1, t=WALL_T):
        self.rect(x0, y0, x1, y0 + t)
        self.rect(x0, y1 - t, x1, y1)
        self.rect(x0, y0, x0 + t, y1)
        self.rect(x1 - t, y0, x1, y1)

    def stamp(self, patch, x0, y0):
        h, w = patch.shape
        self.px[y0:y0 + h, x0:x0 + w] = patch


def _stamp_on_wall(canvas, patch, orientation, cx, cy):
    """Replace a wall segment with an oriented symbol patch.

    ``orientation`` names the side the doorway faces: the room is on the
    opposite side.  ``(cx, cy)`` is the symbol centre; the jamb rows of the
    patch land exactly on the wall line through that centre.
    """
    s = patch.shape[0]
    half = s // 2
    rotated = np.rot90(patch, {"S": 0, "E": 1, "N": 2, "W": 3}[orientation])
    if orientation == "S":       # wall horizontal, corridor below
        x0, y0 = cx - half, cy - (s - WALL_T // 2) + 1
    elif orientation == "N":     # corridor above
        x0, y0 = cx - half, cy - WALL_T // 2
    elif orientation == "E":     # wall vertical, corridor right
        x0, y0 = cx - (s - WALL_T // 2) + 1, cy - half
    else:                        # corridor left
        x0, y0 = cx - WALL_T // 2, cy - half
    canvas.stamp(rotated, x0, y0)
    return x0 + s // 2, y0 + s // 2


def generate_plan(width: int = 2200, height: int = 3400, dpi: float = 200.0,
                  seed: int = 0, symbol_size: int = 37,
                  room_span: int = 380, stair_every: int = 5,
                  clutter: bool = True) -> SyntheticPlan:
    """Ladder-shaped corridor plan with door/stair symbols and ground truth.

    The corridor (spine plus rungs) is guaranteed to be the largest
    interior free-space region; every room is sealed off by its door's
    swing arc so phase 1 finds the corridor alone.
    """
    rng = np.random.default_rng(seed)
    canvas = _Canvas(width, height)
    margin = max(40, width // 22)
    canvas.box(margin, margin, width - margin, height - margin)

    half = 38                                  # corridor half-width ~6 ft at 200 dpi
    xc = width // 2
    spine = (xc - half, xc + half)
    canvas.rect(spine[0] - WALL_T, margin, spine[0], height - margin)
    canvas.rect(spine[1], margin, spine[1] + WALL_T, height - margin)

    n_branches = max(2, height // 1100)
    branch_ys = np.linspace(margin + 320, height - margin - 320, n_branches).astype(int)
    for yb in branch_ys:
        # open the spine walls across the branch, then wall the branch
        canvas.px[yb - half:yb + half, spine[0] - WALL_T:spine[0]] = PAPER
        canvas.px[yb - half:yb + half, spine[1]:spine[1] + WALL_T] = PAPER
        for xa, xb in ((margin, spine[0]), (spine[1] + WALL_T, width - margin)):
            canvas.rect(xa, yb - half - WALL_T, xb, yb - half)
            canvas.rect(xa, yb + half, xb, yb + half + WALL_T)

    truths: list[SymbolTruth] = []
    patch_by_kind = {"door": door_symbol(symbol_size), "stair": stair_symbol(symbol_size)}
    placed = 0

    def room_band_cells():
        """Rectangular room cells flanking the spine between branch corridors."""
        y_cuts = [margin] + [int(y) for y in branch_ys] + [height - margin]
        for i in range(len(y_cuts) - 1):
            top = y_cuts[i] + (half + WALL_T if i > 0 else WALL_T)
            bot = y_cuts[i + 1] - (half + WALL_T if i + 1 < len(y_cuts) - 1 else WALL_T)
            if bot - top < 120:
                continue
            yield (margin + WALL_T, spine[0] - WALL_T, top, bot, "W")   # left band
            yield (spine[1] + WALL_T, width - margin - WALL_T, top, bot, "E")  # right band

    for x0, x1, y0, y1, side in room_band_cells():
        n_rooms = max(1, (y1 - y0) // room_span)
        cuts = np.linspace(y0, y1, n_rooms + 1).astype(int)
        for j in range(n_rooms):
            ry0, ry1 = int(cuts[j]), int(cuts[j + 1])
            if j > 0:
                canvas.rect(x0, ry0, x1, ry0 + WALL_T)  # partition wall
            if ry1 - ry0 < symbol_size + 24:
                continue
            wall_x = x1 if side == "W" else x0 - WALL_T  # corridor-facing wall
            cy = int(rng.integers(ry0 + symbol_size // 2 + 8,
                                  ry1 - symbol_size // 2 - 8))
            kind = "stair" if placed % stair_every == stair_every - 1 else "door"
            facing = "E" if side == "W" else "W"
            cx_wall = wall_x + WALL_T // 2
            sx, sy = _stamp_on_wall(canvas, patch_by_kind[kind], facing, cx_wall, cy)
            truths.append(SymbolTruth(x=sx, y=sy, kind=kind))
            placed += 1
            if clutter and ry1 - ry0 > 180:
                fx0 = int(rng.integers(x0 + 60, x1 - 120))
                fy0 = int(rng.integers(ry0 + 60, ry1 - 120))
                canvas.box(fx0, fy0, fx0 + int(rng.integers(30, 70)),
                           fy0 + int(rng.integers(30, 70)), t=1)

    scale = 1.0 / 16.0  # 1/16" = 1'
    return SyntheticPlan(
        image=RasterImage(canvas.px, dpi_x=dpi, dpi_y=dpi),
        truths=truths,
        scale=scale,
        corridor_probe=(xc, height // 2),
    )


def degrade_plan(plan: SyntheticPlan, factor: int = 2, seed: int = 0,
                 blur_sigma: float = 1.4, noise_sigma: float = 10.0) -> SyntheticPlan:
    """Simulate a low-resolution scan: blur, downsample, and add sensor noise."""
    rng = np.random.default_rng(seed)
    px = plan.image.pixels.astype(np.float64)
    px = ndimage.gaussian_filter(px, blur_sigma)
    h, w = px.shape
    h2, w2 = (h // factor) * factor, (w // factor) * factor
    px = px[:h2, :w2].reshape(h2 // factor, factor, w2 // factor, factor).mean(axis=(1, 3))
    px = px + rng.normal(0, noise_sigma, px.shape)
    px = np.clip(px, 0, 255).astype(np.uint8)
    dpi = (plan.image.dpi_x or 200.0) / factor
    return SyntheticPlan(
        image=RasterImage(px, dpi_x=dpi, dpi_y=dpi),
        truths=[SymbolTruth(x=t.x // factor, y=t.y // factor, kind=t.kind)
                for t in plan.truths],
        scale=plan.scale,
        map_orientation=plan.map_orientation,
        corridor_probe=(plan.corridor_probe[0] // factor, plan.corridor_probe[1] // factor),
    )


def _jitter_patch(patch, rng, blur, noise, shift):
    out = np.full_like(patch, PAPER)
    dy, dx = int(rng.integers(-shift, shift + 1)), int(rng.integers(-shift, shift + 1))
    src = patch
    h, w = patch.shape
    ys0, ys1 = max(0, dy), min(h, h + dy)
    xs0, xs1 = max(0, dx), min(w, w + dx)
    out[ys0:ys1, xs0:xs1] = src[ys0 - dy:ys1 - dy, xs0 - dx:xs1 - dx]
    arr = out.astype(np.float64)
    if blur > 0:
        arr = ndimage.gaussian_filter(arr, blur)
    if noise > 0:
        arr = arr + rng.normal(0, noise, arr.shape)
    return np.clip(arr, 0, 255).astype(np.uint8)


def patch_corpus(kind: str, n: int, seed: int = 0, size: int = 32,
                 symbol_size: int = 37) -> list[np.ndarray]:
    """Labelled training patches for one symbol class.

    ``kind`` may be a symbol name, ``"clutter"`` (wall corners and furniture
    boxes), or ``"blank"``.  Patches are jittered, blurred, and noised the
    way scanned plans are.
    """
    rng = np.random.default_rng(seed)
    base = {"door": door_symbol(symbol_size), "stair": stair_symbol(symbol_size)}
    out = []
    for _ in range(n):
        if kind in base:
            patch = base[kind]
        elif kind == "clutter":
            patch = np.full((symbol_size, symbol_size), PAPER, dtype=np.uint8)
            kind_roll = rng.random()
            if kind_roll < 0.4:    # L corner
                patch[symbol_size // 2:symbol_size // 2 + 2, 4:-4] = INK
                patch[4:symbol_size // 2 + 2, symbol_size // 2:symbol_size // 2 + 2] = INK
            elif kind_roll < 0.7:  # straight wall
                patch[symbol_size // 2:symbol_size // 2 + 2, :] = INK
            else:                  # furniture box
                a = int(rng.integers(4, 10))
                patch = patch.copy()
                patch[a:-a, a:a + 1] = INK
                patch[a:-a, -a - 1:-a] = INK
                patch[a:a + 1, a:-a] = INK
                patch[-a - 1:-a, a:-a] = INK
        elif kind == "blank":
            patch = np.full((symbol_size, symbol_size), PAPER, dtype=np.uint8)
        else:
            raise ValueError(f"unknown corpus kind {kind!r}")
        jittered = _jitter_patch(patch, rng,
                                 blur=float(rng.uniform(0, 1.3)),
                                 noise=float(rng.uniform(0, 12)),
                                 shift=3)
        resized = np.asarray(Image.fromarray(jittered).resize((size, size), Image.BILINEAR))
        out.append(resized)
    return out
