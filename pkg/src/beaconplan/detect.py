"""Corner-feature detection and template matching for building-block symbols.

Features come from the minimum eigenvalue of the local gradient structure
tensor; matching is exhaustive sum-of-squared-differences between a feature
neighbourhood and every configured template variant (rotations, mirrors for
door symbols, three scales).  Scores are reported as per-pixel RMS distance
on mean-removed patches, so 0 means a perfect copy and brightness offsets
between scans do not matter.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import TemplateError
from .imagecore import RasterImage
from .pathfind import IndoorPath

DEFAULT_QUALITY = 0.05
DEFAULT_MAX_SCORE = 0.18
STRUCTURE_WINDOW = 5
TEMPLATE_SCALES = (0.75, 1.0, 1.25)
MIRRORED_KINDS = frozenset({"door"})


@dataclass
class Template:
    """One building-block symbol patch (door, stair, elevator, ...)."""

    kind: str
    patch: np.ndarray  # uint8 grayscale
    group: int = 0
    physical_hint: float | None = None  # typical symbol size in drawing inches

    def __post_init__(self):
        if not self.kind or not self.kind.strip():
            raise TemplateError("template kind must be nonblank")
        patch = np.asarray(self.patch, dtype=np.uint8)
        if patch.ndim != 2 or patch.size == 0:
            raise TemplateError(f"template {self.kind!r} patch must be a nonempty 2-D grid")
        self.patch = patch


@dataclass(frozen=True)
class FeaturePoint:
    x: int
    y: int
    score: float


@dataclass(frozen=True)
class MatchCandidate:
    x: int
    y: int
    kind: str
    score: float  # match distance, lower = better
    source: str = "FDM"


def _sobel(gray: np.ndarray):
    padded = np.pad(gray, 1, mode="edge")
    gx = (padded[:-2, 2:] + 2 * padded[1:-1, 2:] + padded[2:, 2:]
          - padded[:-2, :-2] - 2 * padded[1:-1, :-2] - padded[2:, :-2])
    gy = (padded[2:, :-2] + 2 * padded[2:, 1:-1] + padded[2:, 2:]
          - padded[:-2, :-2] - 2 * padded[:-2, 1:-1] - padded[:-2, 2:])
    return gx, gy


def _box_sum(a: np.ndarray, radius: int) -> np.ndarray:
    """Sliding-window sum over a (2*radius+1) square via an integral image."""
    h, w = a.shape
    integral = np.zeros((h + 1, w + 1), dtype=np.float64)
    integral[1:, 1:] = np.cumsum(np.cumsum(a, axis=0), axis=1)
    y0 = np.clip(np.arange(h) - radius, 0, h)
    y1 = np.clip(np.arange(h) + radius + 1, 0, h)
    x0 = np.clip(np.arange(w) - radius, 0, w)
    x1 = np.clip(np.arange(w) + radius + 1, 0, w)
    return (integral[np.ix_(y1, x1)] - integral[np.ix_(y0, x1)]
            - integral[np.ix_(y1, x0)] + integral[np.ix_(y0, x0)])


def corner_response(gray: np.ndarray, window: int = STRUCTURE_WINDOW) -> np.ndarray:
    """Minimum eigenvalue of the structure tensor at every pixel."""
    gx, gy = _sobel(np.asarray(gray, dtype=np.float64))
    radius = window // 2
    sxx = _box_sum(gx * gx, radius)
    syy = _box_sum(gy * gy, radius)
    sxy = _box_sum(gx * gy, radius)
    half_trace = (sxx + syy) / 2.0
    return half_trace - np.sqrt(((sxx - syy) / 2.0) ** 2 + sxy * sxy)


def detect_features(img: RasterImage, quality: float = DEFAULT_QUALITY,
                    min_spacing: float = 5.0) -> list[FeaturePoint]:
    """Corner points above ``quality`` x the strongest response, spaced apart.

    Local maxima of the min-eigenvalue response survive a greedy
    non-maximum suppression at ``min_spacing`` pixels and come back sorted
    by descending strength (ties broken by position for determinism).
    """
    if not 0 <= quality <= 1:
        raise ValueError(f"quality must be in [0, 1], got {quality}")
    resp = corner_response(img.pixels)
    border = STRUCTURE_WINDOW // 2 + 1  # window is truncated there
    resp[:border, :] = 0
    resp[-border:, :] = 0
    resp[:, :border] = 0
    resp[:, -border:] = 0
    peak = resp.max()
    if peak <= 0:
        return []
    threshold = quality * peak
    padded = np.pad(resp, 1, constant_values=-np.inf)
    is_max = np.ones_like(resp, dtype=bool)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if (dy, dx) == (0, 0):
                continue
            is_max &= resp >= padded[1 + dy:padded.shape[0] - 1 + dy,
                                     1 + dx:padded.shape[1] - 1 + dx]
    ys, xs = np.nonzero(is_max & (resp >= threshold))
    scores = resp[ys, xs]
    order = np.lexsort((xs, ys, -scores))
    ys, xs, scores = ys[order], xs[order], scores[order]
    kept_y, kept_x, kept_s = [], [], []
    min_sq = float(min_spacing) ** 2
    for y, x, s in zip(ys, xs, scores):
        ok = True
        for ky, kx in zip(kept_y, kept_x):
            if (y - ky) ** 2 + (x - kx) ** 2 < min_sq:
                ok = False
                break
        if ok:
            kept_y.append(int(y))
            kept_x.append(int(x))
            kept_s.append(float(s))
    return [FeaturePoint(x=x, y=y, score=s) for y, x, s in zip(kept_y, kept_x, kept_s)]


def _resize(patch: np.ndarray, factor: float) -> np.ndarray:
    if factor == 1.0:
        return patch
    h = max(2, int(round(patch.shape[0] * factor)))
    w = max(2, int(round(patch.shape[1] * factor)))
    return np.asarray(Image.fromarray(patch).resize((w, h), Image.BILINEAR))


def template_base_size(template: Template, dpi: float | None) -> int:
    """Template width in image pixels implied by DPI and the physical hint."""
    if dpi and template.physical_hint:
        return max(2, int(round(template.physical_hint * dpi)))
    return template.patch.shape[1]


def template_variants(template: Template, dpi: float | None = None):
    """All rotation/mirror/scale variants, deduplicated, as float patches."""
    base = template.patch
    if dpi and template.physical_hint:
        target = template_base_size(template, dpi)
        if target != base.shape[1]:
            base = _resize(base, target / base.shape[1])
    shapes = [base]
    if template.kind in MIRRORED_KINDS:
        shapes.append(np.fliplr(base))
    rotated = []
    for s in shapes:
        for k in range(4):
            rotated.append(np.rot90(s, k))
    variants, seen = [], set()
    for r in rotated:
        for scale in TEMPLATE_SCALES:
            v = _resize(r, scale)
            key = (v.shape, v.tobytes())
            if key not in seen:
                seen.add(key)
                variants.append(np.ascontiguousarray(v, dtype=np.float64))
    return variants


def patch_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Per-pixel RMS distance between two equal-shape mean-removed patches."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = (a - a.mean()) - (b - b.mean())
    return float(np.sqrt((diff * diff).sum() / a.size) / 255.0)


def _scores_at_topleft(gray, tly, tlx, variant):
    """SSD scores for the variant placed at the given top-left coordinates.

    Placements that leave the image score infinity.
    """
    th, tw = variant.shape
    h, w = gray.shape
    valid = (tly >= 0) & (tly + th <= h) & (tlx >= 0) & (tlx + tw <= w)
    scores = np.full(len(tly), np.inf)
    if not valid.any():
        return scores
    vy, vx = tly[valid], tlx[valid]
    dy = np.arange(th)[None, :, None]
    dx = np.arange(tw)[None, None, :]
    patches = gray[vy[:, None, None] + dy, vx[:, None, None] + dx]
    patches = patches - patches.mean(axis=(1, 2), keepdims=True)
    tpl = variant - variant.mean()
    diff = patches - tpl[None, :, :]
    ssd = np.einsum("nij,nij->n", diff, diff)
    scores[valid] = np.sqrt(ssd / (th * tw)) / 255.0
    return scores


def _template_anchors(variant: np.ndarray, cap: int = 4):
    """Corner features of the template itself, plus its centre.

    A symbol instance in the plan fires image features at the same corners
    the template has, so aligning template corners onto image features
    covers the true placement without a sliding-window search.
    """
    cy, cx = variant.shape[0] // 2, variant.shape[1] // 2
    anchors = [(cx, cy)]
    patch = np.clip(variant, 0, 255).astype(np.uint8)
    try:
        feats = detect_features(RasterImage(patch), quality=0.2,
                                min_spacing=max(2.0, min(variant.shape) / 4))
    except Exception:
        return anchors
    for f in feats[:cap]:
        if (f.x, f.y) != (cx, cy):
            anchors.append((f.x, f.y))
    return anchors


def match_templates(img: RasterImage, features: list[FeaturePoint],
                    templates: list[Template],
                    max_score: float = DEFAULT_MAX_SCORE) -> list[MatchCandidate]:
    """Match every feature neighbourhood against every template variant.

    Template corner anchors are aligned onto each image feature and the SSD
    evaluated at the implied placements; a candidate is emitted at the best
    placement's centre per (feature, kind) when its score is at or below
    ``max_score``.  Overlapping same-kind candidates within one template
    width collapse to the best-scoring one.
    """
    if not templates:
        raise TemplateError("template set is empty")
    for t in templates:
        if t.patch.shape[0] > img.height or t.patch.shape[1] > img.width:
            raise TemplateError(f"template {t.kind!r} is larger than the image")
    if not features:
        return []
    gray = np.asarray(img.pixels, dtype=np.float64)
    ys = np.array([f.y for f in features])
    xs = np.array([f.x for f in features])
    n = len(features)
    candidates = []
    widths: dict[str, int] = {}
    for template in templates:
        width = template_base_size(template, img.dpi_x)
        widths[template.kind] = max(width, widths.get(template.kind, 0))
        best = np.full(n, np.inf)
        best_cx = np.zeros(n, dtype=np.int64)
        best_cy = np.zeros(n, dtype=np.int64)
        for variant in template_variants(template, img.dpi_x):
            th, tw = variant.shape
            for ax, ay in _template_anchors(variant):
                tly = ys - ay
                tlx = xs - ax
                scores = _scores_at_topleft(gray, tly, tlx, variant)
                upd = scores < best
                if upd.any():
                    best[upd] = scores[upd]
                    best_cx[upd] = tlx[upd] + tw // 2
                    best_cy[upd] = tly[upd] + th // 2
        for i in np.nonzero(best <= max_score)[0]:
            candidates.append(MatchCandidate(
                x=int(best_cx[i]), y=int(best_cy[i]), kind=template.kind,
                score=float(best[i]), source="FDM",
            ))
    return suppress_overlaps(candidates, widths)


def suppress_overlaps(candidates: list[MatchCandidate],
                      widths: dict[str, int]) -> list[MatchCandidate]:
    """Keep the best candidate per kind within one template width."""
    kept: list[MatchCandidate] = []
    for cand in sorted(candidates, key=lambda c: (c.score, c.y, c.x)):
        width = widths.get(cand.kind, 0)
        conflict = any(
            k.kind == cand.kind and (k.x - cand.x) ** 2 + (k.y - cand.y) ** 2 < width ** 2
            for k in kept
        )
        if not conflict:
            kept.append(cand)
    return sorted(kept, key=lambda c: (c.score, c.y, c.x))


def filter_by_region(cands: list[MatchCandidate], path: IndoorPath,
                     proximity: float) -> list[MatchCandidate]:
    """Keep candidates within ``proximity`` pixels of a walkable path pixel."""
    if math.isinf(proximity):
        return list(cands)
    if proximity < 0:
        raise ValueError(f"proximity must be >= 0, got {proximity}")
    bits = path.mask.bits
    h, w = bits.shape
    radius = int(math.ceil(proximity))
    span = np.arange(-radius, radius + 1)
    within = (span[:, None] ** 2 + span[None, :] ** 2) <= float(proximity) ** 2
    kept = []
    for cand in cands:
        y0, y1 = max(0, cand.y - radius), min(h, cand.y + radius + 1)
        x0, x1 = max(0, cand.x - radius), min(w, cand.x + radius + 1)
        if y0 >= y1 or x0 >= x1:
            continue
        window = bits[y0:y1, x0:x1]
        disc = within[y0 - (cand.y - radius):y1 - (cand.y - radius),
                      x0 - (cand.x - radius):x1 - (cand.x - radius)]
        if (window & disc).any():
            kept.append(cand)
    return kept


def load_templates(directory) -> list[Template]:
    """Read a template library: image patches plus a JSON manifest."""
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise TemplateError(f"no manifest.json in {directory}")
    entries = json.loads(manifest_path.read_text())
    templates = []
    for entry in entries:
        patch = np.asarray(Image.open(directory / entry["file"]).convert("L"))
        templates.append(Template(
            kind=entry["kind"],
            patch=patch,
            group=int(entry.get("group", 0)),
            physical_hint=entry.get("physical_hint"),
        ))
    return templates


def save_templates(templates: list[Template], directory) -> None:
    """Write patches and manifest in the layout load_templates expects."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = []
    for i, t in enumerate(templates):
        name = f"{t.kind}_{i}.png"
        Image.fromarray(t.patch).save(directory / name)
        manifest.append({
            "file": name, "kind": t.kind, "group": t.group,
            "physical_hint": t.physical_hint,
        })
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2))
