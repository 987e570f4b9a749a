"""Raster data model and low-level image operations.

Conventions used throughout the toolkit:

* grids are numpy arrays indexed ``[y, x]`` (row-major);
* foreground means dark ink/line pixels, free space (walkable area) is the
  background class;
* all operations are pure functions over inputs that are treated as
  immutable, so concurrent use is safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import DimensionError

# 8-neighbour offsets as (dy, dx), clockwise from north.
NEIGHBOUR_OFFSETS = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))


@dataclass
class RasterImage:
    """Grayscale floor-plan raster with optional physical-resolution metadata.

    ``dpi_x``/``dpi_y`` stay unset for images without known resolution;
    physical-distance operations reject such images.
    """

    pixels: np.ndarray  # uint8, shape (height, width)
    dpi_x: float | None = None
    dpi_y: float | None = None

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim == 3:  # colour input: collapse by luminance
            px = np.asarray(Image.fromarray(px.astype(np.uint8)).convert("L"))
        if px.ndim != 2 or px.size == 0:
            raise DimensionError(f"expected a nonempty 2-D grid, got shape {px.shape}")
        for name in ("dpi_x", "dpi_y"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")
        self.pixels = np.ascontiguousarray(px, dtype=np.uint8)
        self.pixels.flags.writeable = False

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def has_dpi(self) -> bool:
        return self.dpi_x is not None and self.dpi_y is not None

    @classmethod
    def from_file(cls, path, dpi_x=None, dpi_y=None) -> "RasterImage":
        """Load any raster format Pillow understands, converting to grayscale.

        Explicit dpi arguments win over resolution metadata embedded in the
        file.
        """
        with Image.open(path) as im:
            file_dpi = im.info.get("dpi")
            gray = np.asarray(im.convert("L"))
        if file_dpi and dpi_x is None and dpi_y is None:
            dpi_x, dpi_y = float(file_dpi[0]) or None, float(file_dpi[1]) or None
        return cls(gray, dpi_x=dpi_x, dpi_y=dpi_y)


@dataclass
class BinaryImage:
    """Boolean grid where True marks foreground (ink/line) pixels."""

    bits: np.ndarray  # bool, shape (height, width)

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2 or bits.size == 0:
            raise DimensionError(f"expected a nonempty 2-D grid, got shape {bits.shape}")
        self.bits = np.ascontiguousarray(bits, dtype=bool)
        self.bits.flags.writeable = False

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def count(self) -> int:
        return int(self.bits.sum())


@dataclass
class RegionStat:
    label: int
    area: int
    bbox: tuple[int, int, int, int]  # (min_x, min_y, max_x, max_y), inclusive
    touches_border: bool


@dataclass
class LabelImage:
    """Integer grid of connected-region labels (0 = not part of the target class)."""

    labels: np.ndarray  # int32, shape (height, width)
    region_stats: list[RegionStat] = field(default_factory=list)

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]


def otsu_threshold(pixels: np.ndarray) -> int:
    """Histogram-based threshold maximising between-class variance."""
    hist = np.bincount(np.asarray(pixels, dtype=np.uint8).ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    cum = np.cumsum(hist)
    cum_mean = np.cumsum(hist * np.arange(256))
    w0 = cum / total
    w1 = 1.0 - w0
    valid = (w0 > 0) & (w1 > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mu0 = cum_mean / cum
        mu1 = (cum_mean[-1] - cum_mean) / (total - cum)
    sigma = np.where(valid, w0 * w1 * (mu0 - mu1) ** 2, -1.0)
    # Otsu's t splits [0..t] from [t+1..]; binarize() uses strict <, so shift by one
    return int(np.argmax(sigma)) + 1


def binarize(img: RasterImage, threshold=128) -> BinaryImage:
    """Mark pixels strictly below the threshold as foreground (dark = ink).

    ``threshold`` is an intensity in 0..255 or the string ``"otsu"`` for an
    adaptive split suited to scanned plans.
    """
    if threshold == "otsu":
        threshold = otsu_threshold(img.pixels)
    return BinaryImage(img.pixels < int(threshold))


def label_regions(bin_img: BinaryImage, target: str = "foreground",
                  connectivity: int | None = None) -> LabelImage:
    """Label connected components of the chosen pixel class.

    ``target`` selects foreground (ink) or free-space (walkable background)
    pixels.  Defaults: 8-connectivity for foreground, 4 for free space, the
    standard duality that avoids tunnel artifacts.
    """
    if target not in ("foreground", "free-space"):
        raise ValueError(f"unknown target class {target!r}")
    grid = bin_img.bits if target == "foreground" else ~bin_img.bits
    if connectivity is None:
        connectivity = 8 if target == "foreground" else 4
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    structure = np.ones((3, 3), dtype=bool) if connectivity == 8 else None
    labels, n = ndimage.label(grid, structure=structure)
    labels = labels.astype(np.int32)
    stats = []
    if n:
        areas = np.bincount(labels.ravel(), minlength=n + 1)
        border = np.zeros(n + 1, dtype=bool)
        for edge in (labels[0, :], labels[-1, :], labels[:, 0], labels[:, -1]):
            border[np.unique(edge)] = True
        for lab, sl in enumerate(ndimage.find_objects(labels), start=1):
            if sl is None:
                continue
            ys, xs = sl
            stats.append(RegionStat(
                label=lab,
                area=int(areas[lab]),
                bbox=(xs.start, ys.start, xs.stop - 1, ys.stop - 1),
                touches_border=bool(border[lab]),
            ))
    return LabelImage(labels, stats)


def _grow_axis0(bits: np.ndarray, radius: int) -> np.ndarray:
    out = bits.copy()
    for shift in range(1, radius + 1):
        out[shift:, :] |= bits[:-shift, :]
        out[:-shift, :] |= bits[shift:, :]
    return out


def dilate(bin_img: BinaryImage, radius: int) -> BinaryImage:
    """Grow foreground by a square structuring element of half-width ``radius``."""
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    if radius == 0:
        return BinaryImage(bin_img.bits.copy())
    # square element is separable: vertical then horizontal runs
    grown = _grow_axis0(bin_img.bits, radius)
    grown = _grow_axis0(grown.T, radius).T
    return BinaryImage(grown)


def neighbour_counts(mask: np.ndarray) -> np.ndarray:
    """Count of foreground 8-neighbours at every pixel of a boolean grid."""
    padded = np.pad(np.asarray(mask, dtype=np.uint8), 1)
    h, w = padded.shape
    counts = np.zeros((h - 2, w - 2), dtype=np.int32)
    for dy, dx in NEIGHBOUR_OFFSETS:
        counts += padded[1 + dy:h - 1 + dy, 1 + dx:w - 1 + dx]
    return counts


def _deletable(img, ys, xs, gate):
    """Serial-safe deletion test evaluated at coordinate arrays.

    A pixel may be removed when it is foreground, has 2..6 foreground
    neighbours (so neither an endpoint nor interior), its neighbour ring has
    exactly one background->foreground transition (removal cannot split or
    merge anything locally), and the gated cardinal neighbour is background.
    """
    nb = [img[ys + dy, xs + dx] for dy, dx in NEIGHBOUR_OFFSETS]
    b = nb[0].astype(np.int32)
    for v in nb[1:]:
        b = b + v
    a = np.zeros(len(ys), dtype=np.int32)
    for i in range(8):
        a += (nb[i] == 0) & (nb[(i + 1) % 8] == 1)
    ok = (img[ys, xs] == 1) & (b >= 2) & (b <= 6) & (a == 1)
    dy, dx = gate
    ok &= img[ys + dy, xs + dx] == 0
    return ok

# Directional gates applied per subpass: erode from north, south, east, west.
_GATES = ((-1, 0), (1, 0), (0, 1), (0, -1))
_ACTIVE_OFFS_Y = np.array([o[0] for o in NEIGHBOUR_OFFSETS] + [0])
_ACTIVE_OFFS_X = np.array([o[1] for o in NEIGHBOUR_OFFSETS] + [0])


def thin(bin_img: BinaryImage) -> BinaryImage:
    """Erode foreground to one-pixel-wide lines without changing its topology.

    Iterative boundary erosion with four directional subpasses.  Within a
    subpass only one (y, x)-parity class is deleted at a time; such pixels
    are at L-inf distance >= 2 from each other, so the parallel step is
    equivalent to a sequence of individually verified simple-point deletions
    and connected components are preserved exactly.  The fixpoint makes the
    operation idempotent.
    """
    if bin_img.bits.size == 0:
        raise DimensionError("cannot thin an empty image")
    img = np.pad(bin_img.bits.astype(np.uint8), 1)
    h, w = img.shape
    # initial active set: foreground pixels touching any background
    counts = np.zeros_like(img, dtype=np.int32)
    for dy, dx in NEIGHBOUR_OFFSETS:
        counts[1:-1, 1:-1] += img[1 + dy:h - 1 + dy, 1 + dx:w - 1 + dx]
    ys, xs = np.nonzero((img == 1) & (counts < 8))
    while len(ys):
        deleted_y, deleted_x = [], []
        for gate in _GATES:
            for parity_y in (0, 1):
                for parity_x in (0, 1):
                    sel = ((ys & 1) == parity_y) & ((xs & 1) == parity_x)
                    if not sel.any():
                        continue
                    cy, cx = ys[sel], xs[sel]
                    kill = _deletable(img, cy, cx, gate)
                    if kill.any():
                        img[cy[kill], cx[kill]] = 0
                        deleted_y.append(cy[kill])
                        deleted_x.append(cx[kill])
        if not deleted_y:
            break
        dy = np.concatenate(deleted_y)
        dx = np.concatenate(deleted_x)
        # pixels whose neighbourhood changed are the only new candidates
        ny = (dy[:, None] + _ACTIVE_OFFS_Y[None, :]).ravel()
        nx = (dx[:, None] + _ACTIVE_OFFS_X[None, :]).ravel()
        lin = np.unique(ny * w + nx)
        ny, nx = lin // w, lin % w
        keep = img[ny, nx] == 1
        ys, xs = ny[keep], nx[keep]
    return BinaryImage(img[1:-1, 1:-1].astype(bool))
