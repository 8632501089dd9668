"""Boolean input images: pie-shaped bit headers inside an always-on locking ring.

The input plane is a square micromirror raster of which only a centred disk is
illuminated.  A header encodes ``n_bits`` as equal angular wedges inside the
disk; the outermost in-disk pixels form a ring that is on for every class, so
the downstream laser always receives a constant locking signal.  The ring size
is specified as an *area* fraction of the in-disk pixel count.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * np.pi


class _DiskGeometry(NamedTuple):
    rows: np.ndarray       # row index of each in-disk pixel, row-major order
    cols: np.ndarray       # column index of each in-disk pixel
    distance: np.ndarray   # radial distance from the disk centre
    angle: np.ndarray      # polar angle in [0, 2*pi)
    radial_order: np.ndarray  # pixel indices sorted by (distance, index)


@functools.lru_cache(maxsize=None)
def _disk_geometry(side_px: int, disk_radius_px: float) -> _DiskGeometry:
    centre = (side_px - 1) / 2.0
    rr, cc = np.indices((side_px, side_px))
    dy = rr - centre
    dx = cc - centre
    inside = dy * dy + dx * dx <= disk_radius_px * disk_radius_px
    rows = rr[inside].astype(np.intp)
    cols = cc[inside].astype(np.intp)
    dy = rows - centre
    dx = cols - centre
    distance = np.hypot(dy, dx)
    angle = np.mod(np.arctan2(dy, dx), TWO_PI)
    radial_order = np.lexsort((np.arange(rows.size), distance))
    for arr in (rows, cols, distance, angle, radial_order):
        arr.setflags(write=False)
    return _DiskGeometry(rows, cols, distance, angle, radial_order)


@dataclass(frozen=True)
class Grid:
    """Square input raster; only pixels inside the centred disk can be on."""

    side_px: int = 64
    disk_radius_px: float = 30.0

    def __post_init__(self):
        if self.side_px < 1:
            raise ValueError(f"side_px must be >= 1, got {self.side_px}")
        if not 0.0 < self.disk_radius_px <= self.side_px / 2.0:
            raise ValueError(
                f"disk_radius_px must lie in (0, side_px/2], got {self.disk_radius_px}"
            )

    @property
    def pixel_count(self) -> int:
        """Number of pixels inside the disk (the length of pattern vectors)."""
        return int(_disk_geometry(self.side_px, float(self.disk_radius_px)).rows.size)

    def disk_mask(self) -> np.ndarray:
        """Boolean (side_px, side_px) mask of the usable disk."""
        geo = _disk_geometry(self.side_px, float(self.disk_radius_px))
        mask = np.zeros((self.side_px, self.side_px), dtype=bool)
        mask[geo.rows, geo.cols] = True
        return mask


def region_labels(grid: Grid, n_bits: int, ring_fraction: float) -> np.ndarray:
    """Label every in-disk pixel: -1 for the locking ring, else its wedge index.

    The ring is the ``round(ring_fraction * p)`` outermost pixels by radial
    distance (ties broken by row-major pixel index), which realises the
    requested area fraction to within one pixel.  Remaining pixels get the
    wedge index of their polar angle; a pixel exactly on a wedge boundary is
    assigned to the lower-index wedge.
    """
    if not 1 <= n_bits <= 16:
        raise ValueError(f"n_bits must be in [1, 16], got {n_bits}")
    if not 0.0 <= ring_fraction <= 1.0:
        raise ValueError(f"ring_fraction must lie in [0, 1], got {ring_fraction}")
    geo = _disk_geometry(grid.side_px, float(grid.disk_radius_px))
    p = geo.rows.size

    scaled = geo.angle * n_bits / TWO_PI
    sector = np.floor(scaled).astype(np.intp)
    on_boundary = (scaled == np.floor(scaled)) & (scaled > 0)
    sector[on_boundary] -= 1
    np.clip(sector, 0, n_bits - 1, out=sector)

    labels = sector.copy()
    ring_count = int(round(ring_fraction * p))
    if ring_count:
        labels[geo.radial_order[p - ring_count:]] = -1
    return labels


@dataclass(eq=False)
class InputPattern:
    """One Boolean header image, stored as the in-disk pixel vector."""

    grid: Grid
    pixels: np.ndarray  # bool, length grid.pixel_count, row-major in-disk order
    n_bits: int
    class_id: int
    ring_fraction: float

    def on_fraction(self) -> float:
        return float(np.count_nonzero(self.pixels)) / self.pixels.size

    def to_image(self) -> np.ndarray:
        """Render to the full (side_px, side_px) Boolean raster."""
        geo = _disk_geometry(self.grid.side_px, float(self.grid.disk_radius_px))
        img = np.zeros((self.grid.side_px, self.grid.side_px), dtype=bool)
        img[geo.rows, geo.cols] = self.pixels
        return img


def make_header_pattern(
    grid: Grid, n_bits: int, class_id: int, ring_fraction: float
) -> InputPattern:
    """Build the Boolean header image for one class.

    Bit ``j`` of ``class_id`` switches the angular wedge
    ``[2*pi*j/n_bits, 2*pi*(j+1)/n_bits)``; the outer ring is always on.
    """
    if not 1 <= n_bits <= 16:
        raise ValueError(f"n_bits must be in [1, 16], got {n_bits}")
    if not 0 <= class_id < 2 ** n_bits:
        raise ValueError(
            f"class_id must lie in [0, {2 ** n_bits}) for n_bits={n_bits}, got {class_id}"
        )
    labels = region_labels(grid, n_bits, ring_fraction)
    wedge_on = (class_id >> np.maximum(labels, 0)) & 1 == 1
    pixels = (labels < 0) | wedge_on
    return InputPattern(
        grid=grid,
        pixels=pixels,
        n_bits=n_bits,
        class_id=class_id,
        ring_fraction=ring_fraction,
    )


def pattern_to_vector(pattern: InputPattern) -> np.ndarray:
    """Pixel vector of a pattern, row-major over in-disk pixels."""
    return np.array(pattern.pixels, dtype=bool, copy=True)


@dataclass(eq=False)
class LabeledSequence:
    """An ordered batch of header patterns with their class labels."""

    grid: Grid
    n_bits: int
    ring_fraction: float
    patterns: list
    labels: np.ndarray
    seed: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.intp)
        if len(self.patterns) != self.labels.size:
            raise ValueError("patterns and labels must have equal length")

    def __len__(self) -> int:
        return self.labels.size

    def as_matrix(self) -> np.ndarray:
        """Stack all pattern vectors into a (p, T) float matrix."""
        return np.stack([p.pixels for p in self.patterns], axis=1).astype(np.float64)

    def distinct_class_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct labels (sorted) and their pattern vectors as a (p, K) matrix.

        Sequences repeat few distinct headers, so downstream optics only needs
        one field computation per class.
        """
        by_label = {}
        for pat, lab in zip(self.patterns, self.labels):
            if int(lab) not in by_label:
                by_label[int(lab)] = pat.pixels
        uniq = np.array(sorted(by_label), dtype=np.intp)
        mat = np.stack([by_label[int(lab)] for lab in uniq], axis=1).astype(np.float64)
        return uniq, mat


def make_sequence(
    grid: Grid, n_bits: int, length: int, ring_fraction: float, seed: int
) -> LabeledSequence:
    """Draw ``length`` class ids uniformly at random and build their patterns.

    The same ``(grid, n_bits, length, ring_fraction, seed)`` always regenerates
    an identical sequence.
    """
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2 ** n_bits, size=length)
    cache = {}
    patterns = []
    for lab in labels:
        lab = int(lab)
        if lab not in cache:
            cache[lab] = make_header_pattern(grid, n_bits, lab, ring_fraction)
        patterns.append(cache[lab])
    return LabeledSequence(
        grid=grid,
        n_bits=n_bits,
        ring_fraction=ring_fraction,
        patterns=patterns,
        labels=labels,
        seed=seed,
    )


def write_pgm(pattern: InputPattern, path, binary: bool = False) -> None:
    """Export a pattern as a portable graymap (P5 when ``binary``, else P2)."""
    img = pattern.to_image().astype(np.uint8) * 255
    side = pattern.grid.side_px
    header = f"{'P5' if binary else 'P2'}\n{side} {side}\n255\n"
    if binary:
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii"))
            fh.write(img.tobytes())
    else:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(header)
            for row in img:
                fh.write(" ".join(str(v) for v in row) + "\n")
