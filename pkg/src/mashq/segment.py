"""Line and word segmentation from projection profiles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import BBox, BinaryImage, crop, h_projection, ink_bbox, v_projection


@dataclass(frozen=True)
class LineBand:
    top: int      # inclusive
    bottom: int   # exclusive


@dataclass(frozen=True)
class WordBox:
    bbox: BBox
    order_index: int   # 0 = rightmost word


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Maximal ``[start, stop)`` runs of True."""
    padded = np.concatenate(([False], mask, [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return [(int(a), int(b)) for a, b in zip(edges[::2], edges[1::2])]


def segment_lines(page: BinaryImage, alpha: float = 0.05) -> list[LineBand]:
    """Text-line bands from the horizontal projection profile.

    Runs of at least two rows whose ink count exceeds ``alpha`` times the
    profile peak are line cores; the blank-delimited ink run around a core is
    a line body. Runs under half the tallest body's height (detached dots,
    stray marks) join the nearest body when the blank gap is at most half
    that body's height, and are dropped otherwise. Bands are padded by one
    row on each side without overlapping their neighbours.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha {alpha} outside (0, 1)")
    proj = h_projection(page)
    peak = proj.max(initial=0)
    if peak == 0:
        return []
    cores = [(a, b) for a, b in _runs(proj > alpha * peak) if b - a >= 2]
    runs = _runs(proj > 0)
    is_body = [any(a <= c0 and c1 <= b for c0, c1 in cores) for a, b in runs]
    tallest = max((b - a for (a, b), body in zip(runs, is_body) if body), default=0)
    is_body = [body and 2 * (b - a) >= tallest for (a, b), body in zip(runs, is_body)]
    spans = {i: list(runs[i]) for i, body in enumerate(is_body) if body}
    for i, (a, b) in enumerate(runs):
        if is_body[i] or not spans:
            continue
        above = max((j for j in spans if j < i), default=None)
        below = min((j for j in spans if j > i), default=None)
        options = []
        if below is not None:
            options.append((runs[below][0] - b, 0, below))
        if above is not None:
            options.append((a - runs[above][1], 1, above))
        gap, _, j = min(options)
        if 2 * gap <= runs[j][1] - runs[j][0]:
            spans[j][0] = min(spans[j][0], a)
            spans[j][1] = max(spans[j][1], b)
    bands: list[LineBand] = []
    for start, stop in (spans[j] for j in sorted(spans)):
        top = max(start - 1, bands[-1].bottom if bands else 0)
        bands.append(LineBand(top, min(stop + 1, page.height)))
    return bands


def segment_words(line: BinaryImage, gap: int = 3) -> list[WordBox]:
    """Split a line at blank column runs of at least ``gap`` columns.

    Shorter blank runs (gaps between sub-words) stay inside a word. Boxes are
    tight around their ink and ordered right to left.
    """
    if gap < 1:
        raise ValueError("gap must be at least 1")
    inked = v_projection(line) > 0
    if not inked.any():
        return []
    first = int(np.argmax(inked))
    last = len(inked) - int(np.argmax(inked[::-1]))
    spans = []
    start = first
    for a, b in _runs(~inked[first:last]):
        if b - a >= gap:
            spans.append((start, first + a))
            start = first + b
    spans.append((start, last))

    boxes = []
    for order, (x0, x1) in enumerate(reversed(spans)):
        inner = ink_bbox(crop(line, BBox(x0, 0, x1, line.height)))
        boxes.append(WordBox(BBox(x0, inner.y0, x1, inner.y1), order))
    return boxes


def line_image(page: BinaryImage, band: LineBand) -> BinaryImage:
    return crop(page, BBox(0, band.top, page.width, band.bottom))
