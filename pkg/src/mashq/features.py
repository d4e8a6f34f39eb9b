"""Sliding-window and VH2D feature streams for word images.

Both streams are computed on the same sequence of frames, swept from the right
edge of the word to the left, so the two sequences are always frame-synchronous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import BinaryImage, ink_bbox

SW = "SW"
VH2D = "VH2D"
STREAMS = (SW, VH2D)
SW_DIMS = 18


@dataclass(frozen=True)
class FeatureConfig:
    N: int = 8        # window width
    eps: int = 4      # window shift
    cells: int = 8    # vertical cells for the transition feature
    M: int = 16       # VH2D patch side
    B: int = 8        # bins per VH2D projection

    def __post_init__(self):
        if self.N < 8 or self.N % 8:
            raise ValueError(f"window width N={self.N} must be a positive multiple of 8")
        if not 1 <= self.eps <= self.N - 1:
            raise ValueError(f"eps={self.eps} must lie in [1, N-1]")
        if self.cells < 2:
            raise ValueError("need at least 2 cells")
        if self.M < 2 or self.B < 1:
            raise ValueError("M must be >= 2 and B >= 1")

    def dims(self, stream: str) -> int:
        return SW_DIMS if stream == SW else 4 * self.B


@dataclass(frozen=True, eq=False)
class Frame:
    patch: BinaryImage
    x_right: int      # right edge of the window, word coordinates (exclusive)


@dataclass(frozen=True, eq=False)
class StreamSequence:
    stream_id: str
    vectors: np.ndarray   # (frames, dims); row 0 is the rightmost frame

    def __len__(self):
        return len(self.vectors)


def slide_windows(word: BinaryImage, N: int, eps: int) -> list[Frame]:
    """Windows of width N, flush with the right edge, stepping left by eps.

    A word narrower than N is right-padded with background. Columns left over
    on the left after the last full step are dropped.
    """
    if not 1 <= eps <= N - 1:
        raise ValueError(f"eps={eps} must lie in [1, N-1]")
    bits = word.bits
    if word.width < N:
        bits = np.pad(bits, ((0, 0), (0, N - word.width)))
    width = bits.shape[1]
    count = (width - N) // eps + 1
    frames = []
    for k in range(count):
        right = width - k * eps
        frames.append(Frame(BinaryImage(bits[:, right - N:right]), right))
    return frames


def _background_configs(bits: np.ndarray) -> np.ndarray:
    """Counts of background pixels in each of the five local configurations.

    1: ink above, 2: ink below, 3: ink right, 4: ink left,
    5: ink on at least three of the four edge neighbours.
    Pixels outside the patch count as background.
    """
    p = np.pad(bits, 1).astype(np.int8)
    above = p[:-2, 1:-1]
    below = p[2:, 1:-1]
    right = p[1:-1, 2:]
    left = p[1:-1, :-2]
    bg = bits == 0
    concave = (above + below + right + left) >= 3
    return np.array([
        np.count_nonzero(bg & (above == 1)),
        np.count_nonzero(bg & (below == 1)),
        np.count_nonzero(bg & (right == 1)),
        np.count_nonzero(bg & (left == 1)),
        np.count_nonzero(bg & concave),
    ], dtype=np.float64)


def centroid_row(frame: Frame) -> float | None:
    """Ink centroid row divided by the frame height; None for a blank frame."""
    bits = frame.patch.bits
    ink = bits.sum(dtype=np.int64)
    if ink == 0:
        return None
    rows = np.arange(bits.shape[0], dtype=np.float64)
    return float((bits.sum(axis=1) * rows).sum() / ink) / bits.shape[0]


def sw_features(frame: Frame, prev_cg: float | None, cells: int = 8) -> np.ndarray:
    """The 18 sliding-window features of one frame.

    ``prev_cg`` is the centroid (see :func:`centroid_row`) of the previous
    frame, or None at the first frame or after a blank one.
    """
    bits = frame.patch.bits
    h, n = bits.shape
    if n % 8:
        raise ValueError(f"frame width {n} is not a multiple of 8")
    f = np.zeros(SW_DIMS)

    band_ink = bits.reshape(h, 8, n // 8).sum(axis=(0, 2), dtype=np.int64)
    f[4:12] = band_ink / ((n // 8) * h)
    # equals ink / (N*H); taking the band mean keeps F1 == mean(F5..F12) bitwise
    f[0] = np.mean(f[4:12])
    f[1] = 1.0 - f[0]

    labels = [int(bits[rows].any()) if len(rows) else 0
              for rows in np.array_split(np.arange(h), cells)]
    f[2] = sum(a != b for a, b in zip(labels, labels[1:])) / (cells - 1)

    cg = centroid_row(frame)
    if cg is not None:
        f[12] = cg
        if prev_cg is not None:
            f[3] = cg - prev_cg
    f[13:18] = _background_configs(bits) / (n * h)
    return f


def normalize_patch(frame: Frame | BinaryImage, M: int = 16) -> BinaryImage:
    """Nearest-neighbour rescale of the tight ink box to an M x M patch."""
    if M < 2:
        raise ValueError("M must be at least 2")
    image = frame.patch if isinstance(frame, Frame) else frame
    box = ink_bbox(image)
    if box is None:
        return BinaryImage.blank(M, M)
    src = image.bits[box.y0:box.y1, box.x0:box.x1]
    rows = (np.arange(M) * box.height) // M
    cols = (np.arange(M) * box.width) // M
    return BinaryImage(src[np.ix_(rows, cols)])


def vh2d(patch: BinaryImage) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vertical, horizontal, 45 degree and 135 degree projections of a square patch.

    With 1-based row l and column k, the 45 degree entry m sums pixels with
    ``l - k = M - m`` and the 135 degree entry m sums pixels with
    ``l + k = m + 1``, for m = 1 .. 2M-1.
    """
    bits = patch.bits
    if bits.shape[0] != bits.shape[1]:
        raise ValueError(f"VH2D needs a square patch, got {patch.width}x{patch.height}")
    m = bits.shape[0]
    r, c = np.nonzero(bits)
    pv = bits.sum(axis=0, dtype=np.int64)
    ph = bits.sum(axis=1, dtype=np.int64)
    pd1 = np.bincount(m - 1 - (r - c), minlength=2 * m - 1).astype(np.int64)
    pd2 = np.bincount(r + c, minlength=2 * m - 1).astype(np.int64)
    return pv, ph, pd1, pd2


def bin_projection(proj: np.ndarray, B: int, area: int) -> np.ndarray:
    """Sum ``proj`` over B near-equal contiguous groups, divided by ``area``."""
    proj = np.asarray(proj)
    if B < 1 or proj.size == 0:
        raise ValueError("need B >= 1 and a non-empty projection")
    return np.array([g.sum() for g in np.array_split(proj, B)], dtype=np.float64) / area


def vh2d_features(frame: Frame, M: int = 16, B: int = 8) -> np.ndarray:
    patch = normalize_patch(frame, M)
    return np.concatenate([bin_projection(p, B, M * M) for p in vh2d(patch)])


def extract_streams(word: BinaryImage, cfg: FeatureConfig = FeatureConfig()
                    ) -> tuple[StreamSequence, StreamSequence]:
    """Frame the word once and compute both streams on the shared frames."""
    if word.ink() == 0:
        raise ValueError("cannot extract features from a blank word")
    frames = slide_windows(word, cfg.N, cfg.eps)
    cgs = [centroid_row(fr) for fr in frames]
    sw = np.array([sw_features(fr, cgs[i - 1] if i else None, cfg.cells)
                   for i, fr in enumerate(frames)])
    vh = np.array([vh2d_features(fr, cfg.M, cfg.B) for fr in frames])
    return StreamSequence(SW, sw), StreamSequence(VH2D, vh)


def dump_stream(seq: StreamSequence) -> str:
    dims = seq.vectors.shape[1]
    lines = [f"# mashq-features v1 stream={seq.stream_id} dims={dims}"]
    for i, vec in enumerate(seq.vectors):
        lines.append("\t".join([seq.stream_id, str(i)] + [f"{v:.17g}" for v in vec]))
    return "\n".join(lines) + "\n"


def parse_stream(text: str) -> StreamSequence:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split()
    if header[:3] != ["#", "mashq-features", "v1"]:
        raise ValueError("not a mashq feature dump")
    fields = dict(tok.split("=", 1) for tok in header[3:])
    dims = int(fields["dims"])
    rows = []
    for ln in lines[1:]:
        parts = ln.split("\t")
        if parts[0] != fields["stream"] or int(parts[1]) != len(rows):
            raise ValueError(f"unexpected row {parts[:2]}")
        rows.append([float(v) for v in parts[2:]])
    vectors = np.array(rows, dtype=np.float64).reshape(len(rows), dims)
    return StreamSequence(fields["stream"], vectors)
