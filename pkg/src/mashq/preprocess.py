"""Binarization, noise removal, Hough skew estimation and baseline detection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import BinaryImage, GrayImage, h_projection, rotate


@dataclass(frozen=True)
class SkewEstimate:
    angle: float        # degrees, positive = text lines lean counter-clockwise
    peak_score: int     # accumulator votes in the winning cell


def otsu_threshold(image: GrayImage) -> int | None:
    """Threshold ``t`` maximizing between-class variance, or None if undefined.

    Classes are ``[0, t)`` and ``[t, 255]``. The objective is compared with
    exact integer arithmetic, so ties resolve to the smallest ``t``.
    """
    hist = np.bincount(image.samples.ravel(), minlength=256).astype(object)
    levels = np.arange(256, dtype=object)
    n = int(hist.sum())
    total = int((hist * levels).sum())
    best_t, best_num, best_den = None, 0, 1
    n0 = s0 = 0
    for t in range(1, 256):
        n0 += int(hist[t - 1])
        s0 += int(hist[t - 1]) * (t - 1)
        n1 = n - n0
        if n0 == 0 or n1 == 0:
            continue
        # between-class variance * n^2 == (s0*n1 - s1*n0)^2 / (n0*n1)
        num = (s0 * n1 - (total - s0) * n0) ** 2
        den = n0 * n1
        if num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den
    return best_t


def binarize_otsu(image: GrayImage) -> BinaryImage:
    """Pixels darker than the Otsu threshold become ink.

    Constant images (no valid split) come back as all background.
    """
    t = otsu_threshold(image)
    if t is None:
        return BinaryImage(np.zeros_like(image.samples))
    return BinaryImage((image.samples < t).astype(np.uint8))


def median3x3(image: BinaryImage) -> BinaryImage:
    """Binary 3x3 median (majority of 9) with edge replication."""
    padded = np.pad(image.bits, 1, mode="edge").astype(np.int16)
    h, w = image.height, image.width
    votes = sum(padded[dy:dy + h, dx:dx + w] for dy in range(3) for dx in range(3))
    return BinaryImage((votes >= 5).astype(np.uint8))


def hough_accumulator(image: BinaryImage, thetas: np.ndarray) -> list[np.ndarray]:
    """Line accumulator, one rho histogram (1 px bins) per normal angle in degrees.

    Coordinates have y pointing up so that a counter-clockwise lean of the
    text gives a normal angle above 90 degrees.
    """
    rows, cols = np.nonzero(image.bits)
    x = cols.astype(np.float64)
    y = (image.height - 1 - rows).astype(np.float64)
    diag = int(np.ceil(np.hypot(image.width, image.height))) + 1
    acc = []
    for theta in thetas:
        rad = np.deg2rad(theta)
        rho = np.floor(x * np.cos(rad) + y * np.sin(rad) + 0.5).astype(np.int64)
        acc.append(np.bincount(rho + diag, minlength=2 * diag + 1))
    return acc


def estimate_skew_hough(image: BinaryImage, range_deg: float = 20.0,
                        step: float = 0.5) -> SkewEstimate:
    """Skew angle from the Hough theta whose strongest rho cell is largest.

    Ties go to the smaller absolute angle, then to the negative one.
    """
    if range_deg > 45:
        raise ValueError(f"search range {range_deg} exceeds 45 degrees")
    if step <= 0:
        raise ValueError("step must be positive")
    if image.ink() == 0:
        raise ValueError("no ink")
    k = int(np.floor(range_deg / step + 1e-9))
    angles = np.arange(-k, k + 1) * step
    acc = hough_accumulator(image, 90.0 + angles)
    peaks = [int(a.max()) for a in acc]
    best = max(range(len(angles)), key=lambda i: (peaks[i], -abs(angles[i]), -angles[i]))
    return SkewEstimate(angle=float(angles[best]), peak_score=peaks[best])


def deskew(image: BinaryImage, est: SkewEstimate) -> BinaryImage:
    if est.angle == 0:
        return image
    return rotate(image, -est.angle)


def baseline_row(line: BinaryImage) -> int:
    """Row with the most ink; the first such row on ties."""
    proj = h_projection(line)
    if proj.max(initial=0) == 0:
        raise ValueError("empty line has no baseline")
    return int(np.argmax(proj))
