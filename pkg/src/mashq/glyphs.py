"""Built-in synthetic glyph alphabet.

Sixteen abstract connected glyphs drawn on a shared 32-row grid. Every glyph
carries the connecting baseline stroke across its full width, so glyphs
chained side by side form one cursive body. Several glyphs share a body and
differ only by detached dots above or below it.
"""

from __future__ import annotations

import os

import numpy as np

from .raster import BinaryImage, read_pnm, write_pnm

HEIGHT = 32
BASELINE = (21, 23)      # rows of the connecting stroke, half-open
DOTS_ABOVE = 3           # top row of dots above the body
DOTS_BELOW = 27          # top row of dots below the body


class _Canvas:
    def __init__(self, width: int):
        self.bits = np.zeros((HEIGHT, width), dtype=np.uint8)
        self.width = width

    def box(self, r0, r1, c0, c1):
        self.bits[max(r0, 0):r1, max(c0, 0):c1] = 1

    def baseline(self):
        self.box(*BASELINE, 0, self.width)

    def vbar(self, c, r0, r1=BASELINE[1], t=2):
        self.box(r0, r1, c, c + t)

    def hbar(self, r, c0, c1, t=2):
        self.box(r, r + t, c0, c1)

    def dots(self, n, row, centre=None):
        centre = self.width // 2 if centre is None else centre
        start = centre - (4 * n - 1) // 2
        for i in range(n):
            self.box(row, row + 3, start + 4 * i, start + 4 * i + 3)

    def loop(self, c0, c1, r0, r1):
        self.hbar(r0, c0, c1)
        self.hbar(r1 - 2, c0, c1)
        self.vbar(c0, r0, r1)
        self.vbar(c1 - 2, r0, r1)

    def image(self) -> BinaryImage:
        return BinaryImage(self.bits)


def _tooth(width=18):
    cv = _Canvas(width)
    cv.baseline()
    cv.vbar(width - 5, 14)
    cv.vbar(3, 17)
    return cv


def _hook(width=20):
    cv = _Canvas(width)
    cv.baseline()
    cv.hbar(11, 4, width - 2)
    cv.vbar(4, 11, 27)
    cv.hbar(25, 4, width - 4)
    return cv


def _dal(width=18):
    cv = _Canvas(width)
    cv.baseline()
    cv.hbar(10, width - 10, width - 3)
    cv.vbar(width - 5, 10)
    return cv


def _ra(width=18):
    cv = _Canvas(width)
    cv.baseline()
    for k in range(6):
        cv.box(BASELINE[1] + k, BASELINE[1] + k + 2, 8 - k, 11 - k)
    return cv


def _seen(width=26):
    cv = _Canvas(width)
    cv.baseline()
    for c in (3, 10, 17, 23):
        cv.vbar(c, 15)
    return cv


def _loop(width=20):
    cv = _Canvas(width)
    cv.baseline()
    cv.loop(width - 11, width - 2, 12, BASELINE[1])
    return cv


def _alef(width=18):
    cv = _Canvas(width)
    cv.baseline()
    cv.vbar(width // 2 - 1, 2, BASELINE[1], t=3)
    return cv


def _lam(width=18):
    cv = _Canvas(width)
    cv.baseline()
    cv.vbar(width - 6, 2)
    cv.hbar(BASELINE[1], 2, 6)
    cv.vbar(2, BASELINE[1], 28)
    cv.hbar(27, 2, width - 6)
    return cv


def _build() -> dict[str, BinaryImage]:
    shapes = {}

    def add(name, cv, above=0, below=0):
        if above:
            cv.dots(above, DOTS_ABOVE)
        if below:
            cv.dots(below, DOTS_BELOW)
        shapes[name] = cv.image()

    add("alef", _alef())
    add("ba", _tooth(), below=1)
    add("ta", _tooth(), above=2)
    add("tha", _tooth(), above=3)
    add("jeem", _hook(), below=1)
    add("ha", _hook())
    add("kha", _hook(), above=1)
    add("dal", _dal())
    add("thal", _dal(), above=1)
    add("ra", _ra())
    add("zai", _ra(), above=1)
    add("seen", _seen())
    add("sheen", _seen(), above=3)
    add("fa", _loop(), above=1)
    add("qaf", _loop(), above=2)
    add("lam", _lam())
    return shapes


DEFAULT_GLYPHS: dict[str, BinaryImage] = _build()


def default_glyphs() -> dict[str, BinaryImage]:
    return dict(DEFAULT_GLYPHS)


def validate_glyphs(glyphs: dict[str, BinaryImage]) -> None:
    if not glyphs:
        raise ValueError("glyph set is empty")
    heights = {g.height for g in glyphs.values()}
    if len(heights) != 1:
        raise ValueError(f"glyph heights differ: {sorted(heights)}")
    for name, g in glyphs.items():
        if g.ink() == 0:
            raise ValueError(f"glyph {name!r} is blank")


def save_glyphs(glyphs: dict[str, BinaryImage], directory) -> None:
    os.makedirs(directory, exist_ok=True)
    for name, img in sorted(glyphs.items()):
        write_pnm(os.path.join(directory, f"{name}.pbm"), img)


def load_glyphs(directory) -> dict[str, BinaryImage]:
    glyphs = {}
    for fname in sorted(os.listdir(directory)):
        if fname.endswith(".pbm"):
            img = read_pnm(os.path.join(directory, fname))
            if not isinstance(img, BinaryImage):
                raise ValueError(f"{fname} is not a bitmap")
            glyphs[fname[:-4]] = img
    validate_glyphs(glyphs)
    return glyphs
