"""Synthetic corpora, three-row evaluation and the fixed benchmark."""

from __future__ import annotations

import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .config import Config
from .glyphs import BASELINE, default_glyphs, validate_glyphs
from .lexicon import Lexicon, Recognizer, score_streams, train
from .multistream import StreamWeights, rank_words
from .raster import BinaryImage, add_salt_pepper, read_pnm, rotate, write_pnm

TRAIN, TEST = "train", "test"
ROW_NAMES = ("stream-SW", "stream-VH2D", "combined")
MARGIN = 3

BENCHMARK_LEXICON = Lexicon({
    "bara": ("ba", "ra"),
    "tara": ("ta", "ra"),
    "thara": ("tha", "ra"),
    "jeemdal": ("jeem", "dal"),
    "khadal": ("kha", "dal"),
    "hathal": ("ha", "thal"),
    "seenba": ("seen", "ba"),
    "sheenba": ("sheen", "ba"),
    "falamalef": ("fa", "lam", "alef"),
    "qaflamalef": ("qaf", "lam", "alef"),
    "alefzai": ("alef", "zai"),
    "alefra": ("alef", "ra"),
    "lamseenta": ("lam", "seen", "ta"),
    "lamsheenta": ("lam", "sheen", "ta"),
    "dalfaba": ("dal", "fa", "ba"),
    "thalqafba": ("thal", "qaf", "ba"),
    "hajeemra": ("ha", "jeem", "ra"),
    "khahazai": ("kha", "ha", "zai"),
    "talamtha": ("ta", "lam", "tha"),
    "balamta": ("ba", "lam", "ta"),
})


@dataclass(frozen=True, eq=False)
class Sample:
    label: str
    image: BinaryImage
    seed: int


@dataclass(frozen=True, eq=False)
class Corpus:
    samples: list[Sample]
    split: str = TRAIN
    seed: int = 0

    def pairs(self) -> list[tuple[str, BinaryImage]]:
        return [(s.label, s.image) for s in self.samples]

    def __len__(self):
        return len(self.samples)


# ---------------------------------------------------------------------------
# rendering

def render_word(glyphs: Mapping[str, BinaryImage], spelling: Sequence[str],
                spacings: Sequence[int]) -> BinaryImage:
    """Chain glyphs right to left; gaps are bridged by the baseline stroke.

    Negative spacings overlap neighbouring glyphs.
    """
    missing = [c for c in spelling if c not in glyphs]
    if missing:
        raise KeyError(f"no glyph for character {missing[0]!r}")
    if len(spacings) != len(spelling) - 1:
        raise ValueError("need one spacing between each pair of glyphs")
    parts = [glyphs[c].bits for c in spelling]
    height = parts[0].shape[0]
    width = sum(p.shape[1] for p in parts) + int(sum(spacings))
    out = np.zeros((height + 2 * MARGIN, width + 2 * MARGIN), dtype=np.uint8)
    right = MARGIN + width
    for i, p in enumerate(parts):
        left = right - p.shape[1]
        out[MARGIN:MARGIN + height, left:right] |= p
        if i + 1 < len(parts):
            gap = int(spacings[i])
            if gap > 0:
                out[MARGIN + BASELINE[0]:MARGIN + BASELINE[1], left - gap:left] = 1
            right = left - gap
    return BinaryImage(out)


def sample_seed(seed: int, *path: int) -> int:
    return int(np.random.SeedSequence([seed, *path]).generate_state(1)[0])


def make_sample(glyphs, spelling, noise_p: float, skew_deg: float, seed: int,
                max_spacing: int = 3) -> tuple[BinaryImage, BinaryImage]:
    """One synthetic word: ``(clean, noisy)`` where noise is the last step."""
    rng = np.random.default_rng(seed)
    spacings = rng.integers(0, max_spacing + 1, size=len(spelling) - 1)
    angle = float(rng.uniform(-skew_deg, skew_deg)) if skew_deg else 0.0
    clean = render_word(glyphs, spelling, spacings)
    if angle:
        clean = rotate(clean, angle)
    noisy = add_salt_pepper(clean, noise_p, int(rng.integers(2**31))) if noise_p else clean
    return clean, noisy


def generate_corpus(glyphs, lexicon: Lexicon, n_per_word: int, noise_p: float,
                    skew_deg: float, seed: int, split: str = TRAIN) -> Corpus:
    """``n_per_word`` seeded samples of every lexicon word, in lexicon order."""
    if n_per_word < 1:
        raise ValueError("n_per_word must be >= 1")
    if not 0 <= noise_p <= 0.5:
        raise ValueError(f"noise_p {noise_p} outside [0, 0.5]")
    if abs(skew_deg) > 20:
        raise ValueError(f"skew {skew_deg} exceeds 20 degrees")
    validate_glyphs(glyphs)
    split_code = {TRAIN: 0, TEST: 1}.get(split, 2)
    samples = []
    for wi, word in enumerate(lexicon.words):
        spelling = lexicon.spelling(word)
        for k in range(n_per_word):
            s = sample_seed(seed, split_code, wi, k)
            _, img = make_sample(glyphs, spelling, noise_p, skew_deg, s)
            samples.append(Sample(word, img, s))
    return Corpus(samples, split, seed)


def make_page(glyphs, lines: Sequence[Sequence[Sequence[str]]], word_gap: int = 12,
              line_gap: int = 14, seed: int = 0) -> tuple[BinaryImage, list[tuple[int, int]]]:
    """Page of clean words; returns the page and each line's ink row extent."""
    rng = np.random.default_rng(seed)
    rendered = []
    for words in lines:
        imgs = [render_word(glyphs, sp, rng.integers(0, 4, size=len(sp) - 1)) for sp in words]
        height = max(im.height for im in imgs)
        width = sum(im.width for im in imgs) + word_gap * (len(imgs) - 1)
        row = np.zeros((height, width), dtype=np.uint8)
        x = width
        for im in imgs:
            row[:im.height, x - im.width:x] = im.bits
            x -= im.width + word_gap
        rendered.append(row)
    width = max(r.shape[1] for r in rendered) + 2 * line_gap
    height = sum(r.shape[0] for r in rendered) + line_gap * (len(rendered) + 1)
    page = np.zeros((height, width), dtype=np.uint8)
    extents = []
    y = line_gap
    for r in rendered:
        x0 = width - line_gap - r.shape[1]
        page[y:y + r.shape[0], x0:x0 + r.shape[1]] = r
        rows = np.flatnonzero(r.any(axis=1))
        extents.append((y + int(rows[0]), y + int(rows[-1]) + 1))
        y += r.shape[0] + line_gap
    return BinaryImage(page), extents


def default_page(seed: int = 0) -> tuple[BinaryImage, list[tuple[int, int]]]:
    lex = BENCHMARK_LEXICON
    words = lex.words
    rng = np.random.default_rng(seed)
    lines = [[lex.spelling(words[i]) for i in rng.choice(len(words), 3, replace=False)]
             for _ in range(3)]
    return make_page(default_glyphs(), lines, seed=seed)


# ---------------------------------------------------------------------------
# corpus directories

def write_corpus(directory, corpora: Sequence[Corpus]) -> None:
    """``<dir>/<split>/<word>/<seq>.pbm`` plus ``manifest.tsv`` (path, label, seed)."""
    lines = []
    for corpus in corpora:
        seq = Counter()
        for s in corpus.samples:
            rel = f"{corpus.split}/{s.label}/{seq[s.label]:04d}.pbm"
            seq[s.label] += 1
            os.makedirs(os.path.join(directory, os.path.dirname(rel)), exist_ok=True)
            write_pnm(os.path.join(directory, rel), s.image)
            lines.append(f"{rel}\t{s.label}\t{s.seed}\n")
    with open(os.path.join(directory, "manifest.tsv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(lines)


def read_corpus(directory, split: str) -> Corpus:
    samples = []
    with open(os.path.join(directory, "manifest.tsv"), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise ValueError(f"manifest line {lineno}: expected path, label, seed")
            rel, label, seed = parts
            if rel.split("/", 1)[0] != split:
                continue
            img = read_pnm(os.path.join(directory, rel))
            if not isinstance(img, BinaryImage):
                raise ValueError(f"{rel} is not a bitmap")
            samples.append(Sample(label, img, int(seed)))
    if not samples:
        raise ValueError(f"no {split} samples in {directory}")
    return Corpus(samples, split)


# ---------------------------------------------------------------------------
# evaluation

@dataclass
class EvalReport:
    rows: dict[str, float]
    n: int
    confusion: dict[str, Counter] = field(default_factory=dict)   # row -> (truth, guess) counts

    def dumps(self) -> str:
        out = ["recognizer\trate\n"]
        out.extend(f"{name}\t{self.rows[name]:.1f}\n" for name in ROW_NAMES)
        return "".join(out)

    def dumps_confusion(self) -> str:
        out = ["recognizer\ttruth\tguess\tcount\n"]
        for name in ROW_NAMES:
            for (truth, guess), count in sorted(self.confusion[name].items()):
                out.append(f"{name}\t{truth}\t{guess}\t{count}\n")
        return "".join(out)


def score_corpus(rec: Recognizer, corpus: Corpus) -> list[dict[str, tuple[float, ...]]]:
    return [score_streams(rec, s.image) for s in corpus.samples]


def _accuracy(scores, labels, weights: StreamWeights) -> tuple[float, Counter]:
    confusion = Counter()
    correct = 0
    for table, truth in zip(scores, labels):
        guess = rank_words(table, weights)[0].word
        confusion[(truth, guess)] += 1
        correct += guess == truth
    return 100.0 * correct / len(labels), confusion


def evaluate(rec: Recognizer, test: Corpus, scores=None) -> EvalReport:
    """Accuracy of stream 1 alone, stream 2 alone and the configured fusion."""
    if not len(test):
        raise ValueError("test corpus is empty")
    if scores is None:
        scores = score_corpus(rec, test)
    labels = [s.label for s in test.samples]
    rows, confusion = {}, {}
    for name, weights in zip(ROW_NAMES, (StreamWeights((1.0, 0.0)),
                                         StreamWeights((0.0, 1.0)), rec.weights)):
        rows[name], confusion[name] = _accuracy(scores, labels, weights)
    return EvalReport(rows, len(labels), confusion)


def grid_search_weights(rec: Recognizer, validation: Corpus, step: float = 0.1
                        ) -> tuple[StreamWeights, dict[float, float]]:
    """Best stream-1 weight on a grid over [0, 1]; ties go to the weight nearest 0.5."""
    scores = score_corpus(rec, validation)
    labels = [s.label for s in validation.samples]
    n = int(round(1 / step))
    table = {}
    for i in range(n + 1):
        w = round(i / n, 10)
        table[w] = _accuracy(scores, labels, StreamWeights((w, 1.0 - w)))[0]
    best = max(table, key=lambda w: (table[w], -abs(w - 0.5), -w))
    return StreamWeights((best, 1.0 - best)), table


# ---------------------------------------------------------------------------
# benchmark

@dataclass(frozen=True)
class BenchmarkSpec:
    n_train: int = 10
    n_test: int = 5
    noise_p: float = 0.03
    skew_deg: float = 5.0


def run_benchmark(seed: int, cfg: Config = Config(), spec: BenchmarkSpec = BenchmarkSpec(),
                  lexicon: Lexicon = BENCHMARK_LEXICON, glyphs=None
                  ) -> tuple[Recognizer, EvalReport]:
    glyphs = default_glyphs() if glyphs is None else glyphs
    train_set = generate_corpus(glyphs, lexicon, spec.n_train, spec.noise_p, spec.skew_deg, seed, TRAIN)
    test_set = generate_corpus(glyphs, lexicon, spec.n_test, spec.noise_p, spec.skew_deg, seed, TEST)
    rec = train(train_set.pairs(), lexicon, cfg, seed=seed)
    return rec, evaluate(rec, test_set)
