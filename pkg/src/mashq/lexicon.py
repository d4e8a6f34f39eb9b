"""Closed-vocabulary recognizer built from tied character HMMs."""

from __future__ import annotations

import logging
import os
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import hmm
from .config import Config
from .features import STREAMS, extract_streams
from .hmm import Codebook, DiscreteHMM, Stats, WordModel
from .multistream import Candidate, StreamWeights, rank_words
from .preprocess import median3x3
from .raster import BinaryImage, crop, ink_bbox

log = logging.getLogger(__name__)

_SAFE_LABEL = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


@dataclass(frozen=True)
class Lexicon:
    entries: Mapping[str, tuple[str, ...]]   # word -> character labels, reading order

    def __post_init__(self):
        if not self.entries:
            raise ValueError("lexicon is empty")
        clean = {}
        for word, spelling in self.entries.items():
            spelling = tuple(spelling)
            if not spelling:
                raise ValueError(f"word {word!r} has an empty spelling")
            for name in (word, *spelling):
                if not _SAFE_LABEL.match(name):
                    raise ValueError(f"label {name!r} must match {_SAFE_LABEL.pattern}")
            clean[word] = spelling
        object.__setattr__(self, "entries", dict(sorted(clean.items())))

    @property
    def words(self) -> list[str]:
        return list(self.entries)

    @property
    def alphabet(self) -> list[str]:
        return sorted({c for sp in self.entries.values() for c in sp})

    def spelling(self, word: str) -> tuple[str, ...]:
        try:
            return self.entries[word]
        except KeyError:
            raise KeyError(f"word {word!r} is not in the lexicon") from None

    def dumps(self) -> str:
        return "".join(f"{w}\t{' '.join(sp)}\n" for w, sp in self.entries.items())

    @classmethod
    def loads(cls, text: str) -> "Lexicon":
        entries = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            try:
                word, spelling = line.split("\t")
            except ValueError:
                raise ValueError(f"lexicon line {lineno}: expected 'word<TAB>labels'") from None
            entries[word.strip()] = tuple(spelling.split())
        return cls(entries)

    @classmethod
    def read(cls, path) -> "Lexicon":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


@dataclass(frozen=True, eq=False)
class Recognizer:
    config: Config
    lexicon: Lexicon
    codebooks: Mapping[str, Codebook]
    chars: Mapping[str, Mapping[str, DiscreteHMM]]   # stream -> label -> model

    @property
    def weights(self) -> StreamWeights:
        return self.config.weights

    @cached_property
    def _word_models(self) -> dict[tuple[str, str], WordModel]:
        return {(stream, w): build_word_model(self, w, stream)
                for stream in STREAMS for w in self.lexicon.words}

    def word_model(self, word: str, stream: str) -> WordModel:
        return self._word_models[(stream, word)]


@dataclass(frozen=True)
class RecognitionResult:
    candidates: list[Candidate]

    @property
    def best(self) -> str:
        return self.candidates[0].word


def build_word_model(rec: Recognizer, word: str, stream: str) -> WordModel:
    """Concatenate the spelling's character models in reading order."""
    spelling = rec.lexicon.spelling(word)
    models = rec.chars[stream]
    missing = [c for c in spelling if c not in models]
    if missing:
        raise KeyError(f"no {stream} model for character {missing[0]!r}")
    return hmm.concat([models[c] for c in spelling], spelling)


def prepare_word(image: BinaryImage, cfg: Config) -> BinaryImage:
    """Denoise and crop a word image to its ink."""
    if cfg.median:
        image = median3x3(image)
    box = ink_bbox(image)
    if box is None:
        raise ValueError("word image is blank")
    return crop(image, box)


def word_features(image: BinaryImage, cfg: Config) -> dict[str, np.ndarray]:
    streams = extract_streams(prepare_word(image, cfg), cfg.features)
    return {s.stream_id: s.vectors for s in streams}


def _uniform_split_counts(obs: np.ndarray, n_chars: int, S: int, K: int) -> np.ndarray:
    """Symbol counts (char, state, symbol) from an even split of the frames."""
    counts = np.zeros((n_chars, S, K))
    for c, chunk in enumerate(np.array_split(np.arange(len(obs)), n_chars)):
        for s, part in enumerate(np.array_split(chunk, S)):
            np.add.at(counts[c, s], obs[part], 1.0)
    return counts


def init_char_models(samples: Sequence[tuple[tuple[str, ...], np.ndarray]],
                     alphabet: Iterable[str], cfg: Config) -> dict[str, DiscreteHMM]:
    S, K = cfg.states_per_char, cfg.K
    counts = {c: np.zeros((S, K)) for c in alphabet}
    for spelling, obs in samples:
        split = _uniform_split_counts(obs, len(spelling), S, K)
        for i, c in enumerate(spelling):
            counts[c] += split[i]
    models = {}
    for c, cnt in counts.items():
        B = np.full((S, K), 1.0 / K)
        for s in range(S):
            row = hmm.floor_normalize(cnt[s], cfg.floor)
            if row is not None:
                B[s] = row
        models[c] = hmm.left_right_hmm(S, K, exit=cfg.exit_init, B=B)
    return models


def embedded_em_step(models: Mapping[str, DiscreteHMM],
                     samples: Sequence[tuple[tuple[str, ...], np.ndarray]],
                     floor: float) -> tuple[dict[str, DiscreteHMM], float, int]:
    """One tied Baum-Welch pass over whole-word models.

    Statistics for a character are pooled over every word it appears in and
    re-estimated once. Returns the new models, the corpus log-likelihood of
    the input models, and how many samples were too short to align.
    """
    any_model = next(iter(models.values()))
    stats = {c: Stats.zeros(m.S, any_model.K) for c, m in models.items()}
    total = 0.0
    skipped = 0
    for spelling, obs in samples:
        wm = hmm.concat([models[c] for c in spelling], spelling)
        ll, gamma, xi = hmm.forward_backward(wm.hmm, obs, end_state=wm.hmm.S - 1)
        if gamma is None:
            skipped += 1
            continue
        total += ll
        emit = hmm.emission_counts(gamma, obs, wm.hmm.K)
        for b, c in enumerate(spelling):
            sl = wm.block(b)
            st = stats[c]
            st.trans += xi[sl, sl]
            st.emit += emit[sl]
            if b + 1 < len(spelling):
                last = sl.stop - 1
                st.stay += xi[last, last]
                st.leave += xi[last, sl.stop]
    new = {c: hmm.reestimate(models[c], stats[c], floor) for c in sorted(models)}
    return new, total, skipped


def train(corpus: Sequence[tuple[str, BinaryImage]], lexicon: Lexicon, cfg: Config,
          seed: int = 0, trace: dict | None = None) -> Recognizer:
    """Train both streams: codebook, uniform bootstrap, tied embedded EM.

    ``trace`` (if given) receives ``stream -> [corpus loglik per EM pass]``.
    """
    if not corpus:
        raise ValueError("training corpus is empty")
    spellings = [lexicon.spelling(word) for word, _ in corpus]
    feats = [word_features(img, cfg) for _, img in corpus]
    alphabet = lexicon.alphabet
    codebooks, chars = {}, {}
    for stream in STREAMS:
        frames = np.concatenate([f[stream] for f in feats])
        codebook = hmm.kmeans(frames, cfg.K, seed, cfg.kmeans_iters,
                               standardize=bool(cfg.standardize))
        samples = [(sp, hmm.quantize_all(f[stream], codebook)) for sp, f in zip(spellings, feats)]
        models = init_char_models(samples, alphabet, cfg)
        history = []
        for it in range(cfg.em_iters):
            models, ll, skipped = embedded_em_step(models, samples, cfg.floor)
            history.append(ll)
            if skipped and it == 0:
                log.warning("%s: %d samples shorter than their word model", stream, skipped)
        codebooks[stream] = codebook
        chars[stream] = models
        if trace is not None:
            trace[stream] = history
    return Recognizer(cfg, lexicon, codebooks, chars)


def score_streams(rec: Recognizer, image: BinaryImage) -> dict[str, tuple[float, ...]]:
    """Per-word Viterbi log scores, one per stream, in stream order."""
    feats = word_features(image, rec.config)
    obs = {s: hmm.quantize_all(feats[s], rec.codebooks[s]) for s in STREAMS}
    scores = {}
    for word in rec.lexicon.words:
        per_stream = []
        for s in STREAMS:
            wm = rec.word_model(word, s)
            per_stream.append(hmm.viterbi(wm.hmm, obs[s], end_state=wm.hmm.S - 1)[0])
        scores[word] = tuple(per_stream)
    return scores


def recognize(rec: Recognizer, image: BinaryImage,
              weights: StreamWeights | None = None) -> RecognitionResult:
    scores = score_streams(rec, image)
    return RecognitionResult(rank_words(scores, weights or rec.weights))


# ---------------------------------------------------------------------------
# bundles

def save_recognizer(rec: Recognizer, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    _write(os.path.join(directory, "config"), rec.config.dumps())
    _write(os.path.join(directory, "lexicon.tsv"), rec.lexicon.dumps())
    for stream in STREAMS:
        sdir = os.path.join(directory, stream.lower())
        os.makedirs(os.path.join(sdir, "chars"), exist_ok=True)
        _write(os.path.join(sdir, "codebook.mshmm"), hmm.dumps_model(codebook=rec.codebooks[stream]))
        for label, model in sorted(rec.chars[stream].items()):
            text = hmm.dumps_model(hmm=model, anchors=[0], labels=[label])
            _write(os.path.join(sdir, "chars", f"{label}.mshmm"), text)


def load_recognizer(directory) -> Recognizer:
    with open(os.path.join(directory, "config"), encoding="utf-8") as fh:
        cfg = Config.loads(fh.read())
    lexicon = Lexicon.read(os.path.join(directory, "lexicon.tsv"))
    codebooks, chars = {}, {}
    for stream in STREAMS:
        sdir = os.path.join(directory, stream.lower())
        with open(os.path.join(sdir, "codebook.mshmm"), encoding="utf-8") as fh:
            codebooks[stream] = hmm.loads_model(fh.read()).codebook
        models = {}
        for label in lexicon.alphabet:
            with open(os.path.join(sdir, "chars", f"{label}.mshmm"), encoding="utf-8") as fh:
                models[label] = hmm.loads_model(fh.read()).hmm
        chars[stream] = models
    return Recognizer(cfg, lexicon, codebooks, chars)


def _write(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
