import random
from collections import Counter

import numpy as np
import pytest

from mashq.glyphs import BASELINE, HEIGHT, load_glyphs, save_glyphs, validate_glyphs
from mashq.harness import (BENCHMARK_LEXICON, MARGIN, ROW_NAMES, TEST, TRAIN, Corpus, EvalReport,
                           _accuracy, evaluate, generate_corpus, grid_search_weights, make_sample,
                           read_corpus, render_word, score_corpus, write_corpus)
from mashq.lexicon import Lexicon
from mashq.multistream import StreamWeights
from mashq.raster import v_projection


def test_glyph_set(glyphs):
    assert len(glyphs) == 16
    validate_glyphs(glyphs)
    assert {g.height for g in glyphs.values()} == {HEIGHT}
    for g in glyphs.values():
        assert g.bits[BASELINE[0]:BASELINE[1]].all()
    # dot-only pairs share their body rows
    body = slice(7, 26)
    assert np.array_equal(glyphs["dal"].bits[body], glyphs["thal"].bits[body])
    assert not np.array_equal(glyphs["dal"].bits, glyphs["thal"].bits)


def test_glyph_directory_round_trip(glyphs, tmp_path):
    save_glyphs(glyphs, tmp_path)
    back = load_glyphs(tmp_path)
    assert back.keys() == glyphs.keys()
    assert all(back[k] == glyphs[k] for k in glyphs)


def test_benchmark_lexicon_uses_glyph_labels(glyphs):
    assert len(BENCHMARK_LEXICON.words) == 20
    assert set(BENCHMARK_LEXICON.alphabet) <= set(glyphs)


def test_render_word_is_connected(glyphs):
    word = render_word(glyphs, ("seen", "ba", "ra"), [2, 3])
    assert word.width == sum(glyphs[c].width for c in ("seen", "ba", "ra")) + 5 + 2 * MARGIN
    inner = v_projection(word)[MARGIN:-MARGIN]
    assert (inner > 0).all()


def test_render_word_overlap(glyphs):
    word = render_word(glyphs, ("ba", "ra"), [-4])
    assert word.width == glyphs["ba"].width + glyphs["ra"].width - 4 + 2 * MARGIN


def test_render_rejects_unknown_glyph(glyphs):
    with pytest.raises(KeyError):
        render_word(glyphs, ("ba", "nope"), [0])


def test_noise_is_the_last_step(glyphs):
    clean, noisy = make_sample(glyphs, ("ba", "ra"), 0.0, 4.0, seed=3)
    assert clean == noisy
    clean, noisy = make_sample(glyphs, ("ba", "ra"), 0.05, 4.0, seed=3)
    flips = int((clean.bits != noisy.bits).sum())
    n = clean.width * clean.height
    assert 0.02 * n < flips < 0.08 * n


def test_generation_is_deterministic(glyphs):
    a = generate_corpus(glyphs, BENCHMARK_LEXICON, 2, 0.03, 5.0, seed=4, split=TRAIN)
    b = generate_corpus(glyphs, BENCHMARK_LEXICON, 2, 0.03, 5.0, seed=4, split=TRAIN)
    c = generate_corpus(glyphs, BENCHMARK_LEXICON, 2, 0.03, 5.0, seed=4, split=TEST)
    assert [s.image for s in a.samples] == [s.image for s in b.samples]
    assert a.samples[0].image != c.samples[0].image
    assert [s.label for s in a.samples] == [w for w in BENCHMARK_LEXICON.words for _ in range(2)]


def test_generation_rejects_bad_parameters(glyphs):
    with pytest.raises(ValueError):
        generate_corpus(glyphs, BENCHMARK_LEXICON, 0, 0.03, 5.0, seed=0)
    with pytest.raises(ValueError):
        generate_corpus(glyphs, BENCHMARK_LEXICON, 1, 0.9, 5.0, seed=0)


def test_corpus_directory_round_trip(glyphs, tmp_path):
    lex = Lexicon({"bara": ("ba", "ra"), "dal": ("dal",)})
    tr = generate_corpus(glyphs, lex, 2, 0.03, 5.0, seed=1, split=TRAIN)
    te = generate_corpus(glyphs, lex, 1, 0.03, 5.0, seed=1, split=TEST)
    write_corpus(tmp_path, [tr, te])
    manifest = (tmp_path / "manifest.tsv").read_text().splitlines()
    assert manifest[0].split("\t")[:2] == ["train/bara/0000.pbm", "bara"]
    assert len(manifest) == 6
    back = read_corpus(tmp_path, TRAIN)
    assert [s.image for s in back.samples] == [s.image for s in tr.samples]
    assert [s.seed for s in back.samples] == [s.seed for s in tr.samples]
    assert len(read_corpus(tmp_path, TEST)) == 2


def test_report_format():
    report = EvalReport({"stream-SW": 81.0, "stream-VH2D": 91.04, "combined": 93.0}, 100)
    assert report.dumps() == ("recognizer\trate\nstream-SW\t81.0\n"
                              "stream-VH2D\t91.0\ncombined\t93.0\n")


def test_evaluation_rows_and_consistency(small_setup):
    rec, _, _, test_set = small_setup
    scores = score_corpus(rec, test_set)
    report = evaluate(rec, test_set, scores)
    assert list(report.rows) == list(ROW_NAMES)
    assert report.n == len(test_set)
    labels = [s.label for s in test_set.samples]
    sw_only = _accuracy(scores, labels, StreamWeights((1.0, 0.0)))[0]
    assert sw_only == report.rows["stream-SW"]
    for name in ROW_NAMES:
        assert sum(report.confusion[name].values()) == len(test_set)


def test_accuracy_is_permutation_invariant(small_setup):
    rec, _, _, test_set = small_setup
    base = evaluate(rec, test_set).rows
    shuffled = list(test_set.samples)
    random.Random(0).shuffle(shuffled)
    assert evaluate(rec, Corpus(shuffled, TEST)).rows == base


def test_grid_search(small_setup):
    rec, _, _, test_set = small_setup
    weights, table = grid_search_weights(rec, test_set, step=0.25)
    assert sorted(table) == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert table[weights.w[0]] == max(table.values())


def test_confusion_dump(small_setup):
    rec, _, _, test_set = small_setup
    text = evaluate(rec, test_set).dumps_confusion()
    lines = text.splitlines()
    assert lines[0] == "recognizer\ttruth\tguess\tcount"
    per_row = Counter(line.split("\t")[0] for line in lines[1:])
    assert set(per_row) <= set(ROW_NAMES)
