"""Command-line interface: ``mashq <subcommand> ...``.

Exit status is 0 on success, 1 on a usage error and 2 on a data error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import features, harness, lexicon, preprocess, segment
from .config import Config
from .glyphs import default_glyphs, load_glyphs, save_glyphs
from .raster import BinaryImage, GrayImage, PNMError, crop, read_pnm, write_pnm

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise UsageError(message)


def _binary(path) -> BinaryImage:
    img = read_pnm(path)
    if isinstance(img, GrayImage):
        img = preprocess.binarize_otsu(img)
    return img


def _config(path) -> Config:
    return Config.read(path) if path else Config()


def _pick(value, default):
    return default if value is None else value


def cmd_preprocess(args) -> int:
    cfg = _config(args.config)
    img = _binary(args.input)
    if cfg.median and not args.no_median:
        img = preprocess.median3x3(img)
    est = preprocess.estimate_skew_hough(img, _pick(args.range, cfg.skew_range),
                                         _pick(args.step, cfg.skew_step))
    write_pnm(args.output, preprocess.deskew(img, est))
    print(f"skew\t{est.angle:.2f}\tpeak\t{est.peak_score}")
    return 0


def cmd_segment(args) -> int:
    cfg = _config(args.config)
    page = _binary(args.input)
    os.makedirs(args.outdir, exist_ok=True)
    rows = ["line\tword\tx0\ty0\tx1\ty1\tfile"]
    for li, band in enumerate(segment.segment_lines(page, _pick(args.alpha, cfg.line_alpha))):
        line = segment.line_image(page, band)
        for box in segment.segment_words(line, _pick(args.gap, cfg.word_gap)):
            name = f"line{li:03d}_word{box.order_index:03d}.pbm"
            write_pnm(os.path.join(args.outdir, name), crop(line, box.bbox))
            b = box.bbox
            rows.append(f"{li}\t{box.order_index}\t{b.x0}\t{band.top + b.y0}\t{b.x1}\t"
                        f"{band.top + b.y1}\t{name}")
    text = "\n".join(rows) + "\n"
    with open(os.path.join(args.outdir, "words.tsv"), "w", encoding="utf-8") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return 0


def cmd_features(args) -> int:
    cfg = _config(args.config)
    word = lexicon.prepare_word(_binary(args.input), cfg)
    sw, vh = features.extract_streams(word, cfg.features)
    for seq in (sw, vh):
        if args.stream in ("both", seq.stream_id):
            sys.stdout.write(features.dump_stream(seq))
    return 0


def cmd_glyphs(args) -> int:
    save_glyphs(default_glyphs(), args.outdir)
    return 0


def cmd_lexicon(args) -> int:
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(harness.BENCHMARK_LEXICON.dumps())
    return 0


def cmd_config(args) -> int:
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(Config().dumps())
    return 0


def cmd_gen(args) -> int:
    glyphs = load_glyphs(args.glyphs) if args.glyphs else default_glyphs()
    lex = lexicon.Lexicon.read(args.lexicon)
    corpora = [
        harness.generate_corpus(glyphs, lex, args.n_train, args.noise, args.skew, args.seed, harness.TRAIN),
        harness.generate_corpus(glyphs, lex, args.n_test, args.noise, args.skew, args.seed, harness.TEST),
    ]
    harness.write_corpus(args.out, corpora)
    return 0


def cmd_train(args) -> int:
    cfg = _config(args.config)
    lex = lexicon.Lexicon.read(args.lexicon)
    corpus = harness.read_corpus(args.corpus, harness.TRAIN)
    rec = lexicon.train(corpus.pairs(), lex, cfg, seed=args.seed)
    lexicon.save_recognizer(rec, args.out)
    return 0


def cmd_recognize(args) -> int:
    rec = lexicon.load_recognizer(args.bundle)
    result = lexicon.recognize(rec, _binary(args.input))
    print("rank\tword\tfused\tSW\tVH2D")
    for rank, cand in enumerate(result.candidates[: args.top or None]):
        streams = "\t".join(f"{s:.6f}" for s in cand.stream_scores)
        print(f"{rank}\t{cand.word}\t{cand.score:.6f}\t{streams}")
    return 0


def cmd_evaluate(args) -> int:
    rec = lexicon.load_recognizer(args.bundle)
    report = harness.evaluate(rec, harness.read_corpus(args.corpus, args.split))
    sys.stdout.write(report.dumps())
    if args.confusion:
        with open(args.confusion, "w", encoding="utf-8") as fh:
            fh.write(report.dumps_confusion())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mashq", description="Two-stream HMM word recognition toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.set_defaults(func=func)
        p.add_argument("--seed", type=int, default=0, help="random seed (unused here)")
        return p

    p = add("preprocess", cmd_preprocess, "denoise and deskew a page")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--config")
    p.add_argument("--range", type=float, help="skew search range, degrees")
    p.add_argument("--step", type=float, help="skew search step, degrees")
    p.add_argument("--no-median", action="store_true")

    p = add("segment", cmd_segment, "split a page into word images")
    p.add_argument("input")
    p.add_argument("outdir")
    p.add_argument("--config")
    p.add_argument("--alpha", type=float, help="line threshold, fraction of peak")
    p.add_argument("--gap", type=int, help="minimum blank columns between words")

    p = add("features", cmd_features, "dump feature streams of a word image")
    p.add_argument("input")
    p.add_argument("--config")
    p.add_argument("--stream", choices=("SW", "VH2D", "both"), default="both")

    p = add("glyphs", cmd_glyphs, "write the built-in glyph set")
    p.add_argument("outdir")

    p = add("lexicon", cmd_lexicon, "write the benchmark lexicon")
    p.add_argument("output")

    p = add("config", cmd_config, "write the default configuration")
    p.add_argument("output")

    # randomness-consuming commands take a mandatory seed
    p = sub.add_parser("gen", help="generate a synthetic train/test corpus")
    p.set_defaults(func=cmd_gen)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--glyphs", help="directory of <label>.pbm glyphs (default: built-in)")
    p.add_argument("--n-train", type=int, default=10)
    p.add_argument("--n-test", type=int, default=5)
    p.add_argument("--noise", type=float, default=0.03)
    p.add_argument("--skew", type=float, default=5.0)

    p = sub.add_parser("train", help="train a recognizer bundle")
    p.set_defaults(func=cmd_train)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")

    p = add("recognize", cmd_recognize, "rank lexicon words for one word image")
    p.add_argument("--bundle", required=True)
    p.add_argument("input")
    p.add_argument("--top", type=int, default=0, help="print only the best N (0 = all)")

    p = add("evaluate", cmd_evaluate, "three-row accuracy report")
    p.add_argument("--bundle", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", default=harness.TEST)
    p.add_argument("--confusion", help="also write per-word confusion counts here")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError:
        return EXIT_USAGE
    except SystemExit as exc:   # --help
        return 0 if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (PNMError, ValueError, KeyError, OSError) as exc:
        print(f"mashq {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
