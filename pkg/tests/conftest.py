import pytest

from mashq.config import Config
from mashq.glyphs import default_glyphs
from mashq.harness import BENCHMARK_LEXICON, TEST, TRAIN, generate_corpus
from mashq.lexicon import train

_ACCEPTANCE = {}


def record_criterion(number: int, name: str, passed: bool, detail: str) -> None:
    _ACCEPTANCE[number] = (name, passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        name, passed, detail = _ACCEPTANCE[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {name}: {detail}")


@pytest.fixture(scope="session")
def glyphs():
    return default_glyphs()


@pytest.fixture(scope="session")
def small_setup(glyphs):
    """A small trained recognizer shared by the slower tests."""
    from mashq.lexicon import Lexicon
    lex = Lexicon({w: BENCHMARK_LEXICON.spelling(w)
                   for w in ("bara", "tara", "alefra", "seenba", "falamalef", "khadal")})
    cfg = Config(K=32, em_iters=6)
    train_set = generate_corpus(glyphs, lex, 6, 0.02, 3.0, seed=11, split=TRAIN)
    test_set = generate_corpus(glyphs, lex, 3, 0.02, 3.0, seed=11, split=TEST)
    rec = train(train_set.pairs(), lex, cfg, seed=11)
    return rec, lex, train_set, test_set
