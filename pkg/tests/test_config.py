from pathlib import Path

import pytest

from mashq.config import Config
from mashq.harness import BENCHMARK_LEXICON
from mashq.lexicon import Lexicon

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_round_trip():
    cfg = Config(K=32, w_sw=0.3, w_vh2d=0.7, floor=1e-5)
    assert Config.loads(cfg.dumps()) == cfg


def test_comments_and_partial_files():
    cfg = Config.loads("# only a few keys\nK = 16   # small\n\nem_iters = 3\n")
    assert (cfg.K, cfg.em_iters, cfg.N) == (16, 3, 8)


@pytest.mark.parametrize("text", ["K 16\n", "nonsense = 1\n", "N = 12\n",
                                  "w_sw = 0.9\n", "exit_init = 1.5\n"])
def test_rejects(text):
    with pytest.raises(ValueError):
        Config.loads(text)


def test_shipped_config_matches_defaults():
    assert Config.read(CONFIGS / "default.cfg") == Config()
    keys = {line.split("=")[0].strip()
            for line in (CONFIGS / "default.cfg").read_text().splitlines()
            if line and not line.startswith("#")}
    assert keys == set(Config().__dataclass_fields__)


def test_shipped_lexicon_is_the_benchmark_lexicon():
    assert Lexicon.read(CONFIGS / "benchmark_lexicon.tsv") == BENCHMARK_LEXICON


def test_derived_objects():
    cfg = Config().with_weights(0.2, 0.8)
    assert cfg.weights.w == (0.2, 0.8)
    assert cfg.features.N == 8 and cfg.features.dims("VH2D") == 32
