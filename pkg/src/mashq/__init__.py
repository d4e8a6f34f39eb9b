"""Two-stream (sliding window + VH2D) discrete-HMM word recognition."""

from .config import Config
from .features import FeatureConfig, extract_streams
from .harness import evaluate, generate_corpus, run_benchmark
from .lexicon import Lexicon, Recognizer, load_recognizer, recognize, save_recognizer, train
from .multistream import StreamWeights, fuse_loglik, rank_words
from .raster import BBox, BinaryImage, GrayImage, load_pnm, save_pnm

__version__ = "0.1.0"

__all__ = [
    "BBox", "BinaryImage", "Config", "FeatureConfig", "GrayImage", "Lexicon",
    "Recognizer", "StreamWeights", "evaluate", "extract_streams", "fuse_loglik",
    "generate_corpus", "load_pnm", "load_recognizer", "rank_words", "recognize",
    "run_benchmark", "save_pnm", "save_recognizer", "train",
]
