"""Flat ``key = value`` configuration shared by training, recognition and the CLI."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

from .features import FeatureConfig
from .multistream import StreamWeights


@dataclass(frozen=True)
class Config:
    # features
    N: int = 8
    eps: int = 4
    cells: int = 8
    M: int = 16
    B: int = 8
    # models and training
    K: int = 64
    states_per_char: int = 4
    em_iters: int = 10
    kmeans_iters: int = 50
    standardize: int = 1
    floor: float = 1e-6
    exit_init: float = 0.3
    # fusion
    w_sw: float = 0.5
    w_vh2d: float = 0.5
    # preprocessing and segmentation
    median: int = 1
    skew_range: float = 20.0
    skew_step: float = 0.5
    line_alpha: float = 0.05
    word_gap: int = 3

    def __post_init__(self):
        self.features  # validates the feature block
        self.weights
        if self.K < 1 or self.states_per_char < 1 or self.em_iters < 0:
            raise ValueError("K and states_per_char must be positive, em_iters >= 0")
        if not 0 < self.exit_init < 1:
            raise ValueError("exit_init must lie in (0, 1)")

    @property
    def features(self) -> FeatureConfig:
        return FeatureConfig(self.N, self.eps, self.cells, self.M, self.B)

    @property
    def weights(self) -> StreamWeights:
        return StreamWeights((self.w_sw, self.w_vh2d))

    def with_weights(self, w_sw: float, w_vh2d: float) -> "Config":
        return replace(self, w_sw=w_sw, w_vh2d=w_vh2d)

    def dumps(self) -> str:
        return "".join(f"{k} = {v!r}\n" for k, v in asdict(self).items())

    @classmethod
    def loads(cls, text: str) -> "Config":
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in types:
                raise ValueError(f"config line {lineno}: unknown key {key!r}")
            values[key] = int(value) if types[key] == "int" else float(value)
        return cls(**values)

    @classmethod
    def read(cls, path) -> "Config":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())
