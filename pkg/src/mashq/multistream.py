"""Two-stream score fusion and composite (product) model decoding."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .hmm import NEG_INF, WordModel, _log


@dataclass(frozen=True)
class StreamWeights:
    w: tuple[float, ...] = (0.5, 0.5)

    def __post_init__(self):
        w = tuple(float(v) for v in self.w)
        if len(w) < 1 or any(v < 0 for v in w) or abs(sum(w) - 1.0) > 1e-12:
            raise ValueError(f"stream weights {w} must be non-negative and sum to 1")
        object.__setattr__(self, "w", w)

    def __iter__(self):
        return iter(self.w)

    def __len__(self):
        return len(self.w)


def weighted(w: float, logp):
    """``w * logp`` with an impossible score staying impossible, even at w = 0."""
    logp = np.asarray(logp, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        out = np.where(logp == NEG_INF, NEG_INF, w * logp)
    return out if out.ndim else float(out)


def fuse_loglik(stream_logliks: Sequence[float], weights: StreamWeights) -> float:
    """Weighted sum of per-stream log-likelihoods."""
    if len(stream_logliks) != len(weights):
        raise ValueError(f"{len(stream_logliks)} scores for {len(weights)} weights")
    total = 0.0
    for w, L in zip(weights, stream_logliks):
        total += weighted(w, L)
    return float(total)


@dataclass(frozen=True)
class Candidate:
    word: str
    score: float
    stream_scores: tuple[float, ...]


def rank_words(word_scores: Mapping[str, Sequence[float]],
               weights: StreamWeights) -> list[Candidate]:
    """Candidates by fused score, best first; equal scores in word order."""
    if not word_scores:
        raise ValueError("no candidates to rank")
    cands = [Candidate(word, fuse_loglik(scores, weights), tuple(float(s) for s in scores))
             for word, scores in word_scores.items()]
    cands.sort(key=lambda c: (-c.score, c.word))
    return cands


class AnchorPolicy(enum.Enum):
    WORD = "word"             # chains share only the start and the end
    CHARACTER = "character"   # chains enter every character block on the same frame


@dataclass(frozen=True, eq=False)
class CompositeHMM:
    """Product of two word models with weighted log-domain parameters.

    Product state ``(a, b)`` is flattened as ``a * SB + b``.
    """

    SA: int
    SB: int
    allowed: np.ndarray        # (SA, SB) bool
    log_pi: np.ndarray         # (SA, SB)
    trans_a: np.ndarray        # (SA, SA), already weighted
    trans_b: np.ndarray        # (SB, SB), already weighted
    emit_a: np.ndarray         # (SA, KA), already weighted
    emit_b: np.ndarray         # (SB, KB), already weighted
    end: tuple[int, int] | None
    policy: AnchorPolicy
    blocks_a: np.ndarray
    blocks_b: np.ndarray

    @property
    def states(self) -> list[tuple[int, int]]:
        return [tuple(map(int, s)) for s in np.argwhere(self.allowed)]

    def block_states(self, block: int) -> list[tuple[int, int]]:
        return [(a, b) for a, b in self.states
                if self.blocks_a[a] == block and self.blocks_b[b] == block]


def build_composite(wm_a: WordModel, wm_b: WordModel, weights: StreamWeights,
                    policy: AnchorPolicy = AnchorPolicy.WORD,
                    require_end: bool = True) -> CompositeHMM:
    if wm_a.labels != wm_b.labels:
        raise ValueError(f"label sequences differ: {wm_a.labels} vs {wm_b.labels}")
    if len(weights) != 2:
        raise ValueError("composite decoding takes exactly two streams")
    w1, w2 = weights.w
    ha, hb = wm_a.hmm, wm_b.hmm
    blocks_a, blocks_b = wm_a.block_of(), wm_b.block_of()
    if policy is AnchorPolicy.CHARACTER:
        allowed = blocks_a[:, None] == blocks_b[None, :]
    else:
        allowed = np.ones((ha.S, hb.S), dtype=bool)
    log_pi = weighted(w1, _log(ha.pi))[:, None] + weighted(w2, _log(hb.pi))[None, :]
    log_pi = np.where(allowed, log_pi, NEG_INF)
    end = (ha.S - 1, hb.S - 1) if require_end else None
    return CompositeHMM(
        SA=ha.S, SB=hb.S, allowed=allowed, log_pi=log_pi,
        trans_a=weighted(w1, _log(ha.A)), trans_b=weighted(w2, _log(hb.A)),
        emit_a=weighted(w1, _log(ha.B)), emit_b=weighted(w2, _log(hb.B)),
        end=end, policy=policy, blocks_a=blocks_a, blocks_b=blocks_b,
    )


def viterbi_composite(comp: CompositeHMM, obs_a, obs_b
                      ) -> tuple[float, list[tuple[int, int]]]:
    """Best product-state path under the fused additive score.

    Ties go to the lexicographically smaller ``(a, b)`` predecessor.
    """
    oa = np.asarray(obs_a, dtype=np.int64)
    ob = np.asarray(obs_b, dtype=np.int64)
    if oa.shape != ob.shape:
        raise ValueError(f"stream lengths differ: {len(oa)} vs {len(ob)}")
    if oa.ndim != 1 or oa.size == 0:
        raise ValueError("observation sequences must be non-empty and 1-D")
    for o, emit in ((oa, comp.emit_a), (ob, comp.emit_b)):
        if o.min() < 0 or o.max() >= emit.shape[1]:
            raise ValueError(f"symbol out of range 0..{emit.shape[1] - 1}")
    SA, SB = comp.SA, comp.SB
    n = SA * SB
    T = len(oa)
    # (from a, from b, to a, to b), flattened to (from, to)
    trans = (comp.trans_a[:, None, :, None] + comp.trans_b[None, :, None, :]).reshape(n, n)
    mask = np.where(comp.allowed.ravel(), 0.0, NEG_INF)
    trans = trans + mask[None, :]

    def emission(t):
        return (comp.emit_a[:, oa[t]][:, None] + comp.emit_b[:, ob[t]][None, :]).ravel()

    back = np.zeros((T, n), dtype=np.int64)
    delta = comp.log_pi.ravel() + emission(0)
    for t in range(1, T):
        cand = delta[:, None] + trans
        back[t] = cand.argmax(axis=0)
        delta = cand[back[t], np.arange(n)] + emission(t)
    if comp.end is None:
        last = int(delta.argmax())
    else:
        last = comp.end[0] * SB + comp.end[1]
    score = float(delta[last])
    flat = [last]
    for t in range(T - 1, 0, -1):
        flat.append(int(back[t, flat[-1]]))
    return score, [divmod(s, SB) for s in flat[::-1]]
