"""Discrete left-right HMMs over vector-quantized observations.

A model keeps its transition matrix row-stochastic. The probability of
leaving the last state (``exit``) lives beside the matrix: a standalone model
never leaves, and :func:`concat` turns that mass into the bridge to the next
character's first state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

NEG_INF = -np.inf
STOCH_TOL = 1e-12
DEFAULT_FLOOR = 1e-6


# ---------------------------------------------------------------------------
# vector quantization

@dataclass(frozen=True, eq=False)
class Codebook:
    """Centroids live in a standardized space: ``(x - offset) / scale``."""

    centroids: np.ndarray             # (K, dim)
    offset: np.ndarray | None = None  # (dim,), defaults to zeros
    scale: np.ndarray | None = None   # (dim,), defaults to ones

    def __post_init__(self):
        c = np.array(self.centroids, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] < 1:
            raise ValueError("codebook needs a (K, dim) array with K >= 1")
        dim = c.shape[1]
        offset = np.zeros(dim) if self.offset is None else np.array(self.offset, dtype=np.float64)
        scale = np.ones(dim) if self.scale is None else np.array(self.scale, dtype=np.float64)
        if offset.shape != (dim,) or scale.shape != (dim,) or (scale <= 0).any():
            raise ValueError("offset/scale must be (dim,) vectors with positive scale")
        for name, arr in (("centroids", c), ("offset", offset), ("scale", scale)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - self.offset) / self.scale

    @property
    def K(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


def _sq_dists(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    return ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)


def standardizer(vectors) -> tuple[np.ndarray, np.ndarray]:
    """Per-dimension mean and standard deviation (constant dimensions get 1)."""
    x = np.asarray(vectors, dtype=np.float64)
    std = x.std(axis=0)
    return x.mean(axis=0), np.where(std > 1e-12, std, 1.0)


def kmeans(vectors, K: int, seed: int, max_iter: int = 50,
           history: list | None = None, standardize: bool = False) -> Codebook:
    """Lloyd's algorithm from K distinct vectors picked by a seeded shuffle.

    An empty cluster is re-seeded with the point farthest from its centroid.
    With ``standardize`` the clustering runs on z-scored vectors and the
    codebook remembers the transform. If ``history`` is given, the total
    distortion after each assignment step is appended to it.
    """
    x = np.asarray(vectors, dtype=np.float64)
    offset = scale = None
    if standardize:
        offset, scale = standardizer(x)
        x = (x - offset) / scale
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    distinct = np.unique(x, axis=0)
    if len(distinct) < K:
        raise ValueError(f"need {K} distinct vectors, have {len(distinct)}")
    rng = np.random.default_rng(seed)
    centroids = distinct[rng.permutation(len(distinct))[:K]].copy()
    assign = None
    for _ in range(max_iter):
        d = _sq_dists(x, centroids)
        new_assign = d.argmin(axis=1)
        dist = d[np.arange(len(x)), new_assign]
        counts = np.bincount(new_assign, minlength=K)
        for k in np.flatnonzero(counts == 0):
            far = int(dist.argmax())
            centroids[k] = x[far]
            new_assign[far] = k
            dist[far] = 0.0
            counts = np.bincount(new_assign, minlength=K)
        if history is not None:
            history.append(float(dist.sum()))
        if assign is not None and np.array_equal(assign, new_assign):
            break
        assign = new_assign
        for k in range(K):
            centroids[k] = x[assign == k].mean(axis=0)
    return Codebook(centroids, offset, scale)


def quantize(vector, codebook: Codebook) -> int:
    """Index of the nearest centroid; the lowest index wins ties."""
    v = np.asarray(vector, dtype=np.float64)
    if v.shape != (codebook.dim,):
        raise ValueError(f"vector of shape {v.shape} does not match codebook dim {codebook.dim}")
    return int(((codebook.centroids - codebook.transform(v)) ** 2).sum(axis=1).argmin())


def quantize_all(vectors, codebook: Codebook) -> np.ndarray:
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != codebook.dim:
        raise ValueError(f"vectors of shape {x.shape} do not match codebook dim {codebook.dim}")
    return _sq_dists(codebook.transform(x), codebook.centroids).argmin(axis=1)


# ---------------------------------------------------------------------------
# models

def band_mask(S: int) -> np.ndarray:
    """Allowed transitions of the left-right topology: stay, advance 1 or 2."""
    i, j = np.indices((S, S))
    return (j >= i) & (j <= i + 2)


@dataclass(frozen=True, eq=False)
class DiscreteHMM:
    pi: np.ndarray
    A: np.ndarray
    B: np.ndarray
    exit: float = 0.0

    def __post_init__(self):
        pi = np.array(self.pi, dtype=np.float64)
        A = np.array(self.A, dtype=np.float64)
        B = np.array(self.B, dtype=np.float64)
        S = pi.shape[0]
        if pi.ndim != 1 or A.shape != (S, S) or B.ndim != 2 or B.shape[0] != S:
            raise ValueError(f"inconsistent shapes pi{pi.shape} A{A.shape} B{B.shape}")
        for name, arr in (("pi", pi), ("A", A), ("B", B)):
            if (arr < 0).any():
                raise ValueError(f"{name} has negative entries")
            sums = arr.sum(axis=-1)
            if np.abs(sums - 1.0).max() > STOCH_TOL:
                raise ValueError(f"{name} rows do not sum to 1")
        if (A[~band_mask(S)] != 0).any():
            raise ValueError("A violates the left-right band")
        if (pi[1:] != 0).any():
            raise ValueError("initial mass must sit on state 0")
        if not 0.0 <= self.exit < 1.0:
            raise ValueError(f"exit probability {self.exit} outside [0, 1)")
        for arr in (pi, A, B):
            arr.setflags(write=False)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "exit", float(self.exit))

    @property
    def S(self) -> int:
        return self.pi.shape[0]

    @property
    def K(self) -> int:
        return self.B.shape[1]

    def same_as(self, other: "DiscreteHMM") -> bool:
        return (np.array_equal(self.pi, other.pi) and np.array_equal(self.A, other.A)
                and np.array_equal(self.B, other.B) and self.exit == other.exit)


@dataclass(frozen=True, eq=False)
class WordModel:
    hmm: DiscreteHMM
    anchors: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        anchors = tuple(int(a) for a in self.anchors)
        if not anchors or anchors[0] != 0 or any(b <= a for a, b in zip(anchors, anchors[1:])):
            raise ValueError(f"bad anchors {anchors}")
        if anchors[-1] >= self.hmm.S:
            raise ValueError("anchor beyond the last state")
        if len(self.labels) != len(anchors):
            raise ValueError("one label per anchor required")
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "labels", tuple(self.labels))

    def block_of(self) -> np.ndarray:
        """Character-block index of every state."""
        blocks = np.zeros(self.hmm.S, dtype=np.int64)
        for b, a in enumerate(self.anchors[1:], start=1):
            blocks[a:] = b
        return blocks

    def block(self, b: int) -> slice:
        stop = self.anchors[b + 1] if b + 1 < len(self.anchors) else self.hmm.S
        return slice(self.anchors[b], stop)


def left_right_hmm(S: int, K: int, *, stay=0.6, advance=0.3, skip=0.1,
                   exit: float = 0.3, B=None) -> DiscreteHMM:
    """Left-right model with the given band probabilities and uniform emissions."""
    if S < 1:
        raise ValueError("need at least one state")
    A = np.zeros((S, S))
    for i in range(S):
        probs = [stay, advance, skip][: S - i]
        A[i, i:i + len(probs)] = np.array(probs) / sum(probs)
    pi = np.zeros(S)
    pi[0] = 1.0
    if B is None:
        B = np.full((S, K), 1.0 / K)
    return DiscreteHMM(pi, A, B, exit)


def concat(models: Sequence[DiscreteHMM], labels: Sequence[str]) -> WordModel:
    """Chain models so each one's exit mass feeds the next model's first state."""
    if not models or len(models) != len(labels):
        raise ValueError("need one label per model and at least one model")
    K = models[0].K
    if any(m.K != K for m in models):
        raise ValueError("models use different codebook sizes")
    sizes = [m.S for m in models]
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    S = int(offsets[-1])
    A = np.zeros((S, S))
    B = np.zeros((S, K))
    for idx, m in enumerate(models):
        o = offsets[idx]
        A[o:o + m.S, o:o + m.S] = m.A
        B[o:o + m.S] = m.B
        if idx + 1 < len(models):
            last = o + m.S - 1
            A[last, o:o + m.S] *= 1.0 - m.exit
            A[last, o + m.S] = m.exit
    pi = np.zeros(S)
    pi[: sizes[0]] = models[0].pi
    hmm = DiscreteHMM(pi, A, B, models[-1].exit)
    return WordModel(hmm, tuple(int(o) for o in offsets[:-1]), tuple(labels))


# ---------------------------------------------------------------------------
# evaluation

def _check_obs(model: DiscreteHMM, obs) -> np.ndarray:
    o = np.asarray(obs, dtype=np.int64)
    if o.ndim != 1 or o.size == 0:
        raise ValueError("observation sequence must be non-empty and 1-D")
    if o.min() < 0 or o.max() >= model.K:
        raise ValueError(f"symbol out of range 0..{model.K - 1}")
    return o


def _log(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(x)


def _forward(model: DiscreteHMM, obs: np.ndarray):
    """Scaled forward pass: normalized alphas and per-step log scale factors."""
    T, S = len(obs), model.S
    alpha = np.zeros((T, S))
    logc = np.zeros(T)
    a = model.pi * model.B[:, obs[0]]
    for t in range(T):
        if t:
            a = (alpha[t - 1] @ model.A) * model.B[:, obs[t]]
        c = a.sum()
        if c <= 0:
            logc[t:] = NEG_INF
            return alpha, logc
        alpha[t] = a / c
        logc[t] = math.log(c)
    return alpha, logc


def loglik_forward(model: DiscreteHMM, obs, end_state: int | None = None) -> float:
    """Natural-log likelihood of ``obs``; optionally require ending in ``end_state``."""
    o = _check_obs(model, obs)
    alpha, logc = _forward(model, o)
    total = logc.sum()
    if total == NEG_INF:
        return NEG_INF
    if end_state is None:
        return float(total)
    p = alpha[-1, end_state]
    return float(total + math.log(p)) if p > 0 else NEG_INF


def viterbi(model: DiscreteHMM, obs, end_state: int | None = None
            ) -> tuple[float, list[int]]:
    """Best state path in log space.

    Ties go to the smaller predecessor state while backtracking, starting
    from the smallest-index best final state.
    """
    o = _check_obs(model, obs)
    logA = _log(model.A)
    logB = _log(model.B)
    T, S = len(o), model.S
    back = np.zeros((T, S), dtype=np.int64)
    delta = _log(model.pi) + logB[:, o[0]]
    for t in range(1, T):
        cand = delta[:, None] + logA
        back[t] = cand.argmax(axis=0)
        delta = cand[back[t], np.arange(S)] + logB[:, o[t]]
    last = int(delta.argmax()) if end_state is None else end_state
    score = float(delta[last])
    path = [last]
    for t in range(T - 1, 0, -1):
        path.append(int(back[t, path[-1]]))
    return score, path[::-1]


# ---------------------------------------------------------------------------
# training

def floor_normalize(counts: np.ndarray, floor: float) -> np.ndarray | None:
    """Maximize ``sum c_k log p_k`` over the simplex with every ``p_k >= floor``.

    Returns None when the counts are all zero (nothing to re-estimate).
    """
    c = np.asarray(counts, dtype=np.float64)
    n = c.size
    if c.sum() <= 0:
        return None
    if floor * n >= 1:
        raise ValueError(f"floor {floor} infeasible for {n} outcomes")
    fixed = c <= 0
    while True:
        free = ~fixed
        p = np.full(n, floor)
        p[free] = c[free] * (1.0 - floor * fixed.sum()) / c[free].sum()
        low = free & (p < floor)
        if not low.any():
            return p
        fixed |= low


def _refit_rows(old: np.ndarray, counts: np.ndarray, mask: np.ndarray,
                floor: float) -> np.ndarray:
    new = old.copy()
    for i in range(old.shape[0]):
        free = mask[i]
        if free.sum() <= 1:
            continue
        row = floor_normalize(counts[i, free], floor)
        if row is not None:
            new[i] = 0.0
            new[i, free] = row
    return new


def apply_floor(model: DiscreteHMM, floor: float = DEFAULT_FLOOR) -> DiscreteHMM:
    """Project a model onto the floored parameter set (free entries >= floor)."""
    mask = band_mask(model.S)
    A = _refit_rows(model.A, model.A, mask, floor)
    B = _refit_rows(model.B, model.B, np.ones_like(model.B, dtype=bool), floor)
    return replace(model, A=A, B=B)


@dataclass
class Stats:
    """Expected counts for one model gathered in an E-step."""

    trans: np.ndarray
    emit: np.ndarray
    loglik: float = 0.0
    # exit bookkeeping for tied training: last-state stays and bridge uses
    stay: float = 0.0
    leave: float = 0.0

    @classmethod
    def zeros(cls, S: int, K: int) -> "Stats":
        return cls(np.zeros((S, S)), np.zeros((S, K)))


def forward_backward(model: DiscreteHMM, obs, end_state: int | None = None):
    """Posterior occupancies and summed transition posteriors.

    Returns ``(loglik, gamma, xi_sum)``; gamma is (T, S), xi_sum is (S, S).
    Each step's posteriors are normalized directly, so the backward pass can
    use arbitrary per-step scaling.
    """
    o = _check_obs(model, obs)
    alpha, logc = _forward(model, o)
    T, S = len(o), model.S
    ll = float(logc.sum())
    end = np.ones(S) if end_state is None else np.eye(S)[end_state]
    if ll == NEG_INF or (alpha[-1] * end).sum() <= 0:
        return NEG_INF, None, None
    if end_state is not None:
        ll += math.log(alpha[-1, end_state])
    beta = np.zeros((T, S))
    beta[-1] = end
    for t in range(T - 2, -1, -1):
        b = model.A @ (model.B[:, o[t + 1]] * beta[t + 1])
        beta[t] = b / b.max()
    gamma = alpha * beta
    gamma /= gamma.sum(axis=1, keepdims=True)
    xi_sum = np.zeros((S, S))
    for t in range(T - 1):
        xi = alpha[t][:, None] * model.A * (model.B[:, o[t + 1]] * beta[t + 1])[None, :]
        xi_sum += xi / xi.sum()
    return ll, gamma, xi_sum


def emission_counts(gamma: np.ndarray, obs, K: int) -> np.ndarray:
    counts = np.zeros((gamma.shape[1], K))
    np.add.at(counts.T, np.asarray(obs), gamma)
    return counts


def reestimate(model: DiscreteHMM, stats: Stats, floor: float) -> DiscreteHMM:
    """M-step with floored free parameters; pi stays on state 0."""
    A = _refit_rows(model.A, stats.trans, band_mask(model.S), floor)
    B = _refit_rows(model.B, stats.emit, np.ones_like(model.B, dtype=bool), floor)
    exit = model.exit
    if stats.stay + stats.leave > 0:
        stay_leave = floor_normalize(np.array([stats.stay, stats.leave]), floor)
        exit = float(stay_leave[1])
    return DiscreteHMM(model.pi, A, B, exit)


def total_loglik(model: DiscreteHMM, sequences, end_state: int | None = None) -> float:
    return float(sum(loglik_forward(model, s, end_state) for s in sequences))


def baum_welch(model: DiscreteHMM, sequences, max_iter: int = 50, tol: float = 1e-6,
               floor: float = DEFAULT_FLOOR, trace: list | None = None,
               end_state: int | None = None) -> DiscreteHMM:
    """Multi-sequence Baum-Welch.

    The starting model is first projected onto the floored parameter set.
    With ``end_state`` every sequence must finish in that state.
    Stops when the total log-likelihood gains less than ``tol`` or after
    ``max_iter`` re-estimations. ``trace`` receives ``(loglik, model)`` for
    every model evaluated, in order.
    """
    seqs = [np.asarray(s, dtype=np.int64) for s in sequences]
    if not seqs or any(s.size == 0 for s in seqs):
        raise ValueError("training needs at least one non-empty sequence")
    if floor <= 0:
        raise ValueError("floor must be positive")
    model = apply_floor(model, floor)
    prev = None
    for it in range(max_iter + 1):
        stats = Stats.zeros(model.S, model.K)
        for s in seqs:
            ll, gamma, xi = forward_backward(model, s, end_state)
            if gamma is None:
                raise ValueError("training sequence has zero likelihood")
            stats.loglik += ll
            stats.trans += xi
            stats.emit += emission_counts(gamma, s, model.K)
        if trace is not None:
            trace.append((stats.loglik, model))
        if prev is not None and stats.loglik - prev[0] < tol:
            return model if stats.loglik >= prev[0] else prev[1]
        if it == max_iter:
            return model
        prev = (stats.loglik, model)
        model = reestimate(model, stats, floor)
    return model


# ---------------------------------------------------------------------------
# model files

def _fmt(values) -> str:
    return " ".join(f"{float(v):.17g}" for v in np.ravel(values))


def dumps_model(codebook: Codebook | None = None, hmm: DiscreteHMM | None = None,
                anchors: Sequence[int] | None = None,
                labels: Sequence[str] | None = None) -> str:
    """Text model file; floats carry 17 significant digits."""
    out = ["MSHMM v1"]
    if codebook is not None:
        out.append(f"codebook {codebook.K} {codebook.dim}")
        out.append(_fmt(codebook.offset))
        out.append(_fmt(codebook.scale))
        out.extend(_fmt(row) for row in codebook.centroids)
    if hmm is not None:
        out.append(f"hmm {hmm.S} {hmm.K}")
        out.append(f"exit {hmm.exit:.17g}")
        out.append("pi")
        out.append(_fmt(hmm.pi))
        out.append("A")
        out.extend(_fmt(row) for row in hmm.A)
        out.append("B")
        out.extend(_fmt(row) for row in hmm.B)
    if anchors is not None:
        out.append(f"anchors {len(anchors)}")
        out.append(" ".join(str(int(a)) for a in anchors))
        if labels is not None:
            out.append(" ".join(labels))
    return "\n".join(out) + "\n"


@dataclass
class ModelFile:
    codebook: Codebook | None = None
    hmm: DiscreteHMM | None = None
    anchors: tuple[int, ...] | None = None
    labels: tuple[str, ...] | None = field(default=None)


def loads_model(text: str) -> ModelFile:
    lines = text.split("\n")
    if not lines or lines[0] != "MSHMM v1":
        raise ValueError("missing 'MSHMM v1' header")
    pos = 1
    result = ModelFile()

    def rows(n):
        nonlocal pos
        block = [np.array(lines[pos + i].split(), dtype=np.float64) for i in range(n)]
        pos += n
        return np.array(block)

    while pos < len(lines) and lines[pos]:
        head = lines[pos].split()
        pos += 1
        if head[0] == "codebook":
            K, dim = int(head[1]), int(head[2])
            offset, scale = rows(2).reshape(2, dim)
            result.codebook = Codebook(rows(K).reshape(K, dim), offset, scale)
        elif head[0] == "hmm":
            S, K = int(head[1]), int(head[2])
            exit = float(lines[pos].split()[1])
            pos += 2
            pi = rows(1).reshape(S)
            pos += 1
            A = rows(S).reshape(S, S)
            pos += 1
            B = rows(S).reshape(S, K)
            result.hmm = DiscreteHMM(pi, A, B, exit)
        elif head[0] == "anchors":
            result.anchors = tuple(int(a) for a in lines[pos].split())
            pos += 1
            if pos < len(lines) and lines[pos]:
                result.labels = tuple(lines[pos].split())
                pos += 1
        else:
            raise ValueError(f"unknown section {head[0]!r} on line {pos}")
    return result
