import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mashq.hmm import (Codebook, DiscreteHMM, apply_floor, band_mask, baum_welch, concat,
                       dumps_model, floor_normalize, forward_backward, kmeans,
                       left_right_hmm, loads_model, loglik_forward, quantize, quantize_all,
                       total_loglik, viterbi)

from oracles import brute_force, path_logprob, random_lr_hmm, word_paths


# --- vector quantization ----------------------------------------------------

def test_quantize_nearest_and_ties():
    cb = Codebook(np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 5.0]]))
    assert quantize([1.9, 0.1], cb) == 1
    assert quantize([1.0, 0.0], cb) == 0           # equidistant from 0 and 1
    assert quantize_all([[0, 4], [3, 0]], cb).tolist() == [2, 1]


def test_quantize_dimension_mismatch():
    cb = Codebook(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        quantize([1.0, 2.0], cb)


def test_kmeans_separates_clusters():
    rng = np.random.default_rng(0)
    pts = np.concatenate([rng.normal(c, 0.1, size=(30, 2)) for c in ((0, 0), (5, 5), (0, 5))])
    cb = kmeans(pts, 3, seed=1)
    centres = sorted(map(tuple, np.round(cb.centroids).astype(int)))
    assert centres == [(0, 0), (0, 5), (5, 5)]


def test_kmeans_distortion_non_increasing():
    rng = np.random.default_rng(1)
    pts = rng.random((200, 4))
    for seed in range(5):
        history = []
        kmeans(pts, 8, seed=seed, history=history)
        assert all(b <= a + 1e-9 for a, b in zip(history, history[1:]))


def test_kmeans_deterministic_and_standardized():
    rng = np.random.default_rng(2)
    pts = rng.random((100, 3)) * [1, 100, 0.01]
    a = kmeans(pts, 5, seed=3, standardize=True)
    b = kmeans(pts, 5, seed=3, standardize=True)
    assert np.array_equal(a.centroids, b.centroids)
    assert np.allclose(a.offset, pts.mean(axis=0))
    assert a.scale[1] > a.scale[0] > a.scale[2]


def test_kmeans_needs_enough_distinct_points():
    with pytest.raises(ValueError, match="distinct"):
        kmeans(np.zeros((10, 2)), 2, seed=0)


# --- model structure ---------------------------------------------------------------

def test_band_mask():
    m = band_mask(4)
    assert m.tolist() == [[1, 1, 1, 0], [0, 1, 1, 1], [0, 0, 1, 1], [0, 0, 0, 1]]


def test_model_validation():
    good = left_right_hmm(3, 2)
    with pytest.raises(ValueError, match="band"):
        A = good.A.copy()
        A[2] = [0.5, 0, 0.5]
        DiscreteHMM(good.pi, A, good.B)
    with pytest.raises(ValueError, match="sum to 1"):
        DiscreteHMM(good.pi, good.A, good.B * 2)
    with pytest.raises(ValueError, match="state 0"):
        DiscreteHMM([0.5, 0.5, 0], good.A, good.B)
    with pytest.raises(ValueError, match="exit"):
        DiscreteHMM(good.pi, good.A, good.B, exit=1.0)


def test_concat_structure():
    rng = np.random.default_rng(3)
    a = random_lr_hmm(rng, 3, 4, exit=0.25)
    b = random_lr_hmm(rng, 2, 4, exit=0.4)
    wm = concat([a, b], ("x", "y"))
    h = wm.hmm
    assert h.S == 5 and wm.anchors == (0, 3) and wm.labels == ("x", "y")
    assert wm.block_of().tolist() == [0, 0, 0, 1, 1]
    assert h.A[2, 3] == pytest.approx(0.25)
    assert h.A[2, 2] == pytest.approx(0.75)
    assert np.allclose(h.A[:2, :3], a.A[:2])
    assert np.allclose(h.A[3:, 3:], b.A)
    assert h.exit == 0.4
    assert (h.A[~band_mask(5)] == 0).all()


def test_concat_rejects_mixed_codebooks():
    with pytest.raises(ValueError):
        concat([left_right_hmm(2, 3), left_right_hmm(2, 4)], ("a", "b"))


# --- decoding against enumeration ------------------------------------------------------

@pytest.mark.parametrize("seed", range(30))
def test_decoders_match_enumeration(seed):
    rng = np.random.default_rng(seed)
    S, K, T = int(rng.integers(1, 5)), int(rng.integers(1, 5)), int(rng.integers(1, 6))
    model = random_lr_hmm(rng, S, K)
    obs = rng.integers(0, K, size=T)
    total, best, path = brute_force(model, obs)
    assert loglik_forward(model, obs) == pytest.approx(total, abs=1e-9)
    score, vpath = viterbi(model, obs)
    assert score == pytest.approx(best, abs=1e-9)
    assert vpath == path


@pytest.mark.parametrize("seed", range(20))
def test_end_constrained_decoding(seed):
    rng = np.random.default_rng(100 + seed)
    S, K = int(rng.integers(2, 5)), 3
    T = int(rng.integers(math.ceil((S - 1) / 2) + 1, 6))
    model = random_lr_hmm(rng, S, K)
    obs = rng.integers(0, K, size=T)
    total, best, path = brute_force(model, obs, end_state=S - 1)
    assert loglik_forward(model, obs, end_state=S - 1) == pytest.approx(total, abs=1e-9)
    score, vpath = viterbi(model, obs, end_state=S - 1)
    assert score == pytest.approx(best, abs=1e-9)
    assert vpath == path and vpath[-1] == S - 1


def test_word_too_short_for_model_is_impossible():
    model = left_right_hmm(5, 2)
    assert loglik_forward(model, [0], end_state=4) == -math.inf
    assert viterbi(model, [0, 1], end_state=4)[0] == -math.inf
    assert forward_backward(model, [0], end_state=4)[1] is None


def test_viterbi_tie_goes_to_smaller_state():
    A = np.array([[0.5, 0.5], [0.0, 1.0]])
    model = DiscreteHMM([1, 0], A, np.full((2, 1), 1.0))
    # paths 0,0 and 0,1 are equally likely; the smaller final state wins
    assert viterbi(model, [0, 0])[1] == [0, 0]


def test_viterbi_paths_are_monotone():
    rng = np.random.default_rng(5)
    for _ in range(20):
        model = random_lr_hmm(rng, 6, 4)
        _, path = viterbi(model, rng.integers(0, 4, size=12))
        steps = np.diff(path)
        assert path[0] == 0 and ((steps >= 0) & (steps <= 2)).all()


def test_word_paths_oracle_agrees_with_full_enumeration():
    rng = np.random.default_rng(6)
    model = random_lr_hmm(rng, 4, 3)
    obs = rng.integers(0, 3, size=5)
    total = sum(math.exp(path_logprob(model, obs, p)) for p in word_paths(4, 5, None))
    assert math.log(total) == pytest.approx(brute_force(model, obs)[0], abs=1e-12)


def test_forward_backward_posteriors():
    rng = np.random.default_rng(7)
    model = random_lr_hmm(rng, 3, 3)
    obs = rng.integers(0, 3, size=5)
    ll, gamma, xi = forward_backward(model, obs)
    weights = {p: math.exp(path_logprob(model, obs, p)) for p in word_paths(3, 5, None)}
    z = sum(weights.values())
    want = np.zeros((5, 3))
    want_xi = np.zeros((3, 3))
    for p, w in weights.items():
        for t, s in enumerate(p):
            want[t, s] += w / z
        for t in range(4):
            want_xi[p[t], p[t + 1]] += w / z
    assert ll == pytest.approx(math.log(z), abs=1e-9)
    assert np.allclose(gamma, want, atol=1e-12)
    assert np.allclose(xi, want_xi, atol=1e-12)


def test_symbol_out_of_range():
    with pytest.raises(ValueError, match="range"):
        loglik_forward(left_right_hmm(2, 3), [0, 3])
    with pytest.raises(ValueError):
        viterbi(left_right_hmm(2, 3), [])


# --- training -------------------------------------------------------------------------

@settings(max_examples=80)
@given(arrays(np.float64, st.integers(2, 8), elements=st.floats(0, 50)),
       st.sampled_from([1e-6, 1e-3, 0.05]))
def test_floor_normalize_is_the_constrained_optimum(counts, floor):
    p = floor_normalize(counts, floor)
    if counts.sum() <= 0:
        assert p is None
        return
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    assert (p >= floor * (1 - 1e-12)).all()
    # optimality: c/p is a common constant on free entries and no larger on floored ones
    free = p > floor * (1 + 1e-9)
    if free.any():
        lam = counts[free] / p[free]
        assert np.allclose(lam, lam[0], rtol=1e-9)
        assert (counts[~free] / floor <= lam[0] * (1 + 1e-9)).all()


def test_floor_normalize_plain_when_no_floor_binds():
    assert floor_normalize(np.array([1.0, 3.0]), 1e-6).tolist() == [0.25, 0.75]


def _sequences(rng, K, n):
    return [rng.integers(0, K, size=int(rng.integers(3, 9))) for _ in range(n)]


def test_baum_welch_monotone_and_valid():
    rng = np.random.default_rng(8)
    model = random_lr_hmm(rng, 4, 5)
    seqs = _sequences(rng, 5, 6)
    trace = []
    baum_welch(model, seqs, max_iter=15, tol=-math.inf, trace=trace)
    lls = [ll for ll, _ in trace]
    assert len(lls) == 16
    assert all(b >= a - 1e-8 for a, b in zip(lls, lls[1:]))
    for _, m in trace:
        assert (m.A[~band_mask(4)] == 0).all()
        assert (m.B >= 1e-6 * (1 - 1e-12)).all()


def test_baum_welch_converges_and_recovers_structure():
    truth = DiscreteHMM([1, 0], [[0.8, 0.2], [0, 1]], [[0.9, 0.1], [0.1, 0.9]])
    rng = np.random.default_rng(9)
    seqs = []
    for _ in range(200):
        s, out = 0, []
        for _ in range(10):
            out.append(int(rng.random() < truth.B[s, 1]))
            s = 1 if s == 1 or rng.random() < 0.2 else 0
        seqs.append(out)
    init = DiscreteHMM([1, 0], [[0.5, 0.5], [0, 1]], [[0.6, 0.4], [0.4, 0.6]])
    fit = baum_welch(init, seqs, max_iter=200)
    assert fit.B[0, 0] == pytest.approx(0.9, abs=0.05)
    assert fit.B[1, 1] == pytest.approx(0.9, abs=0.05)
    assert total_loglik(fit, seqs) > total_loglik(init, seqs)


def test_baum_welch_end_constrained():
    rng = np.random.default_rng(10)
    model = random_lr_hmm(rng, 3, 3)
    seqs = _sequences(rng, 3, 5)
    trace = []
    baum_welch(model, seqs, max_iter=8, tol=-math.inf, trace=trace, end_state=2)
    lls = [ll for ll, _ in trace]
    assert all(b >= a - 1e-8 for a, b in zip(lls, lls[1:]))
    assert lls[0] == pytest.approx(total_loglik(apply_floor(model), seqs, end_state=2))


def test_baum_welch_rejects_impossible_sequence():
    with pytest.raises(ValueError, match="zero likelihood"):
        baum_welch(left_right_hmm(4, 2), [[0]], end_state=3)


# --- model files ---------------------------------------------------------------------

def test_model_file_round_trip():
    rng = np.random.default_rng(11)
    cb = Codebook(rng.random((4, 3)), rng.random(3), rng.random(3) + 0.5)
    a = random_lr_hmm(rng, 3, 4, exit=0.2)
    b = random_lr_hmm(rng, 2, 4, exit=0.3)
    wm = concat([a, b], ("ba", "ra"))
    text = dumps_model(cb, wm.hmm, wm.anchors, wm.labels)
    assert text.startswith("MSHMM v1\n")
    back = loads_model(text)
    assert np.array_equal(back.codebook.centroids, cb.centroids)
    assert np.array_equal(back.codebook.scale, cb.scale)
    assert back.hmm.same_as(wm.hmm)
    assert back.anchors == (0, 3) and back.labels == ("ba", "ra")
    assert dumps_model(back.codebook, back.hmm, back.anchors, back.labels) == text


def test_model_file_bad_header():
    with pytest.raises(ValueError, match="header"):
        loads_model("HMM v2\n")


def test_single_state_training_gives_empirical_frequencies():
    seqs = [[0, 1, 1, 2], [1, 1, 3]]
    fit = baum_welch(left_right_hmm(1, 5), seqs, max_iter=3)
    # symbol 4 is never seen and sits on the floor
    want = np.array([1, 4, 1, 1, 0]) / 7
    assert np.allclose(fit.B[0], want, atol=1e-5)
    assert fit.B[0, 4] == pytest.approx(1e-6)


def test_unseen_symbol_costs_log_floor():
    floor = 1e-6
    fit = baum_welch(left_right_hmm(1, 3), [[0, 1, 0, 1]], max_iter=2, floor=floor)
    base = loglik_forward(fit, [0, 1])
    assert loglik_forward(fit, [0, 1, 2]) - base == pytest.approx(math.log(floor), rel=1e-9)
