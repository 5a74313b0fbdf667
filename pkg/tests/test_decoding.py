"""Decoding and metric tests, with brute-force and reference-loop oracles."""

from functools import lru_cache

import numpy as np
import pytest

from uasrbridge import decoding as dec
from uasrbridge.autodiff import one_hot


def gram(rows, stride=1, ident="u"):
    return dec.Posteriorgram(ident, np.asarray(rows, dtype=np.float32), stride)


def test_decode_collapse_basic():
    # one-hot frames a,a,b,b,b,a -> a,b,a
    probs = one_hot([0, 0, 1, 1, 1, 0], 3)
    out = dec.decode_collapse(gram(probs))
    assert out.tokens == [0, 1, 0]


def test_decode_all_silence_gives_empty():
    probs = one_hot([0, 0, 0], 3)
    out = dec.decode_collapse(gram(probs), silence_id=0)
    assert out.tokens == []


def test_decode_silence_separated_repeats_survive():
    probs = one_hot([1, 0, 1], 3)
    out = dec.decode_collapse(gram(probs), silence_id=0)
    assert out.tokens == [1, 1]


def test_decode_ties_to_lower_index():
    probs = np.full((2, 4), 0.25, dtype=np.float32)
    out = dec.decode_collapse(gram(probs))
    assert out.tokens == [0]


def test_decode_matches_naive_reference():
    rng = np.random.default_rng(0)
    raw = rng.random((40, 5)).astype(np.float32)
    probs = raw / raw.sum(axis=1, keepdims=True)
    out = dec.decode_collapse(gram(probs))
    naive = []
    for t in range(40):
        best = 0
        for v in range(1, 5):
            if probs[t, v] > probs[t, best]:
                best = v
        if not naive or naive[-1] != best:
            naive.append(best)
    assert out.tokens == naive


def test_decode_roundtrip_identity_on_clean_sequences():
    # one-hot expansion of a duplicate-free sequence decodes to itself
    rng = np.random.default_rng(1)
    for _ in range(20):
        seq = []
        while len(seq) < 8:
            t = int(rng.integers(1, 6))
            if not seq or seq[-1] != t:
                seq.append(t)
        out = dec.decode_collapse(gram(one_hot(seq, 6)))
        assert out.tokens == seq


# ---------------------------------------------------------------------------
# edit distance


def test_edit_distance_identity():
    assert dec.edit_distance([1, 2, 3], [1, 2, 3]) == (0, 0, 0)
    assert dec.phone_error_rate([1, 2, 3], [1, 2, 3]) == 0.0


def test_edit_distance_single_substitution():
    s, i, d = dec.edit_distance([1, 2, 3], [1, 9, 3])
    assert (s, i, d) == (1, 0, 0)
    assert dec.phone_error_rate([1, 2, 3], [1, 9, 3]) == pytest.approx(1 / 3)


def test_edit_distance_empty_ref_rejected():
    with pytest.raises(ValueError, match="empty reference"):
        dec.edit_distance([], [1])


def test_empty_hypothesis_counts_as_deletions():
    s, i, d = dec.edit_distance([4, 5, 6], [])
    assert (s, i, d) == (0, 0, 3)
    assert dec.phone_error_rate([4, 5, 6], []) == 1.0


def brute_force_distance(ref, hyp):
    """Plain recursion, no memoization; viable only for short sequences."""
    if not ref:
        return len(hyp)
    if not hyp:
        return len(ref)
    if ref[0] == hyp[0]:
        return brute_force_distance(ref[1:], hyp[1:])
    return 1 + min(
        brute_force_distance(ref[1:], hyp[1:]),
        brute_force_distance(ref[1:], hyp),
        brute_force_distance(ref, hyp[1:]),
    )


def memoized_distance(ref, hyp):
    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(ref):
            return len(hyp) - j
        if j == len(hyp):
            return len(ref) - i
        if ref[i] == hyp[j]:
            return go(i + 1, j + 1)
        return 1 + min(go(i + 1, j + 1), go(i + 1, j), go(i, j + 1))

    return go(0, 0)


def test_edit_distance_matches_plain_recursion_short():
    rng = np.random.default_rng(2)
    for _ in range(50):
        ref = rng.integers(0, 4, size=rng.integers(1, 7)).tolist()
        hyp = rng.integers(0, 4, size=rng.integers(0, 7)).tolist()
        s, i, d = dec.edit_distance(ref, hyp)
        assert s + i + d == brute_force_distance(tuple(ref), tuple(hyp))


def test_edit_distance_matches_recursion_200_pairs():
    rng = np.random.default_rng(3)
    for _ in range(200):
        ref = rng.integers(0, 6, size=rng.integers(1, 13)).tolist()
        hyp = rng.integers(0, 6, size=rng.integers(0, 13)).tolist()
        s, i, d = dec.edit_distance(ref, hyp)
        assert s + i + d == memoized_distance(tuple(ref), tuple(hyp))
        # structural consistency of the split
        assert i - d == len(hyp) - len(ref)


def test_edit_distance_is_a_metric():
    rng = np.random.default_rng(4)
    for _ in range(100):
        a = rng.integers(0, 4, size=rng.integers(1, 9)).tolist()
        b = rng.integers(0, 4, size=rng.integers(1, 9)).tolist()
        c = rng.integers(0, 4, size=rng.integers(1, 9)).tolist()
        dab = sum(dec.edit_distance(a, b))
        dba = sum(dec.edit_distance(b, a))
        dac = sum(dec.edit_distance(a, c))
        dcb = sum(dec.edit_distance(c, b))
        assert dab == dba
        assert dab <= dac + dcb
        assert (dab == 0) == (a == b)


# ---------------------------------------------------------------------------
# bigram perplexity


def test_uniform_lm_gives_perplexity_v():
    v = 8
    lm = np.full((v, v), 1.0 / v)
    start = np.full(v, 1.0 / v)
    rng = np.random.default_rng(5)
    for _ in range(5):
        seq = rng.integers(0, v, size=rng.integers(1, 20)).tolist()
        assert dec.bigram_perplexity(seq, lm, start) == pytest.approx(v, rel=1e-6)


def test_deterministic_chain_perplexity_near_one():
    v = 8
    lm = np.zeros((v, v))
    for i in range(v):
        lm[i, (i + 1) % v] = 1.0
    start = np.zeros(v)
    start[0] = 1.0
    seq = [i % v for i in range(60)]
    ppl = dec.bigram_perplexity(seq, lm, start)
    assert ppl <= 1.2


def test_perplexity_matches_log_domain_loop():
    rng = np.random.default_rng(6)
    v = 5
    lm = rng.dirichlet(np.ones(v), size=v)
    start = rng.dirichlet(np.ones(v))
    seq = rng.integers(0, v, size=12).tolist()
    got = dec.bigram_perplexity(seq, lm, start)
    # independent scalar loop
    uni = 0.1 / v
    ll = np.log((start[seq[0]] + uni) / 1.1)
    for a, b in zip(seq, seq[1:]):
        ll += np.log((lm[a, b] + uni) / 1.1)
    expect = float(np.exp(-ll / len(seq)))
    assert got == pytest.approx(expect, rel=1e-6)


def test_corpus_perplexity_and_usage_entropy_degeneracy():
    v = 4
    lm = np.full((v, v), 1.0 / v)
    start = np.full(v, 1.0 / v)
    assert dec.corpus_perplexity([[]], lm, start) == float("inf")
    assert dec.corpus_perplexity([[1, 2]], lm, start) == pytest.approx(4.0, rel=1e-6)
    assert dec.usage_entropy([[1, 1, 1]], v) == 0.0
    assert dec.usage_entropy([[0, 1], [2, 3]], v) == pytest.approx(np.log(4))


def test_eval_report_csv(tmp_path):
    refs = [dec.DecodedSequence("a", [1, 2, 3]), dec.DecodedSequence("b", [2])]
    hyps = [dec.DecodedSequence("a", [1, 2, 3]), dec.DecodedSequence("b", [3])]
    rows = dec.evaluate_pairs(refs, hyps)
    path = tmp_path / "eval.csv"
    dec.write_eval_report(path, rows)
    text = path.read_text(encoding="utf-8").strip().splitlines()
    assert text[0] == "id,ref_len,S,I,D,per"
    assert text[1].startswith("a,3,0,0,0,0.000000")
    assert text[2].startswith("b,1,1,0,0,1.000000")
