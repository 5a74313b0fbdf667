"""Greedy posteriorgram decoding and recognition metrics."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass
class Posteriorgram:
    """T' x V per-frame distribution over phonemes, at a stride relative to
    the source frame rate."""

    id: str
    probs: np.ndarray
    stride: int = 1

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float32)
        if self.probs.ndim != 2:
            raise ValueError("posteriorgram must be T' x V")
        sums = self.probs.sum(axis=-1)
        if self.probs.shape[0] and not np.allclose(sums, 1.0, atol=1e-5):
            raise ValueError("posteriorgram rows must sum to 1")


@dataclass
class DecodedSequence:
    """Token ids after argmax, run collapse, and silence removal."""

    id: str
    tokens: list[int]


def decode_collapse(p: Posteriorgram, silence_id: int | None = None) -> DecodedSequence:
    """Per-frame argmax (ties to the lower index), collapse runs, then drop
    silence. Silence is removed after collapsing, so silence-separated
    repeats survive as distinct tokens."""
    ids = np.argmax(p.probs, axis=-1).tolist()
    collapsed = []
    prev = None
    for t in ids:
        if t != prev:
            collapsed.append(t)
        prev = t
    if silence_id is not None:
        collapsed = [t for t in collapsed if t != silence_id]
    else:
        assert all(a != b for a, b in zip(collapsed, collapsed[1:]))
    return DecodedSequence(p.id, collapsed)


def edit_distance(ref: list[int], hyp: list[int]):
    """Unit-cost Levenshtein alignment; returns (substitutions, insertions,
    deletions) with insertions counted on the hypothesis side."""
    if len(ref) == 0:
        raise ValueError("empty reference: phone error rate is undefined")
    m, n = len(ref), len(hyp)
    dist = np.zeros((m + 1, n + 1), dtype=np.int64)
    dist[:, 0] = np.arange(m + 1)
    dist[0, :] = np.arange(n + 1)
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            same = ref[i - 1] == hyp[j - 1]
            dist[i, j] = min(
                dist[i - 1, j - 1] + (0 if same else 1),
                dist[i - 1, j] + 1,
                dist[i, j - 1] + 1,
            )
    # traceback, preferring diagonal moves
    i, j = m, n
    subs = ins = dels = 0
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dist[i, j] == dist[i - 1, j - 1] + (
                0 if ref[i - 1] == hyp[j - 1] else 1):
            if ref[i - 1] != hyp[j - 1]:
                subs += 1
            i, j = i - 1, j - 1
        elif i > 0 and dist[i, j] == dist[i - 1, j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return subs, ins, dels


def phone_error_rate(ref: list[int], hyp: list[int]) -> float:
    """(S + I + D) / len(ref); empty hypotheses count as all deletions."""
    s, i, d = edit_distance(ref, hyp)
    return (s + i + d) / len(ref)


def bigram_perplexity(tokens: list[int], bigram: np.ndarray,
                      start: np.ndarray, smoothing: float = 0.1) -> float:
    """exp of the mean token negative log-likelihood under a bigram model.

    The first token is scored by the start distribution. Smoothing mixes in
    ``smoothing`` total probability mass spread uniformly, so a uniform
    model keeps perplexity exactly V.
    """
    if len(tokens) == 0:
        raise ValueError("cannot score an empty sequence")
    v = bigram.shape[0]
    uni = smoothing / v
    norm = 1.0 + smoothing
    nll = -np.log((start[tokens[0]] + uni) / norm)
    for a, b in zip(tokens, tokens[1:]):
        nll -= np.log((bigram[a, b] + uni) / norm)
    return float(np.exp(nll / len(tokens)))


def corpus_perplexity(sequences, bigram: np.ndarray, start: np.ndarray,
                      smoothing: float = 0.1) -> float:
    """Pooled perplexity over all tokens of all non-empty sequences.

    Returns inf when nothing decodable remains, which makes degenerate
    checkpoints score worst.
    """
    nll = 0.0
    total = 0
    v = bigram.shape[0]
    uni = smoothing / v
    norm = 1.0 + smoothing
    for seq in sequences:
        toks = seq.tokens if hasattr(seq, "tokens") else seq
        if not toks:
            continue
        nll -= np.log((start[toks[0]] + uni) / norm)
        for a, b in zip(toks, toks[1:]):
            nll -= np.log((bigram[a, b] + uni) / norm)
        total += len(toks)
    if total == 0:
        return float("inf")
    return float(np.exp(nll / total))


def usage_entropy(sequences, vocab_size: int) -> float:
    """Entropy (nats) of the pooled token-usage distribution."""
    counts = np.zeros(vocab_size)
    for seq in sequences:
        toks = seq.tokens if hasattr(seq, "tokens") else seq
        for t in toks:
            counts[t] += 1
    if counts.sum() == 0:
        return 0.0
    p = counts / counts.sum()
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def write_eval_report(path, rows):
    """UTF-8 CSV: id,ref_len,S,I,D,per."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "ref_len", "S", "I", "D", "per"])
        for row in rows:
            writer.writerow(row)


def evaluate_pairs(refs, hyps):
    """Per-utterance error rows for paired reference/hypothesis sequences."""
    if len(refs) != len(hyps):
        raise ValueError(
            f"reference and hypothesis counts differ: {len(refs)} vs {len(hyps)}")
    rows = []
    for ref, hyp in zip(refs, hyps):
        s, i, d = edit_distance(ref.tokens, hyp.tokens)
        per = (s + i + d) / len(ref.tokens)
        rows.append([ref.id, len(ref.tokens), s, i, d, f"{per:.6f}"])
    return rows
