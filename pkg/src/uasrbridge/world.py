"""The synthetic ground-truth world: a bigram language model over a small
phoneme vocabulary, Gaussian frame emissions per phoneme, and per-token
durations. It supplies unpaired speech-side and text-side corpora, with
gold frame alignments kept solely for oracles and evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SENTENCE_LEN_RANGE = (5, 20)
MEAN_RADIUS = 2.0
SELF_TRANSITION_CAP = 0.3


@dataclass
class Vocabulary:
    """Ordered phoneme inventory; index 0 is silence when the flag is set."""

    tokens: list[str]
    silence: bool = False

    def __post_init__(self):
        if len(self.tokens) < 2:
            raise ValueError("vocabulary needs at least 2 tokens")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("vocabulary tokens must be unique")

    @property
    def size(self) -> int:
        return len(self.tokens)

    @property
    def silence_id(self):
        return 0 if self.silence else None

    def index(self, token: str) -> int:
        return self.tokens.index(token)


def default_vocabulary(size: int = 8, silence: bool = False) -> Vocabulary:
    tokens = [f"p{i}" for i in range(size)]
    if silence:
        tokens[0] = "sil"
    return Vocabulary(tokens, silence=silence)


@dataclass
class FeatureSequence:
    """T x d frame matrix; the stand-in for a speech model's hidden states.

    gold_alignment (per-frame true phoneme ids) exists only in synthetic
    worlds and is never consumed by training code.
    """

    id: str
    frames: np.ndarray
    gold_alignment: np.ndarray | None = None

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float32)
        if self.frames.ndim != 2 or self.frames.shape[0] < 1:
            raise ValueError(f"frames must be a nonempty T x d matrix, got {self.frames.shape}")
        if not np.isfinite(self.frames).all():
            raise ValueError("frames contain non-finite values")
        if self.gold_alignment is not None:
            self.gold_alignment = np.asarray(self.gold_alignment, dtype=np.int64)
            if self.gold_alignment.shape != (self.frames.shape[0],):
                raise ValueError("gold_alignment length must equal the frame count")


@dataclass
class PhonemeSequence:
    """Token-id sequence over the vocabulary; the text-side unit."""

    id: str
    tokens: list[int]

    def __post_init__(self):
        if len(self.tokens) < 1:
            raise ValueError("phoneme sequence must be nonempty")
        self.tokens = [int(t) for t in self.tokens]


@dataclass
class SyntheticWorldSpec:
    vocab: Vocabulary
    feature_dim: int = 16
    emission_means: np.ndarray = None
    emission_noise_sigma: float = 0.3
    duration_range: tuple[int, int] = (1, 4)
    bigram_lm: np.ndarray = None
    start_probs: np.ndarray = field(default=None, repr=False)
    seed: int = 0

    def __post_init__(self):
        v = self.vocab.size
        if self.bigram_lm is not None:
            self.bigram_lm = np.asarray(self.bigram_lm, dtype=np.float64)
            if self.bigram_lm.shape != (v, v):
                raise ValueError("bigram matrix must be V x V")
            if not np.allclose(self.bigram_lm.sum(axis=1), 1.0, atol=1e-6):
                raise ValueError("bigram rows must sum to 1")
        if self.emission_means is not None:
            self.emission_means = np.asarray(self.emission_means, dtype=np.float32)
            if self.emission_means.shape != (v, self.feature_dim):
                raise ValueError("emission means must be V x d")
        lo, hi = self.duration_range
        if not (1 <= lo <= hi):
            raise ValueError(f"bad duration range {self.duration_range}")
        if self.start_probs is None and self.bigram_lm is not None:
            self.start_probs = stationary_distribution(
                no_repeat_chain(self.bigram_lm)
            )


def no_repeat_chain(bigram: np.ndarray) -> np.ndarray:
    """The effective sampling chain: diagonal zeroed and rows renormalized.

    Sentences are drawn without immediate repeats so that collapsing a gold
    alignment recovers the generating sentence exactly.
    """
    chain = np.array(bigram, dtype=np.float64)
    np.fill_diagonal(chain, 0.0)
    return chain / chain.sum(axis=1, keepdims=True)


def stationary_distribution(transition: np.ndarray, iters: int = 500) -> np.ndarray:
    v = np.full(transition.shape[0], 1.0 / transition.shape[0])
    for _ in range(iters):
        nxt = v @ transition
        nxt /= nxt.sum()
        if np.abs(nxt - v).max() < 1e-13:
            v = nxt
            break
        v = nxt
    return v


def _sample_bigram(rng: np.random.Generator, v: int) -> np.ndarray:
    """Dirichlet(1) rows with the self-transition mass capped; excess goes to
    the other entries proportionally."""
    rows = rng.dirichlet(np.ones(v), size=v)
    for i in range(v):
        if rows[i, i] > SELF_TRANSITION_CAP:
            excess = rows[i, i] - SELF_TRANSITION_CAP
            rows[i, i] = SELF_TRANSITION_CAP
            others = np.arange(v) != i
            rows[i, others] += excess * rows[i, others] / rows[i, others].sum()
    return rows / rows.sum(axis=1, keepdims=True)


def _sample_means(rng: np.random.Generator, v: int, d: int, sigma: float,
                  max_tries: int = 10000) -> np.ndarray:
    """Means uniform on a radius-2 sphere, accept/rejected until every pair
    is at least 4*sigma apart (the learnability guarantee)."""
    min_dist = 4.0 * sigma
    for _ in range(max_tries):
        raw = rng.normal(size=(v, d))
        means = MEAN_RADIUS * raw / np.linalg.norm(raw, axis=1, keepdims=True)
        dists = np.linalg.norm(means[:, None] - means[None, :], axis=-1)
        np.fill_diagonal(dists, np.inf)
        if dists.min() >= min_dist:
            return means.astype(np.float32)
    raise RuntimeError(
        f"could not place {v} emission means at separation {min_dist:.2f} "
        f"on a radius-{MEAN_RADIUS} sphere in {max_tries} tries"
    )


def make_world(vocab_size: int = 8, feature_dim: int = 16, sigma: float = 0.3,
               duration_range: tuple[int, int] = (1, 4), silence: bool = False,
               seed: int = 0) -> SyntheticWorldSpec:
    """Build a fully populated world spec from scalar knobs."""
    rng = np.random.default_rng(seed)
    vocab = default_vocabulary(vocab_size, silence=silence)
    bigram = _sample_bigram(rng, vocab_size)
    means = _sample_means(rng, vocab_size, feature_dim, sigma)
    return SyntheticWorldSpec(
        vocab=vocab,
        feature_dim=feature_dim,
        emission_means=means,
        emission_noise_sigma=sigma,
        duration_range=duration_range,
        bigram_lm=bigram,
        seed=seed,
    )


def sample_sentence(rng: np.random.Generator, spec: SyntheticWorldSpec,
                    length: int | None = None) -> list[int]:
    """Draw a sentence from the bigram chain with no immediate repeats."""
    chain = no_repeat_chain(spec.bigram_lm)
    if length is None:
        lo, hi = SENTENCE_LEN_RANGE
        length = int(rng.integers(lo, hi + 1))
    v = spec.vocab.size
    first = int(rng.choice(v, p=spec.start_probs))
    tokens = [first]
    for _ in range(length - 1):
        tokens.append(int(rng.choice(v, p=chain[tokens[-1]])))
    return tokens


def emit_frames(rng: np.random.Generator, spec: SyntheticWorldSpec,
                tokens: list[int]):
    """Expand a sentence to frames: per-token duration, mean plus noise."""
    lo, hi = spec.duration_range
    durations = rng.integers(lo, hi + 1, size=len(tokens))
    alignment = np.repeat(np.asarray(tokens, dtype=np.int64), durations)
    means = spec.emission_means[alignment]
    noise = rng.normal(scale=spec.emission_noise_sigma, size=means.shape)
    frames = (means + noise).astype(np.float32)
    return frames, alignment


def generate_world(spec: SyntheticWorldSpec, n_speech: int, n_text: int):
    """Sample unpaired corpora: speech-side feature sequences with gold
    alignments, and text-side sentences sharing no token sequence with the
    speech side (resampled on collision).
    """
    if n_speech < 1 or n_text < 1:
        raise ValueError("need at least one item on each side")
    rng = np.random.default_rng(spec.seed)
    speech = []
    speech_keys = set()
    for i in range(n_speech):
        tokens = sample_sentence(rng, spec)
        frames, alignment = emit_frames(rng, spec, tokens)
        speech.append(FeatureSequence(f"sp{i:05d}", frames, alignment))
        speech_keys.add(tuple(tokens))
    text = []
    for i in range(n_text):
        while True:
            tokens = sample_sentence(rng, spec)
            if tuple(tokens) not in speech_keys:
                break
        text.append(PhonemeSequence(f"tx{i:05d}", tokens))
    return speech, text


def collapse_alignment(alignment: np.ndarray, silence_id: int | None = None) -> list[int]:
    """Remove consecutive duplicates, then drop silence frames."""
    out = []
    prev = None
    for t in np.asarray(alignment).tolist():
        if t != prev:
            out.append(t)
        prev = t
    if silence_id is not None:
        out = [t for t in out if t != silence_id]
    return out


def estimate_bigram(corpus, vocab_size: int):
    """Add-one-smoothed bigram matrix and start distribution from sentences.

    This is the label-free language model used for checkpoint scoring; it
    sees only the text side of the world.
    """
    counts = np.ones((vocab_size, vocab_size), dtype=np.float64)
    starts = np.ones(vocab_size, dtype=np.float64)
    for seq in corpus:
        toks = seq.tokens
        starts[toks[0]] += 1
        for a, b in zip(toks, toks[1:]):
            counts[a, b] += 1
    return counts / counts.sum(axis=1, keepdims=True), starts / starts.sum()
