"""Adversarial phoneme-recognizer training from unpaired speech and text.

A convolutional generator maps frame features to phoneme posteriorgrams at
a fixed stride; a convolutional discriminator scores posterior sequences
against label-smoothed one-hot encodings of real text. The discriminator
objective carries an input-gradient penalty; the generator objective adds
smoothness, vocabulary-diversity, and (optionally) auxiliary cluster
prediction terms. Checkpoints are selected without labels, by bigram
perplexity and token-usage entropy of decoded held-out outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor, no_grad
from .decoding import (DecodedSequence, Posteriorgram, corpus_perplexity,
                       decode_collapse, usage_entropy)
from .world import FeatureSequence, collapse_alignment

METRIC_FIELDS = ["step", "loss_c", "loss_g", "l_gp", "l_sp", "l_pd", "l_ss",
                 "usage_entropy"]


class NumericsError(ArithmeticError):
    """A loss term left the finite range; training aborts."""


@dataclass
class GeneratorConfig:
    input_dim: int
    vocab_size: int
    hidden_dim: int = 64
    kernel_width: int = 3
    stride: int = 2
    layers: int = 2

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.layers < 1:
            raise ValueError("generator needs at least 1 conv layer")


@dataclass
class DiscriminatorConfig:
    vocab_size: int
    channels: int = 64
    kernel_width: int = 5
    layers: int = 2

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError("discriminator needs at least 1 conv layer")


@dataclass
class GanHyperparams:
    lambda_gp: float = 1.5
    gamma_sp: float = 0.5
    eta_pd: float = 4.0
    delta_ss: float = 0.0
    lr_g: float = 5e-4
    lr_c: float = 5e-4
    steps: int = 3000
    batch_size: int = 8
    label_smooth_eps: float = 0.1
    seed: int = 0
    eval_every: int = 250
    minimax_generator_loss: bool = False

    def __post_init__(self):
        for name in ("lambda_gp", "gamma_sp", "eta_pd", "delta_ss"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


# ---------------------------------------------------------------------------
# parameter initialization and forward passes


def _conv_init(rng, w, d_in, d_out, gain=2.0):
    scale = np.sqrt(gain / (w * d_in))
    return (rng.standard_normal((w, d_in, d_out)) * scale).astype(np.float32)


def init_generator_params(cfg: GeneratorConfig, rng: np.random.Generator,
                          aux_clusters: int = 0) -> dict[str, np.ndarray]:
    params = {}
    dims = [cfg.input_dim] + [cfg.hidden_dim] * (cfg.layers - 1) + [cfg.vocab_size]
    for i in range(cfg.layers):
        gain = 2.0 if i < cfg.layers - 1 else 1.0
        params[f"gen.conv{i}.kernel"] = _conv_init(
            rng, cfg.kernel_width, dims[i], dims[i + 1], gain)
        params[f"gen.conv{i}.bias"] = np.zeros(dims[i + 1], np.float32)
    if aux_clusters:
        params["gen.aux.w"] = (
            rng.standard_normal((cfg.hidden_dim, aux_clusters))
            * np.sqrt(1.0 / cfg.hidden_dim)).astype(np.float32)
        params["gen.aux.b"] = np.zeros(aux_clusters, np.float32)
    return params


def init_discriminator_params(cfg: DiscriminatorConfig,
                              rng: np.random.Generator) -> dict[str, np.ndarray]:
    params = {}
    d_in = cfg.vocab_size
    for i in range(cfg.layers):
        params[f"disc.conv{i}.kernel"] = _conv_init(
            rng, cfg.kernel_width, d_in, cfg.channels)
        params[f"disc.conv{i}.bias"] = np.zeros(cfg.channels, np.float32)
        d_in = cfg.channels
    params["disc.head.w"] = (
        rng.standard_normal((cfg.channels, 1))
        * np.sqrt(1.0 / cfg.channels)).astype(np.float32)
    params["disc.head.b"] = np.zeros((1, 1), np.float32)
    return params


def tensorize(params: dict[str, np.ndarray], requires_grad: bool) -> dict[str, Tensor]:
    return {k: Tensor(v, requires_grad=requires_grad) for k, v in params.items()}


def generator_apply(cfg: GeneratorConfig, params: dict[str, Tensor], frames):
    """Tape-aware generator body: returns (posterior probs T' x V, hidden)."""
    h = frames if isinstance(frames, Tensor) else Tensor(frames)
    hidden = None
    for i in range(cfg.layers):
        stride = cfg.stride if i == 0 else 1
        h = ad.add(ad.conv1d(h, params[f"gen.conv{i}.kernel"], stride),
                   params[f"gen.conv{i}.bias"])
        if i < cfg.layers - 1:
            h = ad.relu(h)
            if i == 0:
                hidden = h
    return ad.softmax(h), hidden


def generator_forward(cfg: GeneratorConfig, params: dict[str, np.ndarray],
                      item: FeatureSequence) -> Posteriorgram:
    """Inference wrapper producing a posteriorgram for one utterance."""
    if item.frames.shape[1] != cfg.input_dim:
        raise ad.ShapeError(
            f"feature dim {item.frames.shape[1]} does not match generator "
            f"input dim {cfg.input_dim}")
    with no_grad():
        probs, _ = generator_apply(cfg, tensorize(params, False), item.frames)
    return Posteriorgram(item.id, probs.data, cfg.stride)


def discriminator_apply(cfg: DiscriminatorConfig, params: dict[str, Tensor],
                        probs) -> Tensor:
    """Score a T' x V distribution sequence; scalar in (0, 1)."""
    h = probs if isinstance(probs, Tensor) else Tensor(probs)
    for i in range(cfg.layers):
        h = ad.relu(ad.add(ad.conv1d(h, params[f"disc.conv{i}.kernel"], 1),
                           params[f"disc.conv{i}.bias"]))
    pooled = ad.mean_axis(h, 0, keepdims=True)
    return ad.sigmoid(ad.add(ad.matmul(pooled, params["disc.head.w"]),
                             params["disc.head.b"]))


# ---------------------------------------------------------------------------
# loss terms


def smoothed_one_hot(tokens, vocab_size: int, eps: float) -> np.ndarray:
    """One-hot rows with eps spread uniformly over the other V-1 entries."""
    ids = np.asarray(tokens, dtype=np.intp)
    out = np.full((ids.size, vocab_size), eps / (vocab_size - 1), np.float32)
    out[np.arange(ids.size), ids] = 1.0 - eps
    return out


def adversarial_losses(c_real: Tensor, c_fake: Tensor,
                       minimax_generator: bool = False):
    """loss_c = -[log C(real) + log(1 - C(fake))]; loss_g non-saturating
    -log C(fake) unless the literal minimax form is requested."""
    cr = ad.clip(c_real, 1e-6, 1.0 - 1e-6)
    cf = ad.clip(c_fake, 1e-6, 1.0 - 1e-6)
    loss_c = ad.neg(ad.add(ad.log(cr), ad.log(ad.sub(1.0, cf))))
    if minimax_generator:
        loss_g = ad.log(ad.sub(1.0, cf))
    else:
        loss_g = ad.neg(ad.log(cf))
    return loss_c, loss_g


def _match_lengths(a: np.ndarray, b: np.ndarray, rng: np.random.Generator):
    """Random-crop the longer sequence to the shorter one's length."""
    if len(a) > len(b):
        start = int(rng.integers(0, len(a) - len(b) + 1))
        a = a[start:start + len(b)]
    elif len(b) > len(a):
        start = int(rng.integers(0, len(b) - len(a) + 1))
        b = b[start:start + len(a)]
    return a, b


def gradient_penalty(score_fn, real: np.ndarray, fake: np.ndarray,
                     rng: np.random.Generator) -> Tensor:
    """Squared norm of the discriminator's input gradient at a random
    interpolate of a (real, fake) pair, summed over the sequence.

    ``score_fn`` maps a T x V Tensor to a scalar Tensor. The returned value
    stays on the tape and is differentiable w.r.t. the discriminator
    parameters captured by ``score_fn``.
    """
    real, fake = _match_lengths(np.asarray(real), np.asarray(fake), rng)
    alpha = float(rng.random())
    mixed = Tensor(alpha * real + (1.0 - alpha) * fake, requires_grad=True)
    score = score_fn(mixed)
    g = ad.grad_of(score, mixed, create_graph=True)
    return ad.sum_axis(ad.mul(g, g))


def smoothness_penalty(probs: Tensor) -> Tensor:
    """Sum of squared distances between adjacent posterior rows."""
    t = probs.shape[0]
    if t < 2:
        return Tensor(0.0)
    diff = ad.sub(ad.slice_rows(probs, 0, t - 1), ad.slice_rows(probs, 1, t))
    return ad.sum_axis(ad.mul(diff, diff))


def diversity_loss(batch_probs: list[Tensor]) -> Tensor:
    """Negative entropy of the batch-mean posterior row; in [-log V, 0]."""
    if not batch_probs:
        raise ValueError("diversity loss needs a non-empty batch")
    total_frames = sum(p.shape[0] for p in batch_probs)
    acc = None
    for p in batch_probs:
        s = ad.sum_axis(p, 0, keepdims=True)
        acc = s if acc is None else ad.add(acc, s)
    pbar = ad.mul(acc, 1.0 / total_frames)
    return ad.sum_axis(ad.mul(pbar, ad.log(ad.clip(pbar, 1e-12, 1.0))))


def aux_cluster_loss(hidden: Tensor, cluster_ids, head_params) -> Tensor:
    """Cross-entropy of a linear head on the generator's hidden states
    against auxiliary cluster ids (already downsampled to the stride)."""
    ids = np.asarray(cluster_ids, dtype=np.intp)
    if ids.shape[0] != hidden.shape[0]:
        raise ValueError(
            f"cluster ids ({ids.shape[0]}) do not match hidden frames "
            f"({hidden.shape[0]}) after downsampling")
    w, b = head_params
    probs = ad.softmax(ad.add(ad.matmul(hidden, w), b))
    picked = ad.mul(ad.log(ad.clip(probs, 1e-12, 1.0)),
                    Tensor(ad.one_hot(ids, probs.shape[-1])))
    return ad.neg(ad.mean(ad.sum_axis(picked, -1)))


def _mean_scalars(terms: list[Tensor]) -> Tensor:
    acc = terms[0]
    for t in terms[1:]:
        acc = ad.add(acc, t)
    return ad.mul(acc, 1.0 / len(terms))


def _check_finite(value: float, name: str, step: int):
    if not np.isfinite(value):
        raise NumericsError(f"non-finite {name} at step {step}")


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainerState:
    gen_cfg: GeneratorConfig
    disc_cfg: DiscriminatorConfig
    gen_params: dict[str, np.ndarray]
    disc_params: dict[str, np.ndarray]
    rng: np.random.Generator
    step: int = 0


def make_state(gen_cfg: GeneratorConfig, disc_cfg: DiscriminatorConfig,
               seed: int, aux_clusters: int = 0) -> TrainerState:
    rng = np.random.default_rng(seed)
    return TrainerState(
        gen_cfg=gen_cfg,
        disc_cfg=disc_cfg,
        gen_params=init_generator_params(gen_cfg, rng, aux_clusters),
        disc_params=init_discriminator_params(disc_cfg, rng),
        rng=rng,
    )


def _sgd(params: dict[str, np.ndarray], wrapped: dict[str, Tensor], lr: float):
    for k in params:
        g = wrapped[k].grad
        if g is not None:
            params[k] = params[k] - np.float32(lr) * g


def train_step(state: TrainerState, speech_batch, text_batch,
               hp: GanHyperparams, aux_ids_batch=None) -> dict:
    """One discriminator update (adversarial + weighted gradient penalty),
    then one generator update (adversarial + weighted smoothness, diversity
    and auxiliary terms), both by plain SGD. Returns every loss term."""
    if not speech_batch or not text_batch:
        raise ValueError("train_step needs non-empty speech and text batches")
    if hp.delta_ss > 0 and aux_ids_batch is None:
        raise ValueError("auxiliary loss enabled but no cluster ids supplied")
    v = state.gen_cfg.vocab_size
    step = state.step

    # discriminator phase: generator outputs are constants here
    with Tape() as tape:
        with no_grad():
            gen_const = tensorize(state.gen_params, False)
            fakes = [generator_apply(state.gen_cfg, gen_const, it.frames)[0].data
                     for it in speech_batch]
        disc_p = tensorize(state.disc_params, True)

        def score(x):
            return discriminator_apply(state.disc_cfg, disc_p, x)

        lc_terms, gp_terms = [], []
        for seq, fake in zip(text_batch, fakes):
            real = smoothed_one_hot(seq.tokens, v, hp.label_smooth_eps)
            lc, _ = adversarial_losses(score(real), score(fake))
            lc_terms.append(lc)
            gp_terms.append(gradient_penalty(score, real, fake, state.rng))
        loss_c = _mean_scalars(lc_terms)
        l_gp = _mean_scalars(gp_terms)
        _check_finite(loss_c.item(), "loss_c", step)
        _check_finite(l_gp.item(), "l_gp", step)
        ad.backward(ad.add(loss_c, ad.mul(l_gp, hp.lambda_gp)), tape)
    _sgd(state.disc_params, disc_p, hp.lr_c)

    # generator phase: discriminator parameters are constants here
    with Tape() as tape:
        gen_p = tensorize(state.gen_params, True)
        disc_const = tensorize(state.disc_params, False)
        adv_terms, sp_terms, ss_terms, probs_list = [], [], [], []
        for i, it in enumerate(speech_batch):
            probs, hidden = generator_apply(state.gen_cfg, gen_p, it.frames)
            probs_list.append(probs)
            cf = discriminator_apply(state.disc_cfg, disc_const, probs)
            _, lg = adversarial_losses(ad.stop_gradient(cf), cf,
                                       hp.minimax_generator_loss)
            adv_terms.append(lg)
            sp_terms.append(smoothness_penalty(probs))
            if hp.delta_ss > 0:
                ids = np.asarray(aux_ids_batch[i])[::state.gen_cfg.stride]
                ss_terms.append(aux_cluster_loss(
                    hidden, ids, (gen_p["gen.aux.w"], gen_p["gen.aux.b"])))
        loss_g = _mean_scalars(adv_terms)
        l_sp = _mean_scalars(sp_terms)
        l_pd = diversity_loss(probs_list)
        l_ss = _mean_scalars(ss_terms) if ss_terms else Tensor(0.0)
        for name, term in (("loss_g", loss_g), ("l_sp", l_sp),
                           ("l_pd", l_pd), ("l_ss", l_ss)):
            _check_finite(term.item(), name, step)
        total = ad.add(loss_g,
                       ad.add(ad.mul(l_sp, hp.gamma_sp),
                              ad.add(ad.mul(l_pd, hp.eta_pd),
                                     ad.mul(l_ss, hp.delta_ss))))
        ad.backward(total, tape)
    _sgd(state.gen_params, gen_p, hp.lr_g)

    state.step += 1
    return {
        "step": step,
        "loss_c": loss_c.item(),
        "loss_g": loss_g.item(),
        "l_gp": l_gp.item(),
        "l_sp": l_sp.item(),
        "l_pd": l_pd.item(),
        "l_ss": l_ss.item(),
        "usage_entropy": -l_pd.item(),
    }


@dataclass
class CheckpointRecord:
    step: int
    metrics: dict
    decoded: list[DecodedSequence]
    params: dict[str, np.ndarray] = field(repr=False, default=None)


@dataclass
class TrainResult:
    history: list[CheckpointRecord]
    metrics_rows: list[dict]
    selected_step: int
    selected_params: dict[str, np.ndarray]


def select_checkpoint(history: list[CheckpointRecord], bigram_lm: np.ndarray,
                      start_probs: np.ndarray) -> int:
    """Label-free selection: minimize decoded-corpus bigram perplexity times
    exp(-token-usage entropy). Degenerate outputs (single-token usage or
    nothing decodable) score +inf."""
    if not history:
        raise ValueError("empty training history")
    v = bigram_lm.shape[0]
    best_step, best_score = history[0].step, float("inf")
    for rec in history:
        ppl = corpus_perplexity(rec.decoded, bigram_lm, start_probs)
        ent = usage_entropy(rec.decoded, v)
        if ent == 0.0 or not np.isfinite(ppl):
            score = float("inf")
        else:
            score = ppl * float(np.exp(-ent))
        if score < best_score:
            best_step, best_score = rec.step, score
    return best_step


def decode_items(gen_cfg, gen_params, items, silence_id=None):
    return [decode_collapse(generator_forward(gen_cfg, gen_params, it), silence_id)
            for it in items]


def train_adversarial(speech, text, gen_cfg: GeneratorConfig,
                      disc_cfg: DiscriminatorConfig, hp: GanHyperparams,
                      dev_speech, bigram_lm=None, start_probs=None,
                      silence_id=None, aux_ids=None) -> TrainResult:
    """Full unpaired training run with periodic dev decoding and label-free
    checkpoint selection.

    ``bigram_lm``/``start_probs`` default to estimates from the text corpus
    (never from speech labels).
    """
    from .world import estimate_bigram

    if bigram_lm is None:
        bigram_lm, start_probs = estimate_bigram(text, gen_cfg.vocab_size)
    if hp.delta_ss > 0 and aux_ids is None:
        raise ValueError("auxiliary loss enabled but no cluster ids supplied")
    aux_clusters = 0
    if hp.delta_ss > 0:
        aux_clusters = int(max(np.max(ids) for ids in aux_ids) + 1)
    state = make_state(gen_cfg, disc_cfg, hp.seed, aux_clusters=aux_clusters)
    history = []
    rows = []

    def snapshot(metrics):
        # decoding routes through Posteriorgram, which asserts
        # row-stochasticity at every logged step
        decoded = decode_items(gen_cfg, state.gen_params, dev_speech, silence_id)
        history.append(CheckpointRecord(
            step=state.step, metrics=dict(metrics), decoded=decoded,
            params={k: v.copy() for k, v in state.gen_params.items()}))

    last_metrics = {k: 0.0 for k in METRIC_FIELDS}
    for _ in range(hp.steps):
        sp_idx = state.rng.integers(0, len(speech), size=hp.batch_size)
        tx_idx = state.rng.integers(0, len(text), size=hp.batch_size)
        batch_aux = None
        if aux_ids is not None:
            batch_aux = [aux_ids[i] for i in sp_idx]
        metrics = train_step(state, [speech[i] for i in sp_idx],
                             [text[i] for i in tx_idx], hp, batch_aux)
        rows.append(metrics)
        last_metrics = metrics
        if state.step % hp.eval_every == 0 or state.step == hp.steps:
            snapshot(metrics)
    if not history:
        snapshot(last_metrics)
    chosen = select_checkpoint(history, bigram_lm, start_probs)
    chosen_params = next(r.params for r in history if r.step == chosen)
    return TrainResult(history, rows, chosen, chosen_params)


# ---------------------------------------------------------------------------
# supervised oracle (evaluation-only; bounds what the world permits)


def reflow_targets(alignment, stride: int) -> np.ndarray:
    """Map a frame-level gold alignment onto the ceil(T/stride) output slots.

    Every-s-th subsampling silently deletes phonemes shorter than the
    stride. Instead, each output slot owns its window of ``stride`` input
    frames and emits the window's first token, unless that token merely
    continues the previous slot's emission while a later in-window frame
    starts a new one. The rule is a local function of the frames; windows
    containing more than one new token still lose a token, which Viterbi
    realignment (see :func:`viterbi_targets`) later recovers.
    """
    alignment = np.asarray(alignment, dtype=np.int64)
    t_in = len(alignment)
    t_out = -(-t_in // stride)
    targets = np.zeros(t_out, dtype=np.int64)
    prev = -1
    for k in range(t_out):
        window = alignment[k * stride:(k + 1) * stride]
        choice = int(window[0])
        if choice == prev:
            for t in window[1:]:
                if t != prev:
                    choice = int(t)
                    break
        targets[k] = choice
        prev = choice
    return targets


def viterbi_targets(log_probs: np.ndarray, sentence, spans=None,
                    stride: int = 1, anchor_weight: float = 2.0) -> np.ndarray:
    """Best monotone assignment of the sentence's tokens to output slots
    under the model's own log-probabilities.

    Each slot takes one token; tokens appear in order, each in a contiguous
    run of slots; skipping a token costs far more than any probability, so
    deletions happen only when there are more tokens than slots. When gold
    ``spans`` are given, a quadratic penalty anchors each token near its
    true frames, so realignment resolves only the boundary-phase ambiguity
    instead of chasing per-utterance noise.
    """
    sentence = list(sentence)
    t_out, n = log_probs.shape[0], len(sentence)
    big = 1e5
    emit = log_probs[:, sentence].astype(np.float64)
    if spans is not None:
        starts = np.array([s for s, _ in spans], dtype=np.float64)
        ends = np.array([e for _, e in spans], dtype=np.float64)
        lo = (np.arange(t_out) * stride)[:, None]
        hi = lo + stride - 1
        gap = np.maximum(0.0, np.maximum(starts[None, :] - hi, lo - (ends[None, :] - 1)))
        emit = emit - anchor_weight * gap ** 2
    dp = np.full((t_out, n), -np.inf)
    parent = np.zeros((t_out, n), dtype=np.int64)
    dp[0] = emit[0] - big * np.arange(n)
    for k in range(1, t_out):
        prev = dp[k - 1]
        q = prev + big * np.arange(n)
        run_max = np.empty(n)
        run_arg = np.empty(n, dtype=np.int64)
        best, arg = q[0], 0
        for j in range(n):
            if q[j] > best:
                best, arg = q[j], j
            run_max[j], run_arg[j] = best, arg
        advance = np.full(n, -np.inf)
        advance[1:] = run_max[:-1] - big * np.arange(n)[1:] + big  # skips cost big each
        take_advance = advance > prev
        dp[k] = emit[k] + np.where(take_advance, advance, prev)
        parent[k] = np.where(take_advance,
                             np.concatenate([[0], run_arg[:-1]]),
                             np.arange(n))
    final = dp[t_out - 1] - big * (n - 1 - np.arange(n))
    j = int(final.argmax())
    targets = np.zeros(t_out, dtype=np.int64)
    for k in range(t_out - 1, -1, -1):
        targets[k] = sentence[j]
        j = int(parent[k][j])
    return targets


def frame_cross_entropy(probs: Tensor, targets: np.ndarray) -> Tensor:
    picked = ad.mul(ad.log(ad.clip(probs, 1e-12, 1.0)),
                    Tensor(ad.one_hot(targets, probs.shape[-1])))
    return ad.neg(ad.mean(ad.sum_axis(picked, -1)))


def train_supervised(gen_cfg: GeneratorConfig, speech, steps: int,
                     lr: float = 0.5, batch_size: int = 8, seed: int = 0,
                     realign_rounds: int = 3) -> dict[str, np.ndarray]:
    """Oracle-mode training on paired frame labels; isolates world
    learnability from adversarial training.

    Initial slot targets come from the local window rule; between rounds
    the supervision is realigned to the model's preferred boundary phase by
    Viterbi forced alignment of the gold sentence, which removes the label
    inconsistencies any fixed slot-assignment convention leaves behind.
    """
    rng = np.random.default_rng(seed)
    params = init_generator_params(gen_cfg, rng)
    targets = [reflow_targets(it.gold_alignment, gen_cfg.stride) for it in speech]
    sentences = []
    spans_all = []
    for it in speech:
        align = np.asarray(it.gold_alignment)
        sent, spans, start = [], [], 0
        for t in range(1, len(align) + 1):
            if t == len(align) or align[t] != align[t - 1]:
                sent.append(int(align[start]))
                spans.append((start, t))
                start = t
        sentences.append(sent)
        spans_all.append(spans)
    rounds = max(1, realign_rounds)
    per_round = max(1, steps // rounds) if steps else 0
    done = 0
    for r in range(rounds):
        budget = per_round if r < rounds - 1 else steps - done
        for _ in range(budget):
            idx = rng.integers(0, len(speech), size=batch_size)
            with Tape() as tape:
                wrapped = tensorize(params, True)
                terms = []
                for i in idx:
                    probs, _ = generator_apply(gen_cfg, wrapped, speech[i].frames)
                    terms.append(frame_cross_entropy(probs, targets[i]))
                ad.backward(_mean_scalars(terms), tape)
            _sgd(params, wrapped, lr)
        done += budget
        if r < rounds - 1 and steps:
            with no_grad():
                const = tensorize(params, False)
                for i, it in enumerate(speech):
                    probs, _ = generator_apply(gen_cfg, const, it.frames)
                    logp = np.log(np.clip(probs.data, 1e-12, 1.0))
                    targets[i] = viterbi_targets(logp, sentences[i],
                                                 spans_all[i], gen_cfg.stride)
    return params
