"""Attention encoder-decoder scorer with lexical biasing and copy actions.

Encoder: bidirectional LSTM over source embeddings; each position is the
concatenation of its forward and backward states. Decoder step i:

    e_ij  = v . tanh(W_g g_{i-1} + W_h h_j + b)      attention MLP
    c_i   = sum_j softmax(e_i)_j h_j
    g_i   = LSTM(g_{i-1}, [E_out[z_{i-1}], c_i])
    eta_i = tanh(W_m [c_i, g_i] + b_m)               output MLP
    f     = W_o eta_i + b_o  (+ log(B alpha_i + eps) with lexical bias)

With copying, the action distribution is one softmax over the |V_out| write
logits and the |x| copy logits ``copy_w * e_ij + copy_b``.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import autodiff as ad
from .automaton import EOS
from .corpus import ParallelCorpus, make_pair
from .lexical_model import TranslationTable

log = logging.getLogger(__name__)

UNK = "<unk>"
BOS = "<s>"
SOURCE_SPECIALS = (UNK,)
TARGET_SPECIALS = (UNK, BOS, EOS)

PARAM_GROUPS = {
    "embeddings": ("src_embed", "out_embed"),
    "encoder": ("enc_fwd_W", "enc_fwd_b", "enc_bwd_W", "enc_bwd_b", "init_W", "init_b"),
    "attention": ("att_Wg", "att_Wh", "att_b", "att_v"),
    "decoder": ("dec_W", "dec_b"),
    "output_mlp": ("mlp_W", "mlp_b"),
    "W_o": ("W_o",),
    "b_o": ("b_o",),
    "copy": ("copy_w", "copy_b"),
}


class TrainingError(RuntimeError):
    pass


class CopyDisabledError(RuntimeError):
    pass


@dataclass
class NeuralConfig:
    embed: int = 64
    hidden: int = 64
    attention: int = 64
    mlp: int = 64
    epsilon: float = 1e-3
    use_bias: bool = False
    copy: bool = False
    init_scale: float = 0.0  # <= 0 selects Glorot uniform


def _shapes(cfg: NeuralConfig, n_src: int, n_tgt: int) -> dict[str, tuple[int, ...]]:
    E, H, A, M = cfg.embed, cfg.hidden, cfg.attention, cfg.mlp
    return {
        "src_embed": (n_src, E),
        "out_embed": (n_tgt, E),
        "enc_fwd_W": (4 * H, E + H), "enc_fwd_b": (4 * H,),
        "enc_bwd_W": (4 * H, E + H), "enc_bwd_b": (4 * H,),
        "init_W": (H, 2 * H), "init_b": (H,),
        "att_Wg": (A, H), "att_Wh": (2 * H, A), "att_b": (A,), "att_v": (A,),
        "dec_W": (4 * H, E + 2 * H + H), "dec_b": (4 * H,),
        "mlp_W": (M, 2 * H + H), "mlp_b": (M,),
        "W_o": (n_tgt, M), "b_o": (n_tgt,),
        "copy_w": (1,), "copy_b": (1,),
    }


def _vocab_hash(vocab: Sequence[str]) -> str:
    return hashlib.sha256("\n".join(vocab).encode("utf-8")).hexdigest()[:16]


class NeuralModel:
    """Parameters plus vocabularies; arrays are updated in place by training."""

    def __init__(self, config: NeuralConfig, src_vocab: Sequence[str],
                 tgt_vocab: Sequence[str], params: dict[str, np.ndarray],
                 inverse_table: TranslationTable | None = None):
        self.config = config
        self.src_vocab = list(src_vocab)
        self.tgt_vocab = list(tgt_vocab)
        self.src_index = {t: i for i, t in enumerate(self.src_vocab)}
        self.tgt_index = {t: i for i, t in enumerate(self.tgt_vocab)}
        self.params = params
        self.inverse_table = inverse_table
        if config.use_bias and inverse_table is None:
            raise ValueError("lexical bias needs an inverse translation table")
        if config.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        expected = _shapes(config, len(self.src_vocab), len(self.tgt_vocab))
        for name, shape in expected.items():
            if params[name].shape != shape:
                raise ValueError(f"{name}: shape {params[name].shape}, expected {shape}")
        self.leaves = {k: ad.parameter(v) for k, v in params.items()}
        for k, leaf in self.leaves.items():
            leaf.value = params[k]

    @classmethod
    def create(cls, config: NeuralConfig, src_vocab: Sequence[str], tgt_vocab: Sequence[str],
               seed: int = 0, inverse_table: TranslationTable | None = None) -> "NeuralModel":
        src = list(SOURCE_SPECIALS) + sorted(set(src_vocab) - set(SOURCE_SPECIALS))
        tgt = list(TARGET_SPECIALS) + sorted(set(tgt_vocab) - set(TARGET_SPECIALS))
        rng = np.random.default_rng(seed)
        params = {}
        for name, shape in _shapes(config, len(src), len(tgt)).items():
            if name.endswith("_b") or name == "b_o":
                params[name] = np.zeros(shape)
            elif config.init_scale > 0:
                params[name] = rng.uniform(-config.init_scale, config.init_scale, shape)
            else:  # Glorot uniform
                limit = np.sqrt(6.0 / (shape[0] + shape[-1])) if len(shape) == 2 else 0.1
                params[name] = rng.uniform(-limit, limit, shape)
        params["copy_w"][:] = 1.0
        H = config.hidden
        for name in ("enc_fwd_b", "enc_bwd_b", "dec_b"):
            params[name][H:2 * H] = 1.0  # forget gate
        return cls(config, src, tgt, params, inverse_table)

    @classmethod
    def for_corpus(cls, corpus: ParallelCorpus, config: NeuralConfig | None = None,
                   seed: int = 0, inverse_table: TranslationTable | None = None,
                   extra_targets: Sequence[str] = ()) -> "NeuralModel":
        tgt = set(corpus.target_vocab) | set(extra_targets)
        return cls.create(config or NeuralConfig(), corpus.source_vocab, tgt, seed,
                          inverse_table)

    def copy(self) -> "NeuralModel":
        return NeuralModel(self.config, self.src_vocab, self.tgt_vocab,
                           {k: v.copy() for k, v in self.params.items()}, self.inverse_table)

    def target_id(self, token: str) -> int:
        return self.tgt_index.get(token, 0)

    # -- persistence ----------------------------------------------------------

    def manifest(self) -> dict:
        return {
            "format": "spparse-neural/1",
            "config": asdict(self.config),
            "src_vocab": self.src_vocab,
            "tgt_vocab": self.tgt_vocab,
            "src_vocab_hash": _vocab_hash(self.src_vocab),
            "tgt_vocab_hash": _vocab_hash(self.tgt_vocab),
            "shapes": {k: list(v.shape) for k, v in self.params.items()},
            "dtype": "float64",
        }

    def save(self, path: str | Path) -> None:
        arrays = {f"param/{k}": v for k, v in sorted(self.params.items())}
        if self.inverse_table is not None:
            t = self.inverse_table
            entries = [(g, x, p) for g in sorted(t.probs) for x, p in sorted(t.probs[g].items())]
            arrays["inverse/given"] = np.array([e[0] for e in entries], dtype=str)
            arrays["inverse/generated"] = np.array([e[1] for e in entries], dtype=str)
            arrays["inverse/prob"] = np.array([e[2] for e in entries], dtype=np.float64)
            arrays["inverse/meta"] = np.array([t.direction, repr(t.floor), t.null_token])
        arrays["manifest"] = np.array(json.dumps(self.manifest(), sort_keys=True))
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path: str | Path) -> "NeuralModel":
        with np.load(path, allow_pickle=False) as data:
            manifest = json.loads(str(data["manifest"]))
            params = {k[len("param/"):]: data[k].copy() for k in data.files
                      if k.startswith("param/")}
            table = None
            if "inverse/meta" in data.files:
                direction, floor, null = (str(s) for s in data["inverse/meta"])
                probs: dict[str, dict[str, float]] = {}
                for g, x, p in zip(data["inverse/given"], data["inverse/generated"],
                                   data["inverse/prob"]):
                    probs.setdefault(str(g), {})[str(x)] = float(p)
                table = TranslationTable(probs, direction, float(floor), null)
        for key in ("src_vocab", "tgt_vocab"):
            if _vocab_hash(manifest[key]) != manifest[key + "_hash"]:
                raise ValueError(f"{path}: {key} hash mismatch")
        return cls(NeuralConfig(**manifest["config"]), manifest["src_vocab"],
                   manifest["tgt_vocab"], params, table)


# -- forward computation -----------------------------------------------------------

@dataclass
class EncoderOutput:
    tokens: tuple[str, ...]
    annotations: ad.Tensor  # |x| x 2H
    keys: ad.Tensor  # |x| x A, attention MLP input projection
    init_h: ad.Tensor
    bias_matrix: np.ndarray | None = None  # |V_out| x |x|
    copy_ids: list[int | None] = field(default_factory=list)

    def __len__(self):
        return len(self.tokens)


@dataclass
class DecoderStepState:
    h: ad.Tensor
    c: ad.Tensor
    last_token: str
    step_index: int = 0


@dataclass
class StepOutput:
    logits: ad.Tensor  # write logits, bias included when enabled
    alpha: ad.Tensor
    scores: ad.Tensor  # attention scores e_ij
    h: ad.Tensor
    c: ad.Tensor
    log_probs: ad.Tensor | None = None  # over write (+ copy) actions


def _run_lstm(W, b, inputs, H):
    h = ad.constant(np.zeros(H))
    c = ad.constant(np.zeros(H))
    out = []
    for x in inputs:
        h, c = ad.lstm_cell(W, b, x, h, c)
        out.append(h)
    return out


def inverse_bias_matrix(model: NeuralModel, x: Sequence[str],
                        table: TranslationTable) -> np.ndarray:
    """``B[k, j] = p_t'(z_k | x_j)`` over the output vocabulary."""
    B = np.full((len(model.tgt_vocab), len(x)), table.floor)
    for j, xj in enumerate(x):
        for z, p in table.row(xj).items():
            k = model.tgt_index.get(z)
            if k is not None:
                B[k, j] = p
    return B


def encode(model: NeuralModel, x: Sequence[str]) -> EncoderOutput:
    if not x:
        raise ValueError("empty input")
    P = model.leaves
    H = model.config.hidden
    ids = [model.src_index.get(t, 0) for t in x]
    emb = ad.rows(P["src_embed"], ids)
    steps = [emb[j] for j in range(len(ids))]
    fwd = _run_lstm(P["enc_fwd_W"], P["enc_fwd_b"], steps, H)
    bwd = _run_lstm(P["enc_bwd_W"], P["enc_bwd_b"], steps[::-1], H)[::-1]
    annotations = ad.concat([ad.stack(fwd), ad.stack(bwd)], axis=1)
    keys = ad.matmul(annotations, P["att_Wh"])
    init_h = ad.tanh(ad.affine(P["init_W"], ad.concat([fwd[-1], bwd[0]]), P["init_b"]))
    bias = None
    if model.config.use_bias:
        bias = inverse_bias_matrix(model, x, model.inverse_table)
    copy_ids = [model.tgt_index.get(t) for t in x]
    return EncoderOutput(tuple(x), annotations, keys, init_h, bias, copy_ids)


def init_state(model: NeuralModel, enc: EncoderOutput) -> DecoderStepState:
    return DecoderStepState(enc.init_h, ad.constant(np.zeros(model.config.hidden)), BOS, 0)


def attention(model: NeuralModel, g_prev: ad.Tensor, enc: EncoderOutput):
    """Attention weights, context vector and raw scores for one decoder step."""
    P = model.leaves
    query = ad.affine(P["att_Wg"], g_prev, P["att_b"])
    scores = ad.matmul(ad.tanh(ad.add(enc.keys, query)), P["att_v"])
    alpha = ad.softmax(scores)
    context = ad.matmul(alpha, enc.annotations)
    return alpha, context, scores


def bias_logits(model: NeuralModel, logits: ad.Tensor, alpha: ad.Tensor,
                bias_matrix: np.ndarray) -> ad.Tensor:
    """``logits + log(B alpha + eps)`` with ``B`` from :func:`inverse_bias_matrix`."""
    bias = ad.matmul(ad.constant(bias_matrix), alpha)
    return ad.add(logits, ad.log(ad.add(bias, model.config.epsilon)))


def step_logits(model: NeuralModel, state: DecoderStepState,
                enc: EncoderOutput) -> StepOutput:
    """One decoder step from ``state``: write logits, biased if enabled."""
    P = model.leaves
    alpha, context, scores = attention(model, state.h, enc)
    prev = ad.rows(P["out_embed"], model.target_id(state.last_token))
    h, c = ad.lstm_cell(P["dec_W"], P["dec_b"], ad.concat([prev, context]), state.h, state.c)
    eta = ad.tanh(ad.affine(P["mlp_W"], ad.concat([context, h]), P["mlp_b"]))
    logits = ad.affine(P["W_o"], eta, P["b_o"])
    if model.config.use_bias:
        logits = bias_logits(model, logits, alpha, enc.bias_matrix)
    return StepOutput(logits, alpha, scores, h, c)


def copy_logits(model: NeuralModel, out: StepOutput) -> ad.Tensor:
    P = model.leaves
    return ad.add(ad.mul(out.scores, P["copy_w"]), P["copy_b"])


def copy_step(model: NeuralModel, state: DecoderStepState, enc: EncoderOutput) -> StepOutput:
    """Step whose ``log_probs`` cover write actions followed by one copy per position."""
    if not model.config.copy:
        raise CopyDisabledError("copy actions requested but copying is disabled")
    out = step_logits(model, state, enc)
    out.log_probs = ad.log_softmax(ad.concat([out.logits, copy_logits(model, out)]))
    return out


def predict(model: NeuralModel, state: DecoderStepState, enc: EncoderOutput) -> StepOutput:
    """Step with ``log_probs`` filled in according to the model's copy setting."""
    if model.config.copy:
        return copy_step(model, state, enc)
    out = step_logits(model, state, enc)
    out.log_probs = ad.log_softmax(out.logits)
    return out


def action_indices(model: NeuralModel, enc: EncoderOutput, token: str) -> list[int]:
    """Actions realizing ``token``: its write action (or UNK's) plus matching copies."""
    idx = [model.target_id(token)]
    if model.config.copy:
        V = len(model.tgt_vocab)
        idx.extend(V + j for j, t in enumerate(enc.tokens) if t == token)
    return idx


def token_log_prob(model: NeuralModel, out: StepOutput, enc: EncoderOutput,
                   token: str) -> ad.Tensor:
    idx = action_indices(model, enc, token)
    if len(idx) == 1:
        return out.log_probs[idx[0]]
    return ad.logsumexp(ad.getitem(out.log_probs, np.array(idx)))


def token_log_probs(model: NeuralModel, out: StepOutput, enc: EncoderOutput,
                    tokens: Sequence[str]) -> np.ndarray:
    """Emission log-probabilities for several tokens (no gradient)."""
    lp = out.log_probs.value
    res = np.empty(len(tokens))
    for i, t in enumerate(tokens):
        idx = action_indices(model, enc, t)
        if len(idx) == 1:
            res[i] = lp[idx[0]]
        else:
            v = lp[idx]
            m = v.max()
            res[i] = m + np.log(np.exp(v - m).sum())
    return res


def emission_distribution(model: NeuralModel, out: StepOutput,
                          enc: EncoderOutput) -> dict[str, float]:
    """Probability of each realizable token, summing write and copy mass."""
    p = np.exp(out.log_probs.value)
    dist: dict[str, float] = {}
    for k, t in enumerate(model.tgt_vocab):
        dist[t] = float(p[k])
    if model.config.copy:
        V = len(model.tgt_vocab)
        for j, t in enumerate(enc.tokens):
            dist[t] = dist.get(t, 0.0) + float(p[V + j])
    return dist


def update_state(state: DecoderStepState, out: StepOutput, token: str) -> DecoderStepState:
    return DecoderStepState(out.h, out.c, token, state.step_index + 1)


def teacher_force(model: NeuralModel, enc: EncoderOutput, labels: Sequence[str],
                  state: DecoderStepState | None = None):
    """Step along ``labels``; return the final state and the summed -log p."""
    state = init_state(model, enc) if state is None else state
    score = 0.0
    for z in labels:
        out = predict(model, state, enc)
        score -= float(token_log_prob(model, out, enc, z).value)
        state = update_state(state, out, z)
    return state, score


def sequence_nll(model: NeuralModel, x: Sequence[str], target: Sequence[str]) -> ad.Tensor:
    """-log p(target + EOS | x) as a differentiable scalar."""
    enc = encode(model, x)
    state = init_state(model, enc)
    terms = []
    for z in list(target) + [EOS]:
        out = predict(model, state, enc)
        terms.append(token_log_prob(model, out, enc, z))
        state = update_state(state, out, z)
    return ad.mul(ad.total(ad.stack(terms)), -1.0)


def path_score(model: NeuralModel, x: Sequence[str], labels: Sequence[str],
               forced: Sequence[str] = ()) -> float:
    """Teacher-forced -log p of ``labels`` + EOS after unscored ``forced`` labels."""
    with ad.no_grad():
        enc = encode(model, x)
        state, _ = teacher_force(model, enc, forced)
        _, score = teacher_force(model, enc, list(labels) + [EOS], state)
    return score


def greedy_decode(model: NeuralModel, x: Sequence[str], max_len: int = 50) -> list[str]:
    """Unconstrained greedy decoding over the emission distribution."""
    out_tokens = []
    with ad.no_grad():
        enc = encode(model, x)
        state = init_state(model, enc)
        for _ in range(max_len):
            out = predict(model, state, enc)
            dist = emission_distribution(model, out, enc)
            dist.pop(BOS, None)
            tok = min(dist, key=lambda t: (-dist[t], t))
            if tok == EOS:
                break
            out_tokens.append(tok)
            state = update_state(state, out, tok)
    return out_tokens


def sequence_accuracy(model: NeuralModel, corpus: ParallelCorpus) -> float:
    hits = sum(greedy_decode(model, p.source_tokens, len(p.target_tokens) + 5)
               == list(p.target_tokens) for p in corpus)
    return hits / len(corpus)


# -- training ---------------------------------------------------------------------

def zero_grad(model: NeuralModel) -> None:
    for leaf in model.leaves.values():
        leaf.grad = None


def gradients(model: NeuralModel, x: Sequence[str], target: Sequence[str]):
    """Loss value and a dict of gradients (zeros for untouched parameters)."""
    zero_grad(model)
    loss = sequence_nll(model, x, target)
    ad.backward(loss)
    grads = {k: (leaf.grad if leaf.grad is not None else np.zeros_like(leaf.value))
             for k, leaf in model.leaves.items()}
    return float(loss.value), grads


def train(model: NeuralModel, corpus: ParallelCorpus, epochs: int = 10,
          learning_rate: float = 0.1, seed: int = 0, clip: float = 5.0,
          callback: Callable[[int, float], bool] | None = None) -> list[float]:
    """Per-pair SGD on -log p(z|x); returns the mean loss of each epoch.

    ``callback(epoch, loss)`` may return True to stop early.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    rng = np.random.default_rng(seed)
    pairs = list(corpus.pairs)
    trace = []
    for epoch in range(1, epochs + 1):
        total_loss = 0.0
        for k in rng.permutation(len(pairs)):
            pair = pairs[k]
            loss, grads = gradients(model, pair.source_tokens, pair.target_tokens)
            if not np.isfinite(loss):
                raise TrainingError(f"loss became non-finite in epoch {epoch}")
            total_loss += loss
            norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
            scale = learning_rate * (clip / norm if clip and norm > clip else 1.0)
            if scale:
                for name, g in grads.items():
                    model.params[name] -= scale * g
        mean = total_loss / len(pairs)
        if not np.isfinite(mean):
            raise TrainingError(f"loss became non-finite in epoch {epoch}")
        trace.append(mean)
        log.debug("epoch %d: mean loss %.6f", epoch, mean)
        if callback is not None and callback(epoch, mean):
            break
    return trace


def copy_synthetic_corpus(n: int = 200, seed: int = 0) -> ParallelCorpus:
    """Pairs whose target repeats a random source name, e.g. ``get the field qzkxa``.

    Each name occurs once, so only copying can generalize across pairs.
    """
    rng = np.random.default_rng(seed)
    letters = np.array(list("abcdefghijklmnopqrstuvwxyz"))
    names: set[str] = set()
    while len(names) < n:
        names.add("".join(rng.choice(letters, 5)))
    verbs = (("get", "getattr"), ("set", "setattr"), ("delete", "delattr"), ("check", "hasattr"))
    pairs = []
    for i, name in enumerate(sorted(names)):
        verb, fn = verbs[i % len(verbs)]
        pairs.append(make_pair([verb, "the", "field", name], [fn, "obj", name]))
    return ParallelCorpus.from_pairs(pairs)
