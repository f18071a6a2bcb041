"""Path-context encoder and attention decoder with hand-written backprop.

Shapes used throughout: ``N`` contexts in a batch (flattened over examples),
``L`` path steps, ``S`` subtokens per terminal, ``B`` examples, ``C`` context
slots per example, ``T`` decoder steps, ``e`` embedding size, ``H`` path
encoder state, ``D`` decoder state, ``V`` target vocabulary.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .vocab import EOS, PAD, SOS, Vocab, node_token

MAX_SUBTOKENS = 5


@dataclass
class HyperParams:
    embedding_size: int = 64
    encoder_state_size: int = 64
    decoder_state_size: int = 128
    max_target_parts: int = 37
    max_contexts: int = 200
    beam_width: int = 1
    learning_rate: float = 1e-3
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0
    dropout_keep: float = 0.75

    def __post_init__(self):
        for name in ("embedding_size", "encoder_state_size", "decoder_state_size",
                     "max_contexts", "beam_width", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.max_target_parts < 2:
            raise ValueError("max_target_parts must be >= 2 (room for the end token)")
        if not 0 < self.dropout_keep <= 1:
            raise ValueError("dropout_keep must be in (0, 1]")
        if self.learning_rate < 0 or self.epochs < 0:
            raise ValueError("learning_rate and epochs must be non-negative")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj) -> "HyperParams":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in obj.items() if k in names})


# parameter group -> parameter names
PARAM_GROUPS = {
    "embeddings": ("E_sub", "E_node", "E_tgt"),
    "path_encoder": ("Wf", "bf", "Wb", "bb"),
    "projection": ("Wc", "bc"),
    "decoder_cell": ("Wd", "bd"),
    "attention": ("Wa",),
    "output": ("Wo", "bo"),
}


def param_shapes(hyper: HyperParams, vocab: Vocab) -> dict[str, tuple[int, ...]]:
    e, H, D = hyper.embedding_size, hyper.encoder_state_size, hyper.decoder_state_size
    V = len(vocab.targets)
    return {
        "E_sub": (len(vocab.subtokens), e),
        "E_node": (len(vocab.node_kinds), e),
        "E_tgt": (V, e),
        "Wf": (e + H, 4 * H), "bf": (4 * H,),
        "Wb": (e + H, 4 * H), "bb": (4 * H,),
        "Wc": (2 * e + 2 * H, D), "bc": (D,),
        "Wd": (e + D, 4 * D), "bd": (4 * D,),
        "Wa": (D, D),
        "Wo": (2 * D, V), "bo": (V,),
    }


def init_params(hyper: HyperParams, vocab: Vocab, seed: int | None = None) -> dict:
    """Weights uniform in [-0.1, 0.1], biases zero."""
    rng = np.random.default_rng(hyper.seed if seed is None else seed)
    out = {}
    for name, shape in param_shapes(hyper, vocab).items():
        if name.startswith("b"):
            out[name] = np.zeros(shape)
        else:
            out[name] = rng.uniform(-0.1, 0.1, size=shape)
    return out


@dataclass
class Model:
    hyper: HyperParams
    vocab: Vocab
    params: dict


# -- example encoding ---------------------------------------------------------

@dataclass
class EncodedExample:
    left: np.ndarray  # [C, S]
    right: np.ndarray  # [C, S]
    paths: list  # C int arrays
    targets: np.ndarray  # token ids, EOS-terminated unless truncated


def encode_example(vocab: Vocab, hyper: HyperParams, target_tokens, contexts,
                   append_eos: bool = True) -> EncodedExample:
    contexts = list(contexts)[:hyper.max_contexts]
    C = max(1, len(contexts))
    left = np.zeros((C, MAX_SUBTOKENS), dtype=np.int64)
    right = np.zeros((C, MAX_SUBTOKENS), dtype=np.int64)
    paths = []
    for k, ctx in enumerate(contexts):
        ls = [vocab.subtoken_id(t) for t in ctx.left_subtokens[:MAX_SUBTOKENS]]
        rs = [vocab.subtoken_id(t) for t in ctx.right_subtokens[:MAX_SUBTOKENS]]
        left[k, :len(ls)] = ls
        right[k, :len(rs)] = rs
        p = [vocab.node_id(node_token(kind, d)) for kind, d in ctx.path] or [PAD]
        paths.append(np.array(p, dtype=np.int64))
    if not contexts:
        paths.append(np.array([PAD], dtype=np.int64))
    ids = [vocab.target_id(t) for t in target_tokens]
    if append_eos:
        ids = ids[:hyper.max_target_parts - 1] + [EOS]
    else:
        ids = ids[:hyper.max_target_parts]
    return EncodedExample(left, right, paths, np.array(ids, dtype=np.int64))


@dataclass
class Batch:
    left: np.ndarray
    lmask: np.ndarray
    right: np.ndarray
    rmask: np.ndarray
    path: np.ndarray  # [N, L]
    rpath: np.ndarray  # [N, L] valid prefix reversed
    pmask: np.ndarray  # [N, L]
    ctx_b: np.ndarray  # [N]
    ctx_s: np.ndarray  # [N]
    att_mask: np.ndarray  # [B, C] bool
    counts: np.ndarray  # [B]
    dec_in: np.ndarray  # [B, T]
    dec_out: np.ndarray  # [B, T]
    tmask: np.ndarray  # [B, T]

    @property
    def size(self):
        return self.att_mask.shape[0]


def make_batch(examples: list[EncodedExample]) -> Batch:
    B = len(examples)
    counts = np.array([len(ex.paths) for ex in examples])
    Cmax = int(counts.max())
    left = np.concatenate([ex.left for ex in examples])
    right = np.concatenate([ex.right for ex in examples])
    paths = [p for ex in examples for p in ex.paths]
    N = len(paths)
    lens = np.array([len(p) for p in paths])
    L = int(lens.max())
    path = np.zeros((N, L), dtype=np.int64)
    rpath = np.zeros((N, L), dtype=np.int64)
    for k, p in enumerate(paths):
        path[k, :len(p)] = p
        rpath[k, :len(p)] = p[::-1]
    pmask = (np.arange(L)[None, :] < lens[:, None]).astype(float)
    ctx_b = np.repeat(np.arange(B), counts)
    ctx_s = np.concatenate([np.arange(c) for c in counts])
    att_mask = np.arange(Cmax)[None, :] < counts[:, None]
    T = max(1, max(len(ex.targets) for ex in examples))
    dec_out = np.zeros((B, T), dtype=np.int64)
    tmask = np.zeros((B, T))
    for b, ex in enumerate(examples):
        dec_out[b, :len(ex.targets)] = ex.targets
        tmask[b, :len(ex.targets)] = 1.0
    dec_in = np.concatenate([np.full((B, 1), SOS), dec_out[:, :-1]], axis=1)
    return Batch(left, (left != PAD).astype(float), right, (right != PAD).astype(float),
                 path, rpath, pmask, ctx_b, ctx_s, att_mask, counts.astype(float),
                 dec_in, dec_out, tmask)


# -- building blocks --------------------------------------------------------

def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def lstm_forward(x, mask, W, b, h0, c0):
    """Run an LSTM over ``x`` [N, L, in]. Masked steps carry the state through."""
    N, L, n_in = x.shape
    H = h0.shape[1]
    dt = np.result_type(x, W)
    hs = np.empty((L + 1, N, H), dtype=dt)
    cs = np.empty((L + 1, N, H), dtype=dt)
    acts = np.empty((L, N, 4 * H), dtype=dt)
    tcs = np.empty((L, N, H), dtype=dt)
    hs[0], cs[0] = h0, c0
    Wx, Wh = W[:n_in], W[n_in:]
    xw = x @ Wx + b  # input contribution for all steps at once
    for t in range(L):
        z = xw[:, t] + hs[t] @ Wh
        a = acts[t]
        a[:, :3 * H] = sigmoid(z[:, :3 * H])
        a[:, 3 * H:] = np.tanh(z[:, 3 * H:])
        i, f, o, g = a[:, :H], a[:, H:2 * H], a[:, 2 * H:3 * H], a[:, 3 * H:]
        c = f * cs[t] + i * g
        tc = np.tanh(c)
        h = o * tc
        tcs[t] = tc
        if mask is not None:
            m = mask[:, t, None]
            c = m * c + (1 - m) * cs[t]
            h = m * h + (1 - m) * hs[t]
        hs[t + 1], cs[t + 1] = h, c
    return hs, cs, (x, mask, W, hs, cs, acts, tcs)


def lstm_backward(cache, dh_out, dh_last, dc_last):
    """Gradients of an :func:`lstm_forward` run.

    ``dh_out`` [L, N, H] (or None) holds gradients w.r.t. each step's output,
    ``dh_last``/``dc_last`` those w.r.t. the final state. Returns
    ``(dx, dW, db, dh0, dc0)``.
    """
    x, mask, W, hs, cs, acts, tcs = cache
    N, L, n_in = x.shape
    H = hs.shape[2]
    Wx, Wh = W[:n_in], W[n_in:]
    dh = dh_last.copy()
    dc = dc_last.copy()
    dz_all = np.empty((L, N, 4 * H), dtype=hs.dtype)
    dWh = np.zeros_like(Wh)
    for t in range(L - 1, -1, -1):
        if dh_out is not None:
            dh = dh + dh_out[t]
        a = acts[t]
        i, f, o, g = a[:, :H], a[:, H:2 * H], a[:, 2 * H:3 * H], a[:, 3 * H:]
        tc = tcs[t]
        if mask is not None:
            m = mask[:, t, None]
            dh_new, dc_new = m * dh, m * dc
            dh_carry, dc_carry = (1 - m) * dh, (1 - m) * dc
        else:
            dh_new, dc_new = dh, dc
            dh_carry = dc_carry = 0.0
        dct = dc_new + dh_new * o * (1 - tc * tc)
        dz = dz_all[t]
        dz[:, :H] = dct * g * i * (1 - i)
        dz[:, H:2 * H] = dct * cs[t] * f * (1 - f)
        dz[:, 2 * H:3 * H] = dh_new * tc * o * (1 - o)
        dz[:, 3 * H:] = dct * i * (1 - g * g)
        dWh += hs[t].T @ dz
        dh = dz @ Wh.T + dh_carry
        dc = dct * f + dc_carry
    dz_flat = dz_all.transpose(1, 0, 2)  # [N, L, 4H]
    dWx = np.tensordot(x, dz_flat, axes=([0, 1], [0, 1]))
    dx = dz_flat @ Wx.T
    db = dz_flat.sum(axis=(0, 1))
    return dx, np.concatenate([dWx, dWh]), db, dh, dc


def log_softmax(x, axis=-1):
    m = x.max(axis=axis, keepdims=True)
    s = x - m
    return s - np.log(np.exp(s).sum(axis=axis, keepdims=True))


# -- encoder ----------------------------------------------------------------

def encode_batch(P, batch: Batch, keep: float = 1.0, rng=None):
    """Context vectors ``Z`` [N, D] plus the cache for :func:`encode_backward`."""
    H = P["bf"].shape[0] // 4
    N = batch.path.shape[0]
    ls = np.einsum("nse,ns->ne", P["E_sub"][batch.left], batch.lmask)
    rs = np.einsum("nse,ns->ne", P["E_sub"][batch.right], batch.rmask)
    zeros = np.zeros((N, H), dtype=P["Wf"].dtype)
    hsf, _, cf = lstm_forward(P["E_node"][batch.path], batch.pmask, P["Wf"], P["bf"], zeros, zeros)
    hsb, _, cb = lstm_forward(P["E_node"][batch.rpath], batch.pmask, P["Wb"], P["bb"], zeros, zeros)
    X = np.concatenate([ls, hsf[-1], hsb[-1], rs], axis=1)
    dmask = None
    if keep < 1.0:
        dmask = (rng.random(X.shape) < keep) / keep
        X = X * dmask
    Z = np.tanh(X @ P["Wc"] + P["bc"])
    return Z, (X, dmask, Z, cf, cb)


def encode_backward(P, batch: Batch, cache, dZ, grads):
    X, dmask, Z, cf, cb = cache
    e = P["E_sub"].shape[1]
    H = P["bf"].shape[0] // 4
    du = dZ * (1 - Z * Z)
    grads["Wc"] += X.T @ du
    grads["bc"] += du.sum(0)
    dX = du @ P["Wc"].T
    if dmask is not None:
        dX = dX * dmask
    dls, dhf, dhb, drs = dX[:, :e], dX[:, e:e + H], dX[:, e + H:e + 2 * H], dX[:, e + 2 * H:]
    np.add.at(grads["E_sub"], batch.left, dls[:, None, :] * batch.lmask[..., None])
    np.add.at(grads["E_sub"], batch.right, drs[:, None, :] * batch.rmask[..., None])
    zeros = np.zeros_like(dhf)
    for cache_dir, dh, ids, wn, bn in ((cf, dhf, batch.path, "Wf", "bf"),
                                       (cb, dhb, batch.rpath, "Wb", "bb")):
        dx, dW, db, _, _ = lstm_backward(cache_dir, None, dh, zeros)
        grads[wn] += dW
        grads[bn] += db
        np.add.at(grads["E_node"], ids, dx)


# -- full model -------------------------------------------------------------

def forward(P, batch: Batch, keep: float = 1.0, rng=None):
    """Mean token cross-entropy under teacher forcing, and the backward cache."""
    Z, enc_cache = encode_batch(P, batch, keep, rng)
    B, C = batch.att_mask.shape
    D = Z.shape[1]
    Zp = np.zeros((B, C, D), dtype=Z.dtype)
    Zp[batch.ctx_b, batch.ctx_s] = Z
    mean = Zp.sum(1) / batch.counts[:, None]
    hs, _, dec_cache = lstm_forward(P["E_tgt"][batch.dec_in], None, P["Wd"], P["bd"], mean, mean)
    Hs = hs[1:].transpose(1, 0, 2)  # [B, T, D]
    Q = Hs @ P["Wa"]
    S = Q @ Zp.transpose(0, 2, 1)  # [B, T, C]
    S = np.where(batch.att_mask[:, None, :], S, -np.inf)
    A = np.exp(S - S.max(-1, keepdims=True))
    A /= A.sum(-1, keepdims=True)
    Ctx = A @ Zp
    O = np.concatenate([Hs, Ctx], axis=-1)
    logp = log_softmax(O @ P["Wo"] + P["bo"])
    nll = -np.take_along_axis(logp, batch.dec_out[..., None], -1)[..., 0]
    ntok = batch.tmask.sum()
    loss = (nll * batch.tmask).sum() / ntok  # numpy scalar: keeps extended precision
    cache = dict(enc=enc_cache, Z=Z, Zp=Zp, dec=dec_cache, Hs=Hs, Q=Q, A=A, O=O, logp=logp,
                 nll=nll, ntok=ntok)
    return loss, cache


def backward(P, batch: Batch, cache) -> dict:
    grads = {k: np.zeros_like(v) for k, v in P.items()}
    B, T = batch.dec_out.shape
    D = cache["Z"].shape[1]
    dlogits = np.exp(cache["logp"])
    np.put_along_axis(dlogits, batch.dec_out[..., None],
                      np.take_along_axis(dlogits, batch.dec_out[..., None], -1) - 1.0, -1)
    dlogits *= (batch.tmask / cache["ntok"])[..., None]
    O, Zp, A, Q = cache["O"], cache["Zp"], cache["A"], cache["Q"]
    grads["Wo"] += np.tensordot(O, dlogits, axes=([0, 1], [0, 1]))
    grads["bo"] += dlogits.sum(axis=(0, 1))
    dO = dlogits @ P["Wo"].T
    dHs, dCtx = dO[..., :D], dO[..., D:]
    dA = dCtx @ Zp.transpose(0, 2, 1)
    dZp = A.transpose(0, 2, 1) @ dCtx
    dS = A * (dA - (dA * A).sum(-1, keepdims=True))
    dQ = dS @ Zp
    dZp += dS.transpose(0, 2, 1) @ Q
    grads["Wa"] += np.tensordot(cache["Hs"], dQ, axes=([0, 1], [0, 1]))
    dHs = dHs + dQ @ P["Wa"].T
    dx, dW, db, dh0, dc0 = lstm_backward(cache["dec"], dHs.transpose(1, 0, 2),
                                         np.zeros_like(dHs[:, 0]), np.zeros_like(dHs[:, 0]))
    grads["Wd"] += dW
    grads["bd"] += db
    np.add.at(grads["E_tgt"], batch.dec_in, dx)
    dmean = (dh0 + dc0) / batch.counts[:, None]
    dZp += dmean[:, None, :] * batch.att_mask[..., None]
    dZ = dZp[batch.ctx_b, batch.ctx_s]
    encode_backward(P, batch, cache["enc"], dZ, grads)
    return grads


def loss_and_grads(P, batch: Batch, keep: float = 1.0, rng=None):
    loss, cache = forward(P, batch, keep, rng)
    return loss, backward(P, batch, cache)


def sequence_logprobs(P, batch: Batch) -> np.ndarray:
    """Total log-probability of each example's target sequence (teacher forced)."""
    _, cache = forward(P, batch)
    return -(cache["nll"] * batch.tmask).sum(1)


def encode_contexts(model: Model, contexts) -> np.ndarray:
    """Context vectors [C, D] for one example (dropout off)."""
    ex = encode_example(model.vocab, model.hyper, (), contexts)
    Z, _ = encode_batch(model.params, make_batch([ex]))
    return Z
