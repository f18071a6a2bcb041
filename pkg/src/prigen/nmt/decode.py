"""Greedy and beam decoding over precomputed context vectors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Model, encode_contexts, log_softmax, sigmoid
from .vocab import EOS, PAD, SOS

BANNED = (PAD, SOS)


def decoder_step(P, Z, tokens, h, c):
    """One decoder step for ``k`` hypotheses sharing context vectors ``Z`` [C, D].

    Returns ``(logp [k, V], h, c, alpha [k, C])``.
    """
    D = h.shape[1]
    x = P["E_tgt"][tokens]
    z = np.concatenate([x, h], axis=1) @ P["Wd"] + P["bd"]
    i, f, o = sigmoid(z[:, :D]), sigmoid(z[:, D:2 * D]), sigmoid(z[:, 2 * D:3 * D])
    g = np.tanh(z[:, 3 * D:])
    c = f * c + i * g
    h = o * np.tanh(c)
    s = (h @ P["Wa"]) @ Z.T
    alpha = np.exp(s - s.max(axis=1, keepdims=True))
    alpha /= alpha.sum(axis=1, keepdims=True)
    ctx = alpha @ Z
    logp = log_softmax(np.concatenate([h, ctx], axis=1) @ P["Wo"] + P["bo"])
    return logp, h, c, alpha


def _initial_state(Z):
    mean = Z.mean(axis=0, keepdims=True)
    return mean, mean.copy()


def _pick_mask(logp):
    masked = logp.copy()
    masked[:, list(BANNED)] = -np.inf
    return masked


@dataclass
class Decoded:
    tokens: list  # ids, without the end token
    logprob: float  # total, including the end token if emitted
    steps: int  # tokens scored, including the end token
    attention: list  # one weight vector per step

    @property
    def normalized(self) -> float:
        return self.logprob / max(1, self.steps)


def decode_greedy(P, Z, max_target_parts: int) -> Decoded:
    h, c = _initial_state(Z)
    token = SOS
    out, trace, total = [], [], 0.0
    for _ in range(max_target_parts):
        logp, h, c, alpha = decoder_step(P, Z, np.array([token]), h, c)
        token = int(np.argmax(_pick_mask(logp)[0]))
        total += float(logp[0, token])
        trace.append(alpha[0])
        if token == EOS:
            break
        out.append(token)
    return Decoded(out, total, len(trace), trace)


def decode_beam(P, Z, beam_width: int, max_target_parts: int) -> list[Decoded]:
    """Beam search ranked by length-normalized log-probability.

    The greedy hypothesis is always part of the candidate pool, so the top
    result never scores below greedy and width 1 reproduces greedy exactly.
    """
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    greedy = decode_greedy(P, Z, max_target_parts)
    if beam_width == 1:
        return [greedy]
    h0, c0 = _initial_state(Z)
    # live hypotheses: (tokens, logprob, h, c)
    live = [([], 0.0, h0[0], c0[0])]
    finished = []
    for step in range(max_target_parts):
        if not live:
            break
        last = np.array([hyp[0][-1] if hyp[0] else SOS for hyp in live])
        H = np.stack([hyp[2] for hyp in live])
        Cs = np.stack([hyp[3] for hyp in live])
        logp, H, Cs, _ = decoder_step(P, Z, last, H, Cs)
        masked = _pick_mask(logp)
        scored = []
        for k, hyp in enumerate(live):
            top = np.argsort(-masked[k], kind="stable")[:beam_width]
            for tok in top[np.isfinite(masked[k, top])]:
                scored.append((hyp[1] + float(logp[k, tok]), k, int(tok)))
        scored.sort(key=lambda t: (-t[0], t[1], t[2]))
        live_next = []
        for total, k, tok in scored[:beam_width]:
            toks = live[k][0] + [tok]
            if tok == EOS:
                finished.append(Decoded(toks[:-1], total, step + 1, []))
            elif step + 1 == max_target_parts:
                finished.append(Decoded(toks, total, step + 1, []))
            else:
                live_next.append((toks, total, H[k], Cs[k]))
        live = live_next
    pool = {tuple(d.tokens): d for d in finished}
    pool.setdefault(tuple(greedy.tokens), greedy)
    ranked = sorted(pool.values(), key=lambda d: (-d.normalized, d.tokens))
    return ranked[:beam_width]


def predict_tokens(model: Model, contexts, beam_width: int | None = None) -> list[str]:
    """Caption subtokens for one example's path contexts."""
    Z = encode_contexts(model, contexts)
    width = model.hyper.beam_width if beam_width is None else beam_width
    best = decode_beam(model.params, Z, width, model.hyper.max_target_parts)[0]
    return model.vocab.decode_targets(best.tokens)
