"""Corpus BLEU-4 (unsmoothed, pooled) and macro-averaged ROUGE-L."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class EvalReport:
    bleu4: float
    rouge_precision: float
    rouge_recall: float
    rouge_f1: float
    pair_count: int

    def to_json(self) -> dict:
        """Scores on the 0-100 scale, two decimals."""
        return {
            "bleu4": round(100 * self.bleu4, 2),
            "rouge_p": round(100 * self.rouge_precision, 2),
            "rouge_r": round(100 * self.rouge_recall, 2),
            "rouge_f1": round(100 * self.rouge_f1, 2),
            "pairs": self.pair_count,
        }


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu4_corpus(hypotheses: Sequence[Sequence[str]],
                 references: Sequence[Sequence[str]]) -> float:
    if len(hypotheses) != len(references):
        raise ValueError(f"{len(hypotheses)} hypotheses but {len(references)} references")
    if not hypotheses:
        raise ValueError("empty hypothesis set")
    matched = [0] * 4
    total = [0] * 4
    hyp_len = ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        if not ref:
            raise ValueError("empty reference")
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, 5):
            h, r = _ngrams(hyp, n), _ngrams(ref, n)
            matched[n - 1] += sum(min(c, r[g]) for g, c in h.items())
            total[n - 1] += max(len(hyp) - n + 1, 0)
    if any(m == 0 for m in matched):
        return 0.0
    log_p = sum(math.log(m / t) for m, t in zip(matched, total)) / 4
    bp = 1.0 if hyp_len > ref_len else math.exp(1 - ref_len / hyp_len)
    return bp * math.exp(log_p)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_lcs_pair(hypothesis, reference) -> tuple[float, float, float]:
    if not hypothesis or not reference:
        raise ValueError("ROUGE-L needs non-empty hypothesis and reference")
    lcs = lcs_length(hypothesis, reference)
    p = lcs / len(hypothesis)
    r = lcs / len(reference)
    f = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return p, r, f


def evaluate(hypotheses, references) -> EvalReport:
    bleu = bleu4_corpus(hypotheses, references)
    scores = []
    for h, r in zip(hypotheses, references):
        # an empty prediction scores zero rather than aborting the report
        scores.append(rouge_lcs_pair(h, r) if h else (0.0, 0.0, 0.0))
    n = len(scores)
    return EvalReport(bleu, sum(s[0] for s in scores) / n, sum(s[1] for s in scores) / n,
                      sum(s[2] for s in scores) / n, n)


LOC_BUCKETS = ((1, 3, "1-3"), (4, 5, "4-5"), (6, 10, "6-10"), (11, None, "11+"))


def loc_bucket(loc: int) -> str:
    for lo, hi, label in LOC_BUCKETS:
        if loc >= lo and (hi is None or loc <= hi):
            return label
    return LOC_BUCKETS[0][2]


def evaluate_by_loc(hypotheses, references, locs) -> dict[str, EvalReport]:
    """Per-bucket reports for the line-count bands used in quality analysis."""
    if not len(locs) == len(hypotheses) == len(references):
        raise ValueError("hypotheses, references and LOC counts must align")
    groups: dict[str, tuple[list, list]] = {}
    for h, r, loc in zip(hypotheses, references, locs):
        hs, rs = groups.setdefault(loc_bucket(loc), ([], []))
        hs.append(h)
        rs.append(r)
    order = [b[2] for b in LOC_BUCKETS]
    return {k: evaluate(*groups[k]) for k in order if k in groups}
