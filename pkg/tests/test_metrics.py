import itertools
import json
import math
import random
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from prigen.metrics import (EvalReport, bleu4_corpus, evaluate, evaluate_by_loc, lcs_length,
                            loc_bucket, rouge_lcs_pair)

VECTORS = json.loads((Path(__file__).parent / "data" / "metrics_vectors.json").read_text())


def toks(s):
    return s.split()


def test_bleu_identity():
    s = toks("returns the user name")
    assert bleu4_corpus([s], [s]) == pytest.approx(1.0, abs=1e-6)


def test_bleu_no_bigram_match():
    assert bleu4_corpus([toks("the the the the")], [toks("the cat sat down")]) == 0.0


def test_bleu_brevity_penalty():
    score = bleu4_corpus([toks("a b c d")], [toks("a b c d e f")])
    assert score == pytest.approx(math.exp(-0.5), abs=1e-6)


def test_bleu_errors():
    with pytest.raises(ValueError):
        bleu4_corpus([["a"]], [])
    with pytest.raises(ValueError):
        bleu4_corpus([], [])


def test_rouge_hand_case():
    p, r, f = rouge_lcs_pair(toks("the cat"), toks("the cat sat"))
    assert (p, r, f) == pytest.approx((1.0, 2 / 3, 0.8), abs=1e-6)


def test_rouge_identity_and_disjoint():
    assert rouge_lcs_pair(toks("a b c"), toks("a b c")) == (1.0, 1.0, 1.0)
    assert rouge_lcs_pair(toks("a b"), toks("c d")) == (0.0, 0.0, 0.0)


def test_rouge_empty_rejected():
    with pytest.raises(ValueError):
        rouge_lcs_pair([], ["a"])


def test_evaluate_macro_means():
    rep = evaluate([toks("a b c d"), toks("the cat")], [toks("a b c d"), toks("the cat sat")])
    assert rep.rouge_precision == pytest.approx(1.0, abs=1e-6)
    assert rep.rouge_recall == pytest.approx((1 + 2 / 3) / 2, abs=1e-6)
    assert rep.rouge_f1 == pytest.approx(0.9, abs=1e-6)
    assert rep.pair_count == 2


def test_evaluate_single_identical():
    rep = evaluate([toks("a b c d")], [toks("a b c d")])
    assert (rep.bleu4, rep.rouge_precision, rep.rouge_recall, rep.rouge_f1) == \
        pytest.approx((1, 1, 1, 1))


def test_evaluate_mismatch():
    with pytest.raises(ValueError):
        evaluate([["a"]], [["a"], ["b"]])


def test_report_rendering():
    rep = EvalReport(0.123456, 1.0, 0.5, 2 / 3, 3)
    assert rep.to_json() == {"bleu4": 12.35, "rouge_p": 100.0, "rouge_r": 50.0,
                             "rouge_f1": 66.67, "pairs": 3}


def test_frozen_reference_vectors():
    hyps = [p["hyp"] for p in VECTORS["pairs"]]
    refs = [p["ref"] for p in VECTORS["pairs"]]
    assert len(hyps) == 20
    rep = evaluate(hyps, refs)
    assert rep.bleu4 == pytest.approx(VECTORS["bleu4"], abs=1e-4)
    for (h, r), expected in zip(zip(hyps, refs), VECTORS["rouge_per_pair"]):
        assert rouge_lcs_pair(h, r) == pytest.approx(tuple(expected), abs=1e-4)
    got = (rep.rouge_precision, rep.rouge_recall, rep.rouge_f1)
    assert got == pytest.approx(tuple(VECTORS["rouge_macro"]), abs=1e-4)


def brute_lcs(a, b):
    for k in range(min(len(a), len(b)), 0, -1):
        subs = set(itertools.combinations(a, k))
        if any(c in subs for c in itertools.combinations(b, k)):
            return k
    return 0


seqs = st.lists(st.sampled_from("abcd"), max_size=8)


@given(seqs, seqs)
def test_lcs_brute_force(a, b):
    assert lcs_length(a, b) == brute_lcs(a, b)


pairs = st.lists(st.tuples(st.lists(st.sampled_from("abcde"), min_size=1, max_size=9),
                           st.lists(st.sampled_from("abcde"), min_size=1, max_size=9)),
                 min_size=1, max_size=8)


@given(pairs, st.randoms())
def test_permutation_invariance(ps, rnd):
    shuffled = list(ps)
    rnd.shuffle(shuffled)
    a = evaluate([h for h, _ in ps], [r for _, r in ps])
    b = evaluate([h for h, _ in shuffled], [r for _, r in shuffled])
    assert a.bleu4 == pytest.approx(b.bleu4, abs=1e-12)
    assert a.rouge_f1 == pytest.approx(b.rouge_f1, abs=1e-12)


@given(pairs)
def test_scores_bounded(ps):
    rep = evaluate([h for h, _ in ps], [r for _, r in ps])
    for v in (rep.bleu4, rep.rouge_precision, rep.rouge_recall, rep.rouge_f1):
        assert 0 <= v <= 1 + 1e-12


def test_empty_hypothesis_scores_zero_rouge():
    rep = evaluate([[], ["a"]], [["a"], ["a"]])
    assert rep.rouge_f1 == pytest.approx(0.5)


@pytest.mark.parametrize("loc, bucket", [(1, "1-3"), (3, "1-3"), (4, "4-5"), (5, "4-5"),
                                         (6, "6-10"), (10, "6-10"), (11, "11+"), (400, "11+")])
def test_loc_buckets(loc, bucket):
    assert loc_bucket(loc) == bucket


def test_evaluate_by_loc():
    r = random.Random(0)
    refs = [[r.choice("abc") for _ in range(5)] for _ in range(12)]
    locs = [2, 4, 7, 12] * 3
    out = evaluate_by_loc(refs, refs, locs)
    assert list(out) == ["1-3", "4-5", "6-10", "11+"]
    assert all(rep.pair_count == 3 for rep in out.values())
    with pytest.raises(ValueError):
        evaluate_by_loc(refs, refs, locs[:-1])
