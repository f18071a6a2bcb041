"""Acceptance criteria 1-10, one test each, at the stated tolerances and time budgets.

``conftest.py`` prints one PASS/FAIL line per criterion at the end of the run.
"""
import json
import math
import random
import time
from pathlib import Path

import pytest

from helpers import demo_apk, demo_classes, random_app, split_apk
from java_fixtures import METHODS
from prigen.astpaths import extract_paths, parse_java_method
from prigen.astpaths.paths import UP, path_between
from prigen.caption import assemble
from prigen.cli import run
from prigen.corpus import (SplitSpec, attach_contexts, dedup, make_example, obfuscation_score,
                           split)
from prigen.metrics import bleu4_corpus, evaluate, rouge_lcs_pair
from prigen.nmt import HyperParams, grad_check, predict_tokens, train
from prigen.nmt.model import PARAM_GROUPS
from prigen.permdb import GROUPS, ApiSpec
from prigen.synthetic import synthetic_corpus
from test_apkstat import analyzed, as_table, brute_force_prcs, run_dex_fuzz, spec_edges
from test_astpaths import BIG, as_set, brute_force
from test_corpus import BASE, PLANTED, oracle_dedup
from test_nmt import SMALL, data, encoded, small_model

VECTORS = json.loads((Path(__file__).parent / "data" / "metrics_vectors.json").read_text())


class Clock:
    def __init__(self):
        self.start = time.perf_counter()

    @property
    def elapsed(self):
        return time.perf_counter() - self.start


def test_criterion_01_metrics_oracle():
    clock = Clock()
    s = "returns the user name".split()
    assert abs(bleu4_corpus([s], [s]) - 1.0) <= 1e-6
    assert bleu4_corpus([["the"] * 4], ["the cat sat down".split()]) == 0.0
    bp = bleu4_corpus(["a b c d".split()], ["a b c d e f".split()])
    assert abs(bp - math.exp(-0.5)) <= 1e-6
    p, r, f = rouge_lcs_pair("the cat".split(), "the cat sat".split())
    assert max(abs(p - 1.0), abs(r - 2 / 3), abs(f - 0.8)) <= 1e-6

    hyps = [x["hyp"] for x in VECTORS["pairs"]]
    refs = [x["ref"] for x in VECTORS["pairs"]]
    assert len(hyps) == 20
    rep = evaluate(hyps, refs)
    assert abs(rep.bleu4 - VECTORS["bleu4"]) <= 1e-4
    for (h, rr), want in zip(zip(hyps, refs), VECTORS["rouge_per_pair"]):
        assert all(abs(a - b) <= 1e-4 for a, b in zip(rouge_lcs_pair(h, rr), want))
    got = (rep.rouge_precision, rep.rouge_recall, rep.rouge_f1)
    assert all(abs(a - b) <= 1e-4 for a, b in zip(got, VECTORS["rouge_macro"]))
    assert clock.elapsed < 1.0


def test_criterion_02_static_analysis_oracle():
    clock = Clock()
    apps = [random_app(seed, n_methods=40) for seed in range(10)] + [demo_classes()]
    for classes in apps:
        assert sum(len(c.methods) for c in classes) <= 50
        graph, p1 = analyzed(classes, 1)
        assert set(graph.edges) == spec_edges(classes)
        _, p2 = analyzed(classes, 2)
        t1, t2 = as_table(p1), as_table(p2)
        assert t1 == brute_force_prcs(classes, 1)
        assert t2 == brute_force_prcs(classes, 2)
        assert set(t1) <= set(t2)
    assert clock.elapsed < 5.0


def test_criterion_03_dex_robustness():
    clock = Clock()
    parsed, rejected = run_dex_fuzz(10_000)
    assert parsed + rejected == 10_000
    assert clock.elapsed < 60.0


def test_criterion_04_path_extraction_oracle():
    clock = Clock()
    assert len(METHODS) == 25
    for src in METHODS:
        ast = parse_java_method(src)
        n = len(ast.terminals)
        assert 3 <= n <= 20
        full = extract_paths(ast, BIG, BIG, BIG)
        assert as_set(full) == brute_force(ast)
        for length, width in ((9, 2), (4, 1)):
            assert as_set(extract_paths(ast, length, width, BIG)) == brute_force(ast, length, width)
        k = max(1, len(full) // 3)
        capped = extract_paths(ast, BIG, BIG, k, seed=1)
        assert len(capped) == min(k, n * (n - 1) // 2)
        assert as_set(capped) <= as_set(full)
        terms = ast.terminals
        for c in full:
            dirs = [d for _, d in c.path]
            assert dirs[0] == UP and sum(x != y for x, y in zip(dirs, dirs[1:])) <= 1
            _, _, lca = path_between(terms[c.left_index], terms[c.right_index])
            assert [kind for kind, d in c.path if d == UP][-1] == lca.kind
    assert clock.elapsed < 5.0


def test_criterion_05_gradient_check():
    clock = Clock()
    assert max(SMALL["embedding_size"], SMALL["encoder_state_size"],
               SMALL["decoder_state_size"]) <= 16
    for seed in range(5):
        model, examples = small_model(seed, n=4)
        res = grad_check(model.params, encoded(model, examples), seed=seed)
        assert set(res.per_group) == set(PARAM_GROUPS)
        assert res.max_rel_error < 1e-4, res.per_group

    model, examples = small_model(1, n=4)

    def corrupt(grads):
        grads["Wo"] = grads["Wo"] * 1.1 + 1e-3
        return grads

    bad = grad_check(model.params, encoded(model, examples), corrupt=corrupt)
    assert bad.max_rel_error > 1e-2
    assert clock.elapsed < 120.0


def test_criterion_06_overfit():
    clock = Clock()
    examples = []
    for e in synthetic_corpus(20, 0):
        e = attach_contexts(e, seed=0)
        examples.append((list(e.target_caption), e.contexts))
    hyper = HyperParams(embedding_size=32, encoder_state_size=32, decoder_state_size=64,
                        epochs=200, batch_size=20, learning_rate=1e-2, dropout_keep=1.0)
    report = train(examples, [], hyper)
    exact = sum(predict_tokens(report.model, c) == t for t, c in examples)
    assert exact / len(examples) >= 0.9

    one = data(1, seed=4)
    hyper = HyperParams(embedding_size=32, encoder_state_size=32, decoder_state_size=64,
                        epochs=300, learning_rate=1e-2, dropout_keep=1.0)
    assert train(one, [], hyper).losses[-1] < 0.05
    assert clock.elapsed < 300.0


# thresholds frozen after the first verified run (BLEU-4 70.82, ROUGE-F1 89.97)
BLEU_FLOOR = 30.0
ROUGE_F1_FLOOR = 50.0


@pytest.mark.slow
def test_criterion_07_desk_scale_learning():
    clock = Clock()
    examples = [attach_contexts(e) for e in synthetic_corpus(2000, 0)]
    train_set, val_set, _ = split(examples, SplitSpec(0.9, 0.1, 0.0, seed=7))
    assert (len(train_set), len(val_set)) == (1800, 200)
    report = train([(e.target_caption, e.contexts) for e in train_set], None, HyperParams())
    hyps = [predict_tokens(report.model, e.contexts) for e in val_set]
    refs = [list(e.target_caption) for e in val_set]
    rep = evaluate(hyps, refs)
    bleu, rouge_f1 = 100 * rep.bleu4, 100 * rep.rouge_f1
    print(f"criterion 7: BLEU-4 {bleu:.2f}, ROUGE-F1 {rouge_f1:.2f}, {clock.elapsed:.0f} s")
    assert bleu > BLEU_FLOOR
    assert rouge_f1 > ROUGE_F1_FLOOR
    assert clock.elapsed < 1800.0


SOURCES = [
    {"class": "com.example.tracker.Tracker", "method": "locate",
     "source": "Location locate(LocationManager lm) { return lm.getLastKnownLocation(\"gps\"); }"},
    {"class": "com.example.tracker.Net", "method": "upload",
     "source": "void upload(String target) { URL url = new URL(target); url.openConnection(); }"},
]


def full_pipeline(apks, d, workers):
    d.mkdir()
    steps = [
        ["extract", str(apks), "--hops", "3", "--workers", str(workers), "--out", "prcs.jsonl",
         "--permissions-out", "perm.jsonl", "--summary", "summary.json"],
        ["dataset", "synth", "--n", "80", "--out", "corpus.jsonl"],
        ["dataset", "dedup", "--in", "corpus.jsonl", "--out", "dedup.jsonl"],
        ["dataset", "filter", "--in", "dedup.jsonl", "--out", "clean.jsonl"],
        ["paths", "--in", "clean.jsonl", "--out", "lines.txt", "--max-contexts", "40",
         "--loc-out", "loc.txt"],
        ["dataset", "split", "--in", "lines.txt", "--out-dir", "data", "--split", "0.75,0.25,0"],
        ["train", "--data", "data", "--out", "model.json", "--emb", "12", "--enc", "12",
         "--dec", "16", "--epochs", "3", "--max-contexts", "40", "--loss-out", "loss.tsv",
         "--loss-figure", "loss.png"],
        ["predict", "--model", "model.json", "--in", "data/val.txt", "--out", "hyp.txt",
         "--ref-out", "ref.txt", "--beam", "3"],
        ["caption", "--model", "model.json", "--prcs", "prcs.jsonl", "--sources",
         "sources.jsonl", "--out", "captions.jsonl"],
        ["eval", "--hyp", "hyp.txt", "--ref", "ref.txt", "--out", "eval.json"],
    ]
    (d / "sources.jsonl").write_text("".join(json.dumps(s) + "\n" for s in SOURCES))
    with pytest.MonkeyPatch.context() as mp:
        mp.chdir(d)
        for argv in steps:
            assert run(argv) == 0, argv
    return {str(p.relative_to(d)): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


def test_criterion_08_determinism(tmp_path):
    apks = tmp_path / "apks"
    apks.mkdir()
    (apks / "one.apk").write_bytes(demo_apk())
    (apks / "two.apk").write_bytes(split_apk())
    (apks / "three.apk").write_bytes(demo_apk("com.example.other"))
    a = full_pipeline(apks, tmp_path / "a", workers=1)
    b = full_pipeline(apks, tmp_path / "b", workers=4)
    assert sorted(a) == sorted(b)
    for name in a:
        assert a[name] == b[name], name
    assert len(a) >= 17


def test_criterion_09_dedup_and_obfuscation():
    texts = BASE[:4] + [PLANTED[0]] + BASE[4:6] + [PLANTED[1]] + BASE[6:] + [PLANTED[2]]
    examples = [make_example(f"e{i}", t) for i, t in enumerate(texts)]
    _, removed = dedup(examples)
    planted = ["e4", "e7", "e9"]
    assert [e.example_id for e, _ in removed] == planted
    assert [f"e{i}" for i in oracle_dedup(texts)[1]] == planted
    hand = {
        "void a(int b) { c = b; }": 1.0,
        "void load(String path) { cache = fetch(path); }": 0.0,
        "void load(String path) { int n = count(path); cache = fetch(n); }": 0.25,
        'void show() { label = "ab cd"; /* x y */ }': 0.0,
        "void f() { }": 1.0,
        "void run() { }": 0.0,
    }
    for src, score in hand.items():
        assert obfuscation_score(src) == score, src


def random_spec(r):
    return ApiSpec(r.choice(["a.B", "a.C", "java.net.URL", "android.net.wifi.WifiManager"]),
                   r.choice(["m", "n", "getScanResults", "connect"]),
                   r.choice([None, "()V", "(I)Z"]),
                   "".join(r.choice("abc xyz.") for _ in range(r.randint(1, 30))),
                   "".join(r.choice("pqr s") for _ in range(r.randint(1, 12))),
                   ("android.permission.INTERNET",), r.choice(GROUPS), r.random() < 0.3)


def test_criterion_10_caption_assembly():
    clock = Clock()
    r = random.Random(10)
    for _ in range(1000):
        tokens = [r.choice(["gets", "the", "name", "of", "user", "sends"])
                  for _ in range(r.randint(0, 8))]
        apis = [random_spec(r) for _ in range(r.randint(1, 8))]
        cap = assemble(tokens, apis)
        shuffled = apis[:]
        r.shuffle(shuffled)
        assert assemble(tokens, shuffled) == cap
        keys = {(a.class_name, a.method_name) for a in apis}
        assert len(cap.api_sentences) == len(keys)
        assert cap.code_caption in cap.full_text
        for key in keys:
            chosen = [a for a in apis if (a.class_name, a.method_name) == key]
            assert any(a.description in cap.full_text for a in chosen)
    assert clock.elapsed < 10.0
