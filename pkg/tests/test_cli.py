import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from helpers import demo_apk, split_apk
from prigen.cli import run

GOLDEN = Path(__file__).parent / "golden"
REGEN = os.environ.get("PRIGEN_REGEN_GOLDEN") == "1"

SOURCES = [
    {"class": "com.example.tracker.Tracker", "method": "locate",
     "source": "Location locate(LocationManager lm) { return lm.getLastKnownLocation(\"gps\"); }"},
    {"class": "com.example.tracker.Tracker", "method": "report",
     "source": "void report() { helper(); Location loc = locate(manager); send(loc); }"},
    {"class": "com.example.tracker.Net", "method": "upload",
     "source": "void upload(String target) { URL url = new URL(target); "
               "HttpURLConnection c = url.openConnection(); c.connect(); }"},
]


def bytes_of(path):
    return Path(path).read_bytes()


@pytest.fixture(scope="module")
def apks(tmp_path_factory):
    d = tmp_path_factory.mktemp("apks")
    (d / "a_tracker.apk").write_bytes(demo_apk())
    (d / "b_split.apk").write_bytes(split_apk())
    broken = demo_apk("com.example.broken")
    (d / "c_broken.apk").write_bytes(broken[:len(broken) // 2])
    return d


@pytest.fixture(scope="module")
def small_model(tmp_path_factory):
    d = tmp_path_factory.mktemp("model")
    assert run(["dataset", "synth", "--n", "60", "--seed", "3", "--out", str(d / "c.jsonl")]) == 0
    assert run(["paths", "--in", str(d / "c.jsonl"), "--out", str(d / "all.txt"),
                "--max-contexts", "30"]) == 0
    assert run(["dataset", "split", "--in", str(d / "all.txt"), "--out-dir", str(d / "data")]) == 0
    assert run(["train", "--data", str(d / "data"), "--out", str(d / "m.json"),
                "--emb", "16", "--enc", "16", "--dec", "32", "--epochs", "15", "--lr", "1e-2",
                "--max-contexts", "30", "--loss-out", str(d / "loss.tsv"),
                "--loss-figure", str(d / "loss.png")]) == 0
    return d


def test_eval_identity(tmp_path, capsys):
    p = tmp_path / "x.txt"
    p.write_text("gets the name\nsets the value of x\n")
    assert run(["eval", "--hyp", str(p), "--ref", str(p)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["bleu4"] == 100.0 and report["rouge_f1"] == 100.0


def test_eval_length_mismatch(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.write_text("x\ny\n")
    b.write_text("x\n")
    assert run(["eval", "--hyp", str(a), "--ref", str(b)]) == 1


def test_missing_apk_and_unknown_flag(tmp_path):
    assert run(["extract", str(tmp_path / "nope.apk"), "--out", str(tmp_path / "o")]) == 1
    assert run(["extract", "--bogus"]) == 1
    assert run(["frobnicate"]) == 1
    assert run(["extract", str(tmp_path), "--out", str(tmp_path / "o")]) == 1  # empty dir


def test_bad_log_level(monkeypatch, tmp_path):
    monkeypatch.setenv("PRIGEN_LOG", "loud")
    assert run(["dataset", "synth", "--n", "2", "--out", str(tmp_path / "c")]) == 1


def test_batch_isolates_failures(apks, tmp_path):
    out, summary = tmp_path / "p.jsonl", tmp_path / "s.json"
    assert run(["extract", str(apks), "--out", str(out), "--summary", str(summary)]) == 0
    s = json.loads(summary.read_text())
    assert (s["apks_ok"], s["apks_failed"]) == (2, 1)
    records = [json.loads(ln) for ln in out.read_text().splitlines()]
    assert s["prcs_total"] == len(records) > 0
    assert {r["apk_id"] for r in records} <= {"a_tracker.apk", "b_split.apk"}


def test_all_failed_exits_nonzero(apks, tmp_path):
    assert run(["extract", str(apks / "c_broken.apk"), "--out", str(tmp_path / "p")]) == 1


def test_workers_byte_identical(apks, tmp_path):
    outs = []
    for w in (1, 4):
        o = tmp_path / f"w{w}.jsonl"
        perms = tmp_path / f"perm{w}.jsonl"
        assert run(["extract", str(apks), "--hops", "2", "--workers", str(w), "--out", str(o),
                    "--permissions-out", str(perms)]) == 0
        outs.append((bytes_of(o), bytes_of(perms)))
    assert outs[0] == outs[1]


def test_hops_superset(apks, tmp_path):
    keys = {}
    for h in (1, 2, 3):
        o = tmp_path / f"h{h}.jsonl"
        assert run(["extract", str(apks), "--hops", str(h), "--out", str(o)]) == 0
        keys[h] = {(r["apk_id"], r["class"], r["method"], r["descriptor"])
                   for r in map(json.loads, o.read_text().splitlines())}
    assert keys[1] <= keys[2] <= keys[3]
    assert keys[1] < keys[3]
    assert run(["extract", str(apks), "--hops", "0", "--out", str(tmp_path / "z")]) == 1


def test_dataset_stages_deterministic(tmp_path):
    def stages(d):
        d.mkdir()
        assert run(["dataset", "synth", "--n", "40", "--out", str(d / "c.jsonl")]) == 0
        assert run(["dataset", "dedup", "--in", str(d / "c.jsonl"), "--out", str(d / "u.jsonl")]) == 0
        assert run(["dataset", "filter", "--in", str(d / "u.jsonl"), "--out", str(d / "f.jsonl")]) == 0
        assert run(["paths", "--in", str(d / "f.jsonl"), "--out", str(d / "l.txt"),
                    "--loc-out", str(d / "loc.txt")]) == 0
        assert run(["dataset", "split", "--in", str(d / "l.txt"), "--out-dir", str(d / "s"),
                    "--split", "0.5,0.25,0.25"]) == 0
        return {p.relative_to(d): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}

    a, b = stages(tmp_path / "a"), stages(tmp_path / "b")
    assert a == b
    assert len(a) == 8


def test_dataset_usage_errors(tmp_path):
    assert run(["dataset", "dedup", "--out", str(tmp_path / "x")]) == 1
    assert run(["dataset", "split", "--in", str(tmp_path / "x"), "--out-dir", str(tmp_path),
                "--split", "0.5,0.5"]) == 1


def test_train_outputs(small_model):
    rows = (small_model / "loss.tsv").read_text().splitlines()
    assert rows[0] == "epoch\ttrain_loss\tval_loss" and len(rows) == 16
    assert bytes_of(small_model / "loss.png")[:8] == b"\x89PNG\r\n\x1a\n"


def test_predict_and_eval_by_loc(small_model, tmp_path):
    d = small_model
    hyp, ref = tmp_path / "hyp.txt", tmp_path / "ref.txt"
    val = d / "data" / "val.txt"
    assert run(["predict", "--model", str(d / "m.json"), "--in", str(val),
                "--out", str(hyp), "--ref-out", str(ref), "--beam", "2"]) == 0
    n = len(val.read_text().splitlines())
    assert len(hyp.read_text().splitlines()) == n
    loc = tmp_path / "loc.txt"
    loc.write_text("".join(f"{3 + 4 * i}\n" for i in range(n)))
    out, tsv, fig = tmp_path / "r.json", tmp_path / "b.tsv", tmp_path / "b.png"
    assert run(["eval", "--hyp", str(hyp), "--ref", str(ref), "--out", str(out), "--loc", str(loc),
                "--by-loc-out", str(tsv), "--figure", str(fig)]) == 0
    assert set(json.loads(out.read_text())) >= {"bleu4", "rouge_p", "rouge_r", "rouge_f1"}
    assert tsv.read_text().startswith("bucket\t")
    assert bytes_of(fig)[:4] == b"\x89PNG"
    assert run(["eval", "--hyp", str(hyp), "--ref", str(ref), "--figure", str(fig)]) == 1


def test_predict_bad_model(tmp_path):
    bad = tmp_path / "m.json"
    bad.write_text("{}")
    data = tmp_path / "d.txt"
    data.write_text("<none>\n")
    assert run(["predict", "--model", str(bad), "--in", str(data), "--out", str(tmp_path / "o")]) == 1


def pipeline(apks, model_dir, out_dir):
    out_dir.mkdir()
    src = out_dir / "sources.jsonl"
    src.write_text("".join(json.dumps(s) + "\n" for s in SOURCES))
    prcs, caps = out_dir / "prcs.jsonl", out_dir / "captions.jsonl"
    assert run(["extract", str(apks / "a_tracker.apk"), "--hops", "2", "--out", str(prcs)]) == 0
    assert run(["caption", "--model", str(model_dir / "m.json"), "--prcs", str(prcs),
                "--sources", str(src), "--out", str(caps)]) == 0
    return bytes_of(prcs), bytes_of(caps)


def test_fixture_pipeline_golden(apks, small_model, tmp_path):
    first = pipeline(apks, small_model, tmp_path / "one")
    second = pipeline(apks, small_model, tmp_path / "two")
    assert first == second
    if REGEN:
        GOLDEN.mkdir(exist_ok=True)
        (GOLDEN / "prcs.jsonl").write_bytes(first[0])
        (GOLDEN / "captions.jsonl").write_bytes(first[1])
    assert first[0] == bytes_of(GOLDEN / "prcs.jsonl")
    assert first[1] == bytes_of(GOLDEN / "captions.jsonl")
    caps = [json.loads(ln) for ln in first[1].decode().splitlines()]
    by_method = {c["method"]: c for c in caps}
    assert by_method["locate"]["no_source"] is False
    assert by_method["main"]["no_source"] is True
    for c in caps:
        for api in c["apis"]:
            assert api["description"] in c["privacy_caption"]


def test_console_script_exit_codes(tmp_path):
    env = dict(os.environ, PRIGEN_LOG="error")
    cmd = [sys.executable, "-m", "prigen.cli"]
    r = subprocess.run(cmd + ["extract", str(tmp_path / "missing.apk"), "--out", str(tmp_path / "o")],
                       capture_output=True, text=True, env=env)
    assert r.returncode == 1 and "missing.apk" in r.stderr and r.stdout == ""
    r = subprocess.run(cmd + ["--version"], capture_output=True, text=True, env=env)
    assert r.returncode == 0
