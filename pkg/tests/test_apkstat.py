import io
import random
import struct
import time
import zipfile

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import (APP, DEMO_PERMISSIONS, NET, demo_apk, demo_classes, demo_dex, random_app,
                     split_apk)
from prigen.apkstat import (analyze_apk, build_call_graph, cross_check_permissions, find_prcs,
                            parse_apk, parse_dex, parse_manifest, render_method)
from prigen.apkstat.build import build_dex, encode_axml, manifest_xml, mutf8_encode
from prigen.apkstat.dex import MethodId, decode_instructions, decode_mutf8, type_to_dotted
from prigen.errors import ApkError, DexError, ManifestError, NoBodyError
from prigen.permdb import load_bundled_db

DB = load_bundled_db()


def mid(cls, name, desc="()V"):
    return MethodId(cls, name, desc)


# -- oracles built from the fixture description, not from the parser ----------

def spec_edges(classes):
    edges = set()
    for c in classes:
        for m in c.methods:
            for insn in m.code or []:
                if insn[0].startswith("invoke"):
                    t = insn[-1]
                    edges.add((mid(c.name, m.name, m.descriptor),
                               mid(t.class_name, t.name, t.descriptor)))
    return edges


def spec_api(target):
    exact = [e for e in DB.entries if (e.class_name, e.method_name, e.descriptor)
             == (target.class_name, target.name, target.descriptor)]
    if exact:
        return exact[0]
    wild = [e for e in DB.entries if (e.class_name, e.method_name) ==
            (target.class_name, target.name) and e.descriptor is None]
    return wild[0] if wild else None


def brute_force_prcs(classes, max_hops):
    """Hop distances by fixed-point relaxation, and API sets per method."""
    bodies = {mid(c.name, m.name, m.descriptor): m.code for c in classes for m in c.methods
              if m.code is not None}
    callees = {k: {mid(i[-1].class_name, i[-1].name, i[-1].descriptor)
                   for i in code if i[0].startswith("invoke")} for k, code in bodies.items()}
    dist, apis = {}, {}
    for k, code in bodies.items():
        counts = {}
        for insn in code:
            if insn[0].startswith("invoke"):
                spec = spec_api(insn[-1])
                if spec is not None:
                    counts[spec] = counts.get(spec, 0) + 1
        if counts:
            dist[k] = 1
            apis[k] = counts
    changed = True
    while changed:
        changed = False
        for k in bodies:
            best = min((dist[c] + 1 for c in callees[k] if c in dist), default=None)
            if best is not None and (k not in dist or best < dist[k]):
                dist[k] = best
                changed = True
    for h in range(2, max_hops + 1):
        for k in bodies:
            if dist.get(k) == h:
                apis[k] = {s: 0 for c in callees[k] if dist.get(c) == h - 1 for s in apis[c]}
    return {k: (d, apis[k]) for k, d in dist.items() if d <= max_hops}


def analyzed(classes, hops):
    dex = parse_dex(build_dex(classes))
    graph = build_call_graph([dex])
    return graph, find_prcs(graph, [dex], DB, hops)


def as_table(prcs):
    return {p.method: (p.hop_distance, {c.api: c.call_sites for c in p.called_apis}) for p in prcs}


@pytest.mark.parametrize("seed", range(12))
def test_call_graph_matches_instruction_scan(seed):
    classes = random_app(seed, n_methods=40)
    graph, _ = analyzed(classes, 1)
    assert set(graph.edges) == spec_edges(classes)


@pytest.mark.parametrize("seed", range(12))
@pytest.mark.parametrize("hops", [1, 2, 3])
def test_prcs_matches_reachability_oracle(seed, hops):
    classes = random_app(seed, n_methods=40)
    _, prcs = analyzed(classes, hops)
    assert as_table(prcs) == brute_force_prcs(classes, hops)


@pytest.mark.parametrize("seed", range(12))
def test_hops_monotone(seed):
    classes = random_app(seed)
    _, p1 = analyzed(classes, 1)
    _, p2 = analyzed(classes, 2)
    t1, t2 = as_table(p1), as_table(p2)
    assert set(t1) <= set(t2)
    assert all(t2[k] == t1[k] for k in t1)


def test_demo_app_hops():
    _, prcs = analyzed(demo_classes(), 3)
    hops = {p.method.method_name: p.hop_distance for p in prcs}
    assert hops == {"locate": 1, "upload": 1, "online": 1, "report": 2, "main": 2, "start": 3}
    upload = next(p for p in prcs if p.method.method_name == "upload")
    sites = {c.api.method_name: c.call_sites for c in upload.called_apis}
    assert sites == {"openConnection": 1, "connect": 2}


def test_find_prcs_rejects_zero_hops():
    dex = parse_dex(demo_dex())
    with pytest.raises(ValueError):
        find_prcs(build_call_graph([dex]), [dex], DB, 0)


def test_prcs_json_shape():
    _, prcs = analyzed(demo_classes(), 1)
    rec = prcs[0].to_json()
    assert set(rec) == {"apk_id", "class", "method", "descriptor", "hop", "loc", "apis", "code"}
    assert set(rec["apis"][0]) == {"class", "method", "permissions", "group", "description",
                                   "sensitive_info", "call_sites"}


def test_cross_dex_calls_resolve(tmp_path):
    single = tmp_path / "one.apk"
    split = tmp_path / "two.apk"
    single.write_bytes(demo_apk())
    split.write_bytes(split_apk())
    a = analyze_apk(single, DB, 3)
    b = analyze_apk(split, DB, 3)
    assert as_table(a.prcs) == as_table(b.prcs)


# -- dex parsing details ---------------------------------------------------------

def test_header_versions():
    data = bytearray(demo_dex())
    for v in (b"035", b"036", b"037", b"038", b"039"):
        data[4:7] = v
        parse_dex(bytes(data))
    data[4:7] = b"040"
    with pytest.raises(DexError):
        parse_dex(bytes(data))


def test_bad_magic():
    with pytest.raises(DexError):
        parse_dex(b"not a dex file" + bytes(200))


def test_truncated_header():
    with pytest.raises(DexError):
        parse_dex(demo_dex()[:40])


def test_listing_renders_symbols():
    dex = parse_dex(demo_dex())
    text = render_method(dex, mid(NET, "upload"))
    assert "new-instance v0, java.net.URL" in text
    assert 'const-string v1, "https://example.com/u"' in text
    assert "java.net.URL.openConnection()Ljava/net/URLConnection;" in text


def test_listing_without_body():
    dex = parse_dex(demo_dex())
    with pytest.raises(NoBodyError):
        render_method(dex, mid(APP, "later"))
    with pytest.raises(NoBodyError):
        render_method(dex, mid(APP, "nope"))


def test_type_to_dotted():
    assert type_to_dotted("Ljava/lang/String;") == "java.lang.String"
    assert type_to_dotted("[I") == "int[]"
    assert type_to_dotted("[[Landroid/os/Bundle;") == "android.os.Bundle[][]"


def test_unused_opcode_rejected():
    with pytest.raises(DexError):
        decode_instructions([0x003e], 0)


def test_instruction_overrun_rejected():
    with pytest.raises(DexError):
        decode_instructions([0x0022], 0)  # new-instance needs two units


@given(st.text(max_size=40))
def test_mutf8_roundtrip(s):
    assert decode_mutf8(mutf8_encode(s)) == s


# -- fuzzing -----------------------------------------------------------------

def _mutate(r, data):
    data = bytearray(data)
    kind = r.randrange(6)
    if kind == 0:
        for _ in range(r.randint(1, 8)):
            data[r.randrange(len(data))] = r.randrange(256)
    elif kind == 1:
        data = data[:r.randrange(len(data))]
    elif kind == 2:
        # hit header and table fields, where offsets and sizes live
        pos = r.randrange(0, 0x70, 4)
        data[pos:pos + 4] = struct.pack("<I", r.choice([0, 1, 0xFFFF, 0x7FFFFFFF, 0xFFFFFFFF,
                                                         r.randrange(len(data) * 2)]))
    elif kind == 3:
        pos = r.randrange(len(data))
        data[pos:pos] = bytes(r.randrange(256) for _ in range(r.randint(1, 16)))
    elif kind == 4:
        pos = r.randrange(len(data))
        del data[pos:pos + r.randint(1, 16)]
    else:
        pos = r.randrange(0, len(data) - 4, 2)
        data[pos:pos + 2] = struct.pack("<H", r.randrange(0x10000))
    return bytes(data)


def run_dex_fuzz(n, seed=1234):
    """Returns (parsed, rejected); any other exception propagates."""
    base = demo_dex()
    r = random.Random(seed)
    parsed = rejected = 0
    for _ in range(n):
        data = _mutate(r, base)
        try:
            dex = parse_dex(data)
            graph = build_call_graph([dex])
            find_prcs(graph, [dex], DB, 2)
            parsed += 1
        except DexError:
            rejected += 1
    return parsed, rejected


def test_dex_fuzz_small():
    parsed, rejected = run_dex_fuzz(500, seed=99)
    assert parsed + rejected == 500
    assert rejected > 0


# -- APK and manifest --------------------------------------------------------

def test_manifest_encodings_agree():
    xml = manifest_xml("com.example.x", DEMO_PERMISSIONS)
    a = parse_manifest(encode_axml(xml))
    b = parse_manifest(encode_axml(xml, utf8_strings=True))
    c = parse_manifest(xml.encode())
    assert a == b == c
    assert a.package_name == "com.example.x"
    assert a.declared_permissions == frozenset(DEMO_PERMISSIONS)


def test_manifest_garbage():
    with pytest.raises(ManifestError):
        parse_manifest(b"\x03\x00\x08\x00\xff\xff\xff\xff" + bytes(20))


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=300))
def test_manifest_never_crashes(data):
    try:
        parse_manifest(data)
    except ManifestError:
        pass


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 255))
def test_axml_byte_flip(pos, value):
    data = bytearray(encode_axml(manifest_xml("com.example.x", DEMO_PERMISSIONS)))
    data[pos % len(data)] = value
    try:
        parse_manifest(bytes(data))
    except ManifestError:
        pass


def test_apk_dex_order(tmp_path):
    buf = io.BytesIO()
    dex = demo_dex()
    with zipfile.ZipFile(buf, "w") as zf:
        for name in ("classes10.dex", "classes2.dex", "classes.dex", "assets/classes3.dex"):
            zf.writestr(name, dex + name.encode())
    p = tmp_path / "order.apk"
    p.write_bytes(buf.getvalue())
    contents = parse_apk(p)
    assert [b[len(dex):] for b in contents.dex_blobs] == [b"classes.dex", b"classes2.dex",
                                                          b"classes10.dex"]
    assert contents.manifest_bytes is None


def test_corrupt_apk(tmp_path):
    p = tmp_path / "bad.apk"
    p.write_bytes(demo_apk()[:200])
    with pytest.raises(ApkError):
        parse_apk(p)


def test_apk_without_dex(tmp_path):
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        zf.writestr("AndroidManifest.xml", encode_axml(manifest_xml("a.b", [])))
    p = tmp_path / "nodex.apk"
    p.write_bytes(buf.getvalue())
    with pytest.raises(ApkError):
        analyze_apk(p, DB)


def test_permission_cross_check(tmp_path):
    p = tmp_path / "demo.apk"
    p.write_bytes(demo_apk())
    result = analyze_apk(p, DB, 1)
    assert result.report.undeclared_use == ("android.permission.ACCESS_NETWORK_STATE",)
    assert result.report.unmatched_declaration == ("android.permission.CAMERA",)
    manifest = parse_manifest(encode_axml(manifest_xml("x.y", [])))
    report = cross_check_permissions(manifest, result.prcs)
    assert "android.permission.INTERNET" in report.undeclared_use


def test_analysis_is_fast_enough():
    t = time.perf_counter()
    for seed in range(5):
        analyzed(random_app(seed, n_methods=50), 3)
    assert time.perf_counter() - t < 5
