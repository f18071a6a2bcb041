"""Assemble small DEX files, Android binary XML and APK containers.

These writers exist for fixtures: they emit just enough of each format for
the readers in this package (and other tools) to accept the result.
"""
from __future__ import annotations

import hashlib
import io
import struct
import xml.etree.ElementTree as ET
import zipfile
import zlib
from dataclasses import dataclass, field

from . import opcodes as ops

ACC_PUBLIC = 0x1
ACC_STATIC = 0x8
ACC_ABSTRACT = 0x400
ACC_CONSTRUCTOR = 0x10000


def class_descriptor(name: str) -> str:
    """Accept ``com.a.B`` or ``Lcom/a/B;`` and return the descriptor form."""
    if name.startswith("L") and name.endswith(";") or name.startswith("["):
        return name
    if len(name) == 1 and name in "VZBSCIJFD":
        return name
    return "L" + name.replace(".", "/") + ";"


def split_descriptor(desc: str) -> tuple[list[str], str]:
    """``(ILjava/lang/String;)V`` -> (["I", "Ljava/lang/String;"], "V")."""
    assert desc.startswith("("), desc
    close = desc.index(")")
    body, ret = desc[1:close], desc[close + 1:]
    params, i = [], 0
    while i < len(body):
        j = i
        while body[j] == "[":
            j += 1
        if body[j] == "L":
            j = body.index(";", j)
        params.append(body[i:j + 1])
        i = j + 1
    return params, ret


def _shorty(params, ret):
    return "".join("L" if t[0] in "L[" else t for t in [ret, *params])


@dataclass(frozen=True)
class MethodRef:
    class_name: str
    name: str
    descriptor: str

    @property
    def key(self):
        return (class_descriptor(self.class_name), self.name, self.descriptor)


@dataclass
class MethodDef:
    name: str
    descriptor: str = "()V"
    access: int = ACC_PUBLIC
    code: list | None = field(default_factory=lambda: [("return-void",)])
    registers: int = 8


@dataclass
class ClassSpec:
    name: str
    methods: list[MethodDef] = field(default_factory=list)
    superclass: str = "java.lang.Object"
    access: int = ACC_PUBLIC


def _uleb(v: int) -> bytes:
    out = bytearray()
    while True:
        b = v & 0x7F
        v >>= 7
        if v:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


def mutf8_encode(s: str) -> bytes:
    out = bytearray()
    for ch in s:
        cp = ord(ch)
        if cp == 0:
            out += b"\xc0\x80"
        elif cp > 0xFFFF:
            cp -= 0x10000
            for unit in (0xD800 | (cp >> 10), 0xDC00 | (cp & 0x3FF)):
                out += chr(unit).encode("utf-8", "surrogatepass")
        else:
            out += ch.encode("utf-8", "surrogatepass")
    return bytes(out)


def _utf16_len(s):
    return len(s.encode("utf-16-le", "surrogatepass")) // 2


class _Pools:
    def __init__(self):
        self.strings = set()
        self.types = set()
        self.protos = set()
        self.methods = set()

    def type(self, t):
        t = class_descriptor(t)
        self.types.add(t)
        self.strings.add(t)
        return t

    def proto(self, desc):
        params, ret = split_descriptor(desc)
        for t in [ret, *params]:
            self.type(t)
        key = (_shorty(params, ret), ret, tuple(params))
        self.strings.add(key[0])
        self.protos.add(key)
        return key

    def method(self, cls, name, desc):
        cls = self.type(cls)
        self.strings.add(name)
        self.proto(desc)
        self.methods.add((cls, name, desc))


def _collect(classes):
    pools = _Pools()
    for c in classes:
        pools.type(c.name)
        if c.superclass:
            pools.type(c.superclass)
        for m in c.methods:
            pools.method(c.name, m.name, m.descriptor)
            for insn in m.code or ():
                for arg in insn[1:]:
                    if isinstance(arg, MethodRef):
                        pools.method(arg.class_name, arg.name, arg.descriptor)
                if insn[0] in ("const-string", "const-string/jumbo"):
                    pools.strings.add(insn[2])
                elif insn[0] in ("new-instance", "const-class", "check-cast"):
                    pools.type(insn[2])
    return pools


def _encode_insn(insn, idx):
    name = insn[0]
    if name == "raw":
        return list(insn[1])
    op, fmt = ops.BY_NAME[name]
    args = insn[1:]
    if fmt == "10x":
        return [op]
    if fmt == "11x":
        return [op | (args[0] << 8)]
    if fmt == "11n":
        return [op | (args[0] << 8) | ((args[1] & 0xF) << 12)]
    if fmt == "12x":
        return [op | (args[0] << 8) | (args[1] << 12)]
    if fmt == "10t":
        return [op | ((args[0] & 0xFF) << 8)]
    if fmt == "20t":
        return [op, args[0] & 0xFFFF]
    if fmt == "21t" or fmt == "21s":
        return [op | (args[0] << 8), args[1] & 0xFFFF]
    if fmt == "23x":
        return [op | (args[0] << 8), args[1] | (args[2] << 8)]
    if fmt == "21c":
        return [op | (args[0] << 8), idx(name, args[1])]
    if fmt == "31c":
        v = idx(name, args[1])
        return [op | (args[0] << 8), v & 0xFFFF, v >> 16]
    if fmt == "35c":
        regs, ref = list(args[0]), args[1]
        assert len(regs) <= 5
        padded = regs + [0] * (5 - len(regs))
        c, d, e, f, g = padded
        return [op | (g << 8) | (len(regs) << 12), idx(name, ref),
                c | (d << 4) | (e << 8) | (f << 12)]
    if fmt == "3rc":
        first, count, ref = args
        return [op | (count << 8), idx(name, ref), first]
    raise ValueError(f"builder does not encode format {fmt} ({name})")


def build_dex(classes: list[ClassSpec], version: int = 35) -> bytes:
    """Serialize ``classes`` as a DEX file with valid checksum and signature."""
    pools = _collect(classes)
    strings = sorted(pools.strings, key=lambda s: s.encode("utf-16-be", "surrogatepass"))
    sidx = {s: i for i, s in enumerate(strings)}
    types = sorted(pools.types, key=lambda t: sidx[t])
    tidx = {t: i for i, t in enumerate(types)}
    protos = sorted(pools.protos, key=lambda p: (tidx[p[1]], [tidx[t] for t in p[2]]))
    pidx = {p: i for i, p in enumerate(protos)}
    proto_of_desc = {}
    for p in protos:
        proto_of_desc["(" + "".join(p[2]) + ")" + p[1]] = pidx[p]
    methods = sorted(pools.methods, key=lambda m: (tidx[m[0]], sidx[m[1]],
                                                   proto_of_desc[m[2]]))
    midx = {m: i for i, m in enumerate(methods)}

    def index_of(opname, ref):
        if isinstance(ref, MethodRef):
            return midx[ref.key]
        if opname.startswith("const-string"):
            return sidx[ref]
        return tidx[class_descriptor(ref)]

    n_s, n_t, n_p, n_m, n_c = len(strings), len(types), len(protos), len(methods), len(classes)
    string_ids_off = 0x70
    type_ids_off = string_ids_off + 4 * n_s
    proto_ids_off = type_ids_off + 4 * n_t
    method_ids_off = proto_ids_off + 12 * n_p
    class_defs_off = method_ids_off + 8 * n_m
    data_off = class_defs_off + 32 * n_c

    data = bytearray()

    def align4():
        while (data_off + len(data)) % 4:
            data.append(0)

    def here():
        return data_off + len(data)

    map_items = []

    # type lists
    type_list_off = {}
    first = None
    for p in protos:
        if p[2] and p[2] not in type_list_off:
            align4()
            type_list_off[p[2]] = here()
            first = first if first is not None else here()
            data += struct.pack("<I", len(p[2]))
            data += struct.pack(f"<{len(p[2])}H", *(tidx[t] for t in p[2]))
    if type_list_off:
        map_items.append((0x1001, len(type_list_off), first))

    # code items
    code_off = {}
    first = None
    for c in classes:
        for m in c.methods:
            if m.code is None:
                continue
            units = []
            for insn in m.code:
                units += _encode_insn(insn, index_of)
            params, _ = split_descriptor(m.descriptor)
            ins = sum(2 if t in ("J", "D") else 1 for t in params)
            if not m.access & ACC_STATIC:
                ins += 1
            regs = max(m.registers, ins)
            align4()
            code_off[(c.name, m.name, m.descriptor)] = here()
            first = first if first is not None else here()
            data += struct.pack("<4H2I", regs, ins, 5, 0, 0, len(units))
            data += struct.pack(f"<{len(units)}H", *units)
    if code_off:
        map_items.append((0x2001, len(code_off), first))

    # string data
    string_data_off = []
    for s in strings:
        string_data_off.append(here())
        data += _uleb(_utf16_len(s)) + mutf8_encode(s) + b"\x00"
    if strings:
        map_items.append((0x2002, n_s, string_data_off[0]))

    # class data
    class_data_off = []
    first = None
    for c in classes:
        entries = sorted(((midx[(class_descriptor(c.name), m.name, m.descriptor)], m)
                          for m in c.methods), key=lambda e: e[0])
        direct = [e for e in entries
                  if e[1].access & (ACC_STATIC | ACC_CONSTRUCTOR) or e[1].name == "<init>"
                  or e[1].access & 0x2]
        virtual = [e for e in entries if e not in direct]
        if not entries:
            class_data_off.append(0)
            continue
        class_data_off.append(here())
        first = first if first is not None else here()
        data += _uleb(0) + _uleb(0) + _uleb(len(direct)) + _uleb(len(virtual))
        for group in (direct, virtual):
            prev = 0
            for i, m in group:
                off = code_off.get((c.name, m.name, m.descriptor), 0)
                data += _uleb(i - prev) + _uleb(m.access) + _uleb(off)
                prev = i
    if first is not None:
        map_items.append((0x2000, sum(1 for o in class_data_off if o), first))

    align4()
    map_off = here()
    fixed = [(0x0000, 1, 0)]
    for code, n, off in ((0x0001, n_s, string_ids_off), (0x0002, n_t, type_ids_off),
                         (0x0003, n_p, proto_ids_off), (0x0005, n_m, method_ids_off),
                         (0x0006, n_c, class_defs_off)):
        if n:
            fixed.append((code, n, off))
    all_items = fixed + map_items + [(0x1000, 1, map_off)]
    data += struct.pack("<I", len(all_items))
    for code, n, off in all_items:
        data += struct.pack("<HHII", code, 0, n, off)

    body = bytearray()
    for off in string_data_off:
        body += struct.pack("<I", off)
    for t in types:
        body += struct.pack("<I", sidx[t])
    for p in protos:
        body += struct.pack("<III", sidx[p[0]], tidx[p[1]], type_list_off.get(p[2], 0))
    for m in methods:
        body += struct.pack("<HHI", tidx[m[0]], proto_of_desc[m[2]], sidx[m[1]])
    for c, cd_off in zip(classes, class_data_off):
        sup = tidx[class_descriptor(c.superclass)] if c.superclass else 0xFFFFFFFF
        body += struct.pack("<8I", tidx[class_descriptor(c.name)], c.access, sup, 0,
                            0xFFFFFFFF, 0, cd_off, 0)
    assert 0x70 + len(body) == data_off

    file_size = data_off + len(data)
    header = bytearray(b"dex\n%03d\x00" % version)
    header += b"\x00" * 24  # checksum + signature, filled below
    header += struct.pack("<20I", file_size, 0x70, 0x12345678, 0, 0, map_off,
                          n_s, string_ids_off if n_s else 0, n_t, type_ids_off if n_t else 0,
                          n_p, proto_ids_off if n_p else 0, 0, 0,
                          n_m, method_ids_off if n_m else 0, n_c, class_defs_off if n_c else 0,
                          len(data), data_off)
    out = bytearray(header + body + data)
    out[12:32] = hashlib.sha1(out[32:]).digest()
    out[8:12] = struct.pack("<I", zlib.adler32(bytes(out[12:])))
    return bytes(out)


# --------------------------------------------------------------------------
# Android binary XML

ANDROID_NS = "http://schemas.android.com/apk/res/android"
_ANDROID_ATTR_IDS = {"name": 0x01010003, "versionCode": 0x0101021B,
                     "versionName": 0x0101021C, "minSdkVersion": 0x0101020C}


def _string_pool(strings, utf8=False):
    offsets, blob = [], bytearray()
    for s in strings:
        offsets.append(len(blob))
        if utf8:
            enc = s.encode("utf-8")
            for n in (len(s), len(enc)):
                blob += bytes([n]) if n < 0x80 else bytes([0x80 | (n >> 8), n & 0xFF])
            blob += enc + b"\x00"
        else:
            enc = s.encode("utf-16-le")
            n = len(enc) // 2
            blob += struct.pack("<H", n) if n < 0x8000 else struct.pack(
                "<HH", 0x8000 | (n >> 16), n & 0xFFFF)
            blob += enc + b"\x00\x00"
    while len(blob) % 4:
        blob.append(0)
    header_size = 28
    strings_start = header_size + 4 * len(strings)
    size = strings_start + len(blob)
    out = struct.pack("<HHIIIIII", 0x0001, header_size, size, len(strings), 0,
                      0x100 if utf8 else 0, strings_start, 0)
    out += struct.pack(f"<{len(strings)}I", *offsets) + bytes(blob)
    return out


def encode_axml(xml_text: str, utf8_strings: bool = False) -> bytes:
    """Encode a plain-text XML document as Android binary XML.

    Attributes in the android namespace get resource ids so that readers
    relying on the resource map resolve them the same way as on a device.
    """
    root = ET.fromstring(xml_text)
    strings: list[str] = []
    res_ids: list[int] = []

    def attr_parts(key):
        if key.startswith("{"):
            ns, local = key[1:].split("}", 1)
            return ns, local
        return None, key

    # resource-mapped attribute names come first in the pool
    attr_names = []
    for el in root.iter():
        for key in el.attrib:
            ns, local = attr_parts(key)
            if ns == ANDROID_NS and local in _ANDROID_ATTR_IDS and local not in attr_names:
                attr_names.append(local)
    for local in attr_names:
        strings.append(local)
        res_ids.append(_ANDROID_ATTR_IDS[local])

    def sid(s):
        if s is None:
            return 0xFFFFFFFF
        if s not in strings:
            strings.append(s)
        return strings.index(s)

    uses_android = any(attr_parts(k)[0] == ANDROID_NS for el in root.iter() for k in el.attrib)
    if uses_android:
        sid("android")
        sid(ANDROID_NS)

    chunks = bytearray()

    def element(el):
        nonlocal chunks
        ns, tag = attr_parts(el.tag)
        attrs = []
        for key, value in el.attrib.items():
            ans, local = attr_parts(key)
            attrs.append((sid(ans), sid(local), sid(value)))
        ext = struct.pack("<IIHHHHHH", sid(ns), sid(tag), 20, 20, len(attrs), 0, 0, 0)
        for a_ns, a_name, a_val in attrs:
            ext += struct.pack("<IIIHBBI", a_ns, a_name, a_val, 8, 0, 0x03, a_val)
        chunks += struct.pack("<HHIII", 0x0102, 16, 16 + len(ext), 1, 0xFFFFFFFF) + ext
        for child in el:
            element(child)
        chunks += struct.pack("<HHIIIII", 0x0103, 16, 24, 1, 0xFFFFFFFF, sid(ns), sid(tag))

    # pass 1 fills the string pool; pass 2 emits with final indices
    element(root)
    chunks = bytearray()
    if uses_android:
        chunks += struct.pack("<HHIIIII", 0x0100, 16, 24, 1, 0xFFFFFFFF,
                              sid("android"), sid(ANDROID_NS))
    element(root)
    if uses_android:
        chunks += struct.pack("<HHIIIII", 0x0101, 16, 24, 1, 0xFFFFFFFF,
                              sid("android"), sid(ANDROID_NS))

    pool = _string_pool(strings, utf8_strings)
    resmap = struct.pack("<HHI", 0x0180, 8, 8 + 4 * len(res_ids))
    resmap += struct.pack(f"<{len(res_ids)}I", *res_ids)
    body = pool + resmap + bytes(chunks)
    return struct.pack("<HHI", 0x0003, 8, 8 + len(body)) + body


def manifest_xml(package: str, permissions) -> str:
    lines = [f'<manifest xmlns:android="{ANDROID_NS}" package="{package}">']
    lines += [f'  <uses-permission android:name="{p}"/>' for p in permissions]
    lines += ['  <application android:name="App"/>', "</manifest>"]
    return "\n".join(lines) + "\n"


def build_apk(dex_blobs, manifest: bytes | None) -> bytes:
    """Zip a manifest and dex blobs (``classes.dex``, ``classes2.dex``...) with fixed timestamps."""
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
        def add(name, blob):
            info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_DEFLATED
            zf.writestr(info, blob)
        if manifest is not None:
            add("AndroidManifest.xml", manifest)
        for i, blob in enumerate(dex_blobs):
            add("classes.dex" if i == 0 else f"classes{i + 1}.dex", blob)
    return buf.getvalue()
