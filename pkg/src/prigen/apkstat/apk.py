"""APK containers and AndroidManifest.xml (plain or binary XML)."""
from __future__ import annotations

import logging
import re
import struct
import xml.etree.ElementTree as ET
import zipfile
import zlib
from dataclasses import dataclass
from pathlib import Path

from ..errors import ApkError, ManifestError

log = logging.getLogger(__name__)

ANDROID_NS = "http://schemas.android.com/apk/res/android"
_DEX_NAME = re.compile(r"^classes(\d*)\.dex$")

RES_STRING_POOL_TYPE = 0x0001
RES_XML_TYPE = 0x0003
RES_XML_START_ELEMENT_TYPE = 0x0102
RES_XML_RESOURCE_MAP_TYPE = 0x0180
UTF8_FLAG = 0x100
TYPE_STRING = 0x03
# android:name
ATTR_NAME_RESID = 0x01010003


@dataclass(frozen=True)
class ApkContents:
    apk_id: str
    manifest_bytes: bytes | None
    dex_blobs: tuple[bytes, ...]


@dataclass(frozen=True)
class ManifestInfo:
    package_name: str
    declared_permissions: frozenset[str]


def parse_apk(path) -> ApkContents:
    path = Path(path)
    try:
        zf = zipfile.ZipFile(path)
    except (zipfile.BadZipFile, OSError) as exc:
        raise ApkError(f"{path}: not a readable ZIP container ({exc})") from exc
    with zf:
        names = zf.namelist()
        dex_names = []
        for name in names:
            m = _DEX_NAME.match(name)
            if m:
                dex_names.append((int(m.group(1) or 1), name))
        if not dex_names:
            raise ApkError(f"{path}: no classes*.dex entry")
        dex_names.sort()
        try:
            blobs = tuple(zf.read(name) for _, name in dex_names)
            manifest = zf.read("AndroidManifest.xml") if "AndroidManifest.xml" in names else None
        except (zipfile.BadZipFile, OSError, EOFError, zlib.error) as exc:
            raise ApkError(f"{path}: corrupt ZIP entry ({exc})") from exc
    if manifest is None:
        log.warning("%s: no AndroidManifest.xml, permission cross-check disabled", path.name)
    return ApkContents(path.name, manifest, blobs)


# -- manifest ---------------------------------------------------------------

def parse_manifest(data: bytes) -> ManifestInfo:
    if len(data) >= 8 and struct.unpack_from("<H", data, 0)[0] == RES_XML_TYPE:
        return _parse_axml_manifest(data)
    text = data.lstrip(b"\xef\xbb\xbf").lstrip()
    if text.startswith(b"<"):
        return _parse_plain_manifest(data)
    raise ManifestError("unrecognized manifest format (neither XML nor binary XML)")


def _collect(elements) -> ManifestInfo:
    package = ""
    perms = set()
    for tag, attrs in elements:
        if tag == "manifest":
            package = attrs.get("package", package)
        elif tag in ("uses-permission", "uses-permission-sdk-23", "uses-permission-sdk-m"):
            name = attrs.get("name")
            if name:
                perms.add(name)
    return ManifestInfo(package, frozenset(perms))


def _parse_plain_manifest(data: bytes) -> ManifestInfo:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise ManifestError(f"malformed manifest XML: {exc}") from exc

    def local(key):
        return key.split("}", 1)[1] if key.startswith("{") else key

    def elements():
        for el in root.iter():
            yield local(el.tag), {local(k): v for k, v in el.attrib.items()}
    return _collect(elements())


class AxmlReader:
    """Minimal chunk walker for Android binary XML.

    Yields ``(tag, {attribute local name: string value})`` for each start
    element. Attribute names that are empty in the string pool are resolved
    through the resource map (only ``android:name`` is needed here).
    """

    def __init__(self, data: bytes):
        self.data = data
        self.strings: list[str] = []
        self.resource_ids: list[int] = []

    def _header(self, off):
        if off + 8 > len(self.data):
            raise ManifestError(f"truncated chunk header at offset {off}")
        ctype, hsize, size = struct.unpack_from("<HHI", self.data, off)
        if hsize < 8 or size < hsize or off + size > len(self.data):
            raise ManifestError(f"truncated chunk (type 0x{ctype:04x}) at offset {off}")
        return ctype, hsize, size

    def _string_pool(self, off, hsize, size):
        if hsize < 28:
            raise ManifestError(f"truncated string pool header at offset {off}")
        count, _styles, flags, start, _ = struct.unpack_from("<IIIII", self.data, off + 8)
        if off + hsize + 4 * count > off + size:
            raise ManifestError(f"string pool offsets overrun at offset {off}")
        offsets = struct.unpack_from(f"<{count}I", self.data, off + hsize)
        base = off + start
        end = off + size
        utf8 = bool(flags & UTF8_FLAG)
        out = []
        for o in offsets:
            p = base + o
            try:
                if utf8:
                    p = self._skip_len8(p, end)
                    n, p = self._len8(p, end)
                    if p + n > end:
                        raise ManifestError(f"string overruns pool at offset {p}")
                    out.append(self.data[p:p + n].decode("utf-8", "replace"))
                else:
                    n, p = self._len16(p, end)
                    if p + 2 * n > end:
                        raise ManifestError(f"string overruns pool at offset {p}")
                    out.append(self.data[p:p + 2 * n].decode("utf-16-le", "replace"))
            except struct.error:
                raise ManifestError(f"truncated string at offset {p}") from None
        self.strings = out

    def _len8(self, p, end):
        if p + 1 > end:
            raise ManifestError(f"truncated string length at offset {p}")
        n = self.data[p]
        if n & 0x80:
            if p + 2 > end:
                raise ManifestError(f"truncated string length at offset {p}")
            return ((n & 0x7F) << 8) | self.data[p + 1], p + 2
        return n, p + 1

    def _skip_len8(self, p, end):
        return self._len8(p, end)[1]

    def _len16(self, p, end):
        if p + 2 > end:
            raise ManifestError(f"truncated string length at offset {p}")
        n = struct.unpack_from("<H", self.data, p)[0]
        if n & 0x8000:
            if p + 4 > end:
                raise ManifestError(f"truncated string length at offset {p}")
            return ((n & 0x7FFF) << 16) | struct.unpack_from("<H", self.data, p + 2)[0], p + 4
        return n, p + 2

    def _str(self, idx):
        if idx == 0xFFFFFFFF:
            return None
        if idx >= len(self.strings):
            raise ManifestError(f"string index {idx} out of range")
        return self.strings[idx]

    def _start_element(self, off, hsize, size):
        if size < hsize + 20:
            raise ManifestError(f"truncated start-element chunk at offset {off}")
        ext = off + hsize
        _ns, name, attr_start, attr_size, attr_count = struct.unpack_from(
            "<IIHHH", self.data, ext)
        tag = self._str(name)
        attrs = {}
        if attr_size < 20 and attr_count:
            raise ManifestError(f"bad attribute size {attr_size} at offset {off}")
        for i in range(attr_count):
            a = ext + attr_start + i * attr_size
            if a + 20 > off + size:
                raise ManifestError(f"attribute {i} overruns start-element at offset {off}")
            _a_ns, a_name, raw, _sz, _res0, dtype, value = struct.unpack_from(
                "<IIIHBBI", self.data, a)
            local = self._str(a_name) or ""
            if not local and a_name < len(self.resource_ids) \
                    and self.resource_ids[a_name] == ATTR_NAME_RESID:
                local = "name"
            if raw != 0xFFFFFFFF:
                val = self._str(raw)
            elif dtype == TYPE_STRING:
                val = self._str(value)
            else:
                val = None
            if val is not None:
                attrs[local] = val
        return tag, attrs

    def elements(self):
        ctype, hsize, size = self._header(0)
        if ctype != RES_XML_TYPE:
            raise ManifestError("not a binary XML document")
        off = hsize
        end = size
        while off < end:
            ctype, chsize, csize = self._header(off)
            if ctype == RES_STRING_POOL_TYPE:
                self._string_pool(off, chsize, csize)
            elif ctype == RES_XML_RESOURCE_MAP_TYPE:
                n = (csize - chsize) // 4
                self.resource_ids = list(struct.unpack_from(f"<{n}I", self.data, off + chsize))
            elif ctype == RES_XML_START_ELEMENT_TYPE:
                yield self._start_element(off, chsize, csize)
            off += csize


def _parse_axml_manifest(data: bytes) -> ManifestInfo:
    return _collect(AxmlReader(data).elements())
