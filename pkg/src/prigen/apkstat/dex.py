"""Dalvik Executable (DEX) reader.

Only the pieces needed for call-graph construction and method listings are
decoded: the id tables, class definitions, class data, code items and the
instruction stream. Every read is bounds-checked and failures raise
:class:`DexError` naming the structure and offset.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from functools import cached_property

from ..errors import DexError
from . import opcodes as ops

HEADER_SIZE = 0x70
ENDIAN_CONSTANT = 0x12345678
NO_INDEX = 0xFFFFFFFF
ACC_ABSTRACT = 0x400
ACC_NATIVE = 0x100
VALID_MAGICS = tuple(b"dex\n%03d\x00" % v for v in range(35, 40))

_PRIMITIVES = {
    "V": "void", "Z": "boolean", "B": "byte", "S": "short", "C": "char",
    "I": "int", "J": "long", "F": "float", "D": "double",
}


def type_to_dotted(descriptor: str) -> str:
    """``Lcom/a/B;`` -> ``com.a.B``; ``[I`` -> ``int[]``."""
    dims = len(descriptor) - len(descriptor.lstrip("["))
    base = descriptor[dims:]
    if base.startswith("L") and base.endswith(";"):
        name = base[1:-1].replace("/", ".")
    else:
        name = _PRIMITIVES.get(base, base)
    return name + "[]" * dims


@dataclass(frozen=True, order=True)
class MethodId:
    class_name: str
    method_name: str
    descriptor: str

    def __str__(self):
        return f"{self.class_name}.{self.method_name}{self.descriptor}"


@dataclass(frozen=True)
class ProtoId:
    shorty: str
    return_type: str
    parameters: tuple[str, ...]

    @property
    def descriptor(self) -> str:
        return "(" + "".join(self.parameters) + ")" + self.return_type


@dataclass(frozen=True)
class MethodRef:
    class_idx: int
    proto_idx: int
    name_idx: int


@dataclass(frozen=True)
class FieldRef:
    class_idx: int
    type_idx: int
    name_idx: int


@dataclass(frozen=True)
class Instruction:
    offset: int  # in 16-bit code units from the start of insns
    opcode: int
    name: str
    fmt: str
    units: tuple[int, ...]

    @property
    def index(self) -> int | None:
        """The B (or BBBB) index operand of index-bearing formats."""
        f = self.fmt
        if f in ("21c", "22c"):
            return self.units[1]
        if f in ("35c", "3rc", "45cc", "4rcc"):
            return self.units[1]
        if f == "31c":
            return self.units[1] | (self.units[2] << 16)
        return None

    @property
    def is_invoke(self) -> bool:
        return (self.opcode in ops.METHOD_INVOKES or self.opcode in ops.POLYMORPHIC_INVOKES
                or self.opcode in ops.CUSTOM_INVOKES) and self.name.startswith("invoke")


@dataclass
class CodeItem:
    offset: int
    registers_size: int
    ins_size: int
    outs_size: int
    tries_size: int
    debug_info_off: int
    insns: tuple[int, ...]
    instructions: list[Instruction] = field(default_factory=list)


@dataclass
class EncodedMethod:
    method_idx: int
    access_flags: int
    code_off: int
    code: CodeItem | None


@dataclass
class ClassDef:
    class_idx: int
    access_flags: int
    superclass_idx: int
    source_file_idx: int
    class_data_off: int
    direct_methods: list[EncodedMethod]
    virtual_methods: list[EncodedMethod]

    @property
    def methods(self) -> list[EncodedMethod]:
        return self.direct_methods + self.virtual_methods


class _Reader:
    """Bounds-checked little-endian reads over an immutable buffer."""

    def __init__(self, data: bytes):
        self.data = data
        self.size = len(data)

    def need(self, off: int, n: int, what: str):
        if off < 0 or n < 0 or off + n > self.size:
            raise DexError(f"read of {n} bytes out of bounds", what, off)

    def u16(self, off, what):
        self.need(off, 2, what)
        return struct.unpack_from("<H", self.data, off)[0]

    def u32(self, off, what):
        self.need(off, 4, what)
        return struct.unpack_from("<I", self.data, off)[0]

    def uleb128(self, off, what):
        result = 0
        for i in range(5):
            self.need(off + i, 1, what)
            b = self.data[off + i]
            result |= (b & 0x7F) << (7 * i)
            if not b & 0x80:
                if i == 4 and b > 0x0F:
                    raise DexError("malformed ULEB128 (exceeds 32 bits)", what, off)
                return result, off + i + 1
        raise DexError("malformed ULEB128 (more than 5 bytes)", what, off)

    def table(self, off, count, item_size, what):
        if count == 0:
            return
        self.need(off, count * item_size, what)


def decode_mutf8(raw: bytes, what="string_data_item", offset=None) -> str:
    try:
        s = raw.replace(b"\xc0\x80", b"\x00").decode("utf-8", "surrogatepass")
    except UnicodeDecodeError as exc:
        raise DexError(f"malformed MUTF-8 ({exc.reason})", what, offset) from None
    try:
        return s.encode("utf-16-le", "surrogatepass").decode("utf-16-le")
    except UnicodeDecodeError:
        return s


def decode_instructions(insns, code_off: int = 0) -> list[Instruction]:
    """Walk an instruction stream, returning one record per instruction or payload."""
    out = []
    n = len(insns)
    pc = 0
    while pc < n:
        unit = insns[pc]
        op = unit & 0xFF
        if op == 0 and unit != 0:
            if unit == ops.PACKED_SWITCH_PAYLOAD:
                if pc + 2 > n:
                    raise DexError("instruction stream overrun in packed-switch payload",
                                   "code_item", code_off)
                size = 4 + insns[pc + 1] * 2
                name = "packed-switch-payload"
            elif unit == ops.SPARSE_SWITCH_PAYLOAD:
                if pc + 2 > n:
                    raise DexError("instruction stream overrun in sparse-switch payload",
                                   "code_item", code_off)
                size = 2 + insns[pc + 1] * 4
                name = "sparse-switch-payload"
            elif unit == ops.FILL_ARRAY_DATA_PAYLOAD:
                if pc + 4 > n:
                    raise DexError("instruction stream overrun in fill-array-data payload",
                                   "code_item", code_off)
                width = insns[pc + 1]
                count = insns[pc + 2] | (insns[pc + 3] << 16)
                size = 4 + (width * count + 1) // 2
                name = "fill-array-data-payload"
            else:
                raise DexError(f"invalid pseudo-instruction 0x{unit:04x} at unit {pc}",
                               "code_item", code_off)
            fmt = "payload"
        else:
            entry = ops.OPCODES[op]
            if entry is None:
                raise DexError(f"unused opcode 0x{op:02x} at unit {pc}", "code_item", code_off)
            name, fmt = entry
            size = ops.FORMAT_UNITS[fmt]
        if pc + size > n:
            raise DexError(f"instruction stream overrun at unit {pc} ({name})",
                           "code_item", code_off)
        units = tuple(insns[pc:pc + size]) if fmt != "payload" else tuple(insns[pc:pc + 4])
        if fmt in ("35c", "45cc") and (units[0] >> 12) > 5:
            raise DexError(f"{name} with {units[0] >> 12} arguments at unit {pc}",
                           "code_item", code_off)
        out.append(Instruction(pc, op, name, fmt, units))
        pc += size
    return out


class DexFile:
    """A parsed DEX file. Construct with :func:`parse_dex`."""

    def __init__(self, data: bytes):
        self.data = bytes(data)
        r = self._r = _Reader(self.data)
        if self.data[:8] not in VALID_MAGICS:
            if self.data[:4] == b"dex\n":
                raise DexError(f"unsupported DEX version {self.data[4:7]!r}", "header", 0)
            raise DexError("bad magic, not a DEX file", "header", 0)
        r.need(0, HEADER_SIZE, "header")
        self.version = int(self.data[4:7])
        self.checksum = r.u32(8, "header")
        endian = r.u32(0x28, "header")
        if endian != ENDIAN_CONSTANT:
            raise DexError(f"unsupported endian tag 0x{endian:08x}", "header", 0x28)
        (self.file_size, self.header_size, _, _link_size, _link_off, self.map_off,
         string_ids_size, string_ids_off, type_ids_size, type_ids_off,
         proto_ids_size, proto_ids_off, field_ids_size, field_ids_off,
         method_ids_size, method_ids_off, class_defs_size, class_defs_off,
         self.data_size, self.data_off) = struct.unpack_from("<20I", self.data, 0x20)

        r.table(string_ids_off, string_ids_size, 4, "string_ids")
        self.strings = [self._read_string(r.u32(string_ids_off + 4 * i, "string_ids"))
                        for i in range(string_ids_size)]

        r.table(type_ids_off, type_ids_size, 4, "type_ids")
        self.types = []
        for i in range(type_ids_size):
            off = type_ids_off + 4 * i
            self.types.append(self._string(r.u32(off, "type_ids"), "type_ids", off))

        r.table(proto_ids_off, proto_ids_size, 12, "proto_ids")
        self.protos = []
        for i in range(proto_ids_size):
            off = proto_ids_off + 12 * i
            shorty = self._string(r.u32(off, "proto_ids"), "proto_ids", off)
            ret = self._type(r.u32(off + 4, "proto_ids"), "proto_ids", off)
            params_off = r.u32(off + 8, "proto_ids")
            params = self._type_list(params_off) if params_off else ()
            self.protos.append(ProtoId(shorty, ret, params))

        r.table(field_ids_off, field_ids_size, 8, "field_ids")
        self.fields = []
        for i in range(field_ids_size):
            off = field_ids_off + 8 * i
            cls, typ = struct.unpack_from("<HH", self.data, off)
            name = r.u32(off + 4, "field_ids")
            self._type(cls, "field_ids", off)
            self._type(typ, "field_ids", off)
            self._string(name, "field_ids", off)
            self.fields.append(FieldRef(cls, typ, name))

        r.table(method_ids_off, method_ids_size, 8, "method_ids")
        self.methods = []
        for i in range(method_ids_size):
            off = method_ids_off + 8 * i
            cls, proto = struct.unpack_from("<HH", self.data, off)
            name = r.u32(off + 4, "method_ids")
            self._type(cls, "method_ids", off)
            if proto >= len(self.protos):
                raise DexError(f"proto index {proto} out of range", "method_ids", off)
            self._string(name, "method_ids", off)
            self.methods.append(MethodRef(cls, proto, name))

        r.table(class_defs_off, class_defs_size, 32, "class_defs")
        self.class_defs = []
        self._code_cache: dict[int, CodeItem] = {}
        for i in range(class_defs_size):
            off = class_defs_off + 32 * i
            (cls, flags, sup, _ifaces, src, _annots, data_off,
             _static_values) = struct.unpack_from("<8I", self.data, off)
            self._type(cls, "class_defs", off)
            if sup != NO_INDEX:
                self._type(sup, "class_defs", off)
            direct, virtual = self._class_data(data_off) if data_off else ([], [])
            self.class_defs.append(ClassDef(cls, flags, sup, src, data_off, direct, virtual))

    # -- low-level helpers --------------------------------------------------
    def _read_string(self, off):
        _, pos = self._r.uleb128(off, "string_data_item")
        end = self.data.find(b"\x00", pos)
        if end < 0:
            raise DexError("unterminated string", "string_data_item", off)
        return decode_mutf8(self.data[pos:end], offset=off)

    def _string(self, idx, what, off):
        if idx >= len(self.strings):
            raise DexError(f"string index {idx} out of range", what, off)
        return self.strings[idx]

    def _type(self, idx, what, off):
        if idx >= len(self.types):
            raise DexError(f"type index {idx} out of range", what, off)
        return self.types[idx]

    def _type_list(self, off):
        r = self._r
        size = r.u32(off, "type_list")
        r.table(off + 4, size, 2, "type_list")
        return tuple(self._type(v, "type_list", off)
                     for v in struct.unpack_from(f"<{size}H", self.data, off + 4))

    def _class_data(self, off):
        r = self._r
        what = "class_data_item"
        sf, pos = r.uleb128(off, what)
        inf, pos = r.uleb128(pos, what)
        dm, pos = r.uleb128(pos, what)
        vm, pos = r.uleb128(pos, what)
        for _ in range(sf + inf):
            _, pos = r.uleb128(pos, what)
            _, pos = r.uleb128(pos, what)
        lists = []
        for count in (dm, vm):
            methods = []
            idx = 0
            for _ in range(count):
                diff, pos = r.uleb128(pos, what)
                flags, pos = r.uleb128(pos, what)
                code_off, pos = r.uleb128(pos, what)
                idx += diff
                if idx >= len(self.methods):
                    raise DexError(f"method index {idx} out of range", what, off)
                code = self._code_item(code_off) if code_off else None
                methods.append(EncodedMethod(idx, flags, code_off, code))
            lists.append(methods)
        return lists[0], lists[1]

    def _code_item(self, off):
        if off in self._code_cache:
            return self._code_cache[off]
        r = self._r
        r.need(off, 16, "code_item")
        regs, ins, outs, tries, debug_off, n = struct.unpack_from("<4H2I", self.data, off)
        r.table(off + 16, n, 2, "code_item.insns")
        insns = struct.unpack_from(f"<{n}H", self.data, off + 16)
        code = CodeItem(off, regs, ins, outs, tries, debug_off, insns)
        code.instructions = decode_instructions(insns, off)
        for insn in code.instructions:
            if insn.is_invoke and insn.opcode not in ops.CUSTOM_INVOKES:
                if insn.index >= len(self.methods):
                    raise DexError(f"invoke method index {insn.index} out of range",
                                   "code_item", off)
        self._code_cache[off] = code
        return code

    # -- symbolic views ----------------------------------------------------
    @cached_property
    def method_ids(self) -> list[MethodId]:
        return [MethodId(type_to_dotted(self.types[m.class_idx]), self.strings[m.name_idx],
                         self.protos[m.proto_idx].descriptor) for m in self.methods]

    def method_id(self, idx: int) -> MethodId:
        return self.method_ids[idx]

    def iter_defined_methods(self):
        """Yield ``(MethodId, EncodedMethod)`` for every method with a class_data entry."""
        for cdef in self.class_defs:
            for em in cdef.methods:
                yield self.method_ids[em.method_idx], em

    def describe_index(self, kind: str, idx: int) -> str:
        try:
            if kind == "string":
                return json.dumps(self.strings[idx], ensure_ascii=True)
            if kind == "type":
                return type_to_dotted(self.types[idx])
            if kind == "field":
                f = self.fields[idx]
                return (f"{type_to_dotted(self.types[f.class_idx])}.{self.strings[f.name_idx]}"
                        f":{type_to_dotted(self.types[f.type_idx])}")
            if kind == "method":
                return str(self.method_ids[idx])
            if kind == "proto":
                return self.protos[idx].descriptor
        except IndexError:
            pass
        return f"{kind}@{idx}"


def parse_dex(data: bytes) -> DexFile:
    return DexFile(data)
