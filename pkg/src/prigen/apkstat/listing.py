"""Deterministic one-instruction-per-line listings of Dalvik method bodies."""
from __future__ import annotations

from ..errors import NoBodyError
from . import opcodes as ops
from .dex import DexFile, Instruction, MethodId


def _s4(v):
    return v - 0x10 if v & 0x8 else v


def _s8(v):
    return v - 0x100 if v & 0x80 else v


def _s16(v):
    return v - 0x10000 if v & 0x8000 else v


def _s32(v):
    return v - 0x100000000 if v & 0x80000000 else v


def _target(insn: Instruction, rel: int) -> str:
    return f":{insn.offset + rel:04x}"


def _operands(dex: DexFile, insn: Instruction) -> str:
    u = insn.units
    f = insn.fmt
    a = (u[0] >> 8) & 0xFF
    kind = ops.INDEX_KIND.get(insn.opcode)
    if f == "10x":
        return ""
    if f == "12x":
        return f"v{a & 0xF}, v{a >> 4}"
    if f == "11n":
        return f"v{a & 0xF}, #{_s4(a >> 4)}"
    if f == "11x":
        return f"v{a}"
    if f == "10t":
        return _target(insn, _s8(a))
    if f == "20t":
        return _target(insn, _s16(u[1]))
    if f == "22x":
        return f"v{a}, v{u[1]}"
    if f == "21t":
        return f"v{a}, {_target(insn, _s16(u[1]))}"
    if f == "21s":
        return f"v{a}, #{_s16(u[1])}"
    if f == "21h":
        shift = 48 if "wide" in insn.name else 16
        return f"v{a}, #{_s16(u[1]) << shift}"
    if f == "21c":
        return f"v{a}, {dex.describe_index(kind, u[1])}"
    if f == "23x":
        return f"v{a}, v{u[1] & 0xFF}, v{u[1] >> 8}"
    if f == "22b":
        return f"v{a}, v{u[1] & 0xFF}, #{_s8(u[1] >> 8)}"
    if f == "22t":
        return f"v{a & 0xF}, v{a >> 4}, {_target(insn, _s16(u[1]))}"
    if f == "22s":
        return f"v{a & 0xF}, v{a >> 4}, #{_s16(u[1])}"
    if f == "22c":
        return f"v{a & 0xF}, v{a >> 4}, {dex.describe_index(kind, u[1])}"
    if f == "30t":
        return _target(insn, _s32(u[1] | (u[2] << 16)))
    if f == "32x":
        return f"v{u[1]}, v{u[2]}"
    if f == "31i":
        return f"v{a}, #{_s32(u[1] | (u[2] << 16))}"
    if f == "31t":
        return f"v{a}, {_target(insn, _s32(u[1] | (u[2] << 16)))}"
    if f == "31c":
        return f"v{a}, {dex.describe_index(kind, u[1] | (u[2] << 16))}"
    if f in ("35c", "45cc"):
        count = a >> 4
        regs = [u[2] & 0xF, (u[2] >> 4) & 0xF, (u[2] >> 8) & 0xF, u[2] >> 12, a & 0xF][:count]
        text = "{" + ", ".join(f"v{r}" for r in regs) + "}, " + dex.describe_index(kind, u[1])
        if f == "45cc":
            text += ", " + dex.describe_index("proto", u[3])
        return text
    if f in ("3rc", "4rcc"):
        first = u[2]
        regs = "{}" if a == 0 else f"{{v{first} .. v{first + a - 1}}}"
        text = f"{regs}, {dex.describe_index(kind, u[1])}"
        if f == "4rcc":
            text += ", " + dex.describe_index("proto", u[3])
        return text
    if f == "51l":
        v = u[1] | (u[2] << 16) | (u[3] << 32) | (u[4] << 48)
        if v & (1 << 63):
            v -= 1 << 64
        return f"v{a}, #{v}"
    if f == "payload":
        return f"size={u[1]}" if len(u) > 1 else ""
    raise AssertionError(f)  # pragma: no cover


def render_instruction(dex: DexFile, insn: Instruction) -> str:
    operands = _operands(dex, insn)
    return f"{insn.name} {operands}" if operands else insn.name


def render_code(dex: DexFile, code) -> str:
    return "\n".join(render_instruction(dex, i) for i in code.instructions)


def render_method(dex: DexFile, method: MethodId) -> str:
    """Listing of the first definition of ``method`` in ``dex``."""
    for mid, em in dex.iter_defined_methods():
        if mid == method:
            if em.code is None:
                raise NoBodyError(f"{method} has no code item (abstract or native)")
            return render_code(dex, em.code)
    raise NoBodyError(f"{method} is not defined in this dex")
