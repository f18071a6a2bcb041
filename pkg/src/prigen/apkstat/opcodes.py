"""Dalvik opcode table: mnemonic and instruction format for every opcode byte."""

# code units per instruction format
FORMAT_UNITS = {
    "10x": 1, "12x": 1, "11n": 1, "11x": 1, "10t": 1,
    "20t": 2, "22x": 2, "21t": 2, "21s": 2, "21h": 2, "21c": 2,
    "23x": 2, "22b": 2, "22t": 2, "22s": 2, "22c": 2,
    "30t": 3, "32x": 3, "31i": 3, "31t": 3, "31c": 3, "35c": 3, "3rc": 3,
    "45cc": 4, "4rcc": 4, "51l": 5,
}

_TABLE = [
    (0x00, "nop", "10x"), (0x01, "move", "12x"), (0x02, "move/from16", "22x"),
    (0x03, "move/16", "32x"), (0x04, "move-wide", "12x"), (0x05, "move-wide/from16", "22x"),
    (0x06, "move-wide/16", "32x"), (0x07, "move-object", "12x"),
    (0x08, "move-object/from16", "22x"), (0x09, "move-object/16", "32x"),
    (0x0a, "move-result", "11x"), (0x0b, "move-result-wide", "11x"),
    (0x0c, "move-result-object", "11x"), (0x0d, "move-exception", "11x"),
    (0x0e, "return-void", "10x"), (0x0f, "return", "11x"), (0x10, "return-wide", "11x"),
    (0x11, "return-object", "11x"), (0x12, "const/4", "11n"), (0x13, "const/16", "21s"),
    (0x14, "const", "31i"), (0x15, "const/high16", "21h"), (0x16, "const-wide/16", "21s"),
    (0x17, "const-wide/32", "31i"), (0x18, "const-wide", "51l"),
    (0x19, "const-wide/high16", "21h"), (0x1a, "const-string", "21c"),
    (0x1b, "const-string/jumbo", "31c"), (0x1c, "const-class", "21c"),
    (0x1d, "monitor-enter", "11x"), (0x1e, "monitor-exit", "11x"),
    (0x1f, "check-cast", "21c"), (0x20, "instance-of", "22c"), (0x21, "array-length", "12x"),
    (0x22, "new-instance", "21c"), (0x23, "new-array", "22c"),
    (0x24, "filled-new-array", "35c"), (0x25, "filled-new-array/range", "3rc"),
    (0x26, "fill-array-data", "31t"), (0x27, "throw", "11x"), (0x28, "goto", "10t"),
    (0x29, "goto/16", "20t"), (0x2a, "goto/32", "30t"), (0x2b, "packed-switch", "31t"),
    (0x2c, "sparse-switch", "31t"),
]
_TABLE += [(0x2d + i, n, "23x") for i, n in enumerate(
    ["cmpl-float", "cmpg-float", "cmpl-double", "cmpg-double", "cmp-long"])]
_TABLE += [(0x32 + i, n, "22t") for i, n in enumerate(
    ["if-eq", "if-ne", "if-lt", "if-ge", "if-gt", "if-le"])]
_TABLE += [(0x38 + i, n, "21t") for i, n in enumerate(
    ["if-eqz", "if-nez", "if-ltz", "if-gez", "if-gtz", "if-lez"])]
_KINDS = ["", "-wide", "-object", "-boolean", "-byte", "-char", "-short"]
_TABLE += [(0x44 + i, "aget" + k, "23x") for i, k in enumerate(_KINDS)]
_TABLE += [(0x4b + i, "aput" + k, "23x") for i, k in enumerate(_KINDS)]
_TABLE += [(0x52 + i, "iget" + k, "22c") for i, k in enumerate(_KINDS)]
_TABLE += [(0x59 + i, "iput" + k, "22c") for i, k in enumerate(_KINDS)]
_TABLE += [(0x60 + i, "sget" + k, "21c") for i, k in enumerate(_KINDS)]
_TABLE += [(0x67 + i, "sput" + k, "21c") for i, k in enumerate(_KINDS)]
_INVOKES = ["invoke-virtual", "invoke-super", "invoke-direct", "invoke-static",
            "invoke-interface"]
_TABLE += [(0x6e + i, n, "35c") for i, n in enumerate(_INVOKES)]
_TABLE += [(0x74 + i, n + "/range", "3rc") for i, n in enumerate(_INVOKES)]
_TABLE += [(0x7b + i, n, "12x") for i, n in enumerate([
    "neg-int", "not-int", "neg-long", "not-long", "neg-float", "neg-double",
    "int-to-long", "int-to-float", "int-to-double", "long-to-int", "long-to-float",
    "long-to-double", "float-to-int", "float-to-long", "float-to-double",
    "double-to-int", "double-to-long", "double-to-float", "int-to-byte",
    "int-to-char", "int-to-short"])]
_BINOPS = [f"{op}-{t}" for t, ops in (
    ("int", ["add", "sub", "mul", "div", "rem", "and", "or", "xor", "shl", "shr", "ushr"]),
    ("long", ["add", "sub", "mul", "div", "rem", "and", "or", "xor", "shl", "shr", "ushr"]),
    ("float", ["add", "sub", "mul", "div", "rem"]),
    ("double", ["add", "sub", "mul", "div", "rem"]),
) for op in ops]
_TABLE += [(0x90 + i, n, "23x") for i, n in enumerate(_BINOPS)]
_TABLE += [(0xb0 + i, n + "/2addr", "12x") for i, n in enumerate(_BINOPS)]
_TABLE += [(0xd0 + i, n, "22s") for i, n in enumerate([
    "add-int/lit16", "rsub-int", "mul-int/lit16", "div-int/lit16", "rem-int/lit16",
    "and-int/lit16", "or-int/lit16", "xor-int/lit16"])]
_TABLE += [(0xd8 + i, n, "22b") for i, n in enumerate([
    "add-int/lit8", "rsub-int/lit8", "mul-int/lit8", "div-int/lit8", "rem-int/lit8",
    "and-int/lit8", "or-int/lit8", "xor-int/lit8", "shl-int/lit8", "shr-int/lit8",
    "ushr-int/lit8"])]
_TABLE += [
    (0xfa, "invoke-polymorphic", "45cc"), (0xfb, "invoke-polymorphic/range", "4rcc"),
    (0xfc, "invoke-custom", "35c"), (0xfd, "invoke-custom/range", "3rc"),
    (0xfe, "const-method-handle", "21c"), (0xff, "const-method-type", "21c"),
]

# None marks an unused opcode
OPCODES: list[tuple[str, str] | None] = [None] * 256
for _op, _name, _fmt in _TABLE:
    assert OPCODES[_op] is None, hex(_op)
    OPCODES[_op] = (_name, _fmt)

BY_NAME = {name: (op, fmt) for op, name, fmt in _TABLE}

# invoke kinds whose B operand is a method_ids index
METHOD_INVOKES = frozenset(range(0x6e, 0x73)) | frozenset(range(0x74, 0x79))
POLYMORPHIC_INVOKES = frozenset((0xfa, 0xfb))
CUSTOM_INVOKES = frozenset((0xfc, 0xfd))

# what the 21c/22c/31c/3rc/35c index operand refers to
INDEX_KIND = {}
for _op, _name, _fmt in _TABLE:
    if _op in (0x1a, 0x1b):
        INDEX_KIND[_op] = "string"
    elif _op in (0x1c, 0x1f, 0x20, 0x22, 0x23, 0x24, 0x25):
        INDEX_KIND[_op] = "type"
    elif 0x52 <= _op <= 0x6d:
        INDEX_KIND[_op] = "field"
    elif _op in METHOD_INVOKES or _op in POLYMORPHIC_INVOKES:
        INDEX_KIND[_op] = "method"
    elif _op in CUSTOM_INVOKES:
        INDEX_KIND[_op] = "call_site"
    elif _op == 0xfe:
        INDEX_KIND[_op] = "method_handle"
    elif _op == 0xff:
        INDEX_KIND[_op] = "proto"

PACKED_SWITCH_PAYLOAD = 0x0100
SPARSE_SWITCH_PAYLOAD = 0x0200
FILL_ARRAY_DATA_PAYLOAD = 0x0300
