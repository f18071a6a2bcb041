from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import JavaSyntaxError

KEYWORDS = frozenset("""
abstract assert boolean break byte case catch char class const continue default do
double else enum extends final finally float for goto if implements import instanceof
int interface long native new package private protected public return short static
strictfp super switch synchronized this throw throws transient try void volatile while
true false null
""".split())

PRIMITIVES = frozenset("boolean byte char short int long float double void".split())
MODIFIERS = frozenset("public private protected static final synchronized strictfp".split())
STATEMENT_HEADS = frozenset("return if while for".split())

_OPERATORS = sorted("""
>>>= <<= >>= >>> ... -> :: ++ -- && || == != <= >= += -= *= /= %= &= |= ^= << >>
( ) { } [ ] ; , . @ = > < ! ~ ? : + - * / & | ^ %
""".split(), key=len, reverse=True)

_TOKEN_RE = re.compile(r"""
  (?P<ws>\s+)
| (?P<line_comment>//[^\n]*)
| (?P<block_comment>/\*.*?\*/)
| (?P<float>(?:\d+\.\d*|\.\d+)(?:[eE][+-]?\d+)?[fFdD]?|\d+(?:[eE][+-]?\d+)[fFdD]?|\d+[fFdD])
| (?P<int>0[xX][0-9a-fA-F_]+[lL]?|\d[\d_]*[lL]?)
| (?P<string>"(?:[^"\\\n]|\\.)*")
| (?P<char>'(?:[^'\\\n]|\\.[^']*)')
| (?P<ident>[A-Za-z_$][A-Za-z0-9_$]*)
| (?P<op>""" + "|".join(re.escape(o) for o in _OPERATORS) + r""")
""", re.VERBOSE | re.DOTALL)


@dataclass(frozen=True)
class Token:
    kind: str  # ident, keyword, int, float, string, char, op, eof
    text: str
    line: int
    column: int

    @property
    def is_terminal(self) -> bool:
        """Tokens that surface as AST terminals (punctuation, operators,
        ``else`` and ``new`` do not)."""
        if self.kind in ("ident", "int", "float", "string", "char"):
            return True
        if self.kind == "keyword":
            return (self.text in PRIMITIVES or self.text in MODIFIERS
                    or self.text in STATEMENT_HEADS
                    or self.text in ("this", "true", "false", "null"))
        return False


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if not m:
            if source.startswith("/*", pos):
                raise JavaSyntaxError("unterminated comment", line, pos - line_start + 1)
            raise JavaSyntaxError(f"unexpected character {source[pos]!r}",
                                  line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        if kind not in ("ws", "line_comment", "block_comment"):
            if kind == "ident" and text in KEYWORDS:
                kind = "keyword"
            tokens.append(Token(kind, text, line, pos - line_start + 1))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens
