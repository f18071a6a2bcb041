"""Path contexts between AST terminals, code2seq style."""
from __future__ import annotations

import random
import re
from dataclasses import dataclass

from .parser import Ast, Node

UP, DOWN = "up", "down"

DEFAULT_MAX_LENGTH = 9
DEFAULT_MAX_WIDTH = 2
DEFAULT_MAX_CONTEXTS = 200

_PIECE_RE = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|\d+")
_WORD_RE = re.compile(r"[A-Za-z]+|\d+")


def subtokenize(identifier: str) -> list[str]:
    """Split on camelCase, letter/digit boundaries and underscores; lowercase."""
    out = []
    for part in re.split(r"[_$]+", identifier):
        out.extend(p.lower() for p in _PIECE_RE.findall(part))
    return [p for p in out if p]


def terminal_subtokens(node: Node) -> list[str]:
    kind, text = node.kind, node.lexeme
    if kind in ("IntegerLiteral", "DoubleLiteral"):
        return [text.lower().replace("_", "")]
    if kind == "StringLiteral":
        words = [w.lower() for w in _WORD_RE.findall(text[1:-1])][:5]
        return words or ["str"]
    if kind == "CharLiteral":
        return ["char"]
    return subtokenize(text) or [text.lower()]


@dataclass(frozen=True)
class PathContext:
    left_subtokens: tuple[str, ...]
    path: tuple[tuple[str, str], ...]
    right_subtokens: tuple[str, ...]
    left_index: int = -1
    right_index: int = -1

    def render(self) -> str:
        p = "|".join(kind + ("^" if d == UP else "_") for kind, d in self.path)
        return f"{'|'.join(self.left_subtokens)},{p},{'|'.join(self.right_subtokens)}"

    @classmethod
    def parse(cls, text: str) -> "PathContext":
        left, path, right = text.split(",")
        steps = tuple((s[:-1], UP if s[-1] == "^" else DOWN) for s in path.split("|") if s)
        return cls(tuple(left.split("|")), steps, tuple(right.split("|")))

    def key(self):
        return (self.left_subtokens, self.path, self.right_subtokens)


def _ancestors(node: Node) -> list[Node]:
    chain = []
    n = node.parent
    while n is not None:
        chain.append(n)
        n = n.parent
    return chain


def path_between(left: Node, right: Node):
    """Return (path steps, width) between two terminals.

    Steps run from the left terminal's parent up to and including the lowest
    common ancestor (``up``) and then down to the right terminal's parent
    (``down``). Width is the child-index gap at the ancestor.
    """
    la = _ancestors(left)
    ra = _ancestors(right)
    ra_ids = {id(n): i for i, n in enumerate(ra)}
    for i, n in enumerate(la):
        j = ra_ids.get(id(n))
        if j is not None:
            lca, up, down = n, la[:i + 1], ra[:j]
            break
    else:  # pragma: no cover - terminals of one tree always share the root
        raise ValueError("terminals are not in the same tree")
    left_child = la[i - 1] if i > 0 else left
    right_child = ra[j - 1] if j > 0 else right
    width = abs(_index_in(lca, right_child) - _index_in(lca, left_child))
    steps = tuple((n.kind, UP) for n in up) + tuple((n.kind, DOWN) for n in reversed(down))
    return steps, width, lca


def _index_in(parent: Node, child: Node) -> int:
    for k, c in enumerate(parent.children):
        if c is child:
            return k
    raise ValueError("not a child")  # pragma: no cover


def extract_paths(ast: Ast, max_length: int = DEFAULT_MAX_LENGTH,
                  max_width: int = DEFAULT_MAX_WIDTH,
                  max_contexts: int = DEFAULT_MAX_CONTEXTS, seed: int = 0) -> list[PathContext]:
    terms = ast.terminals
    # parent chains and child indices are computed once per terminal
    chains = []
    for t in terms:
        chain = [t] + _ancestors(t)
        chains.append(chain)
    subs = [tuple(terminal_subtokens(t)) for t in terms]
    kept = []
    for a in range(len(terms)):
        ca = chains[a]
        pos_a = {id(n): k for k, n in enumerate(ca)}
        for b in range(a + 1, len(terms)):
            cb = chains[b]
            for j, n in enumerate(cb):
                i = pos_a.get(id(n))
                if i is not None:
                    break
            # ancestors strictly above the terminals: ca[1..i], cb[1..j-1]
            length = i + j - 1
            if length > max_length:
                continue
            lca = ca[i]
            width = abs(_index_in(lca, cb[j - 1]) - _index_in(lca, ca[i - 1]))
            if width > max_width:
                continue
            steps = tuple((n.kind, UP) for n in ca[1:i + 1]) + \
                tuple((n.kind, DOWN) for n in reversed(cb[1:j]))
            kept.append(PathContext(subs[a], steps, subs[b], a, b))
    if len(kept) > max_contexts:
        chosen = random.Random(seed).sample(range(len(kept)), max_contexts)
        kept = [kept[k] for k in sorted(chosen)]
    return kept


def loc_count(source_text: str) -> int:
    """Lines that are neither blank nor comment-only."""
    count = 0
    in_block = False
    for line in source_text.splitlines():
        s = line.strip()
        code = False
        while s:
            if in_block:
                end = s.find("*/")
                if end < 0:
                    s = ""
                    break
                s = s[end + 2:].strip()
                in_block = False
                continue
            if s.startswith("//"):
                break
            if s.startswith("/*"):
                in_block = True
                s = s[2:]
                continue
            code = True
            # a block comment opened after code on the same line
            k = _block_open_outside_strings(s)
            if k >= 0 and s.find("*/", k + 2) < 0:
                in_block = True
            break
        if code:
            count += 1
    return count


def _block_open_outside_strings(s: str) -> int:
    quote = None
    i = 0
    while i < len(s):
        ch = s[i]
        if quote:
            if ch == "\\":
                i += 2
                continue
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif s.startswith("//", i):
            return -1
        elif s.startswith("/*", i):
            return i
        i += 1
    return -1
