"""Datasets of (method source, caption) pairs: cleaning, splitting, and the
path-context line format consumed by the captioning model."""
from __future__ import annotations

import json
import logging
import random
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .astpaths import extract_paths, loc_count, parse_java_method
from .astpaths.lexer import KEYWORDS
from .astpaths.paths import DEFAULT_MAX_CONTEXTS, DEFAULT_MAX_LENGTH, DEFAULT_MAX_WIDTH, PathContext
from .errors import JavaSyntaxError, PrigenError

log = logging.getLogger(__name__)

DEFAULT_SHINGLE = 5
DEFAULT_JACCARD = 0.8
DEFAULT_MAX_OBFUSCATION = 0.5

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")
_IDENT_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*")
_STRIP_RE = re.compile(r'"(?:[^"\\\n]|\\.)*"|\'(?:[^\'\\\n]|\\.)*\'|//[^\n]*|/\*.*?\*/', re.DOTALL)

# Names an obfuscator leaves alone: framework classes and members.
KNOWN_API_NAMES = frozenset("""
String Object Integer Long Boolean Double Float Math System Log List Map Set
URL URI Socket Context Intent Bundle Location LocationManager WifiManager
ConnectivityManager TelephonyManager HttpURLConnection URLConnection InputStream
OutputStream WebView Exception
""".split())


@dataclass
class CorpusExample:
    example_id: str
    source_text: str
    target_caption: tuple[str, ...] = ()
    contexts: list[PathContext] = field(default_factory=list)
    loc: int = 0
    obfuscation_score: float = 0.0

    def to_json(self) -> dict:
        return {"id": self.example_id, "source": self.source_text,
                "caption": " ".join(self.target_caption)}


def caption_tokens(text) -> tuple[str, ...]:
    if isinstance(text, (list, tuple)):
        text = " ".join(text)
    return tuple(w for w in re.split(r"[^0-9a-z]+", text.lower()) if w)


def make_example(example_id, source, caption="") -> CorpusExample:
    return CorpusExample(str(example_id), source, caption_tokens(caption),
                         loc=loc_count(source), obfuscation_score=obfuscation_score(source))


def read_corpus(path) -> list[CorpusExample]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                out.append(make_example(obj.get("id", lineno), obj["source"],
                                        obj.get("caption", "")))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise PrigenError(f"{path}:{lineno}: bad corpus record ({exc})") from exc
    return out


def write_corpus(path, examples) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ex in examples:
            fh.write(json.dumps(ex.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


# -- duplicates -------------------------------------------------------------

def shingles(text: str, size: int) -> frozenset:
    toks = _TOKEN_RE.findall(text)
    if len(toks) <= size:
        return frozenset([tuple(toks)]) if toks else frozenset()
    return frozenset(tuple(toks[i:i + size]) for i in range(len(toks) - size + 1))


def jaccard(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def dedup(examples, shingle_size: int = DEFAULT_SHINGLE, jaccard_threshold: float = DEFAULT_JACCARD):
    """Greedy near-duplicate removal in input order.

    Returns ``(kept, removed_pairs)`` where each removed pair is
    ``(removed example, kept witness)``.
    """
    if shingle_size < 1:
        raise ValueError("shingle_size must be >= 1")
    if not 0 < jaccard_threshold <= 1:
        raise ValueError("jaccard_threshold must be in (0, 1]")
    kept, kept_sh, removed = [], [], []
    for ex in examples:
        sh = shingles(ex.source_text, shingle_size)
        witness = None
        for other, osh in zip(kept, kept_sh):
            if jaccard(sh, osh) >= jaccard_threshold:
                witness = other
                break
        if witness is None:
            kept.append(ex)
            kept_sh.append(sh)
        else:
            removed.append((ex, witness))
    return kept, removed


# -- obfuscation ------------------------------------------------------------

def obfuscation_score(source_text: str, known_names=KNOWN_API_NAMES) -> float:
    """Share of identifier occurrences that are at most two characters long."""
    stripped = _STRIP_RE.sub(" ", source_text)
    idents = [t for t in _IDENT_RE.findall(stripped)
              if t not in KEYWORDS and t not in known_names]
    if not idents:
        return 0.0
    return sum(len(t) <= 2 for t in idents) / len(idents)


def filter_obfuscated(examples, max_score: float = DEFAULT_MAX_OBFUSCATION):
    if not 0 <= max_score <= 1:
        raise ValueError("max_score must be in [0, 1]")
    return [ex for ex in examples if ex.obfuscation_score <= max_score]


# -- splits -----------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.9
    validation_fraction: float = 0.1
    test_fraction: float = 0.0
    seed: int = 7

    def __post_init__(self):
        fr = (self.train_fraction, self.validation_fraction, self.test_fraction)
        if any(not 0 <= f <= 1 for f in fr):
            raise ValueError("split fractions must lie in [0, 1]")
        if abs(sum(fr) - 1) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {sum(fr)}")


def split(examples, spec: SplitSpec):
    items = list(examples)
    order = list(range(len(items)))
    random.Random(spec.seed).shuffle(order)
    n = len(items)
    n_val = int(n * spec.validation_fraction)
    n_test = int(n * spec.test_fraction)
    n_train = n - n_val - n_test
    shuffled = [items[i] for i in order]
    return (shuffled[:n_train], shuffled[n_train:n_train + n_val],
            shuffled[n_train + n_val:])


# -- path-context lines ------------------------------------------------------

def attach_contexts(example: CorpusExample, max_length=DEFAULT_MAX_LENGTH,
                    max_width=DEFAULT_MAX_WIDTH, max_contexts=DEFAULT_MAX_CONTEXTS,
                    seed=0) -> CorpusExample:
    ast = parse_java_method(example.source_text)
    ctx = extract_paths(ast, max_length, max_width, max_contexts, seed)
    return replace(example, contexts=ctx)


def format_line(target: tuple[str, ...] | list[str], contexts) -> str:
    head = "|".join(target) if target else "<none>"
    return " ".join([head] + [c.render() for c in contexts])


def parse_line(line: str) -> tuple[list[str], list[PathContext]]:
    parts = line.split()
    if not parts:
        raise PrigenError("empty dataset line")
    target = [] if parts[0] == "<none>" else parts[0].split("|")
    try:
        contexts = [PathContext.parse(p) for p in parts[1:]]
    except ValueError as exc:
        raise PrigenError(f"malformed path context in line: {line[:60]!r}") from exc
    return target, contexts


def read_dataset(path) -> list[tuple[list[str], list[PathContext]]]:
    with open(path, encoding="utf-8") as fh:
        return [parse_line(line) for line in fh if line.strip()]


def examples_to_lines(examples, seed=0, **limits):
    """Yield ``(example, line)``; examples outside the Java subset are skipped."""
    for ex in examples:
        try:
            ex = attach_contexts(ex, seed=seed, **limits)
        except JavaSyntaxError as exc:
            log.warning("skipping %s: %s", ex.example_id, exc)
            continue
        yield ex, format_line(ex.target_caption, ex.contexts)


def write_lines(path, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def read_lines(path) -> list[str]:
    return Path(path).read_text(encoding="utf-8").splitlines()
