from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

PAD, SOS, EOS, UNK = 0, 1, 2, 3
RESERVED = ("<pad>", "<sos>", "<eos>", "<unk>")


def _assign(counter: Counter, min_count: int) -> list[str]:
    kept = [t for t, c in counter.items() if c >= min_count and t not in RESERVED]
    kept.sort(key=lambda t: (-counter[t], t))
    return list(RESERVED) + kept


@dataclass
class Vocab:
    subtokens: list[str]
    node_kinds: list[str]
    targets: list[str]

    def __post_init__(self):
        self.subtoken_to_id = {t: i for i, t in enumerate(self.subtokens)}
        self.node_kind_to_id = {t: i for i, t in enumerate(self.node_kinds)}
        self.target_to_id = {t: i for i, t in enumerate(self.targets)}

    def to_json(self) -> dict:
        return {"subtokens": self.subtokens, "node_kinds": self.node_kinds,
                "targets": self.targets}

    @classmethod
    def from_json(cls, obj) -> "Vocab":
        return cls(list(obj["subtokens"]), list(obj["node_kinds"]), list(obj["targets"]))

    def subtoken_id(self, t):
        return self.subtoken_to_id.get(t, UNK)

    def node_id(self, t):
        return self.node_kind_to_id.get(t, UNK)

    def target_id(self, t):
        return self.target_to_id.get(t, UNK)

    def decode_targets(self, ids) -> list[str]:
        return [self.targets[i] for i in ids]


def node_token(kind: str, direction: str) -> str:
    return kind + ("^" if direction == "up" else "_")


def build_vocab(train_examples, min_count: int = 1) -> Vocab:
    """``train_examples`` is a sequence of ``(target tokens, contexts)``.

    Ids are assigned by descending frequency then lexicographically, after
    the four reserved tokens.
    """
    if not train_examples:
        raise ValueError("cannot build a vocabulary from an empty training set")
    subs, nodes, tgts = Counter(), Counter(), Counter()
    for target, contexts in train_examples:
        tgts.update(target)
        for c in contexts:
            subs.update(c.left_subtokens)
            subs.update(c.right_subtokens)
            nodes.update(node_token(k, d) for k, d in c.path)
    return Vocab(_assign(subs, min_count), _assign(nodes, min_count), _assign(tgts, min_count))
