"""Privacy captions: a code caption followed by one sentence per called API."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .permdb import ApiSpec

PLACEHOLDER_LEAD = "No code caption is available for this code segment."


@dataclass(frozen=True)
class PrivacyCaption:
    code_caption: str
    api_sentences: tuple[str, ...]
    full_text: str


def sentence_case(tokens: Sequence[str]) -> str:
    text = " ".join(t for t in tokens if t)
    return text[:1].upper() + text[1:]


def api_sentence(api: ApiSpec) -> str:
    return (f"This code accesses {api.sensitive_info} via "
            f"{api.class_name}.{api.method_name}: {api.description}")


def _order(api: ApiSpec):
    # total order, so the chosen entry never depends on input order
    return (api.permission_group, api.class_name, api.method_name, api.descriptor or "",
            api.description, api.sensitive_info, api.permissions, api.deprecated)


def assemble(code_caption_tokens: Sequence[str], apis: Sequence[ApiSpec]) -> PrivacyCaption:
    if not apis:
        raise ValueError("a privacy caption needs at least one permission-requiring API")
    chosen = {}
    for api in sorted(apis, key=_order):
        chosen.setdefault((api.class_name, api.method_name), api)
    sentences = []
    for api in chosen.values():
        s = api_sentence(api)
        if s not in sentences:
            sentences.append(s)
    caption = sentence_case(code_caption_tokens)
    lead = f"{caption}." if caption else PLACEHOLDER_LEAD
    return PrivacyCaption(caption, tuple(sentences), " ".join([lead, *sentences]))
