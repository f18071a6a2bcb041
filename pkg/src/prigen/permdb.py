"""Knowledge base of permission-requiring Android APIs.

The database is a JSON array; each object names a class, a method, an
optional Dalvik descriptor (``null`` matches every overload) and the
permissions, group and prose used later for privacy captions.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

from .errors import ApiDbError

GROUPS = ("INTERNET", "NETWORK", "LOCATION", "OTHER")

_PERMISSION_RE = re.compile(
    r"^(?:android\.permission\.[A-Z_]+"
    r"|[a-z][A-Za-z0-9_]*(?:\.[A-Za-z0-9_]+)+\.[A-Z][A-Z0-9_]*)$"
)
_KEYS = ("class", "method", "descriptor", "description", "sensitive_info",
         "permissions", "group", "deprecated")


@dataclass(frozen=True)
class ApiSpec:
    class_name: str
    method_name: str
    descriptor: str | None
    description: str
    sensitive_info: str
    permissions: tuple[str, ...]
    permission_group: str
    deprecated: bool = False

    @property
    def key(self) -> tuple[str, str, str | None]:
        return (self.class_name, self.method_name, self.descriptor)

    def to_json(self) -> dict:
        return {
            "class": self.class_name,
            "method": self.method_name,
            "descriptor": self.descriptor,
            "description": self.description,
            "sensitive_info": self.sensitive_info,
            "permissions": list(self.permissions),
            "group": self.permission_group,
            "deprecated": self.deprecated,
        }


@dataclass(frozen=True)
class ApiDb:
    entries: tuple[ApiSpec, ...]
    index: dict = field(default_factory=dict, compare=False, repr=False)

    def __len__(self):
        return len(self.entries)

    def lookup(self, class_name: str, method_name: str, descriptor: str | None = None):
        return lookup(self, class_name, method_name, descriptor)

    def to_json(self) -> list[dict]:
        return [e.to_json() for e in self.entries]


def _validate_entry(i: int, obj) -> ApiSpec:
    def bad(msg):
        return ApiDbError(f"entry {i}: {msg}")

    if not isinstance(obj, dict):
        raise bad("expected an object")
    missing = [k for k in _KEYS if k not in obj]
    if missing:
        raise bad(f"missing keys {missing}")
    extra = sorted(set(obj) - set(_KEYS))
    if extra:
        raise bad(f"unknown keys {extra}")
    for k in ("class", "method", "description", "sensitive_info"):
        if not isinstance(obj[k], str):
            raise bad(f"'{k}' must be a string")
    if not obj["class"] or not obj["method"]:
        raise bad("'class' and 'method' must be non-empty")
    desc = obj["descriptor"]
    if desc is not None and (not isinstance(desc, str) or not desc.startswith("(")):
        raise bad("'descriptor' must be null or a Dalvik method descriptor")
    perms = obj["permissions"]
    if not isinstance(perms, list) or not perms:
        raise bad("'permissions' must be a non-empty array")
    for p in perms:
        if not isinstance(p, str) or not _PERMISSION_RE.match(p):
            raise bad(f"invalid permission string {p!r}")
    if obj["group"] not in GROUPS:
        raise bad(f"'group' must be one of {GROUPS}")
    if not isinstance(obj["deprecated"], bool):
        raise bad("'deprecated' must be a boolean")
    return ApiSpec(
        class_name=obj["class"],
        method_name=obj["method"],
        descriptor=desc,
        description=obj["description"],
        sensitive_info=obj["sensitive_info"],
        permissions=tuple(perms),
        permission_group=obj["group"],
        deprecated=obj["deprecated"],
    )


def build_api_db(entries: Iterable[ApiSpec]) -> ApiDb:
    entries = tuple(entries)
    index: dict[tuple[str, str], list[ApiSpec]] = {}
    seen = set()
    for e in entries:
        if e.key in seen:
            raise ApiDbError(
                f"duplicate entry {e.class_name}.{e.method_name} descriptor={e.descriptor!r}")
        seen.add(e.key)
        index.setdefault((e.class_name, e.method_name), []).append(e)
    return ApiDb(entries, index)


def parse_api_db(text: str) -> ApiDb:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ApiDbError(
            f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, list):
        raise ApiDbError("top-level value must be an array")
    return build_api_db(_validate_entry(i, obj) for i, obj in enumerate(raw))


def load_api_db(path) -> ApiDb:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ApiDbError(f"cannot read API database {path}: {exc}") from exc
    return parse_api_db(text)


def load_bundled_db() -> ApiDb:
    """The curated Internet/Network/Location database shipped with the package."""
    text = resources.files("prigen.data").joinpath("api_db.json").read_text(encoding="utf-8")
    return parse_api_db(text)


def bundled_manifest() -> dict:
    text = resources.files("prigen.data").joinpath("api_db.manifest.json").read_text(encoding="utf-8")
    return json.loads(text)


def dump_api_db(db: ApiDb) -> str:
    return json.dumps(db.to_json(), indent=1, ensure_ascii=False) + "\n"


def lookup(db: ApiDb, class_name: str, method_name: str, descriptor: str | None = None):
    """Return the matching entry or None.

    An exact descriptor match wins over a wildcard entry for the same method.
    """
    candidates = db.index.get((class_name, method_name))
    if not candidates:
        return None
    wildcard = None
    for e in candidates:
        if e.descriptor is None:
            wildcard = e
        elif e.descriptor == descriptor:
            return e
    return wildcard
