"""Call graphs over parsed dex files and permission-requiring code segments."""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field

from ..permdb import ApiDb, ApiSpec, lookup
from . import opcodes as ops
from .apk import ManifestInfo, parse_apk, parse_manifest
from .dex import DexFile, EncodedMethod, MethodId, parse_dex
from .listing import render_code


def opaque_callee(kind: str, index: int) -> MethodId:
    return MethodId(f"<{kind}>", f"{kind}_{index}", "")


def invoke_target(dex: DexFile, insn) -> MethodId | None:
    if insn.opcode in ops.METHOD_INVOKES or insn.opcode in ops.POLYMORPHIC_INVOKES:
        return dex.method_id(insn.index)
    if insn.opcode in ops.CUSTOM_INVOKES:
        return opaque_callee("call-site", insn.index)
    return None


@dataclass(frozen=True)
class CallGraph:
    nodes: frozenset
    edges: frozenset
    # methods with a class_data entry in some dex, mapped to (dex index, method)
    definitions: dict = field(compare=False, repr=False, default_factory=dict)
    opaque: frozenset = field(compare=False, default=frozenset())

    def __post_init__(self):
        callees, callers = defaultdict(set), defaultdict(set)
        for a, b in self.edges:
            callees[a].add(b)
            callers[b].add(a)
        object.__setattr__(self, "_callees", callees)
        object.__setattr__(self, "_callers", callers)

    def callees(self, m: MethodId) -> set:
        return self._callees.get(m, set())

    def callers(self, m: MethodId) -> set:
        return self._callers.get(m, set())

    @property
    def defined(self):
        return frozenset(self.definitions)


def build_call_graph(dexes: list[DexFile]) -> CallGraph:
    nodes, edges, opaque = set(), set(), set()
    definitions: dict[MethodId, tuple[int, EncodedMethod]] = {}
    for di, dex in enumerate(dexes):
        for mid, em in dex.iter_defined_methods():
            nodes.add(mid)
            if mid in definitions:
                # duplicate definition across dexes: first one wins
                continue
            definitions[mid] = (di, em)
            if em.code is None:
                continue
            for insn in em.code.instructions:
                if not insn.is_invoke:
                    continue
                callee = invoke_target(dex, insn)
                if insn.opcode in ops.CUSTOM_INVOKES or insn.opcode in ops.POLYMORPHIC_INVOKES:
                    opaque.add(callee)
                nodes.add(callee)
                edges.add((mid, callee))
    return CallGraph(frozenset(nodes), frozenset(edges), definitions, frozenset(opaque))


@dataclass(frozen=True)
class CalledApi:
    api: ApiSpec
    call_sites: int

    def to_json(self) -> dict:
        return {
            "class": self.api.class_name,
            "method": self.api.method_name,
            "permissions": list(self.api.permissions),
            "group": self.api.permission_group,
            "description": self.api.description,
            "sensitive_info": self.api.sensitive_info,
            "call_sites": self.call_sites,
        }


@dataclass(frozen=True)
class Prcs:
    apk_id: str
    method: MethodId
    code_text: str
    called_apis: tuple[CalledApi, ...]
    hop_distance: int
    loc: int

    def to_json(self) -> dict:
        return {
            "apk_id": self.apk_id,
            "class": self.method.class_name,
            "method": self.method.method_name,
            "descriptor": self.method.descriptor,
            "hop": self.hop_distance,
            "loc": self.loc,
            "apis": [a.to_json() for a in self.called_apis],
            "code": self.code_text,
        }

    @property
    def permissions(self) -> set[str]:
        return {p for a in self.called_apis for p in a.api.permissions}


def _api_order(spec: ApiSpec):
    return (spec.class_name, spec.method_name, spec.descriptor or "")


def find_prcs(graph: CallGraph, dexes: list[DexFile], db: ApiDb, max_hops: int = 1,
              apk_id: str = "") -> list[Prcs]:
    """Methods that call a permission-requiring API directly (hop 1) or reach
    one through a chain of ``hop - 1`` callers, up to ``max_hops``."""
    if max_hops < 1:
        raise ValueError(f"max_hops must be >= 1, got {max_hops}")
    match_cache: dict[MethodId, ApiSpec | None] = {}

    def match(m: MethodId):
        if m not in match_cache:
            match_cache[m] = lookup(db, m.class_name, m.method_name, m.descriptor)
        return match_cache[m]

    apis: dict[MethodId, dict[ApiSpec, int]] = {}
    hop: dict[MethodId, int] = {}
    for mid, (di, em) in graph.definitions.items():
        if em.code is None or not any(match(c) for c in graph.callees(mid)):
            continue
        counts: Counter = Counter()
        dex = dexes[di]
        for insn in em.code.instructions:
            if insn.is_invoke:
                spec = match(invoke_target(dex, insn))
                if spec is not None:
                    counts[spec] += 1
        apis[mid] = dict(counts)
        hop[mid] = 1

    frontier = sorted(hop)
    for h in range(2, max_hops + 1):
        nxt = []
        for m in frontier:
            for caller in graph.callers(m):
                if caller in hop:
                    continue
                d = graph.definitions.get(caller)
                if d is None or d[1].code is None:
                    continue
                hop[caller] = h
                nxt.append(caller)
        for caller in nxt:
            inherited = {}
            for c in graph.callees(caller):
                if hop.get(c) == h - 1:
                    for spec in apis[c]:
                        # call_sites counts direct invocations only
                        inherited[spec] = 0
            apis[caller] = inherited
        frontier = sorted(nxt)
        if not frontier:
            break

    out = []
    for mid in sorted(hop):
        di, em = graph.definitions[mid]
        text = render_code(dexes[di], em.code)
        called = tuple(CalledApi(s, n) for s, n in sorted(apis[mid].items(),
                                                          key=lambda kv: _api_order(kv[0])))
        out.append(Prcs(apk_id, mid, text, called, hop[mid], max(1, text.count("\n") + 1)))
    return out


@dataclass(frozen=True)
class PermissionReport:
    undeclared_use: tuple[str, ...]
    unmatched_declaration: tuple[str, ...]

    def to_json(self) -> dict:
        return {"undeclared_use": list(self.undeclared_use),
                "unmatched_declaration": list(self.unmatched_declaration)}


def cross_check_permissions(manifest: ManifestInfo, prcs: list[Prcs]) -> PermissionReport:
    """Compare manifest declarations with the permissions of called APIs.

    An API's permission list is read as alternatives: the API counts as
    covered when any one of them is declared. Uncovered APIs contribute all
    of their permissions to ``undeclared_use``.
    """
    declared = set(manifest.declared_permissions)
    used, undeclared = set(), set()
    for p in prcs:
        for called in p.called_apis:
            perms = set(called.api.permissions)
            used |= perms
            if not perms & declared:
                undeclared |= perms
    return PermissionReport(tuple(sorted(undeclared)), tuple(sorted(declared - used)))


@dataclass
class ApkAnalysis:
    apk_id: str
    prcs: list[Prcs]
    manifest: ManifestInfo | None
    report: PermissionReport | None


def analyze_apk(path, db: ApiDb, max_hops: int = 1) -> ApkAnalysis:
    contents = parse_apk(path)
    dexes = [parse_dex(b) for b in contents.dex_blobs]
    graph = build_call_graph(dexes)
    prcs = find_prcs(graph, dexes, db, max_hops, contents.apk_id)
    manifest = report = None
    if contents.manifest_bytes is not None:
        manifest = parse_manifest(contents.manifest_bytes)
        report = cross_check_permissions(manifest, prcs)
    return ApkAnalysis(contents.apk_id, prcs, manifest, report)
