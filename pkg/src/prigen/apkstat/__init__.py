"""APK, manifest and DEX parsing; call graphs; permission-requiring code segments."""
from .analysis import (CallGraph, CalledApi, PermissionReport, Prcs, analyze_apk,
                       build_call_graph, cross_check_permissions, find_prcs)
from .apk import ApkContents, ManifestInfo, parse_apk, parse_manifest
from .dex import DexFile, MethodId, parse_dex
from .listing import render_method

__all__ = [
    "ApkContents", "CallGraph", "CalledApi", "DexFile", "ManifestInfo", "MethodId",
    "PermissionReport", "Prcs", "analyze_apk", "build_call_graph", "cross_check_permissions",
    "find_prcs", "parse_apk", "parse_dex", "parse_manifest", "render_method",
]
