"""Fixture builders shared by the test modules."""
from __future__ import annotations

import random

from prigen.apkstat.build import (ClassSpec, MethodDef, MethodRef, build_apk, build_dex,
                                  encode_axml, manifest_xml)
from prigen.permdb import load_bundled_db

APP = "com.example.tracker.Tracker"
NET = "com.example.tracker.Net"

GET_LAST = MethodRef("android.location.LocationManager", "getLastKnownLocation",
                     "(Ljava/lang/String;)Landroid/location/Location;")
OPEN_CONN = MethodRef("java.net.URL", "openConnection", "()Ljava/net/URLConnection;")
URL_INIT = MethodRef("java.net.URL", "<init>", "(Ljava/lang/String;)V")
CONNECT = MethodRef("java.net.URLConnection", "connect", "()V")
ACTIVE_INFO = MethodRef("android.net.ConnectivityManager", "getActiveNetworkInfo",
                        "()Landroid/net/NetworkInfo;")
LOG_D = MethodRef("android.util.Log", "d", "(Ljava/lang/String;Ljava/lang/String;)I")


def ref(cls, name, desc="()V"):
    return MethodRef(cls, name, desc)


def demo_classes():
    """A small app: two direct API callers, a hop-2 and a hop-3 caller, and noise."""
    locate = MethodDef("locate", "(Landroid/location/LocationManager;)Landroid/location/Location;",
                       code=[("const-string", 0, "gps"),
                             ("invoke-virtual", [1, 0], GET_LAST),
                             ("move-result-object", 0),
                             ("return-object", 0)])
    report = MethodDef("report", "()V",
                       code=[("invoke-virtual", [1], ref(APP, "helper")),
                             ("invoke-virtual", [1, 2], locate_ref()),
                             ("return-void",)])
    main = MethodDef("main", "()V",
                     code=[("invoke-virtual", [1], ref(APP, "report")),
                           ("invoke-static", [], ref(NET, "upload")),
                           ("return-void",)])
    helper = MethodDef("helper", "()V",
                       code=[("const-string", 0, "tag"),
                             ("invoke-static", [0, 0], LOG_D),
                             ("return-void",)])
    upload = MethodDef("upload", "()V", access=0x9,
                       code=[("new-instance", 0, "java.net.URL"),
                             ("const-string", 1, "https://example.com/u"),
                             ("invoke-direct", [0, 1], URL_INIT),
                             ("invoke-virtual", [0], OPEN_CONN),
                             ("move-result-object", 2),
                             ("invoke-virtual", [2], CONNECT),
                             ("invoke-virtual", [2], CONNECT),
                             ("return-void",)])
    online = MethodDef("online", "(Landroid/net/ConnectivityManager;)Z",
                       code=[("invoke-virtual", [3], ACTIVE_INFO),
                             ("const/4", 0, 1),
                             ("return", 0)])
    start = MethodDef("start", "()V",
                      code=[("invoke-virtual", [1], ref(APP, "main")), ("return-void",)])
    abstract = MethodDef("later", "()V", access=0x401, code=None)
    return [ClassSpec(APP, [locate, report, main, helper, start, abstract]),
            ClassSpec(NET, [upload, online])]


def locate_ref():
    return ref(APP, "locate", "(Landroid/location/LocationManager;)Landroid/location/Location;")


def demo_dex() -> bytes:
    return build_dex(demo_classes())


DEMO_PERMISSIONS = ("android.permission.ACCESS_FINE_LOCATION", "android.permission.INTERNET",
                    "android.permission.CAMERA")


def demo_apk(package="com.example.tracker", permissions=DEMO_PERMISSIONS) -> bytes:
    manifest = encode_axml(manifest_xml(package, permissions))
    return build_apk([demo_dex()], manifest)


def split_apk() -> bytes:
    """The demo app spread across two dex files (cross-dex calls)."""
    a, b = demo_classes()
    return build_apk([build_dex([a]), build_dex([b])],
                     encode_axml(manifest_xml("com.example.split", DEMO_PERMISSIONS)))


# -- random apps for oracle tests -------------------------------------------

def _api_refs():
    out = []
    for spec in load_bundled_db().entries:
        desc = spec.descriptor or "()V"
        out.append(MethodRef(spec.class_name, spec.method_name, desc))
    return out


API_REFS = _api_refs()
EXTERNALS = [ref("java.lang.StringBuilder", "append", "(Ljava/lang/String;)Ljava/lang/StringBuilder;"),
             ref("java.util.List", "size", "()I"), LOG_D,
             ref("android.location.Location", "getLatitude", "()D")]


def random_app(seed: int, n_methods: int = 30, n_classes: int = 4):
    """Random classes whose methods invoke each other, bundled APIs and externals."""
    r = random.Random(seed)
    classes = [f"com.rand{seed}.C{i}" for i in range(n_classes)]
    sigs = []
    for k in range(n_methods):
        sigs.append(ref(r.choice(classes), f"m{k}", r.choice(["()V", "(I)V", "()I"])))
    bodies = {}
    kinds = ["invoke-virtual", "invoke-static", "invoke-direct", "invoke-super",
             "invoke-interface", "invoke-virtual/range", "invoke-static/range"]
    for sig in sigs:
        code = []
        for _ in range(r.randint(0, 5)):
            roll = r.random()
            if roll < 0.45:
                target = r.choice(sigs)
            elif roll < 0.7:
                target = r.choice(API_REFS)
            elif roll < 0.85:
                target = r.choice(EXTERNALS)
            else:
                code.append(("const/4", r.randint(0, 7), r.randint(-8, 7)))
                continue
            kind = r.choice(kinds)
            if kind.endswith("/range"):
                code.append((kind, r.randint(0, 3), r.randint(0, 4), target))
            else:
                code.append((kind, [r.randint(0, 7) for _ in range(r.randint(0, 5))], target))
        code.append(("return-void",))
        body = None if r.random() < 0.07 else code
        access = 0x401 if body is None else 0x1
        bodies.setdefault(sig.class_name, []).append(MethodDef(sig.name, sig.descriptor, access,
                                                               body, registers=8))
    return [ClassSpec(c, bodies[c]) for c in classes if c in bodies]
