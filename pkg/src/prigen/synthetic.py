"""Templated Java-subset methods with captions, for desk-scale training runs.

Each template pairs a method body (getter, setter, network call, location
lookup, ...) with a caption that mentions the same field words, so a model
has to read identifiers from the path contexts to get the caption right.
"""
from __future__ import annotations

import random

from .corpus import CorpusExample, make_example

NOUNS = """
user name account id server url address port timeout token session location
latitude longitude provider network connection request response message count
status host path device password email phone city speed altitude accuracy
interval retry cache size limit level score
""".split()

TYPES = ["String", "int", "long", "boolean", "double"]


def _camel(words, upper_first=False):
    out = "".join(w.capitalize() for w in words)
    return out if upper_first else out[:1].lower() + out[1:]


def _getter(r, f, F, words, t):
    if r.random() < 0.5:
        return f"public {t} get{F}() {{ return {f}; }}", f"returns the {words}"
    return f"public {t} get{F}() {{ return this.{f}; }}", f"returns the {words}"


def _setter(r, f, F, words, t):
    return (f"public void set{F}({t} {f}) {{ this.{f} = {f}; }}", f"sets the {words}")


def _has(r, f, F, words, t):
    return (f"public boolean has{F}() {{ return {f} != null; }}",
            f"checks whether the {words} is set")


def _increment(r, f, F, words, t):
    step = r.choice(["{f}++;", "{f} += 1;", "{f} = {f} + 1;"]).format(f=f)
    return f"public void increment{F}() {{ {step} }}", f"increments the {words}"


def _reset(r, f, F, words, t):
    return f"public void reset{F}() {{ {f} = 0; }}", f"resets the {words} to zero"


def _open_stream(r, f, F, words, t):
    conn = r.choice(["connection", "conn", "urlConnection"])
    src = (f"public InputStream open{F}Stream(String {f}Url) {{\n"
           f"  URL url = new URL({f}Url);\n"
           f"  HttpURLConnection {conn} = url.openConnection();\n"
           f"  {conn}.connect();\n"
           f"  return {conn}.getInputStream();\n}}")
    return src, f"opens a connection to the {words} url and returns the input stream"


def _location(r, f, F, words, t):
    provider = r.choice(['"gps"', '"network"', "provider"])
    src = (f"public Location getLast{F}Location(LocationManager manager) {{\n"
           f"  Location location = manager.getLastKnownLocation({provider});\n"
           f"  {f}Location = location;\n"
           f"  return location;\n}}")
    return src, f"returns the last known location of the {words}"


def _connected(r, f, F, words, t):
    src = (f"public boolean is{F}Connected(ConnectivityManager manager) {{\n"
           f"  NetworkInfo info = manager.getActiveNetworkInfo();\n"
           f"  return info != null && info.isConnected();\n}}")
    return src, f"checks whether the {words} network is connected"


def _send(r, f, F, words, t):
    src = (f"public void send{F}(String {f}) {{\n"
           f"  Socket socket = new Socket(host, port);\n"
           f"  socket.getOutputStream().write({f}.getBytes());\n"
           f"  socket.close();\n}}")
    return src, f"sends the {words} to the server"


def _total(r, f, F, words, t):
    src = (f"public int total{F}(int count) {{\n"
           f"  int total = 0;\n"
           f"  for (int i = 0; i < count; i++) {{\n"
           f"    total += {f};\n"
           f"  }}\n"
           f"  return total;\n}}")
    return src, f"computes the total {words}"


def _log(r, f, F, words, t):
    return (f'public void log{F}() {{ Log.d(TAG, "{f} " + {f}); }}', f"logs the {words}")


def _valid(r, f, F, words, t):
    src = (f"public boolean isValid{F}(String value) {{\n"
           f"  if (value == null) {{\n    return false;\n  }}\n"
           f"  return value.equals({f});\n}}")
    return src, f"checks whether the given {words} is valid"


TEMPLATES = [_getter, _setter, _has, _increment, _reset, _open_stream, _location,
             _connected, _send, _total, _log, _valid]


def synthetic_example(r: random.Random, example_id) -> CorpusExample:
    k = r.choice([1, 2, 2])
    words = r.sample(NOUNS, k)
    f, F = _camel(words), _camel(words, True)
    template = r.choice(TEMPLATES)
    src, caption = template(r, f, F, " ".join(words), r.choice(TYPES))
    return make_example(example_id, src, caption)


def synthetic_corpus(n: int, seed: int = 0) -> list[CorpusExample]:
    r = random.Random(seed)
    return [synthetic_example(r, f"syn{i:05d}") for i in range(n)]
