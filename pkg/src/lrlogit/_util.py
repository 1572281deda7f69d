"""Shared plumbing: seeded substreams, 17-significant-digit JSON, parallelism."""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

# Fixed tags so every consumer of a root seed draws from a disjoint substream.
TAG_HYPERCUBE_VECTORS = 1
TAG_HYPERCUBE_MATRICES_LEFT = 2
TAG_HYPERCUBE_MATRICES_RIGHT = 3
TAG_ORTHOGONAL_BASES = 4
TAG_DATASET = 5
TAG_TRIAL = 6
TAG_EXPERIMENT_CELL = 7
TAG_INIT = 8
TAG_HALF_NORMAL = 9

THREADS_ENV_VAR = "LRLOGIT_THREADS"


def substream(seed, *path):
    """Return a Generator for the substream identified by (seed, *path).

    Streams are pure functions of their identifiers, so results never depend
    on evaluation order.
    """
    entropy = (int(seed),) + tuple(int(p) for p in path)
    return np.random.default_rng(np.random.SeedSequence(entropy))


def thread_count():
    """Parallelism cap from the environment; 0 or unset means auto."""
    raw = os.environ.get(THREADS_ENV_VAR, "0")
    try:
        k = int(raw)
    except ValueError:
        k = 0
    if k <= 0:
        k = os.cpu_count() or 1
    return max(1, k)


def parallel_map(fn, items):
    """Map ``fn`` over ``items`` preserving order.

    Uses a thread pool when the environment allows more than one worker;
    callers must pass pure functions so the schedule cannot change results.
    """
    items = list(items)
    workers = min(thread_count(), len(items)) if items else 1
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _format_float(x):
    # 17 significant digits round-trips every IEEE double exactly.
    s = format(float(x), ".17g")
    if s in ("inf", "-inf", "nan"):
        raise ValueError(f"non-finite value {x!r} cannot be serialized")
    return s


def _encode(obj, parts):
    if isinstance(obj, dict):
        parts.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                parts.append(", ")
            parts.append(json.dumps(str(k)))
            parts.append(": ")
            _encode(v, parts)
        parts.append("}")
    elif isinstance(obj, (list, tuple)) or isinstance(obj, np.ndarray):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        parts.append("[")
        for i, v in enumerate(seq):
            if i:
                parts.append(", ")
            _encode(v, parts)
        parts.append("]")
    elif isinstance(obj, bool) or obj is None:
        parts.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        parts.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        parts.append(_format_float(obj))
    elif isinstance(obj, str):
        parts.append(json.dumps(obj))
    else:
        raise TypeError(f"cannot serialize {type(obj)!r}")


def dumps_17g(obj):
    """Serialize to JSON with floats at 17 significant digits.

    Key order is preserved as given, so identical inputs produce identical
    bytes.
    """
    parts = []
    _encode(obj, parts)
    parts.append("\n")
    return "".join(parts)


def write_json(path, obj):
    text = dumps_17g(obj)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return text


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
