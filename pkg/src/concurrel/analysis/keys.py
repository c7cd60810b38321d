"""Unknown keys of the constraint systems.

Every unknown is (program point × lockset × digest), (mutex × cluster ×
digest) or (thread-return × digest); ``Start`` exists for generic solver use.
Keys render to stable text for dumps and deterministic ordering.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from ..frontend.cfg import Point


@dataclass(frozen=True)
class PointKey:
    point: Point
    lockset: frozenset[str]
    digest: Any


@dataclass(frozen=True)
class MutexKey:
    mutex: str
    cluster: frozenset[str]
    digest: Any


@dataclass(frozen=True)
class RetKey:
    digest: Any  # improved: tid digest key; base: (tid-value, digest)


@dataclass(frozen=True)
class Start:
    name: str = "start"


def render_key(key, digest_render=str) -> str:
    match key:
        case PointKey(p, s, d):
            return f"[{p}, {{{','.join(sorted(s))}}}, {digest_render(d)}]"
        case MutexKey(a, q, d):
            return f"[{a}, {{{','.join(sorted(q))}}}, {digest_render(d)}]"
        case RetKey(d):
            return f"[ret {digest_render(d)}]"
        case Start(n):
            return f"[{n}]"
    return str(key)
