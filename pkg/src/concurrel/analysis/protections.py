"""Protecting-mutex sets 𝓜[g], declared or inferred.

Inference is a lockset-only pre-pass: a must-held-lockset fixpoint per
template (intersection at merge points, CFG-reachable points only), then
𝓜[g] = intersection over all reachable write edges of the lockset at the
write.  The implicit atomicity mutex m_g is always included.  A global
nobody writes is vacuously protected by every mutex.
"""

from __future__ import annotations

from ..frontend.ast import Lock, Program, Unlock, WriteGlobal
from ..frontend.cfg import Cfg, Point


def _must_locksets(cfg: Cfg, all_mutexes: frozenset[str]) -> dict[Point, frozenset[str]]:
    held: dict[Point, frozenset[str]] = {cfg.start: frozenset()}
    changed = True
    while changed:
        changed = False
        for e in cfg.edges:
            if e.src not in held:
                continue
            h = held[e.src]
            match e.action:
                case Lock(m):
                    h = h | {m}
                case Unlock(m):
                    h = h - {m}
                case _:
                    pass
            if e.dst not in held:
                held[e.dst] = h
                changed = True
            elif not held[e.dst] <= h:
                held[e.dst] = held[e.dst] & h
                changed = True
    return held


def infer_protections(program: Program, cfgs: dict[str, Cfg]) -> dict[str, frozenset[str]]:
    all_mutexes = frozenset(program.mutexes) | {
        program.protecting_mutex(g) for g in program.globals
    }
    prot = {g: all_mutexes for g in program.globals}
    written: set[str] = set()
    for cfg in cfgs.values():
        held = _must_locksets(cfg, all_mutexes)
        for e in cfg.edges:
            if isinstance(e.action, WriteGlobal) and e.src in held:
                g = e.action.glob
                written.add(g)
                prot[g] = prot[g] & held[e.src]
    for g in program.globals:
        prot[g] |= {program.protecting_mutex(g)}
    return prot


def declared_protections(program: Program) -> dict[str, frozenset[str]]:
    out = {}
    for g in program.globals:
        base = (program.protections or {}).get(g, frozenset())
        out[g] = frozenset(base) | {program.protecting_mutex(g)}
    return out


def compute_protections(
    program: Program, cfgs: dict[str, Cfg], source: str
) -> dict[str, frozenset[str]]:
    if source == "inferred" or program.protections is None:
        return infer_protections(program, cfgs)
    return declared_protections(program)


def protected_by(protections: dict[str, frozenset[str]], mutex: str) -> frozenset[str]:
    """𝒢[a]: the globals a given mutex protects."""
    return frozenset(g for g, ms in protections.items() if mutex in ms)
