"""Post-parse validation: diagnostics, never aborts.

The checks are best-effort and syntactic; the analysis itself tracks locksets
precisely.  Diagnostics render as ``file:line:col: severity: message``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ast import Lock, Program, Unlock, WriteGlobal
from .cfg import Cfg, Point, build_cfg


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    severity: str  # 'error' | 'warning'
    message: str
    filename: str = "<input>"

    def __str__(self) -> str:
        return f"{self.filename}:{self.line}:{self.col}: {self.severity}: {self.message}"


def _held_sets(cfg: Cfg) -> tuple[dict, list[tuple[Point, str, str]]]:
    """DFS over (point, held-set) states; returns held-at-edge info and
    lock-discipline problems ('re-entrant lock' / 'unlock of un-held mutex')."""
    problems: list[tuple[Point, str, str]] = []
    held_at: dict[tuple[Point, frozenset], None] = {}
    write_held: dict[int, list[frozenset]] = {}
    stack = [(cfg.start, frozenset())]
    seen = set()
    while stack:
        u, held = stack.pop()
        if (u, held) in seen:
            continue
        seen.add((u, held))
        for idx, e in enumerate(cfg.edges):
            if e.src != u:
                continue
            nxt = held
            match e.action:
                case Lock(m):
                    if m in held:
                        problems.append((u, m, "re-entrant lock"))
                        continue
                    nxt = held | {m}
                case Unlock(m):
                    if m not in held:
                        problems.append((u, m, "unlock of un-held mutex"))
                        continue
                    nxt = held - {m}
                case WriteGlobal(_, _):
                    write_held.setdefault(idx, []).append(held)
                case _:
                    pass
            stack.append((e.dst, nxt))
    return write_held, problems


def validate(program: Program, cfgs: dict[str, Cfg] | None = None) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    fn = program.filename
    if cfgs is None:
        cfgs = build_cfg(program)

    if program.protections is not None:
        for g in program.globals:
            if g not in program.protections:
                diags.append(Diagnostic(1, 1, "warning", f"declared protections do not cover global '{g}'", fn))

    unprotected_writes: set[str] = set()
    for name in program.threads:
        cfg = cfgs[name]
        write_held, problems = _held_sets(cfg)
        for u, m, what in sorted(problems, key=lambda t: (t[0], t[1], t[2])):
            diags.append(Diagnostic(1, 1, "warning", f"{what} '{m}' at {u}", fn))
        for idx, held_list in sorted(write_held.items()):
            g = cfg.edges[idx].action.glob
            declared = (program.protections or {}).get(g)
            for held in held_list:
                user_held = {m for m in held if not m.startswith("m_")}
                if declared is not None and not declared <= held | {program.protecting_mutex(g)} | user_held:
                    missing = sorted(declared - user_held - {program.protecting_mutex(g)})
                    if missing:
                        diags.append(Diagnostic(
                            1, 1, "error",
                            f"write to '{g}' at {cfg.edges[idx].src} without declared protecting "
                            f"mutex(es) {', '.join(missing)}", fn))
                if declared is None and not user_held:
                    unprotected_writes.add(g)

    for g in sorted(unprotected_writes):
        diags.append(Diagnostic(1, 1, "warning", f"no protecting mutex for {g}", fn))
    return diags
