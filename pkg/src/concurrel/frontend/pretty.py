"""Pretty-printer; `parse(pretty(parse(text)))` yields an identical Program."""

from __future__ import annotations

from .ast import (
    Program, SAssert, SAssign, SIf, SLock, SReturn, SUnlock, SWhile, Stmt,
)


def _stmt(s: Stmt, ind: str) -> list[str]:
    match s:
        case SLock(m, _):
            return [f"{ind}lock({m});"]
        case SUnlock(m, _):
            return [f"{ind}unlock({m});"]
        case SReturn(e, _):
            return [f"{ind}return {e};"]
        case SAssert(c, _):
            return [f"{ind}assert({c});"]
        case SAssign(x, e, havoc, create, join, _):
            if havoc:
                return [f"{ind}{x} = ?;"]
            if create:
                return [f"{ind}{x} = create({create});"]
            if join:
                return [f"{ind}{x} = join({join});"]
            return [f"{ind}{x} = {e};"]
        case SIf(c, then, orelse, _):
            out = [f"{ind}if ({c}) {{"]
            for t in then:
                out += _stmt(t, ind + "  ")
            if orelse:
                out.append(f"{ind}}} else {{")
                for t in orelse:
                    out += _stmt(t, ind + "  ")
            out.append(f"{ind}}}")
            return out
        case SWhile(c, body, _):
            out = [f"{ind}while ({c}) {{"]
            for t in body:
                out += _stmt(t, ind + "  ")
            out.append(f"{ind}}}")
            return out
    raise TypeError(s)


def pretty_print(prog: Program) -> str:
    lines: list[str] = []
    if prog.globals:
        lines.append("global " + ", ".join(prog.globals) + ";")
    if prog.mutexes:
        lines.append("mutex " + ", ".join(prog.mutexes) + ";")
    if prog.protections:
        for g in sorted(prog.protections):
            lines.append(f"protect {g} with " + ", ".join(sorted(prog.protections[g])) + ";")
    for name, body in prog.threads.items():
        lines.append(f"thread {name} {{")
        for s in body:
            lines += _stmt(s, "  ")
        lines.append("}")
    return "\n".join(lines) + "\n"
