"""Lowering of parsed templates to per-thread control-flow graphs.

Lowering also enforces the atomic-copy discipline: every access to a global
g moves a single value between g and a local and is wrapped in
lock(m_g)/unlock(m_g) edges for the dedicated atomicity mutex m_g.
Compound forms (``g = y + 9``, ``assert(g == h)``, ``return 0``) are
desugared through fresh temporaries ``$tN``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ast import (
    Action, Assert, AssignLocal, Cmp, Create, Expr, Guard, Havoc, IntLit,
    Join, Lock, Pos, Program, ReadGlobal, Return, SAssert, SAssign, SIf,
    SLock, SReturn, SUnlock, SWhile, Stmt, Unlock, Var, WriteGlobal,
    action_str, expr_vars, negate,
)


@dataclass(frozen=True, order=True)
class Point:
    template: str
    idx: int

    def __str__(self) -> str:
        return f"{self.template}.{self.idx}"


@dataclass(frozen=True)
class Edge:
    src: Point
    action: Action
    dst: Point


@dataclass
class Cfg:
    template: str
    start: Point
    points: list[Point] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)

    def out_edges(self, u: Point) -> list[Edge]:
        return [e for e in self.edges if e.src == u]


TRUE_GUARD = Cmp("==", IntLit(0), IntLit(0))


class _Lowerer:
    def __init__(self, prog: Program, template: str, tmp_counter: list[int], aid_counter: list[int]):
        self.prog = prog
        self.gset = set(prog.globals)
        self.cfg = Cfg(template, Point(template, 0), [Point(template, 0)])
        self.n = 1
        self.tmp_counter = tmp_counter
        self.aid_counter = aid_counter

    def fresh(self) -> Point:
        p = Point(self.cfg.template, self.n)
        self.n += 1
        self.cfg.points.append(p)
        return p

    def tmp(self) -> str:
        self.tmp_counter[0] += 1
        return f"$t{self.tmp_counter[0] - 1}"

    def edge(self, src: Point, act: Action) -> Point:
        dst = self.fresh()
        self.cfg.edges.append(Edge(src, act, dst))
        return dst

    def edge_to(self, src: Point, act: Action, dst: Point) -> None:
        self.cfg.edges.append(Edge(src, act, dst))

    # -- global access wrappers --

    def read(self, cur: Point, local: str, g: str) -> Point:
        cur = self.edge(cur, Lock(self.prog.protecting_mutex(g)))
        cur = self.edge(cur, ReadGlobal(local, g))
        return self.edge(cur, Unlock(self.prog.protecting_mutex(g)))

    def write(self, cur: Point, g: str, local: str) -> Point:
        cur = self.edge(cur, Lock(self.prog.protecting_mutex(g)))
        cur = self.edge(cur, WriteGlobal(g, local))
        return self.edge(cur, Unlock(self.prog.protecting_mutex(g)))

    def to_local(self, cur: Point, e: Expr) -> tuple[Point, str]:
        """Make the value of ``e`` available in a local, reading globals if needed."""
        if isinstance(e, Var) and e.name not in self.gset:
            return cur, e.name
        t = self.tmp()
        if isinstance(e, Var):  # bare global
            return self.read(cur, t, e.name), t
        return self.edge(cur, AssignLocal(t, e)), t

    # -- statements --

    def block(self, stmts: tuple[Stmt, ...], cur: Point) -> Point:
        for s in stmts:
            cur = self.stmt(s, cur)
        return cur

    def stmt(self, s: Stmt, cur: Point) -> Point:
        match s:
            case SLock(m, _):
                return self.edge(cur, Lock(m))
            case SUnlock(m, _):
                return self.edge(cur, Unlock(m))
            case SAssign(x, e, havoc, create, join, _):
                if x in self.gset:
                    if havoc:
                        t = self.tmp()
                        cur = self.edge(cur, Havoc(t))
                        return self.write(cur, x, t)
                    if create or join:
                        raise ValueError(f"thread id cannot be stored in global {x!r}")
                    assert e is not None
                    cur, t = self.to_local(cur, e)
                    return self.write(cur, x, t)
                if havoc:
                    return self.edge(cur, Havoc(x))
                if create:
                    return self.edge(cur, Create(x, create))
                if join:
                    return self.edge(cur, Join(x, join))
                assert e is not None
                if isinstance(e, Var) and e.name in self.gset:
                    return self.read(cur, x, e.name)
                return self.edge(cur, AssignLocal(x, e))
            case SReturn(e, _):
                cur, t = self.to_local(cur, e)
                self.edge(cur, Return(t))
                return self.fresh()  # code after return is structurally dead
            case SAssert(c, pos):
                orig = str(c)
                cur, c = self.hoist_globals(cur, c)
                aid = self.aid_counter[0]
                self.aid_counter[0] += 1
                return self.edge(cur, Assert(c, aid, pos, orig))
            case SIf(c, then, orelse, _):
                t_in = self.edge(cur, Guard(c))
                e_in = self.edge(cur, Guard(negate(c)))
                t_out = self.block(then, t_in)
                e_out = self.block(orelse, e_in)
                merge = self.fresh()
                self.edge_to(t_out, Guard(TRUE_GUARD), merge)
                self.edge_to(e_out, Guard(TRUE_GUARD), merge)
                return merge
            case SWhile(c, body, _):
                head = cur
                if cur == self.cfg.start:
                    # keep the start point free of incoming (back) edges
                    head = self.edge(cur, Guard(TRUE_GUARD))
                body_in = self.edge(head, Guard(c))
                body_out = self.block(body, body_in)
                self.edge_to(body_out, Guard(TRUE_GUARD), head)
                return self.edge(head, Guard(negate(c)))
        raise TypeError(s)

    def hoist_globals(self, cur: Point, c: Cmp) -> tuple[Point, Cmp]:
        """Replace globals in an assert condition by freshly read locals."""
        subst: dict[str, str] = {}
        for v in sorted(expr_vars(c) & self.gset):
            t = self.tmp()
            cur = self.read(cur, t, v)
            subst[v] = t

        def sub(e):
            match e:
                case Var(name) if name in subst:
                    return Var(subst[name])
                case Cmp(op, l, r):
                    return Cmp(op, sub(l), sub(r))
                case _ if hasattr(e, "left"):
                    return type(e)(e.op, sub(e.left), sub(e.right))
                case _:
                    return e

        return cur, sub(c)


def build_cfg(program: Program) -> dict[str, Cfg]:
    """Lower every template; deterministic point numbering per template."""
    tmp_counter = [0]
    aid_counter = [0]
    cfgs: dict[str, Cfg] = {}
    for name, body in program.threads.items():
        lo = _Lowerer(program, name, tmp_counter, aid_counter)
        lo.block(body, lo.cfg.start)
        cfgs[name] = lo.cfg
    return cfgs


# -- derived metadata ---------------------------------------------------------

def collect_locals(cfgs: dict[str, Cfg]) -> tuple[str, ...]:
    """All local variables (including temporaries) in a stable order."""
    names: set[str] = set()
    for cfg in cfgs.values():
        for e in cfg.edges:
            match e.action:
                case ReadGlobal(x, _) | Havoc(x) | Return(x) | WriteGlobal(_, x):
                    names.add(x)
                case AssignLocal(x, expr):
                    names.add(x)
                    names |= expr_vars(expr)
                case Guard(c) | Assert(c, _, _):
                    names |= expr_vars(c)
                case Create(x, _):
                    names.add(x)
                case Join(x1, x):
                    names.update((x1, x))
                case _:
                    pass
    return tuple(sorted(names))


def tid_vars(cfgs: dict[str, Cfg]) -> frozenset[str]:
    """Locals holding thread ids: create targets and join sources, plus self."""
    out = {"self"}
    for cfg in cfgs.values():
        for e in cfg.edges:
            match e.action:
                case Create(x, _):
                    out.add(x)
                case Join(_, x):
                    out.add(x)
                case _:
                    pass
    return frozenset(out)


@dataclass(frozen=True)
class AssertSite:
    aid: int
    template: str
    point: Point  # source point of the assert edge
    cond: Cmp
    pos: Pos
    orig: str


def assert_sites(cfgs: dict[str, Cfg]) -> list[AssertSite]:
    sites = []
    for cfg in cfgs.values():
        for e in cfg.edges:
            if isinstance(e.action, Assert):
                sites.append(AssertSite(e.action.aid, cfg.template, e.src,
                                        e.action.cond, e.action.pos, e.action.orig))
    sites.sort(key=lambda s: s.aid)
    return sites


def reachable_points(cfg: Cfg) -> set[Point]:
    seen = {cfg.start}
    work = [cfg.start]
    while work:
        u = work.pop()
        for e in cfg.edges:
            if e.src == u and e.dst not in seen:
                seen.add(e.dst)
                work.append(e.dst)
    return seen


def cfg_dump(cfgs: dict[str, Cfg]) -> str:
    """Stable text rendering used by golden/determinism tests."""
    lines = []
    for name in sorted(cfgs):
        cfg = cfgs[name]
        lines.append(f"template {name} start={cfg.start}")
        for e in cfg.edges:
            lines.append(f"  {e.src} --[{action_str(e.action)}]--> {e.dst}")
    return "\n".join(lines) + "\n"
