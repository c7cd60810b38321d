"""Bounded concrete interleaving semantics, used as a differential oracle.

Explores all schedules (iterative DFS, state dedup) within bounds: havoc
draws from a finite value set, loops are cut by a per-(thread, point) visit
cap, and the total state count is capped.  Exploration is config-independent:
each thread carries its replayed digests (thread-id history with and without
the encountered-creates refinement, and the lock-once set) so one exploration
can be checked against any analysis configuration.

Globals start at 0; locals start at 0 (the concrete semantics allows any
initial local values, so this is one admissible choice for an
under-approximate oracle).  Mutexes are non-reentrant; join blocks until the
joined thread returned and each thread is joined at most once; reads see the
last write (sequentially consistent store).  Copies between globals and
locals are atomic: the implicit lock(m_g)/copy/unlock(m_g) wrapper executes
as one oracle step (no user code can hold m_g, so no interleaving is lost at
wrapper-external points).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from .digests import CreateEdge, MAIN_TID, may_run, tid_compose, tid_new
from .frontend.ast import (
    Assert, AssignLocal, BinOp, Cmp, Create, Guard, Havoc, IntLit, Join,
    Lock, Program, ReadGlobal, Return, Unlock, Var, WriteGlobal, action_str,
)
from .frontend.cfg import Cfg, Edge, Point, build_cfg, collect_locals


@dataclass(frozen=True)
class ExploreBounds:
    max_steps_per_thread: int = 12  # per-(thread, point) visit cap: loop bound
    havoc_values: tuple[int, ...] = (0, 1, 2)
    max_threads: int = 6
    max_total_states: int = 300_000


@dataclass
class Exploration:
    lvars: tuple[str, ...] = ()
    gvars: tuple[str, ...] = ()
    # (tid, point, lockset, locals, globals, tdig, tdig_base, lockonce)
    reachable: set[tuple] = field(default_factory=set)
    violations: dict[int, list[str]] = field(default_factory=dict)
    digest_infeasibilities: list[str] = field(default_factory=list)
    schedules: int = 0
    states: int = 0
    truncated: bool = False
    tid_abstractions: dict[str, tuple] = field(default_factory=dict)
    return_values: dict[Point, set] = field(default_factory=dict)
    global_values: dict[str, set] = field(default_factory=dict)

    def local_store(self, rs: tuple) -> dict[str, Any]:
        return dict(zip(self.lvars, rs[3]))

    def global_store(self, rs: tuple) -> dict[str, int]:
        return dict(zip(self.gvars, rs[4]))


def _compile_expr(e, lidx: dict[str, int]) -> Callable:
    match e:
        case IntLit(v):
            return lambda ls, v=v: v
        case Var(name):
            i = lidx[name]
            return lambda ls, i=i: ls[i]
        case BinOp("+", l, r):
            fl, fr = _compile_expr(l, lidx), _compile_expr(r, lidx)
            return lambda ls: fl(ls) + fr(ls)
        case BinOp("-", l, r):
            fl, fr = _compile_expr(l, lidx), _compile_expr(r, lidx)
            return lambda ls: fl(ls) - fr(ls)
        case BinOp("*", l, r):
            fl, fr = _compile_expr(l, lidx), _compile_expr(r, lidx)
            return lambda ls: fl(ls) * fr(ls)
    raise TypeError(e)


_CMP = {
    "==": lambda l, r: l == r, "!=": lambda l, r: l != r,
    "<": lambda l, r: l < r, "<=": lambda l, r: l <= r,
    ">": lambda l, r: l > r, ">=": lambda l, r: l >= r,
}


def _compile_cmp(c: Cmp, lidx) -> Callable:
    fl, fr = _compile_expr(c.left, lidx), _compile_expr(c.right, lidx)
    op = _CMP[c.op]
    return lambda ls: op(fl(ls), fr(ls))


# thread tuple layout
TID, POINT, LOCALS, STATUS, RETVAL, TDIG, LOCKONCE, VISITS = range(8)
RUNNING, RETURNED, JOINED = 0, 1, 2


class _Explorer:
    def __init__(self, program: Program, cfgs: dict[str, Cfg], bounds: ExploreBounds,
                 dedup: bool = True):
        self.program = program
        self.cfgs = cfgs
        self.bounds = bounds
        self.dedup = dedup
        self.ex = Exploration()
        self.ex.lvars = tuple(sorted(set(collect_locals(cfgs)) | {"self"}))
        self.ex.gvars = tuple(sorted(program.globals))
        self.lidx = {v: i for i, v in enumerate(self.ex.lvars)}
        self.gidx = {g: i for i, g in enumerate(self.ex.gvars)}
        self.mutexes = tuple(sorted(set(program.mutexes) | {
            program.protecting_mutex(g) for g in program.globals
        }))
        self.midx = {m: i for i, m in enumerate(self.mutexes)}
        self.steps: dict[Point, list] = {}
        for cfg in cfgs.values():
            for p in cfg.points:
                self.steps[p] = [self._compile_edge(cfg, e) for e in cfg.out_edges(p)]
        self.ex.tid_abstractions["main"] = (MAIN_TID, MAIN_TID)
        self.seen: set = set()
        self._lockset_memo: dict = {}
        # visit counters are only kept for points that lie on a CFG cycle
        self.revisitable: set[Point] = set()
        for cfg in cfgs.values():
            reach: dict[Point, set[Point]] = {p: set() for p in cfg.points}
            for e in cfg.edges:
                reach[e.src].add(e.dst)
            changed = True
            while changed:
                changed = False
                for p in cfg.points:
                    new_r = reach[p] | {q for d in reach[p] for q in reach[d]}
                    if len(new_r) != len(reach[p]):
                        reach[p] = new_r
                        changed = True
            self.revisitable |= {p for p in cfg.points if p in reach[p]}

    # -- edge compilation --

    def _compile_edge(self, cfg: Cfg, e: Edge):
        act = e.action
        label = f"{action_str(act)} @ {e.src}"
        match act:
            case AssignLocal(x, expr):
                return ("assign", e.dst, label, self.lidx[x], _compile_expr(expr, self.lidx))
            case Havoc(x):
                return ("havoc", e.dst, label, self.lidx[x])
            case Guard(c):
                return ("guard", e.dst, label, _compile_cmp(c, self.lidx))
            case Assert(c, aid, _):
                return ("assert", e.dst, label, _compile_cmp(c, self.lidx), aid)
            case Lock(m) if m.startswith("m_"):
                # fold the atomic copy wrapper lock(m_g); access; unlock(m_g)
                (mid,) = cfg.out_edges(e.dst)
                (after,) = cfg.out_edges(mid.dst)
                assert isinstance(after.action, Unlock)
                if isinstance(mid.action, ReadGlobal):
                    return ("copyr", after.dst, label, self.lidx[mid.action.local],
                            self.gidx[mid.action.glob], self.midx[m])
                return ("copyw", after.dst, label, self.gidx[mid.action.glob],
                        self.lidx[mid.action.local], self.midx[m])
            case Lock(m):
                return ("lock", e.dst, label, self.midx[m], m)
            case Unlock(m):
                return ("unlock", e.dst, label, self.midx[m])
            case Create(x, template):
                return ("create", e.dst, label, self.lidx[x], template,
                        self.cfgs[template].start, e.src)
            case Return(x):
                return ("return", e.dst, label, self.lidx[x], cfg.start)
            case Join(x1, x):
                return ("join", e.dst, label, self.lidx[x1], self.lidx[x])
            case ReadGlobal(x, g):  # only reachable if wrappers were stripped
                return ("copyr", e.dst, label, self.lidx[x], self.gidx[g], -1)
            case WriteGlobal(g, x):
                return ("copyw", e.dst, label, self.gidx[g], self.lidx[x], -1)
        raise TypeError(act)

    # -- state helpers --

    def _record(self, t: tuple, globals_: tuple, held: tuple) -> None:
        if t[STATUS] != RUNNING:
            return
        key = (held, t[TID])
        lockset = self._lockset_memo.get(key)
        if lockset is None:
            lockset = frozenset(m for m, h in zip(self.mutexes, held) if h == t[TID])
            self._lockset_memo[key] = lockset
        self.ex.reachable.add((t[TID], t[POINT], lockset, t[LOCALS], globals_,
                               t[TDIG], self.ex.tid_abstractions[t[TID]][1], t[LOCKONCE]))

    def run(self) -> Exploration:
        locals0 = [0] * len(self.ex.lvars)
        locals0[self.lidx["self"]] = "main"
        main = ("main", self.cfgs[self.program.entry].start, tuple(locals0),
                RUNNING, 0, (MAIN_TID, frozenset()), frozenset(), ())
        globals0 = (0,) * len(self.ex.gvars)
        held0 = (None,) * len(self.mutexes)
        lu0 = (((MAIN_TID, frozenset()), frozenset()),) * len(self.mutexes)
        for g, v in zip(self.ex.gvars, globals0):
            self.ex.global_values.setdefault(g, set()).add(v)
        self._record(main, globals0, held0)
        stack = [((main,), globals0, held0, lu0, None)]
        bound_states = self.bounds.max_total_states
        while stack:
            state = stack.pop()
            threads, globals_, held, lu, sched = state
            key = (threads, globals_, held, lu)
            if self.dedup:
                if key in self.seen:
                    continue
                self.seen.add(key)
            self.ex.states += 1
            if self.ex.states > bound_states:
                self.ex.truncated = True
                break
            succs = []
            for ti, t in enumerate(threads):
                if t[STATUS] == RUNNING:
                    for step in self.steps[t[POINT]]:
                        succs.extend(self._step(state, ti, step))
            if not succs:
                self.ex.schedules += 1
            stack.extend(reversed(succs))
        return self.ex

    def _step(self, state, ti: int, step):
        threads, globals_, held, lu, sched = state
        t = threads[ti]
        kind = step[0]
        dst: Point = step[1]
        if dst in self.revisitable:
            visits = dict(t[VISITS])
            n = visits.get(dst, 0)
            if n >= self.bounds.max_steps_per_thread:
                self.ex.truncated = True
                return []
            visits[dst] = n + 1
            visits_f = tuple(sorted(visits.items()))
        else:
            visits_f = t[VISITS]
        label = (f"{t[TID]}: {step[2]}", sched)
        ls = t[LOCALS]
        out = []

        def push(point=dst, locals_=ls, status=RUNNING, retval=t[RETVAL],
                 tdig=t[TDIG], lockonce=t[LOCKONCE], others=None, g2=globals_,
                 h2=held, lu2=lu):
            nt = (t[TID], point, locals_, status, retval, tdig, lockonce, visits_f)
            ts = list(threads if others is None else others)
            ts[ti] = nt
            self._record(nt, g2, h2)
            out.append((tuple(ts), g2, h2, lu2, label))

        if kind == "assign":
            try:
                v = step[4](ls)
            except TypeError:
                return out
            i = step[3]
            push(locals_=ls[:i] + (v,) + ls[i + 1:])
        elif kind == "havoc":
            i = step[3]
            for v in self.bounds.havoc_values:
                push(locals_=ls[:i] + (v,) + ls[i + 1:])
        elif kind == "guard":
            try:
                ok = step[3](ls)
            except TypeError:
                return out
            if ok:
                push()
        elif kind == "assert":
            try:
                ok = step[3](ls)
            except TypeError:
                return out
            if not ok and step[4] not in self.ex.violations:
                self.ex.violations[step[4]] = _sched(label)
            push()
        elif kind == "copyr":
            i, gi, mi = step[3], step[4], step[5]
            if mi >= 0:
                if held[mi] is not None:
                    return out
                lockonce2 = self._lock_digests(t, lu, mi, label)
                lu2 = lu[:mi] + ((t[TDIG], lockonce2),) + lu[mi + 1:]
            else:
                lockonce2, lu2 = t[LOCKONCE], lu
            push(locals_=ls[:i] + (globals_[gi],) + ls[i + 1:],
                 lockonce=lockonce2, lu2=lu2)
        elif kind == "copyw":
            gi, i, mi = step[3], step[4], step[5]
            v = ls[i]
            if not isinstance(v, int):
                return out
            if mi >= 0:
                if held[mi] is not None:
                    return out
                lockonce2 = self._lock_digests(t, lu, mi, label)
                lu2 = lu[:mi] + ((t[TDIG], lockonce2),) + lu[mi + 1:]
            else:
                lockonce2, lu2 = t[LOCKONCE], lu
            self.ex.global_values[self.ex.gvars[gi]].add(v)
            push(g2=globals_[:gi] + (v,) + globals_[gi + 1:],
                 lockonce=lockonce2, lu2=lu2)
        elif kind == "lock":
            mi = step[3]
            if held[mi] is not None:
                return out
            lockonce2 = self._lock_digests(t, lu, mi, label)
            push(lockonce=lockonce2, h2=held[:mi] + (t[TID],) + held[mi + 1:])
        elif kind == "unlock":
            mi = step[3]
            if held[mi] != t[TID]:
                return out
            lu2 = lu[:mi] + ((t[TDIG], t[LOCKONCE]),) + lu[mi + 1:]
            push(h2=held[:mi] + (None,) + held[mi + 1:], lu2=lu2)
        elif kind == "create":
            if len(threads) >= self.bounds.max_threads:
                self.ex.truncated = True
                return out
            i, template, start, src = step[3], step[4], step[5], step[6]
            child_digest = tid_new(src, start, t[TDIG])[0]
            e = CreateEdge(src, template)
            (ii, c) = t[TDIG]
            child_base = tid_compose(self.ex.tid_abstractions[t[TID]][1], e)
            prefix = f"{t[TID]}/{src}#"
            n2 = sum(1 for th in threads if th[TID].startswith(prefix))
            child_tid = f"{prefix}{n2}"
            self.ex.tid_abstractions[child_tid] = (child_digest[0], child_base)
            child_ls = ls[:self.lidx["self"]] + (child_tid,) + ls[self.lidx["self"] + 1:]
            child = (child_tid, start, child_ls, RUNNING, 0, child_digest,
                     t[LOCKONCE], ())
            self._record(child, globals_, held)
            push(locals_=ls[:i] + (child_tid,) + ls[i + 1:], tdig=(ii, c | {e}),
                 others=tuple(threads) + (child,))
        elif kind == "return":
            i, start = step[3], step[4]
            v = ls[i]
            if not isinstance(v, int):
                return out
            self.ex.return_values.setdefault(start, set()).add(v)
            push(point=None, status=RETURNED, retval=v)
        elif kind == "join":
            i1, i = step[3], step[4]
            target = ls[i]
            tj_i = next((k for k, th in enumerate(threads) if th[TID] == target), None)
            if tj_i is None or threads[tj_i][STATUS] != RETURNED:
                return out
            tj = threads[tj_i]
            if not may_run(t[TDIG], tj[TDIG]):
                self.ex.digest_infeasibilities.append(
                    f"tid digest rejects feasible join: {label[0]}")
            ts2 = list(threads)
            ts2[tj_i] = tj[:STATUS] + (JOINED,) + tj[STATUS + 1:]
            push(locals_=ls[:i1] + (tj[RETVAL],) + ls[i1 + 1:],
                 lockonce=t[LOCKONCE] | tj[LOCKONCE], others=ts2)
        else:
            raise ValueError(kind)
        return out

    def _lock_digests(self, t, lu, mi: int, label) -> frozenset:
        (lu_tdig, lu_lockonce) = lu[mi]
        if not may_run(t[TDIG], lu_tdig):
            self.ex.digest_infeasibilities.append(
                f"tid digest rejects feasible lock: {label[0]}")
        m = self.mutexes[mi]
        if m in t[LOCKONCE] and m not in lu_lockonce:
            self.ex.digest_infeasibilities.append(
                f"lock-once digest rejects feasible lock: {label[0]}")
        return t[LOCKONCE] | lu_lockonce | {m}


def _sched(cons) -> list[str]:
    out = []
    while cons is not None:
        out.append(cons[0])
        cons = cons[1]
    return list(reversed(out))


def explore(program: Program, bounds: ExploreBounds = ExploreBounds(),
            cfgs: dict[str, Cfg] | None = None, dedup: bool = True) -> Exploration:
    if cfgs is None:
        cfgs = build_cfg(program)
    return _Explorer(program, cfgs, bounds, dedup).run()
