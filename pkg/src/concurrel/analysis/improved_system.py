"""Thread-id-aware analysis: excludes reads from threads that cannot run yet,
the unique ego thread's own past writes, and writes of threads that were
definitely joined.

Local states carry, besides the relation r:
  J — thread ids for which join has definitely been called (join = ∩),
  L — per (mutex, cluster) the join-local relation, updated destructively
      at publishing unlocks (join componentwise),
  W — globals possibly written since a protecting mutex was locked (join = ∪).

Side effects to mutex unknowns happen only when a protected global may have
been written; in clustered mode only the clusters that intersect W are
published, and locking combines, per cluster, the join-local information
with the joined contributions of all admitted, non-accounted thread ids.
"""

from __future__ import annotations

from typing import Any

from ..digests import (
    MAIN_TID, TidDigestSpec, lcu_anc, may_create, may_run, tid_compose,
    tid_new,
)
from ..frontend.ast import (
    Assert, AssignLocal, Create, Guard, Havoc, IntLit, Join, Lock, Program,
    Return, ReadGlobal, Unlock, Var, WriteGlobal, action_str,
)
from ..frontend.cfg import Cfg, Edge
from ..solver import Constraint, View
from ..domains.relation import RelDomain, Relation
from ..domains.values import BOT, tid_meet
from .keys import MutexKey, PointKey, RetKey, render_key


class ImprovedState:
    __slots__ = ("j", "l", "w", "r")

    def __init__(self, j: frozenset, l: dict, w: frozenset, r: Relation):
        self.j = j
        self.l = l
        self.w = w
        self.r = r


class RetVal:
    __slots__ = ("j", "l", "v")

    def __init__(self, j: frozenset, l: dict, v: Relation):
        self.j = j
        self.l = l
        self.v = v


class ImprovedSystem:
    """Constraint generator for the tids and clusters modes."""

    def __init__(self, program: Program, cfgs: dict[str, Cfg], dom: RelDomain,
                 protections: dict[str, frozenset[str]],
                 clusters: dict[str, tuple[frozenset[str], ...]],
                 locals_: tuple[str, ...], clustered: bool,
                 exclude_ancestor_writes: bool = False):
        self.program = program
        self.cfgs = cfgs
        self.dom = dom
        self.protections = protections
        self.clusters = clusters
        self.locals = frozenset(locals_) | {"self"}
        self.clustered = clustered
        self.exclude_ancestors = exclude_ancestor_writes
        self.spec = TidDigestSpec()
        self.mutexes = sorted(clusters)

    # -- digest keys at mutex/thread-return unknowns --

    def dkey(self, digest) -> Any:
        (i, c) = digest
        return digest if self.exclude_ancestors else i

    def dkey_digest(self, dk) -> tuple:
        return dk if self.exclude_ancestors else (dk, frozenset())

    # -- state lattice --

    def globals_of(self, mutex: str) -> frozenset[str]:
        return frozenset(g for g, ms in self.protections.items() if mutex in ms)

    def _l_join(self, l1: dict, l2: dict, widen: bool = False) -> dict:
        op = self.dom.widen if widen else self.dom.join
        return {k: op(l1[k], l2[k]) for k in l1}

    def state_join(self, a: ImprovedState, b: ImprovedState, widen=False) -> ImprovedState:
        op = self.dom.widen if widen else self.dom.join
        return ImprovedState(a.j & b.j, self._l_join(a.l, b.l, widen), a.w | b.w, op(a.r, b.r))

    def state_leq(self, a: ImprovedState, b: ImprovedState) -> bool:
        return (
            a.j >= b.j
            and a.w <= b.w
            and self.dom.leq(a.r, b.r)
            and all(self.dom.leq(a.l[k], b.l[k]) for k in a.l)
        )

    def join(self, key, a, b):
        if isinstance(key, PointKey):
            return self.state_join(a, b)
        if isinstance(key, RetKey):
            return RetVal(a.j & b.j, self._l_join(a.l, b.l), self.dom.join(a.v, b.v))
        return self.dom.join(a, b)

    def widen(self, key, a, b):
        if isinstance(key, PointKey):
            return self.state_join(a, b, widen=True)
        if isinstance(key, RetKey):
            return RetVal(a.j & b.j, self._l_join(a.l, b.l, widen=True), self.dom.widen(a.v, b.v))
        return self.dom.widen(a, b)

    def leq(self, key, a, b):
        if isinstance(key, PointKey):
            return self.state_leq(a, b)
        if isinstance(key, RetKey):
            return (
                a.j >= b.j
                and self.dom.leq(a.v, b.v)
                and all(self.dom.leq(a.l[k], b.l[k]) for k in a.l)
            )
        return self.dom.leq(a, b)

    def namespace(self, key):
        if isinstance(key, MutexKey):
            return ("mutex", key.mutex)
        if isinstance(key, RetKey):
            return ("ret",)
        return None

    # -- accounted-for check (I2 + I3, optionally ancestor writes) --

    def acc(self, ego: tuple, state: ImprovedState, cand: tuple) -> bool:
        (i, _c) = ego
        (i1, c1) = cand
        if i1.unique and (i == i1 or i1 in state.j):
            return True
        if self.exclude_ancestors and lcu_anc(i1, i) == i1:
            if not any(
                tid_compose(i1, e) == i or may_create(tid_compose(i1, e), i)
                for e in c1
            ):
                return True
        return False

    # -- constraints --

    def _init_state(self) -> ImprovedState:
        l = {}
        for a in self.mutexes:
            for q in self.clusters[a]:
                r = self.dom.top()
                for g in sorted(q):
                    r = self.dom.assign_expr(r, g, IntLit(0))
                l[(a, q)] = r
        r0 = self.dom.assign_value(self.dom.top(), "self", frozenset({MAIN_TID}))
        return ImprovedState(frozenset(), l, frozenset(), r0)

    def initial(self) -> list[Constraint]:
        def rhs(view: View):
            entry = self.cfgs[self.program.entry].start
            d0 = self.spec.init()[0]
            return {PointKey(entry, frozenset(), d0): self._init_state()}

        return [Constraint("init", rhs)]

    def constraints_for(self, key) -> list[Constraint]:
        if not isinstance(key, PointKey):
            return []
        cfg = self.cfgs[key.point.template]
        out = []
        for edge in cfg.out_edges(key.point):
            act = edge.action
            name = f"{render_key(key)} {action_str(act)}"
            if isinstance(act, Lock):
                if act.mutex in key.lockset:
                    continue
                out.append(Constraint(name, self._lock_rhs(edge, key)))
            elif isinstance(act, Unlock):
                if act.mutex not in key.lockset:
                    continue
                out.append(Constraint(name, self._unlock_rhs(edge, key)))
            elif isinstance(act, Join):
                out.append(Constraint(name, self._join_rhs(edge, key)))
            elif isinstance(act, Create):
                out.append(Constraint(name, self._create_rhs(edge, key)))
            elif isinstance(act, Return):
                out.append(Constraint(name, self._return_rhs(edge, key)))
            else:
                out.append(Constraint(name, self._plain_rhs(edge, key)))
        return out

    def _plain_rhs(self, edge: Edge, src: PointKey):
        dom = self.dom

        def rhs(view: View):
            s = view.get(src)
            if s is None or dom.is_bot(s.r):
                return {}
            act = edge.action
            w = s.w
            match act:
                case ReadGlobal(x, g):
                    r = dom.assign_expr(s.r, x, Var(g))
                case WriteGlobal(g, x):
                    r = dom.assign_expr(s.r, g, Var(x))
                    w = w | {g}
                case AssignLocal(x, e):
                    r = dom.assign_expr(s.r, x, e)
                case Guard(c):
                    r = dom.guard(s.r, c)
                case Havoc(x):
                    r = dom.havoc(s.r, x)
                case Assert(_, _, _):
                    r = s.r
                case _:
                    raise TypeError(act)
            if dom.is_bot(r):
                return {}
            d1 = self.spec.unary(edge.src, act, src.digest)[0]
            return {PointKey(edge.dst, src.lockset, d1): ImprovedState(s.j, s.l, w, r)}

        return rhs

    def _create_rhs(self, edge: Edge, src: PointKey):
        dom = self.dom
        act = edge.action

        def rhs(view: View):
            s = view.get(src)
            if s is None or dom.is_bot(s.r):
                return {}
            start = self.cfgs[act.template].start
            child_digest = tid_new(edge.src, start, src.digest)[0]
            (child_id, _) = child_digest
            r_child = dom.assign_value(s.r, "self", frozenset({child_id}))
            r_child = dom.restrict(r_child, self.locals)
            ego_digest = self.spec.unary(edge.src, act, src.digest)[0]
            r_ego = dom.assign_value(s.r, act.local, frozenset({child_id}))
            return {
                PointKey(start, frozenset(), child_digest): ImprovedState(
                    s.j, s.l, frozenset(), r_child
                ),
                PointKey(edge.dst, src.lockset, ego_digest): ImprovedState(s.j, s.l, s.w, r_ego),
            }

        return rhs

    def _return_rhs(self, edge: Edge, src: PointKey):
        dom = self.dom
        act = edge.action

        def rhs(view: View):
            s = view.get(src)
            if s is None or dom.is_bot(s.r):
                return {}
            v = dom.restrict(dom.assign_expr(s.r, "ret", Var(act.local)), {"ret"})
            return {
                RetKey(self.dkey(src.digest)): RetVal(s.j, s.l, v),
                PointKey(edge.dst, src.lockset, src.digest): s,
            }

        return rhs

    def _unlock_rhs(self, edge: Edge, src: PointKey):
        dom = self.dom
        a = edge.action.mutex

        def rhs(view: View):
            s = view.get(src)
            if s is None or dom.is_bot(s.r):
                return {}
            effects: dict[Any, Any] = {}
            if self.clustered:
                published = [q for q in self.clusters[a] if q & s.w]
            else:
                published = list(self.clusters[a]) if self.globals_of(a) & s.w else []
            l1 = dict(s.l)
            for q in published:
                v = dom.restrict(s.r, q)
                l1[(a, q)] = v  # destructive join-local update
                effects[MutexKey(a, q, self.dkey(src.digest))] = v
            keep = set(self.locals)
            for a2 in src.lockset - {a}:
                keep |= self.globals_of(a2)
            r1 = dom.restrict(s.r, keep)
            w1 = frozenset(
                g for g in s.w if self.protections[g] & (src.lockset - {a})
            )
            effects[PointKey(edge.dst, src.lockset - {a}, src.digest)] = ImprovedState(
                s.j, l1, w1, r1
            )
            return effects

        return rhs

    def _mutex_dkeys(self, view: View, a: str) -> list:
        seen, out = set(), []
        for k in view.keys_in(("mutex", a)):
            if k.digest not in seen:
                seen.add(k.digest)
                out.append(k.digest)
        return out

    def _lock_rhs(self, edge: Edge, src: PointKey):
        dom = self.dom
        a = edge.action.mutex
        qs = self.clusters[a]

        def rhs(view: View):
            s = view.get(src)
            if s is None or dom.is_bot(s.r):
                return {}
            l_meet = dom.meet_all(s.l[(a, q)] for q in qs)
            target = PointKey(edge.dst, src.lockset | {a}, src.digest)
            effects: dict[Any, Any] = {}

            if self.clustered:
                # one combined constraint over all admitted digests
                r_acc = dom.top()
                for q in qs:
                    jq = dom.bot()
                    for dk in self._mutex_dkeys(view, a):
                        cand = self.dkey_digest(dk)
                        if not may_run(src.digest, cand) or self.acc(src.digest, s, cand):
                            continue
                        v = view.get(MutexKey(a, q, dk))
                        if v is not None:
                            jq = dom.join(jq, v)
                    r_acc = dom.meet(r_acc, dom.join(jq, s.l[(a, q)]))
                r1 = dom.meet(s.r, r_acc)
                if not dom.is_bot(r1):
                    effects[target] = ImprovedState(s.j, s.l, s.w, r1)
                return effects

            # per-digest constraints, plus the always-sound join-local floor
            # (the incoming trace may be the initial one or the ego's own past,
            # both of which L accounts for)
            floor = dom.meet(s.r, l_meet)
            if not dom.is_bot(floor):
                effects[target] = ImprovedState(s.j, s.l, s.w, floor)
            for dk in self._mutex_dkeys(view, a):
                cand = self.dkey_digest(dk)
                if not may_run(src.digest, cand) or self.acc(src.digest, s, cand):
                    continue
                vals = [view.get(MutexKey(a, q, dk)) for q in qs]
                if any(v is None for v in vals):
                    continue
                r1 = dom.meet(s.r, dom.join(dom.meet_all(vals), l_meet))
                if not dom.is_bot(r1):
                    st = ImprovedState(s.j, s.l, s.w, r1)
                    effects[target] = (
                        self.state_join(effects[target], st) if target in effects else st
                    )
            return effects

        return rhs

    def _join_rhs(self, edge: Edge, src: PointKey):
        dom = self.dom
        act = edge.action

        def rhs(view: View):
            s = view.get(src)
            if s is None or dom.is_bot(s.r):
                return {}
            tid_val = dom.unlift_tid(s.r, act.tidvar)
            if tid_val is BOT:
                return {}
            target = PointKey(edge.dst, src.lockset, src.digest)
            effects: dict[Any, Any] = {}
            for k in view.keys_in(("ret",)):
                cand = self.dkey_digest(k.digest)
                (i1, _c1) = cand
                if not may_run(src.digest, cand):
                    continue
                if not tid_meet(frozenset({i1}), tid_val):
                    continue
                if self.acc(src.digest, s, cand):
                    continue
                rv = view.get(k)
                if rv is None:
                    continue
                ret = dom.unlift_var(rv.v, "ret")
                r1 = dom.assign_value(s.r, act.target, ret)
                if dom.is_bot(r1):
                    continue
                st = ImprovedState(s.j | rv.j | {i1}, self._l_join(s.l, rv.l), s.w, r1)
                effects[target] = (
                    self.state_join(effects[target], st) if target in effects else st
                )
            return effects

        return rhs
