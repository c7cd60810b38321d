"""The base relational analysis and its digest-refined constraint system.

The base right-hand sides (init, lock, unlock, read, write, create, return,
join, local steps) are written against abstract "base keys" — (mutex,
cluster), thread-return ids, thread start points — exactly as in the
unrefined system.  ``wrap_with_digests`` then builds the solver-facing
constraint generator: it re-keys every consulted or side-effected unknown
with digests, instantiates observing actions once per feasible incoming
digest, and redirects create side-effects through the digest's new-thread
function.  The base right-hand sides are used as black boxes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from ..digests import DigestSpec, MAIN_TID, tid_new
from ..frontend.ast import (
    Assert, AssignLocal, Create, Guard, Havoc, Join, Lock, Program,
    ReadGlobal, Return, Unlock, Var, WriteGlobal, action_str,
)
from ..frontend.cfg import Cfg, Edge, Point
from ..solver import Constraint, View
from ..domains.relation import RelDomain, Relation
from ..domains.values import BOT, TID_TOP, tid_meet
from .keys import MutexKey, PointKey, RetKey


def freeze_tid_value(v) -> Any:
    """Hashable form of a TidAbs used as a thread-return key."""
    return "⊤" if v is TID_TOP else frozenset(v)


def thaw_tid_value(k):
    return TID_TOP if k == "⊤" else k


@dataclass
class BaseEnv:
    """What a base right-hand side may consult besides its own state."""

    mutex_value: Callable[[str, frozenset], Relation | None]
    ret_candidates: Callable[[], list[tuple[Any, Relation]]]


class BaseAnalysis:
    """Right-hand sides of the unrefined analysis (lockset splitting only)."""

    def __init__(self, program: Program, cfgs: dict[str, Cfg], dom: RelDomain,
                 protections: dict[str, frozenset[str]],
                 clusters: dict[str, tuple[frozenset[str], ...]],
                 locals_: tuple[str, ...]):
        self.program = program
        self.cfgs = cfgs
        self.dom = dom
        self.protections = protections
        self.clusters = clusters
        self.locals = frozenset(locals_) | {"self"}
        self.mutexes = sorted(clusters)

    def globals_of(self, mutex: str) -> frozenset[str]:
        return frozenset(g for g, ms in self.protections.items() if mutex in ms)

    # -- init --

    def init(self) -> tuple[list[tuple[Any, Relation]], Relation]:
        effects = []
        for a in self.mutexes:
            for q in self.clusters[a]:
                r = self.dom.top()
                for g in sorted(q):
                    r = self.dom.assign_expr(r, g, _zero())
                effects.append((("mutex", a, q), r))
        start = self.dom.assign_value(self.dom.top(), "self", frozenset({MAIN_TID}))
        return effects, start

    # -- per-edge transfer: returns (base side-effects, successor value) --

    def transfer(self, edge: Edge, lockset: frozenset[str], r: Relation,
                 env: BaseEnv) -> tuple[list[tuple[Any, Relation]], Relation]:
        dom = self.dom
        if dom.is_bot(r):
            return [], r
        act = edge.action
        match act:
            case Lock(a):
                vals = [env.mutex_value(a, q) for q in self.clusters[a]]
                if any(v is None for v in vals):
                    return [], dom.bot()
                return [], dom.meet_all([r] + vals)
            case Unlock(a):
                effects = [(("mutex", a, q), dom.restrict(r, q)) for q in self.clusters[a]]
                keep = set(self.locals)
                for a2 in lockset - {a}:
                    keep |= self.globals_of(a2)
                return effects, dom.restrict(r, keep)
            case ReadGlobal(x, g):
                return [], dom.assign_expr(r, x, Var(g))
            case WriteGlobal(g, x):
                return [], dom.assign_expr(r, g, Var(x))
            case AssignLocal(x, e):
                return [], dom.assign_expr(r, x, e)
            case Guard(c):
                return [], dom.guard(r, c)
            case Assert(_, _, _):
                return [], r
            case Havoc(x):
                return [], dom.havoc(r, x)
            case Create(x, template):
                child_tid = self._new_tid(edge.src, template, r)
                r_child = dom.assign_value(r, "self", child_tid)
                r_child = dom.restrict(r_child, self.locals)
                start = self.cfgs[template].start
                return [(("start", start), r_child)], dom.assign_value(r, x, child_tid)
            case Return(x):
                key = freeze_tid_value(dom.unlift_tid(r, "self"))
                v = dom.restrict(dom.assign_expr(r, "ret", Var(x)), {"ret"})
                return [(("ret", key), v)], r
            case Join(x1, x):
                tid_val = dom.unlift_tid(r, x)
                if tid_val is BOT:
                    return [], dom.bot()
                acc = BOT
                for key, stored in env.ret_candidates():
                    if tid_meet(thaw_tid_value(key), tid_val):
                        acc = _int_join(acc, dom.unlift_var(stored, "ret"))
                if acc is BOT:
                    return [], dom.bot()  # no thread to join: execution blocks
                return [], dom.assign_value(r, x1, acc)
        raise TypeError(act)

    def _new_tid(self, u: Point, template: str, r: Relation):
        """ν#: compose every creator id with the create edge (no C tracking)."""
        creator = self.dom.unlift_tid(r, "self")
        start = self.cfgs[template].start
        if creator is TID_TOP:
            return TID_TOP
        out = set()
        for t in creator:
            (child, _c) = tid_new(u, start, (t, frozenset()))[0]
            out.add(child)
        return frozenset(out)


def _zero():
    from ..frontend.ast import IntLit

    return IntLit(0)


def _int_join(a, b):
    from ..domains.values import int_join

    return int_join(a, b)


# -- the digest wrapper ---------------------------------------------------------


class WrappedBaseSystem:
    """Solver-facing constraint system: base analysis × digest spec."""

    def __init__(self, base: BaseAnalysis, spec: DigestSpec):
        self.base = base
        self.spec = spec
        self.dom = base.dom

    # lattice plumbing: every value is a Relation
    def join(self, key, a, b):
        return self.dom.join(a, b)

    def widen(self, key, a, b):
        return self.dom.widen(a, b)

    def leq(self, key, a, b):
        return self.dom.leq(a, b)

    def namespace(self, key):
        if isinstance(key, MutexKey):
            return ("mutex", key.mutex)
        if isinstance(key, RetKey):
            return ("ret",)
        return None

    # -- constraints --

    def initial(self) -> list[Constraint]:
        def rhs(view: View):
            effects: dict[Any, Relation] = {}
            base_effects, start = self.base.init()
            entry = self.base.cfgs[self.base.program.entry].start
            for d in self.spec.init():
                for (kind, a, q), v in base_effects:
                    assert kind == "mutex"
                    _acc(effects, MutexKey(a, q, d), v, self.dom)
                _acc(effects, PointKey(entry, frozenset(), d), start, self.dom)
            return effects

        return [Constraint("init", rhs)]

    def constraints_for(self, key) -> list[Constraint]:
        if not isinstance(key, PointKey):
            return []
        cfg = self.base.cfgs[key.point.template]
        out = []
        for edge in cfg.out_edges(key.point):
            c = self._edge_constraint(edge, key)
            if c is not None:
                out.append(c)
        return out

    def _edge_constraint(self, edge: Edge, src: PointKey) -> Constraint | None:
        act = edge.action
        S, d0 = src.lockset, src.digest
        name = f"{render(src)} {action_str(act)}"
        if isinstance(act, Lock):
            if act.mutex in S:
                return None  # non-reentrant mutex: locking again deadlocks
            return Constraint(name, self._lock_rhs(edge, src))
        if isinstance(act, Unlock):
            if act.mutex not in S:
                return None
            return Constraint(name, self._unlock_rhs(edge, src))
        if isinstance(act, Join):
            return Constraint(name, self._join_rhs(edge, src))
        if isinstance(act, Create):
            return Constraint(name, self._create_rhs(edge, src))
        if isinstance(act, Return):
            return Constraint(name, self._observable_rhs(edge, src))
        return Constraint(name, self._plain_rhs(edge, src))

    # each rhs closes over (edge, source key) and reads through the view

    def _plain_rhs(self, edge: Edge, src: PointKey):
        def rhs(view: View):
            r = view.get(src)
            if r is None:
                return {}
            _fx, v = self.base.transfer(edge, src.lockset, r, _NO_ENV)
            effects: dict[Any, Relation] = {}
            if not self.dom.is_bot(v):
                for d1 in self.spec.unary(edge.src, edge.action, src.digest):
                    _acc(effects, PointKey(edge.dst, src.lockset, d1), v, self.dom)
            return effects

        return rhs

    def _unlock_rhs(self, edge: Edge, src: PointKey):
        a = edge.action.mutex

        def rhs(view: View):
            r = view.get(src)
            if r is None:
                return {}
            base_effects, v = self.base.transfer(edge, src.lockset, r, _NO_ENV)
            effects: dict[Any, Relation] = {}
            for d1 in self.spec.unary(edge.src, edge.action, src.digest):
                for (kind, a2, q), val in base_effects:
                    _acc(effects, MutexKey(a2, q, d1), val, self.dom)
                if not self.dom.is_bot(v):
                    _acc(effects, PointKey(edge.dst, src.lockset - {a}, d1), v, self.dom)
            return effects

        return rhs

    def _observable_rhs(self, edge: Edge, src: PointKey):  # return x
        def rhs(view: View):
            r = view.get(src)
            if r is None:
                return {}
            base_effects, v = self.base.transfer(edge, src.lockset, r, _NO_ENV)
            effects: dict[Any, Relation] = {}
            for d1 in self.spec.unary(edge.src, edge.action, src.digest):
                for (kind, tidkey), val in base_effects:
                    _acc(effects, RetKey((tidkey, d1)), val, self.dom)
                if not self.dom.is_bot(v):
                    _acc(effects, PointKey(edge.dst, src.lockset, d1), v, self.dom)
            return effects

        return rhs

    def _create_rhs(self, edge: Edge, src: PointKey):
        def rhs(view: View):
            r = view.get(src)
            if r is None:
                return {}
            base_effects, v = self.base.transfer(edge, src.lockset, r, _NO_ENV)
            effects: dict[Any, Relation] = {}
            for (kind, start), val in base_effects:
                for dchild in self.spec.new_thread(edge.src, start, src.digest):
                    _acc(effects, PointKey(start, frozenset(), dchild), val, self.dom)
            if not self.dom.is_bot(v):
                for d1 in self.spec.unary(edge.src, edge.action, src.digest):
                    _acc(effects, PointKey(edge.dst, src.lockset, d1), v, self.dom)
            return effects

        return rhs

    def _lock_rhs(self, edge: Edge, src: PointKey):
        a = edge.action.mutex

        def rhs(view: View):
            r = view.get(src)
            if r is None:
                return {}
            effects: dict[Any, Relation] = {}
            for d1 in self._mutex_digests(view, a):
                succ = self.spec.binary(edge.src, edge.action, src.digest, d1)
                if not succ:
                    continue  # infeasible trace combination
                env = BaseEnv(
                    mutex_value=lambda a2, q, d1=d1: view.get(MutexKey(a2, q, d1)),
                    ret_candidates=lambda: [],
                )
                _fx, v = self.base.transfer(edge, src.lockset, r, env)
                if not self.dom.is_bot(v):
                    _acc(effects, PointKey(edge.dst, src.lockset | {a}, succ[0]), v, self.dom)
            return effects

        return rhs

    def _join_rhs(self, edge: Edge, src: PointKey):
        def rhs(view: View):
            r = view.get(src)
            if r is None:
                return {}
            effects: dict[Any, Relation] = {}
            for d1 in self._ret_digests(view):
                succ = self.spec.binary(edge.src, edge.action, src.digest, d1)
                if not succ:
                    continue
                env = BaseEnv(
                    mutex_value=lambda a2, q: None,
                    ret_candidates=lambda d1=d1: self._ret_values(view, d1),
                )
                _fx, v = self.base.transfer(edge, src.lockset, r, env)
                if not self.dom.is_bot(v):
                    _acc(effects, PointKey(edge.dst, src.lockset, succ[0]), v, self.dom)
            return effects

        return rhs

    # -- digest enumeration through the view (records namespace deps) --

    def _mutex_digests(self, view: View, a: str) -> list:
        seen, out = set(), []
        for k in view.keys_in(("mutex", a)):
            if k.digest not in seen:
                seen.add(k.digest)
                out.append(k.digest)
        return out

    def _ret_digests(self, view: View) -> list:
        seen, out = set(), []
        for k in view.keys_in(("ret",)):
            (_tidkey, d1) = k.digest
            if d1 not in seen:
                seen.add(d1)
                out.append(d1)
        return out

    def _ret_values(self, view: View, d1) -> list:
        out = []
        for k in view.keys_in(("ret",)):
            (tidkey, dd) = k.digest
            if dd == d1:
                v = view.get(k)
                if v is not None:
                    out.append((tidkey, v))
        return out


_NO_ENV = BaseEnv(mutex_value=lambda a, q: None, ret_candidates=lambda: [])


def _acc(effects: dict, key, value, dom) -> None:
    if key in effects:
        effects[key] = dom.join(effects[key], value)
    else:
        effects[key] = value


def render(key) -> str:
    from .keys import render_key

    return render_key(key)


def wrap_with_digests(base: BaseAnalysis, spec: DigestSpec) -> WrappedBaseSystem:
    return WrappedBaseSystem(base, spec)
