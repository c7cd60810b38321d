"""The relational domain used by the analyses.

A relation is a product of a numeric component (octagon or eqconst over the
integer-typed variables) and a non-relational map from thread-id-typed
variables to ``TidAbs`` values.  lift/unlift/restrict act componentwise; the
whole relation is ⊥ as soon as either component is.

The operations follow the standard relational-domain contract:

    lift    : (Vars →⊥ V#) → R           unlift : R → (Vars →⊥ V#)
    assign_expr, assign_value, guard, restrict, meet, join, widen, leq

with ``assign_value(r, x, v) = restrict(r, Vars∖{x}) ⊓ lift(⊤⊕{x↦v})`` and
restriction satisfying  r|Vars = r,  r|∅ = ⊤,  (r|Y1)|Y2 = r|Y1∩Y2, and
unlift(r|Y) x = ⊤ for x ∉ Y.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from ..frontend.ast import Cmp, Expr, linear_form
from .eqconst import EqBackend
from .octagon import OctBackend
from .values import (
    BOT, INF, IntAbs, TID_TOP, VarEnv, tid_join, tid_leq, tid_meet, tid_render,
)


@dataclass(frozen=True)
class Universe:
    """Variable universe of a relation.

    ``int_vars`` take part in the numeric component.  ``tid_vars`` (create
    targets, join sources, self) own an entry in the thread-id map; a name may
    appear in both (the toy language passes all locals to created threads, so
    one local can hold an integer in one template and a thread id in another).
    Only ``self`` is exclusively tid-typed.
    """

    int_vars: tuple[str, ...]
    tid_vars: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "index", {v: i for i, v in enumerate(self.int_vars)})

    @property
    def all_vars(self) -> tuple[str, ...]:
        return self.int_vars + tuple(v for v in self.tid_vars if v not in self.index)


class Relation:
    """Immutable product value; compare/inspect through its RelDomain."""

    __slots__ = ("num", "tids", "bot")

    def __init__(self, num, tids: dict[str, object], bot: bool = False):
        self.num = num
        self.tids = tids  # tid var -> TidAbs, missing entries are ⊤
        self.bot = bot


class RelDomain:
    def __init__(self, universe: Universe, numeric: str = "octagon"):
        self.universe = universe
        self.numeric = numeric
        n = len(universe.int_vars)
        if numeric == "octagon":
            self.nb = OctBackend(n)
        elif numeric == "interval":
            self.nb = OctBackend(n, intervalize=True)
        elif numeric == "eqconst":
            self.nb = EqBackend(n)
        else:
            raise ValueError(f"unknown numeric domain {numeric!r}")
        self._top = Relation(self.nb.top(), {})
        self._bot = Relation(self.nb.bot(), {}, bot=True)

    # -- construction --

    def top(self) -> Relation:
        return self._top

    def bot(self) -> Relation:
        return self._bot

    def _mk(self, num, tids: dict[str, object]) -> Relation:
        if self.nb.is_bot(num) or any(t is not TID_TOP and not t for t in tids.values()):
            return self._bot
        return Relation(num, {k: v for k, v in tids.items() if v is not TID_TOP})

    def is_bot(self, r: Relation) -> bool:
        return r.bot

    # -- lattice --

    def leq(self, a: Relation, b: Relation) -> bool:
        if a.bot:
            return True
        if b.bot:
            return False
        if not self.nb.leq(a.num, b.num):
            return False
        return all(tid_leq(a.tids.get(v, TID_TOP), t) for v, t in b.tids.items())

    def eq(self, a: Relation, b: Relation) -> bool:
        return self.leq(a, b) and self.leq(b, a)

    def meet(self, a: Relation, b: Relation) -> Relation:
        if a.bot or b.bot:
            return self._bot
        tids = dict(a.tids)
        for v, t in b.tids.items():
            tids[v] = tid_meet(tids.get(v, TID_TOP), t)
        return self._mk(self.nb.meet(a.num, b.num), tids)

    def join(self, a: Relation, b: Relation) -> Relation:
        if a.bot:
            return b
        if b.bot:
            return a
        tids = {
            v: tid_join(a.tids.get(v, TID_TOP), b.tids.get(v, TID_TOP))
            for v in set(a.tids) & set(b.tids)
        }
        return self._mk(self.nb.join(a.num, b.num), tids)

    def widen(self, a: Relation, b: Relation) -> Relation:
        if a.bot:
            return b
        if b.bot:
            return a
        tids = {
            v: tid_join(a.tids.get(v, TID_TOP), b.tids.get(v, TID_TOP))
            for v in set(a.tids) & set(b.tids)
        }
        return self._mk(self.nb.widen(a.num, b.num), tids)

    def join_all(self, rs) -> Relation:
        out = self._bot
        for r in rs:
            out = self.join(out, r)
        return out

    def meet_all(self, rs) -> Relation:
        out = self._top
        for r in rs:
            out = self.meet(out, r)
        return out

    # -- lift / unlift --

    def lift(self, env) -> Relation:
        if env is VarEnv.BOT:
            return self._bot
        num = self.nb.top()
        tids: dict[str, object] = {}
        for x, v in env.entries.items():
            if x in self.universe.index:
                if v is BOT:
                    return self._bot
                if isinstance(v, IntAbs):
                    num = self.nb.set_interval(num, self.universe.index[x], v.lo, v.hi)
            elif x in self.universe.tid_vars:
                if v is BOT:
                    return self._bot
                tids[x] = v
            else:
                raise KeyError(f"unknown variable {x!r}")
        return self._mk(num, tids)

    def unlift(self, r: Relation):
        if r.bot:
            return VarEnv.BOT
        entries: dict[str, object] = {}
        for x, i in self.universe.index.items():
            v = self.nb.unlift1(r.num, i)
            if not (isinstance(v, IntAbs) and v.is_top):
                entries[x] = v
        entries.update(r.tids)
        return VarEnv(entries)

    def unlift_var(self, r: Relation, x: str):
        if r.bot:
            return BOT
        if x in self.universe.index:
            return self.nb.unlift1(r.num, self.universe.index[x])
        return r.tids.get(x, TID_TOP)

    def unlift_tid(self, r: Relation, x: str):
        """Thread-id component of a (possibly dually tracked) variable."""
        if r.bot:
            return BOT
        return r.tids.get(x, TID_TOP)

    # -- transfer functions --

    def restrict(self, r: Relation, keep) -> Relation:
        if r.bot:
            return r
        keep = set(keep)
        num = self.nb.restrict(r.num, {self.universe.index[v] for v in keep if v in self.universe.index})
        tids = {v: t for v, t in r.tids.items() if v in keep}
        return self._mk(num, tids)

    def assign_value(self, r: Relation, x: str, v) -> Relation:
        """Assign an abstract value; the other slot of a dual variable is
        forgotten (the concrete variable holds one kind of value at a time)."""
        if r.bot:
            return r
        if v is BOT:
            return self._bot
        tids = dict(r.tids)
        num = r.num
        if isinstance(v, IntAbs):
            num = self.nb.set_interval(num, self.universe.index[x], v.lo, v.hi)
            tids.pop(x, None)
        else:
            if x in self.universe.index:
                num = self.nb.set_interval(num, self.universe.index[x], -INF, INF)
            if v is TID_TOP:
                tids.pop(x, None)
            else:
                tids[x] = v
        return self._mk(num, tids)

    def assign_expr(self, r: Relation, x: str, e: Expr) -> Relation:
        """Numeric assignment x := e (e over the numeric slots)."""
        if r.bot:
            return r
        lf = linear_form(e)
        if lf is None:
            return self.assign_value(r, x, IntAbs.top())
        coeffs, const = lf
        idx_coeffs = {self.universe.index[v]: c for v, c in coeffs.items()}
        tids = dict(r.tids)
        tids.pop(x, None)  # x no longer holds a thread id
        return self._mk(
            self.nb.assign_linear(r.num, self.universe.index[x], idx_coeffs, const),
            tids,
        )

    def havoc(self, r: Relation, x: str) -> Relation:
        if x in self.universe.index:
            return self.assign_value(r, x, IntAbs.top())
        return self.assign_value(r, x, TID_TOP)

    def guard(self, r: Relation, c: Cmp) -> Relation:
        if r.bot:
            return r
        lhs, rhs = linear_form(c.left), linear_form(c.right)
        if lhs is None or rhs is None:
            return r
        coeffs = dict(lhs[0])
        for v, k in rhs[0].items():
            coeffs[v] = coeffs.get(v, 0) - k
        coeffs = {v: k for v, k in coeffs.items() if k != 0}
        const = lhs[1] - rhs[1]
        idx = {self.universe.index[v]: k for v, k in coeffs.items()}

        # left − right  ⋈  0, with const folded into the left side
        def leq0(cf, cst):
            return self._mk(self.nb.guard_leq0(r.num, cf, cst), dict(r.tids))

        neg = {v: -k for v, k in idx.items()}
        match c.op:
            case "<=":
                return leq0(idx, const)
            case "<":
                return leq0(idx, const + 1)
            case ">=":
                return leq0(neg, -const)
            case ">":
                return leq0(neg, -const + 1)
            case "==":
                if hasattr(self.nb, "guard_eq"):
                    return self._mk(self.nb.guard_eq(r.num, idx, const), dict(r.tids))
                return self.meet(leq0(idx, const), leq0(neg, -const))
            case "!=":
                if hasattr(self.nb, "guard_neq"):
                    return self._mk(self.nb.guard_neq(r.num, idx, const), dict(r.tids))
                return self.join(leq0(idx, const + 1), leq0(neg, -const + 1))
        raise ValueError(c.op)

    # -- queries --

    def contains(self, r: Relation, store: dict[str, object]) -> bool:
        """Is the concrete store inside γ(r)?  Store values are ints or opaque
        thread ids; variables absent from the store are unconstrained, and a
        variable currently holding a thread id is unconstrained numerically."""
        if r.bot:
            return False
        int_vars = {v for v, x in store.items() if isinstance(x, int)}
        num = self.nb.restrict(
            r.num, {self.universe.index[v] for v in int_vars if v in self.universe.index}
        )
        vals = [store.get(v, 0) if v in int_vars else 0 for v in self.universe.int_vars]
        return self.nb.contains(num, vals) and self._tids_ok(r, store)

    def _tids_ok(self, r: Relation, store) -> bool:
        for v, t in r.tids.items():
            if v in store and t is not TID_TOP:
                if isinstance(store[v], int) or store[v] not in t:
                    return False
        return True

    def render(self, r: Relation) -> str:
        if r.bot:
            return "⊥"
        parts = self.nb.render(r.num, list(self.universe.int_vars))
        if parts == ["⊤"]:
            parts = []
        for v in sorted(r.tids):
            parts.append(f"{v}∈{tid_render(r.tids[v])}")
        return ", ".join(parts) if parts else "⊤"

    # -- clustering --

    def decompose(self, r: Relation, k: int) -> dict[frozenset, Relation]:
        out = {}
        for size in range(1, k + 1):
            for q in combinations(self.universe.all_vars, size):
                out[frozenset(q)] = self.restrict(r, set(q))
        return out

    def recompose(self, d: dict[frozenset, Relation]) -> Relation:
        return self.meet_all(d.values())
