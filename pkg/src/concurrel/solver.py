"""Demand-driven worklist solver for side-effecting constraint systems.

Unknowns are discovered dynamically: when a key first receives a non-⊥
value, the system is asked for the constraints it spawns (e.g. the outgoing
CFG edges of a program point), and constraints subscribed to the key's
namespace (e.g. "some unknown of mutex a appeared") are rescheduled.

Right-hand sides read the current assignment through a view that records
dependencies, and return a dict of effects {key: value}; contributions and
side-effects are treated alike and accumulate by join.  Widening escalates
per key after a fixed number of strict increases, which terminates even for
growth cycles that pass through mutex unknowns rather than CFG back edges.
An optional narrowing sweep (a full monotone re-evaluation) recovers most of
the overshoot afterwards.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Any, Callable, Protocol


class BudgetExceeded(RuntimeError):
    def __init__(self, evaluations: int):
        super().__init__(
            f"solver aborted after {evaluations} constraint evaluations; "
            "set CONCURREL_STEP_BUDGET to raise the limit"
        )


@dataclass
class Constraint:
    name: str
    rhs: Callable[["View"], dict[Any, Any]]
    cid: int = -1


class System(Protocol):
    def initial(self) -> list[Constraint]: ...
    def constraints_for(self, key) -> list[Constraint]: ...
    def namespace(self, key): ...  # hashable | None
    def join(self, key, a, b): ...
    def widen(self, key, a, b): ...
    def leq(self, key, a, b) -> bool: ...


class View:
    """Read access to the current assignment with dependency recording."""

    def __init__(self, solver: "Solver"):
        self._s = solver
        self.reads: set[Any] = set()
        self.ns_reads: set[Any] = set()

    def get(self, key):
        self.reads.add(key)
        return self._s.values.get(key)

    def keys_in(self, namespace) -> list:
        """Known unknowns of a namespace, in discovery order (deterministic)."""
        self.ns_reads.add(namespace)
        return list(self._s.by_namespace.get(namespace, ()))


@dataclass
class SolveStats:
    evaluations: int = 0
    unknowns: int = 0
    widened: int = 0


class Solver:
    def __init__(self, system: System, widen_delay: int = 6, narrow_iters: int = 1,
                 budget: int = 1_000_000):
        self.system = system
        self.widen_delay = widen_delay
        self.narrow_iters = narrow_iters
        self.budget = budget
        self.values: dict[Any, Any] = {}
        self.by_namespace: dict[Any, list[Any]] = {}
        self.constraints: list[Constraint] = []
        self.spawned: set[Any] = set()
        self.deps: dict[Any, set[int]] = {}  # key -> constraint ids reading it
        self.ns_deps: dict[Any, set[int]] = {}
        self.last_reads: dict[int, set[Any]] = {}
        self.affected_by: dict[Any, set[int]] = {}  # key -> constraints that wrote it
        self.updates: dict[Any, int] = {}
        self.stats = SolveStats()

    # -- bookkeeping --

    def _add_constraint(self, c: Constraint) -> None:
        c.cid = len(self.constraints)
        self.constraints.append(c)

    def _register_key(self, key, queue) -> None:
        self.stats.unknowns += 1
        ns = self.system.namespace(key)
        if ns is not None:
            self.by_namespace.setdefault(ns, []).append(key)
            for cid in sorted(self.ns_deps.get(ns, ())):
                self._schedule(cid, queue)
        if key not in self.spawned:
            self.spawned.add(key)
            for c in self.system.constraints_for(key):
                self._add_constraint(c)
                self._schedule(c.cid, queue)

    def _schedule(self, cid: int, queue) -> None:
        if cid not in self._queued:
            self._queued.add(cid)
            queue.append(cid)

    def _apply(self, key, value, queue, widen_ok: bool) -> None:
        old = self.values.get(key)
        if old is None:
            self.values[key] = value
            self._register_key(key, queue)
            changed = True
        else:
            if self.system.leq(key, value, old):
                return
            joined = self.system.join(key, old, value)
            self.updates[key] = self.updates.get(key, 0) + 1
            if widen_ok and self.updates[key] > self.widen_delay:
                joined = self.system.widen(key, old, joined)
                self.stats.widened += 1
            self.values[key] = joined
            changed = True
        if changed:
            for cid in sorted(self.deps.get(key, ())):
                self._schedule(cid, queue)

    def _evaluate(self, cid: int, queue, widen_ok: bool = True) -> None:
        self.stats.evaluations += 1
        if self.stats.evaluations > self.budget:
            raise BudgetExceeded(self.stats.evaluations)
        c = self.constraints[cid]
        view = View(self)
        effects = c.rhs(view)
        for key in self.last_reads.get(cid, ()):  # re-point stale deps
            self.deps.get(key, set()).discard(cid)
        self.last_reads[cid] = view.reads
        for key in view.reads:
            self.deps.setdefault(key, set()).add(cid)
        for ns in view.ns_reads:
            self.ns_deps.setdefault(ns, set()).add(cid)
        for key, value in effects.items():
            self.affected_by.setdefault(key, set()).add(cid)
            self._apply(key, value, queue, widen_ok)

    # -- main loop --

    def solve(self, seeds: list[tuple[Any, Any]] = ()) -> dict[Any, Any]:
        queue: deque[int] = deque()
        self._queued: set[int] = set()
        for c in self.system.initial():
            self._add_constraint(c)
            self._schedule(c.cid, queue)
        for key, value in seeds:
            self._apply(key, value, queue, widen_ok=True)
        while queue:
            cid = queue.popleft()
            self._queued.discard(cid)
            self._evaluate(cid, queue, widen_ok=True)
        for _ in range(self.narrow_iters):
            self._narrow()
        return self.values

    def _narrow(self) -> None:
        """One monotone re-accumulation sweep: recompute every key as the join
        of all effects evaluated on the current (post-)solution.  For monotone
        right-hand sides the result is a smaller post-solution."""
        acc: dict[Any, Any] = {}
        for c in self.constraints:
            self.stats.evaluations += 1
            view = View(self)
            for key, value in c.rhs(view).items():
                if key in acc:
                    acc[key] = self.system.join(key, acc[key], value)
                else:
                    acc[key] = value
        # keys only ever written by seeds keep their seeded values
        for key, old in self.values.items():
            if key not in acc:
                acc[key] = old
        self.values = acc

    # -- post-solve queries --

    def check_post_solution(self) -> list[str]:
        """Re-evaluate everything; report any effect not below the solution."""
        bad = []
        for c in self.constraints:
            view = View(self)
            for key, value in c.rhs(view).items():
                cur = self.values.get(key)
                if cur is None or not self.system.leq(key, value, cur):
                    bad.append(f"{c.name} -> {key}")
        return bad

    def dependencies(self, key) -> set[Any]:
        """Unknowns whose change re-triggers ``key`` (reads of the constraints
        that contributed to it)."""
        out: set[Any] = set()
        for cid in self.affected_by.get(key, ()):
            out |= self.last_reads.get(cid, set())
        return out


def solve(system: System, seeds=(), **kw) -> Solver:
    s = Solver(system, **kw)
    s.solve(list(seeds))
    return s
