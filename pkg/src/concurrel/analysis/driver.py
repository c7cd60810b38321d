"""Front door of the analysis: program + config -> solved assignment + reports."""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from typing import Any

from ..digests import DigestSpec, lock_once_digest, trivial_digest
from ..frontend.ast import Program
from ..frontend.cfg import Cfg, Point, build_cfg, collect_locals, tid_vars
from ..frontend.validate import Diagnostic, validate
from ..solver import Solver
from ..domains.relation import RelDomain, Relation, Universe
from .base_system import BaseAnalysis, wrap_with_digests
from .config import AnalysisConfig
from .improved_system import ImprovedState, ImprovedSystem
from .keys import MutexKey, PointKey
from .protections import compute_protections, protected_by


class ProgramError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


@dataclass
class AnalysisResult:
    program: Program
    config: AnalysisConfig
    cfgs: dict[str, Cfg]
    dom: RelDomain
    universe: Universe
    protections: dict[str, frozenset[str]]
    clusters: dict[str, tuple[frozenset[str], ...]]
    solver: Solver
    system: Any
    spec: DigestSpec
    wall_ms: float = 0.0
    diagnostics: list[Diagnostic] = field(default_factory=list)

    # -- uniform views over the assignment --

    def local_relation(self, value) -> Relation:
        return value.r if isinstance(value, ImprovedState) else value

    def point_keys(self, point: Point) -> list[PointKey]:
        return [k for k in self.solver.values if isinstance(k, PointKey) and k.point == point]

    def point_value(self, point: Point, lockset: frozenset[str] | None = None) -> Relation:
        """Abstract value at a point, joined over digests (and locksets)."""
        out = self.dom.bot()
        for k in self.point_keys(point):
            if lockset is not None and k.lockset != lockset:
                continue
            out = self.dom.join(out, self.local_relation(self.solver.values[k]))
        return out

    def published_values(self, g: str) -> Relation:
        """Join of everything published for clusters containing g, plus the
        initial value 0 (which improved modes keep in L, not at unknowns)."""
        from ..frontend.ast import IntLit

        out = self.dom.assign_expr(self.dom.top(), g, IntLit(0))
        out = self.dom.restrict(out, {g})
        for k, v in self.solver.values.items():
            if isinstance(k, MutexKey) and g in k.cluster:
                out = self.dom.join(out, self.dom.restrict(v, {g}))
        return out

    def stats(self) -> dict:
        return {
            "unknowns": len(self.solver.values),
            "evaluations": self.solver.stats.evaluations,
            "wall_ms": round(self.wall_ms, 1),
        }


def build_universe(cfgs: dict[str, Cfg], program: Program) -> Universe:
    tids = tid_vars(cfgs)
    ints = sorted((set(collect_locals(cfgs)) | set(program.globals) | {"ret"}) - {"self"})
    return Universe(tuple(ints), tuple(sorted(tids)))


def run_analysis(program: Program, config: AnalysisConfig,
                 check_diagnostics: bool = True) -> AnalysisResult:
    cfgs = build_cfg(program)
    diags = validate(program, cfgs)
    if check_diagnostics and any(d.severity == "error" for d in diags):
        raise ProgramError([d for d in diags if d.severity == "error"])

    protections = compute_protections(program, cfgs, config.protections)
    mutex_names = sorted(set(program.mutexes) | {program.protecting_mutex(g) for g in program.globals})
    clusters = {
        a: config.clusters.clusters_for(a, protected_by(protections, a)) for a in mutex_names
    }
    universe = build_universe(cfgs, program)
    dom = RelDomain(universe, config.domain)
    locals_ = tuple(v for v in universe.all_vars if v not in program.globals and v != "ret")

    if config.mode == "base":
        spec = lock_once_digest() if config.lock_once else trivial_digest()
        base = BaseAnalysis(program, cfgs, dom, protections, clusters, locals_)
        system = wrap_with_digests(base, spec)
    else:
        system = ImprovedSystem(
            program, cfgs, dom, protections, clusters, locals_,
            clustered=(config.mode == "clusters"),
            exclude_ancestor_writes=config.exclude_ancestor_writes,
        )
        spec = system.spec

    budget = int(os.environ.get("CONCURREL_STEP_BUDGET", config.budget))
    solver = Solver(system, widen_delay=config.widen_delay,
                    narrow_iters=config.narrow_iters, budget=budget)
    t0 = time.perf_counter()
    solver.solve()
    wall = (time.perf_counter() - t0) * 1000.0
    return AnalysisResult(
        program, config, cfgs, dom, universe, protections, clusters,
        solver, system, spec, wall, diags,
    )
