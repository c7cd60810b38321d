"""Differential check of an analysis result against the bounded oracle.

For every reachable concrete state (thread, point, lockset, locals, globals):

* some unknown at (point, lockset) must be instantiated, and the join of the
  local relations over all digests must contain the store, where the store
  consists of the locals, self, and the globals protected by a held mutex;
* the replayed digest of the thread must be among the instantiated digests;
* any value a global ever takes must be covered by the published cluster
  values joined over digests (plus the initial 0, which the improved analyses
  keep join-locally instead of publishing);
* no assert reported PROVEN may be violated in any explored interleaving.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .analysis.driver import AnalysisResult
from .analysis.keys import PointKey
from .analysis.reporting import AssertVerdict
from .oracle import Exploration

# reachable-tuple layout
R_TID, R_POINT, R_LOCKSET, R_LOCALS, R_GLOBALS, R_TDIG, R_TBASE, R_LOCKONCE = range(8)


@dataclass
class SoundnessReport:
    checked_states: int = 0
    witnesses: list[str] = field(default_factory=list)
    digest_misses: list[str] = field(default_factory=list)
    proven_violated: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.witnesses or self.proven_violated)


def check_soundness(result: AnalysisResult, exploration: Exploration,
                    verdicts: list[AssertVerdict] | None = None,
                    max_witnesses: int = 10) -> SoundnessReport:
    report = SoundnessReport()
    dom = result.dom
    improved = result.config.mode in ("tids", "clusters")
    tid_abs = {
        tid: (full if improved else base)
        for tid, (full, base) in exploration.tid_abstractions.items()
    }

    def expected_digest(rs):
        if improved:
            return rs[R_TDIG]
        if result.config.lock_once:
            return rs[R_LOCKONCE]
        return ()

    groups: dict[tuple, list] = {}
    for rs in exploration.reachable:
        groups.setdefault((rs[R_POINT], rs[R_LOCKSET]), []).append(rs)

    point_keys: dict[tuple, list[PointKey]] = {}
    for k in result.solver.values:
        if isinstance(k, PointKey):
            point_keys.setdefault((k.point, k.lockset), []).append(k)

    universe_globals = set(result.program.globals)
    lvars = exploration.lvars
    gvars = exploration.gvars

    for (point, lockset), states in sorted(
        groups.items(), key=lambda kv: (str(kv[0][0]), sorted(kv[0][1]))
    ):
        report.checked_states += len(states)
        keys = point_keys.get((point, lockset), [])
        if not keys:
            report.witnesses.append(
                f"{point} lockset={{{','.join(sorted(lockset))}}}: reachable "
                f"concretely but no unknown instantiated")
            continue
        digests = {k.digest for k in keys}
        joined = dom.join_all(
            result.local_relation(result.solver.values[k]) for k in keys
        )
        held_globals = {g for g in universe_globals if result.protections[g] & lockset}
        keep = (set(result.universe.all_vars) - universe_globals - {"ret"}) | held_globals
        v = dom.restrict(joined, keep)
        seen_digest_miss = set()
        for rs in sorted(states, key=lambda r: (r[R_TID], str(r[R_LOCALS]))):
            d = expected_digest(rs)
            if d not in digests and d not in seen_digest_miss:
                seen_digest_miss.add(d)
                report.digest_misses.append(
                    f"{point}: replayed digest {result.spec.render(d)} not instantiated")
            store: dict[str, object] = {}
            for var, val in zip(lvars, rs[R_LOCALS]):
                store[var] = tid_abs.get(val, val) if isinstance(val, str) else val
            for g, val in zip(gvars, rs[R_GLOBALS]):
                if g in held_globals:
                    store[g] = val
            if not dom.contains(v, store) and len(report.witnesses) < max_witnesses:
                report.witnesses.append(
                    f"{rs[R_TID]} at {point} lockset={{{','.join(sorted(lockset))}}}: "
                    f"store {store} outside {dom.render(v)}")

    for g in sorted(exploration.global_values):
        pub = result.published_values(g)
        for val in sorted(exploration.global_values[g]):
            if not dom.contains(pub, {g: val}):
                report.witnesses.append(
                    f"global {g}={val} reachable but outside published values "
                    f"{dom.render(pub)}")

    if verdicts is not None:
        for vd in verdicts:
            if vd.verdict == "PROVEN" and vd.aid in exploration.violations:
                trace = "\n  ".join(exploration.violations[vd.aid])
                report.proven_violated.append(
                    f"assert #{vd.aid} ({vd.cond}) PROVEN but violated:\n  {trace}")
    return report
