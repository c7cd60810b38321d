"""Analysis configurations and the four named presets."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations


@dataclass(frozen=True)
class ClusterConfig:
    mode: str = "monolithic"  # 'monolithic' | 'le_k' | 'all'
    k: int = 2
    # explicit per-mutex overrides: ((mutex, (cluster, ...)), ...)
    explicit: tuple[tuple[str, tuple[frozenset, ...]], ...] = ()

    def clusters_for(self, mutex: str, protected: frozenset[str]) -> tuple[frozenset[str], ...]:
        """The cluster family 𝒬_a for a mutex protecting ``protected``.

        At least one cluster is always returned (the empty cluster when the
        mutex protects nothing)."""
        for name, qs in self.explicit:
            if name == mutex:
                assert all(q <= protected for q in qs)
                return qs
        if not protected:
            return (frozenset(),)
        names = sorted(protected)
        if self.mode == "monolithic":
            return (frozenset(names),)
        if self.mode == "le_k":
            sizes = range(1, min(self.k, len(names)) + 1)
        elif self.mode == "all":
            sizes = range(1, len(names) + 1)
        else:
            raise ValueError(self.mode)
        return tuple(frozenset(q) for size in sizes for q in combinations(names, size))


@dataclass(frozen=True)
class AnalysisConfig:
    domain: str = "octagon"  # 'octagon' | 'eqconst' | 'interval'
    mode: str = "base"  # 'base' | 'tids' | 'clusters'
    clusters: ClusterConfig = field(default_factory=ClusterConfig)
    lock_once: bool = False  # extra lock-once digest (base mode only)
    exclude_ancestor_writes: bool = False  # ancestor-write acc + uncollapsed keys
    protections: str = "declared"  # 'declared' | 'inferred'
    widen_delay: int = 6
    narrow_iters: int = 1
    budget: int = 1_000_000

    def __post_init__(self):
        if self.mode not in ("base", "tids", "clusters"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.lock_once and self.mode != "base":
            raise ValueError("the lock-once digest is only supported in base mode")
        if self.exclude_ancestor_writes and self.mode == "base":
            raise ValueError("--exclude-ancestor-writes needs thread ids (tids/clusters)")


PRESETS = {
    "interval": AnalysisConfig(domain="interval", mode="base"),
    "octagon": AnalysisConfig(domain="octagon", mode="base"),
    "tids": AnalysisConfig(domain="octagon", mode="tids"),
    "clusters": AnalysisConfig(domain="octagon", mode="clusters",
                               clusters=ClusterConfig(mode="le_k", k=2)),
}


def preset(name: str, **overrides) -> AnalysisConfig:
    return replace(PRESETS[name], **overrides)
