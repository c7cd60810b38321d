from .config import AnalysisConfig, ClusterConfig, PRESETS, preset  # noqa: F401
from .driver import AnalysisResult, ProgramError, run_analysis  # noqa: F401
from .improved_system import ImprovedState, ImprovedSystem, RetVal  # noqa: F401
from .base_system import BaseAnalysis, wrap_with_digests  # noqa: F401
from .keys import MutexKey, PointKey, RetKey, Start, render_key  # noqa: F401
from .protections import (  # noqa: F401
    compute_protections, declared_protections, infer_protections, protected_by,
)
from .reporting import (  # noqa: F401
    AssertVerdict, LockInvariant, check_asserts, derive_lock_invariants,
    dump_solution,
)
