"""concurrel: thread-modular relational abstract interpretation for a small
concurrent language with mutexes and dynamic thread create/join."""

from .analysis import (  # noqa: F401
    AnalysisConfig, AnalysisResult, ClusterConfig, PRESETS, check_asserts,
    derive_lock_invariants, dump_solution, preset, run_analysis,
)
from .differential import SoundnessReport, check_soundness  # noqa: F401
from .frontend import build_cfg, parse_program, pretty_print, validate  # noqa: F401
from .oracle import ExploreBounds, Exploration, explore  # noqa: F401

__version__ = "0.1.0"
