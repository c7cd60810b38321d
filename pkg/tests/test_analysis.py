"""Unit tests for the right-hand sides, protections, and system invariants."""

from concurrel.analysis import (
    ClusterConfig, MutexKey, PointKey, RetKey, check_asserts, dump_solution,
    infer_protections, preset, run_analysis, wrap_with_digests,
)
from concurrel.analysis.base_system import BaseAnalysis
from concurrel.analysis.driver import build_universe
from concurrel.analysis.protections import compute_protections, protected_by
from concurrel.digests import MAIN_TID, lockset_digest
from concurrel.domains import IntAbs, RelDomain
from concurrel.frontend import build_cfg, parse_program
from concurrel.frontend.ast import Cmp, IntLit, Var
from concurrel.frontend.cfg import Edge, Point
from concurrel.frontend.ast import Create, Havoc, Lock, ReadGlobal, Unlock
from concurrel.solver import Solver


def make_base(src: str, cluster_mode="monolithic"):
    p = parse_program(src)
    cfgs = build_cfg(p)
    protections = compute_protections(p, cfgs, "declared")
    mutexes = sorted(set(p.mutexes) | {p.protecting_mutex(g) for g in p.globals})
    cc = ClusterConfig(cluster_mode)
    clusters = {a: cc.clusters_for(a, protected_by(protections, a)) for a in mutexes}
    universe = build_universe(cfgs, p)
    dom = RelDomain(universe, "octagon")
    locals_ = tuple(v for v in universe.all_vars if v not in p.globals and v != "ret")
    return BaseAnalysis(p, cfgs, dom, protections, clusters, locals_), dom


SRC = """
global g, h;
mutex a;
protect g with a; protect h with a;
thread main { x = create(t1); lock(a); unlock(a); }
thread t1 { x = 1; }
"""


def test_base_init_effects():
    base, dom = make_base(SRC)
    effects, start = base.init()
    eff = dict(((k[1], k[2]), v) for (k, v) in effects)
    zero_gh = dom.guard(dom.guard(dom.top(), Cmp("==", Var("g"), IntLit(0))),
                        Cmp("==", Var("h"), IntLit(0)))
    assert dom.eq(eff[("a", frozenset({"g", "h"}))], zero_gh)
    assert dom.eq(eff[("m_g", frozenset({"g"}))],
                  dom.guard(dom.top(), Cmp("==", Var("g"), IntLit(0))))
    assert dom.unlift_tid(start, "self") == frozenset({MAIN_TID})


def test_base_init_empty_cluster_is_top():
    src = "mutex a;\nthread main { lock(a); unlock(a); }"
    base, dom = make_base(src)
    effects, _ = base.init()
    eff = dict(((k[1], k[2]), v) for (k, v) in effects)
    assert dom.eq(eff[("a", frozenset())], dom.top())


def _edge(base, template, act_type):
    for e in base.cfgs[template].edges:
        if isinstance(e.action, act_type):
            return e
    raise LookupError(act_type)


def test_base_lock_meets_stored_values():
    base, dom = make_base(SRC)
    q = frozenset({"g", "h"})
    stored = {q: dom.guard(dom.top(), Cmp("==", Var("g"), Var("h")))}
    env = type("E", (), {
        "mutex_value": staticmethod(lambda a, qq: stored[qq]),
        "ret_candidates": staticmethod(list),
    })
    lock_edge = _edge(base, "main", Lock)
    _fx, v = base.transfer(lock_edge, frozenset(), dom.top(), env)
    assert dom.eq(v, stored[q])
    # stored Top leaves the state unchanged
    stored[q] = dom.top()
    r0 = dom.assign_expr(dom.top(), "x", IntLit(3))
    _fx, v = base.transfer(lock_edge, frozenset(), r0, env)
    assert dom.eq(v, r0)


def test_base_unlock_publishes_and_restricts():
    base, dom = make_base(SRC)
    unlock_edge = _edge(base, "main", Unlock)
    r = dom.guard(dom.top(), Cmp("==", Var("g"), Var("h")))
    r = dom.guard(r, Cmp("==", Var("x"), Var("g")))
    effects, v = base.transfer(unlock_edge, frozenset({"a"}), r, None)
    ((key, pub),) = [e for e in effects]
    assert key == ("mutex", "a", frozenset({"g", "h"}))
    assert dom.eq(pub, dom.restrict(r, {"g", "h"}))
    # locally, only x survives; g and h are forgotten
    assert dom.unlift_var(v, "x") == IntAbs.top()
    assert dom.contains(v, {"x": 5, "g": 0, "h": 1})


def test_base_unlock_keeps_globals_still_protected():
    src = """
    global g;
    mutex a, b;
    protect g with a, b;
    thread main { lock(a); lock(b); unlock(b); unlock(a); }
    """
    base, dom = make_base(src)
    unlock_b = next(e for e in base.cfgs["main"].edges
                    if isinstance(e.action, Unlock) and e.action.mutex == "b")
    r = dom.guard(dom.top(), Cmp("==", Var("g"), IntLit(7)))
    _fx, v = base.transfer(unlock_b, frozenset({"a", "b"}), r, None)
    assert dom.unlift_var(v, "g") == IntAbs.const(7)  # a still protects g


def test_base_read_write_havoc():
    base, dom = make_base(SRC)
    cfg = base.cfgs["t1"]
    r = dom.guard(dom.top(), Cmp("==", Var("g"), Var("h")))
    read = Edge(cfg.start, ReadGlobal("x", "g"), Point("t1", 99))
    _fx, v = base.transfer(read, frozenset({"m_g"}), r, None)
    assert dom.is_bot(dom.guard(v, Cmp("!=", Var("x"), Var("h"))))  # x=g=h
    hav = Edge(cfg.start, Havoc("x"), Point("t1", 99))
    _fx, v2 = base.transfer(hav, frozenset(), v, None)
    assert dom.unlift_var(v2, "x") == IntAbs.top()
    assert dom.contains(v2, {"x": 9, "g": 1, "h": 1})


def test_base_create_child_state():
    base, dom = make_base(SRC)
    create_edge = _edge(base, "main", Create)
    r = dom.assign_value(dom.top(), "self", frozenset({MAIN_TID}))
    r = dom.guard(r, Cmp("==", Var("x"), IntLit(2)))
    r = dom.guard(r, Cmp("==", Var("g"), IntLit(5)))
    effects, v = base.transfer(create_edge, frozenset(), r, None)
    ((key, child),) = effects
    assert key == ("start", Point("t1", 0))
    # globals are dropped from the child start state, locals are passed
    assert dom.unlift_var(child, "g") == IntAbs.top()
    assert dom.unlift_var(child, "x") == IntAbs.const(2)
    from concurrel.digests import AbstractTid, CreateEdge

    expected = AbstractTid((CreateEdge(create_edge.src, "t1"),), frozenset())
    assert dom.unlift_tid(child, "self") == frozenset({expected})
    assert dom.unlift_tid(v, "x") == frozenset({expected})


def test_base_strictness():
    base, dom = make_base(SRC)
    for e in base.cfgs["main"].edges:
        effects, v = base.transfer(e, frozenset({"a", "m_g"}), dom.bot(), None)
        assert effects == [] and dom.is_bot(v)


def test_infer_protections_sec4_example(programs):
    p = programs["four_asserts"]
    prot = infer_protections(p, build_cfg(p))
    assert prot["g"] == frozenset({"a", "b", "m_g"})
    assert prot["h"] == frozenset({"a", "b", "m_h"})


def test_infer_protections_no_lock():
    p = parse_program("global g;\nthread main { g = 1; }")
    prot = infer_protections(p, build_cfg(p))
    assert prot["g"] == frozenset({"m_g"})


def test_infer_protections_ignores_dead_write(programs, explorations):
    p = programs["synth_infer"]
    prot = infer_protections(p, build_cfg(p))
    assert prot["g"] == frozenset({"a", "m_g"})  # the write after return is dead
    assert prot["h"] == frozenset({"a", "b", "m_h"})
    # the oracle confirms the dead write never executes: g is never 99
    assert 99 not in explorations["synth_infer"].global_values["g"]


def test_stored_mutex_values_satisfy_restrict_invariant(programs):
    for name in ("intro_cluster", "four_asserts", "joins"):
        for pname in ("octagon", "tids", "clusters"):
            res = run_analysis(programs[name], preset(pname))
            for k, v in res.solver.values.items():
                if isinstance(k, MutexKey):
                    assert res.dom.eq(res.dom.restrict(v, k.cluster), v), (name, pname, k)


def test_post_solution_stable(programs):
    for name in ("intro_cluster", "example8", "joins", "synth_counter"):
        for pname in ("octagon", "tids", "clusters"):
            res = run_analysis(programs[name], preset(pname))
            assert res.solver.check_post_solution() == [], (name, pname)


def test_solution_dump_deterministic(programs):
    for name in ("example8", "one_element"):
        for pname in ("octagon", "clusters"):
            d1 = dump_solution(run_analysis(programs[name], preset(pname)))
            d2 = dump_solution(run_analysis(programs[name], preset(pname)))
            assert d1 == d2


def test_assert_vacuous_proven_when_unreachable():
    src = """
    thread main {
      x = 1;
      if (x < 1) { assert(x == 99); }
    }
    """
    res = run_analysis(parse_program(src), preset("octagon"))
    (v,) = check_asserts(res)
    assert v.verdict == "PROVEN"


def test_assert_partial_knowledge_unknown():
    src = """
    global g, h;
    mutex a;
    protect g with a; protect h with a;
    thread main {
      x = ?; y = ?;
      lock(a);
      g = x; h = y;
      assert(g == h);
      unlock(a);
    }
    """
    res = run_analysis(parse_program(src), preset("octagon"))
    (v,) = check_asserts(res)
    assert v.verdict == "UNKNOWN"


def test_wrapped_lockset_digest_matches_builtin_splitting(programs):
    """Wrapping the base right-hand sides with the lockset digest reproduces
    the built-in lockset splitting up to key renaming."""
    for name in ("four_asserts", "lockonce", "example8", "synth_relock"):
        res = run_analysis(programs[name], preset("octagon"))
        system = wrap_with_digests(res.system.base, lockset_digest())
        solver = Solver(system, widen_delay=res.config.widen_delay,
                        narrow_iters=res.config.narrow_iters)
        solver.solve()
        dom = res.dom

        # every instantiated point key carries its own lockset as the digest
        for k in solver.values:
            if isinstance(k, PointKey):
                assert k.digest == k.lockset

        # point values agree 1:1
        triv_points = {k: v for k, v in res.solver.values.items() if isinstance(k, PointKey)}
        wrap_points = {k: v for k, v in solver.values.items() if isinstance(k, PointKey)}
        assert {(k.point, k.lockset) for k in triv_points} == {
            (k.point, k.lockset) for k in wrap_points
        }
        for k, v in triv_points.items():
            assert dom.eq(v, wrap_points[PointKey(k.point, k.lockset, k.lockset)]), (name, k)

        # mutex values joined over digests agree with the unsplit values
        for k, v in res.solver.values.items():
            if not isinstance(k, MutexKey):
                continue
            parts = [v2 for k2, v2 in solver.values.items()
                     if isinstance(k2, MutexKey) and (k2.mutex, k2.cluster) == (k.mutex, k.cluster)]
            assert dom.eq(v, dom.join_all(parts)), (name, k)


def test_base_join_propagates_return_value():
    src = """
    thread main {
      x = create(t1);
      y = join(x);
      assert(y == 0);
    }
    thread t1 { return 0; }
    """
    res = run_analysis(parse_program(src), preset("octagon"))
    (v,) = check_asserts(res)
    assert v.verdict == "PROVEN"


def test_base_join_over_multiple_returns():
    src = """
    thread main {
      x = create(t1);
      c = ?;
      if (c == 0) { x = create(t2); }
      y = join(x);
      assert(y <= 1);
      assert(y == 0);
    }
    thread t1 { return 0; }
    thread t2 { return 1; }
    """
    res = run_analysis(parse_program(src), preset("octagon"))
    v1, v2 = check_asserts(res)
    assert v1.verdict == "PROVEN"  # join over both returns: y ∈ [0,1]
    assert v2.verdict == "UNKNOWN"


def test_base_monolithic_cannot_show_intro_assert2(programs):
    res = run_analysis(programs["intro_cluster"], preset("octagon"))
    verd = [v.verdict for v in check_asserts(res)]
    assert verd[1] == "UNKNOWN"


def test_declared_protections_within_inferred(programs):
    from concurrel.analysis.protections import declared_protections
    from concurrel.frontend import build_cfg

    for name, p in programs.items():
        if p.protections is None:
            continue
        inferred = infer_protections(p, build_cfg(p))
        declared = declared_protections(p)
        for g in p.globals:
            assert declared[g] <= inferred[g], (name, g, declared[g], inferred[g])


def test_inferred_protections_give_same_verdicts(programs):
    for name in ("intro_cluster", "example8", "joins", "four_asserts"):
        p = programs[name]
        v1 = [v.verdict for v in check_asserts(run_analysis(p, preset("tids")))]
        v2 = [v.verdict for v in check_asserts(
            run_analysis(p, preset("tids", protections="inferred")))]
        assert v1 == v2, name


def test_unbounded_loop_terminates_by_widening():
    src = """
    thread main {
      x = 0;
      while (x >= 0) { x = x + 1; }
      assert(x < 0);
    }
    """
    res = run_analysis(parse_program(src), preset("octagon"))
    (v,) = check_asserts(res)
    assert v.verdict == "PROVEN"  # the loop only exits with x < 0 (never, here)
    assert res.solver.stats.widened > 0


def test_post_solution_stable_eqconst(programs):
    from concurrel.analysis import AnalysisConfig, ClusterConfig

    for name in ("intro_cluster", "joins"):
        for mode in ("base", "tids", "clusters"):
            res = run_analysis(programs[name], AnalysisConfig(
                domain="eqconst", mode=mode,
                clusters=ClusterConfig("le_k" if mode == "clusters" else "monolithic")))
            assert res.solver.check_post_solution() == [], (name, mode)
