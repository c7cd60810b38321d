import pytest

from concurrel.frontend import (
    Lock, ParseError, ReadGlobal, Unlock, WriteGlobal, build_cfg, cfg_dump,
    parse_program, pretty_print, validate,
)
from conftest import CORPUS, load


def test_minimal_program():
    p = parse_program("thread main { }")
    assert p.entry == "main"
    assert p.threads["main"] == ()
    cfgs = build_cfg(p)
    assert len(cfgs["main"].points) == 1
    assert cfgs["main"].edges == []


def test_example1_shape():
    p = load("intro_cluster")
    assert set(p.threads) == {"main", "t1", "t2"}
    assert set(p.globals) == {"g", "h", "i"}
    assert p.mutexes == ("a",)


def test_globals_forbidden_in_expressions():
    with pytest.raises(ParseError, match="globals forbidden"):
        parse_program("global g; thread main { x = g + 1; }")
    with pytest.raises(ParseError, match="globals forbidden"):
        parse_program("global g; thread main { while (g < 2) { x = 1; } }")


def test_missing_main():
    with pytest.raises(ParseError, match="main"):
        parse_program("thread t1 { x = 1; }")


def test_undeclared_names():
    with pytest.raises(ParseError, match="undeclared mutex"):
        parse_program("thread main { lock(a); }")
    with pytest.raises(ParseError, match="undeclared thread"):
        parse_program("thread main { x = create(nope); }")


def test_reserved_mutex_prefix():
    with pytest.raises(ParseError, match="reserved"):
        parse_program("mutex m_g; thread main { }")


def test_write_wrapped_in_atomicity_mutex():
    p = parse_program("global g; thread main { x = 1; g = x; }")
    cfg = build_cfg(p)["main"]
    acts = [e.action for e in cfg.edges]
    assert acts[1:] == [Lock("m_g"), WriteGlobal("g", "x"), Unlock("m_g")]


def test_every_global_access_is_wrapped():
    for path in CORPUS:
        p = parse_program(open(path).read(), path)
        for cfg in build_cfg(p).values():
            for e in cfg.edges:
                if isinstance(e.action, (ReadGlobal, WriteGlobal)):
                    m = p.protecting_mutex(
                        e.action.glob if isinstance(e.action, WriteGlobal) else e.action.glob
                    )
                    (prev,) = [x for x in cfg.edges if x.dst == e.src]
                    (nxt,) = [x for x in cfg.edges if x.src == e.dst]
                    assert prev.action == Lock(m)
                    assert nxt.action == Unlock(m)


def test_while_lowering_is_a_diamond():
    p = parse_program("thread main { x = 0; while (x < 5) { x = x + 1; } y = x; }")
    cfg = build_cfg(p)["main"]
    guards = [e for e in cfg.edges if type(e.action).__name__ == "Guard"]
    conds = {str(g.action.cond) for g in guards}
    assert "x < 5" in conds and "x >= 5" in conds
    head = next(e.src for e in cfg.edges if str(getattr(e.action, "cond", "")) == "x < 5")
    assert any(e.dst == head for e in cfg.edges if e.src != head), "back edge missing"


def test_start_point_has_no_incoming_edges():
    p = parse_program("thread main { while (1 < 2) { x = 1; } }")
    for cfg in build_cfg(p).values():
        assert all(e.dst != cfg.start for e in cfg.edges)


def test_roundtrip_and_determinism():
    for path in CORPUS:
        text = open(path).read()
        p1 = parse_program(text, path)
        p2 = parse_program(pretty_print(p1), path)
        assert pretty_print(p1) == pretty_print(p2)
        assert cfg_dump(build_cfg(p1)) == cfg_dump(build_cfg(p2))
        assert cfg_dump(build_cfg(p1)) == cfg_dump(build_cfg(parse_program(text, path)))


def test_validate_clean_on_example1():
    assert validate(load("intro_cluster")) == []


def test_validate_reentrant_lock():
    p = parse_program("mutex a; thread main { lock(a); lock(a); }")
    diags = validate(p)
    assert any("re-entrant lock" in d.message for d in diags)


def test_validate_unprotected_write():
    p = parse_program("global g; thread main { g = 1; }")
    diags = validate(p)
    assert any("no protecting mutex for g" in d.message for d in diags)


def test_validate_diagnostic_format():
    p = parse_program("global g; thread main { g = 1; }", "file.conc")
    d = validate(p)[0]
    assert str(d).startswith("file.conc:") and ": warning: " in str(d)


def test_validate_protection_violation_is_error():
    src = """
    global g; mutex a;
    protect g with a;
    thread main { g = 1; }
    """
    diags = validate(parse_program(src))
    assert any(d.severity == "error" and "without declared protecting" in d.message
               for d in diags)
