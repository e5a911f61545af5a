"""Conflicting-pair detection, dependency paths, and the structural diff."""
from __future__ import annotations

import pytest

from semconflict.conflicts import (
    ApiRef,
    CallGraph,
    find_conflicting_pairs,
    find_paths,
    is_isomerous,
)
from semconflict.resolver import force_load, load_workspace, resolve

from ws_builder import UnitSpec, unit_src, write_workspace


def _engine(version: str, body: str) -> UnitSpec:
    return UnitSpec("engine", version, unit_src("engine", version, body), [])


def _mid(deps: list[tuple[str, str]]) -> UnitSpec:
    return UnitSpec("mid", "1.0",
                    unit_src("mid", "1.0", "  class Mid { ctor() {} }"), deps)


APP_RUN = """
  class App {
    ctor() {}
    method run(x: Int) -> Int {
      let e = new Engine();
      return e.compute(x);
    }
  }
"""

ENGINE_V1 = """
  class Engine {
    ctor() {}
    method compute(x: Int) -> Int {
      return x + 1;
    }
  }
"""


def _scan(tmp_path, engine_v2_body: str, project_body: str = APP_RUN,
          extra_libs: list[UnitSpec] | None = None,
          project_deps: list[tuple[str, str]] | None = None):
    ws = write_workspace(
        tmp_path,
        UnitSpec("app", "1.0", unit_src("app", "1.0", project_body),
                 project_deps or [("engine", "1.0"), ("mid", "1.0")]),
        [
            _engine("1.0", ENGINE_V1),
            _engine("2.0", engine_v2_body),
            _mid([("engine", "2.0")]),
            *(extra_libs or []),
        ],
    )
    workspace = load_workspace(ws)
    actual = resolve(workspace)
    pairs = find_conflicting_pairs(workspace, actual)
    return workspace, actual, pairs


def _graphs(workspace, actual, pair):
    overrides = ({pair.shadowed.library: pair.shadowed.version}
                 if pair.kind == "version" else {})
    class_overrides = (
        {pair.shadowed.class_name: (pair.shadowed.library, pair.shadowed.version)}
        if pair.kind == "class" else None)
    original = force_load(workspace, overrides, class_overrides)
    return CallGraph(original), CallGraph(actual)


def test_shadowed_version_produces_pair(tmp_path):
    workspace, actual, pairs = _scan(tmp_path, ENGINE_V1.replace("x + 1", "x * 2"))
    assert len(pairs) == 1
    pair = pairs[0]
    assert pair.shadowed == ApiRef("engine", "2.0", "Engine", "compute(Int)->Int")
    assert pair.loaded == ApiRef("engine", "1.0", "Engine", "compute(Int)->Int")
    assert pair.kind == "version"
    assert not pair.fallback_used


def test_differing_bodies_are_isomerous(tmp_path):
    workspace, actual, pairs = _scan(tmp_path, ENGINE_V1.replace("x + 1", "x * 2"))
    og, ag = _graphs(workspace, actual, pairs[0])
    result = is_isomerous(pairs[0], og, ag)
    assert result.isomerous
    site = result.diff_sites[0]
    assert (site.class_name, site.depth, site.reason) == ("Engine", 1, "body-differs")


def test_identical_bodies_are_not_isomerous(tmp_path):
    workspace, actual, pairs = _scan(tmp_path, ENGINE_V1)
    assert len(pairs) == 1  # still a conflicting pair, just not isomerous
    og, ag = _graphs(workspace, actual, pairs[0])
    result = is_isomerous(pairs[0], og, ag)
    assert not result.isomerous
    assert result.diff_sites == ()


def test_unreachable_and_unreplaceable_methods_skipped(tmp_path):
    # idle exists in both versions but nothing calls it; bonus is new in 2.0
    # (no loaded counterpart) and only reachable through 2.0's compute.
    v2 = """
  class Engine {
    ctor() {}
    method compute(x: Int) -> Int {
      return this.bonus(x) * 2;
    }
    method bonus(x: Int) -> Int {
      return x + 10;
    }
    method idle(x: Int) -> Int {
      return x;
    }
  }
"""
    v1 = ENGINE_V1.replace("return x + 1;", "return x + 1;\n    }\n"
                           "    method idle(x: Int) -> Int {\n      return x;")
    ws = write_workspace(
        tmp_path,
        UnitSpec("app", "1.0", unit_src("app", "1.0", APP_RUN),
                 [("engine", "1.0"), ("mid", "1.0")]),
        [_engine("1.0", v1), _engine("2.0", v2), _mid([("engine", "2.0")])],
    )
    workspace = load_workspace(ws)
    actual = resolve(workspace)
    pairs = find_conflicting_pairs(workspace, actual)
    assert [p.shadowed.signature for p in pairs] == ["compute(Int)->Int"]
    og, ag = _graphs(workspace, actual, pairs[0])
    result = is_isomerous(pairs[0], og, ag)
    reasons = {(s.class_name, s.signature): s.reason for s in result.diff_sites}
    assert reasons[("Engine", "bonus(Int)->Int")] == "only-in-baseline"


def test_superclass_fallback(tmp_path):
    v1 = """
  class Base {
    ctor() {}
    method compute(x: Int) -> Int {
      return x;
    }
  }
  class Engine extends Base {
    ctor() {}
  }
"""
    ws = write_workspace(
        tmp_path,
        UnitSpec("app", "1.0", unit_src("app", "1.0", APP_RUN),
                 [("engine", "1.0"), ("mid", "1.0")]),
        [_engine("1.0", v1), _engine("2.0", ENGINE_V1.replace("x + 1", "x + 5")),
         _mid([("engine", "2.0")])],
    )
    workspace = load_workspace(ws)
    actual = resolve(workspace)
    pairs = find_conflicting_pairs(workspace, actual)
    assert len(pairs) == 1
    pair = pairs[0]
    assert pair.fallback_used
    assert pair.loaded == ApiRef("engine", "1.0", "Base", "compute(Int)->Int")
    og, ag = _graphs(workspace, actual, pair)
    result = is_isomerous(pair, og, ag)
    assert result.isomerous
    assert result.diff_sites[0].depth == 1


def test_class_level_conflict(tmp_path):
    app = """
  class App {
    ctor() {}
    method use() -> Str {
      let u = new Util();
      return u.tag();
    }
  }
"""
    def util_lib(name: str, marker: str) -> UnitSpec:
        body = f"""
  class Util {{
    ctor() {{}}
    method tag() -> Str {{
      return "{marker}";
    }}
  }}
"""
        return UnitSpec(name, "1.0", unit_src(name, "1.0", body), [])

    ws = write_workspace(
        tmp_path,
        UnitSpec("app", "1.0", unit_src("app", "1.0", app),
                 [("libx", "1.0"), ("liby", "1.0")]),
        [util_lib("libx", "x"), util_lib("liby", "y")],
    )
    workspace = load_workspace(ws)
    actual = resolve(workspace)
    assert actual.classpath.class_index["Util"] == ("libx", "1.0")
    pairs = find_conflicting_pairs(workspace, actual)
    assert len(pairs) == 1
    pair = pairs[0]
    assert pair.kind == "class"
    assert pair.shadowed == ApiRef("liby", "1.0", "Util", "tag()->Str")
    assert pair.loaded == ApiRef("libx", "1.0", "Util", "tag()->Str")
    og, ag = _graphs(workspace, actual, pair)
    assert is_isomerous(pair, og, ag).isomerous


# ---------------------------------------------------------------- depth rules


def _chain_body(consts: list[int]) -> str:
    """Engine whose compute heads a helper chain h1..h10; helper h_i sits at
    call depth i+1 (compute itself is depth 1)."""
    assert len(consts) == 11
    lines = ["  class Engine {", "    ctor() {}"]
    lines.append("    method compute(x: Int) -> Int {"
                 f" return this.h1(x) + {consts[0]}; }}")
    for i in range(1, 10):
        lines.append(f"    method h{i}(x: Int) -> Int {{"
                     f" return this.h{i + 1}(x) + {consts[i]}; }}")
    lines.append(f"    method h10(x: Int) -> Int {{ return x + {consts[10]}; }}")
    lines.append("  }")
    return "\n".join(lines)


def _chain_scan(tmp_path, diff_depth: int):
    base = [0] * 11
    changed = list(base)
    changed[diff_depth - 1] = 7
    ws = write_workspace(
        tmp_path,
        UnitSpec("app", "1.0", unit_src("app", "1.0", APP_RUN),
                 [("engine", "1.0"), ("mid", "1.0")]),
        [_engine("1.0", _chain_body(base)), _engine("2.0", _chain_body(changed)),
         _mid([("engine", "2.0")])],
    )
    workspace = load_workspace(ws)
    actual = resolve(workspace)
    pairs = find_conflicting_pairs(workspace, actual)
    pair = next(p for p in pairs if p.shadowed.signature == "compute(Int)->Int")
    og, ag = _graphs(workspace, actual, pair)
    return pair, og, ag


def test_difference_below_cutoff_is_invisible(tmp_path):
    pair, og, ag = _chain_scan(tmp_path, diff_depth=11)
    assert not is_isomerous(pair, og, ag, depth_limit=10).isomerous
    assert not is_isomerous(pair, og, ag, depth_limit=11).isomerous
    deep = is_isomerous(pair, og, ag, depth_limit=12)
    assert deep.isomerous
    assert deep.diff_sites[0].depth == 11


def test_difference_at_depth_nine_is_visible(tmp_path):
    pair, og, ag = _chain_scan(tmp_path, diff_depth=9)
    result = is_isomerous(pair, og, ag, depth_limit=10)
    assert result.isomerous
    assert [(s.class_name, s.signature, s.depth, s.reason) for s in result.diff_sites] \
        == [("Engine", "h8(Int)->Int", 9, "body-differs")]


@pytest.mark.parametrize("diff_depth", [3, 9, 11])
def test_isomerous_monotone_in_depth_limit(tmp_path, diff_depth):
    pair, og, ag = _chain_scan(tmp_path, diff_depth)
    verdicts = [is_isomerous(pair, og, ag, depth_limit=d).isomerous
                for d in range(1, 14)]
    assert verdicts == sorted(verdicts)  # once true, stays true
    assert verdicts[-1]  # a large enough limit always sees the change
    # the change becomes visible exactly when the limit exceeds its depth
    assert verdicts[diff_depth - 1] is False and verdicts[diff_depth] is True


# ----------------------------------------------------------------------- paths


def test_paths_align_original_and_actual(tmp_path):
    app = """
  class App {
    ctor() {}
    method run(x: Int) -> Int {
      let e = new Engine();
      return e.compute(x);
    }
    method via(x: Int) -> Int {
      let w = new Wrap();
      return w.call(x);
    }
  }
"""
    wrap = """
  class Wrap {
    ctor() {}
    method call(x: Int) -> Int {
      let e = new Engine();
      return e.compute(x);
    }
  }
"""
    ws = write_workspace(
        tmp_path,
        UnitSpec("app", "1.0", unit_src("app", "1.0", app),
                 [("engine", "1.0"), ("libw", "1.0")]),
        [
            _engine("1.0", ENGINE_V1),
            _engine("2.0", ENGINE_V1.replace("x + 1", "x * 2")),
            UnitSpec("libw", "1.0", unit_src("libw", "1.0", wrap),
                     [("engine", "2.0")]),
        ],
    )
    workspace = load_workspace(ws)
    actual = resolve(workspace)
    pairs = find_conflicting_pairs(workspace, actual)
    assert len(pairs) == 1
    pair = pairs[0]
    og, ag = _graphs(workspace, actual, pair)
    paths = find_paths(pair, og, ag)
    assert paths.dropped == 0
    assert len(paths.original_paths) == len(paths.actual_paths) == 2
    # shortest first
    assert [len(p) for p in paths.original_paths] == [2, 3]
    for orig, act in zip(paths.original_paths, paths.actual_paths):
        assert orig[-1] == pair.shadowed
        assert act[-1] == pair.loaded
        assert [r.identity for r in orig[:-1]] == [r.identity for r in act[:-1]]
    longer = paths.original_paths[1]
    assert [r.class_name for r in longer] == ["App", "Wrap", "Engine"]


def test_call_graph_dispatch_edges(tmp_path):
    app = """
  class Base {
    ctor() {}
    method m() -> Int {
      return 1;
    }
  }
  class Child extends Base {
    ctor() {}
    method m() -> Int {
      return 2;
    }
  }
  class App {
    ctor() {}
    method go(b: Base) -> Int {
      return b.m();
    }
  }
"""
    ws = write_workspace(
        tmp_path,
        UnitSpec("app", "1.0", unit_src("app", "1.0", app), []),
        [],
    )
    program = resolve(load_workspace(ws))
    graph = CallGraph(program)
    go = ApiRef("app", "1.0", "App", "go(Base)->Int")
    assert go in graph.entries
    callees = {edge.callee.class_name for edge in graph.callees(go)}
    assert callees == {"Base", "Child"}
