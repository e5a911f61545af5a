"""Hand-computed execution fixtures for the production interpreter.

Step counts, error kinds and locations, arithmetic edges, dispatch and
visibility rules are frozen here from manual evaluation of docs/modlang.md.
The random cross-check against the naive evaluator lives in
test_lang_oracle.py.
"""
from __future__ import annotations

import json

from semconflict.lang.interp import Session, evaluate_entry
from semconflict.lang.outcome import snapshot_state
from semconflict.lang.parser import parse_unit
from semconflict.lang.program import BoundClass, UnitProgram
from semconflict.lang.values import (
    NULL,
    VBag,
    VBool,
    VInt,
    VRef,
    VStr,
    values_equal,
)


def _program(src: str) -> UnitProgram:
    return UnitProgram(parse_unit(src))


def _loc_of(src: str, needle: str, occurrence: int = 1) -> str:
    """line:col of the nth occurrence of a token text in the source."""
    pos = -1
    for _ in range(occurrence):
        pos = src.index(needle, pos + 1)
    line = src.count("\n", 0, pos) + 1
    col = pos - (src.rfind("\n", 0, pos) + 1) + 1
    return f"{line}:{col}"


COUNTER_SRC = """library fix v1.0 {
  class Counter {
    field n: Int;
    ctor(start: Int) {
      this.n = start;
    }
    method bump(k: Int) -> Int {
      let i = 0;
      while (i < k) bound 10 {
        i = i + 1;
      }
      this.n = this.n + i;
      return this.n;
    }
  }
}
"""


def test_step_count_hand_computed():
    # ctor: 1 stmt.  bump(3): let(1) + while stmt(1) + 4 iteration checks
    # + 3 body assigns + field assign(1) + return(1) = 11.  Session total 12.
    program = _program(COUNTER_SRC)
    session = Session(program)
    ref = session.construct("Counter", [VInt(5)])
    outcome = session.invoke_entry(ref, "bump", [VInt(3)])
    assert outcome.status == "returned"
    assert outcome.return_value == VInt(8)
    assert outcome.step_count == 12


def test_while_bound_exits_silently():
    src = """library fix v1.0 {
  class W {
    ctor() {}
    method spin() -> Int {
      let i = 0;
      while (true) bound 4 {
        i = i + 1;
      }
      return i;
    }
  }
}
"""
    program = _program(src)
    session = Session(program)
    ref = session.construct("W", [])
    outcome = session.invoke_entry(ref, "spin", [])
    assert outcome.status == "returned"
    assert outcome.return_value == VInt(4)
    # ctor 0 stmts; spin: let(1) + while(1) + 4 checks + 4 bodies + return(1)
    assert outcome.step_count == 11


def test_division_by_zero_kind_and_location():
    src = """library err v1.0 {
  class E {
    ctor() {}
    method boom() -> Int {
      return 1 / 0;
    }
  }
}
"""
    program = _program(src)
    session = Session(program)
    ref = session.construct("E", [])
    outcome = session.invoke_entry(ref, "boom", [])
    assert outcome.status == "raised"
    assert outcome.error_kind == "division-by-zero"
    assert outcome.error_location == _loc_of(src, "/", occurrence=1)


def test_require_failed():
    src = """library err v1.0 {
  class E {
    ctor() {}
    method check(x: Int) -> Int {
      require(x > 10);
      return x;
    }
  }
}
"""
    program = _program(src)
    session = Session(program)
    ref = session.construct("E", [])
    outcome = session.invoke_entry(ref, "check", [VInt(3)])
    assert outcome.status == "raised"
    assert outcome.error_kind == "require-failed"
    assert outcome.error_location == _loc_of(src, "require")
    ok = Session(program)
    ref2 = ok.construct("E", [])
    assert ok.invoke_entry(ref2, "check", [VInt(11)]).status == "returned"


def test_null_dereference():
    src = """library err v1.0 {
  class E {
    field peer: E;
    ctor() {}
    method poke() -> Int {
      return this.peer.poke();
    }
  }
}
"""
    program = _program(src)
    session = Session(program)
    ref = session.construct("E", [])
    outcome = session.invoke_entry(ref, "poke", [])
    assert outcome.status == "raised"
    assert outcome.error_kind == "null-dereference"


def test_operator_misuse_is_no_such_method():
    src = """library err v1.0 {
  class E {
    ctor() {}
    method bad() -> Int {
      return 1 + this.name();
    }
    method name() -> Str {
      return "x";
    }
  }
}
"""
    program = _program(src)
    session = Session(program)
    ref = session.construct("E", [])
    outcome = session.invoke_entry(ref, "bad", [])
    assert outcome.status == "raised"
    assert outcome.error_kind == "no-such-method"


def test_int_wraparound_and_truncating_division():
    src = """library num v1.0 {
  class N {
    ctor() {}
    method wrap() -> Int {
      return 9223372036854775807 + 1;
    }
    method q1() -> Int {
      return 0 - 7;
    }
    method div(a: Int, b: Int) -> Int {
      return a / b;
    }
  }
}
"""
    program = _program(src)
    session = Session(program)
    ref = session.construct("N", [])
    assert session.invoke_entry(ref, "wrap", []).return_value == VInt(-(2**63))
    assert session.invoke_entry(ref, "div", [VInt(-7), VInt(2)]).return_value == VInt(-3)
    assert session.invoke_entry(ref, "div", [VInt(7), VInt(-2)]).return_value == VInt(-3)
    assert session.invoke_entry(ref, "div", [VInt(-9), VInt(-2)]).return_value == VInt(4)


def test_string_concat():
    src = """library s v1.0 {
  class S {
    ctor() {}
    method join(a: Str, b: Str) -> Str {
      return a ++ b;
    }
  }
}
"""
    program = _program(src)
    session = Session(program)
    ref = session.construct("S", [])
    out = session.invoke_entry(ref, "join", [VStr("ab"), VStr("cd")])
    assert out.return_value == VStr("abcd")


BAG_SRC = """library b v1.0 {
  class B {
    ctor() {}
    method eq_order() -> Bool {
      return bag(1, 2) == insert(bag(2), 1);
    }
    method fold_order() -> Str {
      return fold(insert(bag("a"), "b"), "", (x, acc) -> acc ++ x);
    }
    method count(items: Bag) -> Int {
      return fold(items, 0, (x, acc) -> acc + 1);
    }
  }
}
"""


def test_bag_equality_is_canonical_but_fold_sees_insertion_order():
    program = _program(BAG_SRC)
    session = Session(program)
    ref = session.construct("B", [])
    assert session.invoke_entry(ref, "eq_order", []).return_value == VBool(True)
    assert session.invoke_entry(ref, "fold_order", []).return_value == VStr("ab")
    bag = VBag((VInt(4), VStr("x"), VInt(4)))
    assert session.invoke_entry(ref, "count", [bag]).return_value == VInt(3)


DISPATCH_SRC = """library d v1.0 {
  class Base {
    ctor() {}
    method describe() -> Str {
      return "base";
    }
    method shared() -> Str {
      return "from-base";
    }
  }
  class Kid extends Base {
    ctor() {}
    method describe() -> Str {
      return "kid";
    }
  }
  class User {
    ctor() {}
    method via(b: Base) -> Str {
      return b.describe();
    }
  }
}
"""


def test_dynamic_dispatch_most_derived_wins():
    program = _program(DISPATCH_SRC)
    session = Session(program)
    user = session.construct("User", [])
    kid = session.construct("Kid", [])
    out = session.invoke_entry(user, "via", [kid])
    assert out.return_value == VStr("kid")


def test_inherited_method_resolves_through_chain():
    program = _program(DISPATCH_SRC)
    session = Session(program)
    kid = session.construct("Kid", [])
    assert session.invoke_entry(kid, "shared", []).return_value == VStr("from-base")


def test_overload_selected_by_runtime_argument():
    src = """library o v1.0 {
  class O {
    field tag: Str;
    ctor(n: Int) {
      this.tag = "int";
    }
    ctor(s: Str) {
      this.tag = "str";
    }
    method which() -> Str {
      return this.tag;
    }
  }
}
"""
    program = _program(src)
    session = Session(program)
    a = session.construct("O", [VInt(1)])
    b = session.construct("O", [VStr("x")])
    assert session.invoke_entry(a, "which", []).return_value == VStr("int")
    assert session.invoke_entry(b, "which", []).return_value == VStr("str")


class _TwoUnitProgram:
    """Minimal multi-unit class index: first unit wins name clashes."""

    def __init__(self, *units):
        self._index = {}
        for unit in units:
            for cls in unit.classes:
                self._index.setdefault(cls.name, BoundClass(cls, unit.library, unit.version))

    def lookup_class(self, name):
        return self._index.get(name)


def test_internal_visibility_is_per_unit():
    lib = parse_unit("""library lib v1.0 {
  class Api {
    ctor() {}
    internal method secret() -> Int {
      return 42;
    }
    method open() -> Int {
      return this.secret();
    }
  }
}
""")
    client = parse_unit("""library app v1.0 {
  class Client {
    ctor() {}
    method sneak(a: Api) -> Int {
      return a.secret();
    }
    method proper(a: Api) -> Int {
      return a.open();
    }
  }
}
""")
    program = _TwoUnitProgram(client, lib)
    session = Session(program)
    client_obj = session.construct("Client", [])
    api_obj = session.construct("Api", [])
    # same-unit call works, cross-unit call does not resolve
    assert session.invoke_entry(client_obj, "proper", [api_obj]).return_value == VInt(42)
    sneak = session.invoke_entry(client_obj, "sneak", [api_obj])
    assert sneak.status == "raised"
    assert sneak.error_kind == "no-such-method"
    # an internal method is not an entry either
    direct = session.invoke_entry(api_obj, "secret", [])
    assert direct.status == "raised"
    assert direct.error_kind == "no-such-method"


def test_fields_default_initialized():
    src = """library f v1.0 {
  class F {
    field i: Int;
    field s: Str;
    field b: Bool;
    field g: Bag;
    field o: F;
    ctor() {}
    method snap() -> Bool {
      return this.i == 0 && this.s == "" && this.b == false
          && this.g == bag() && this.o == null;
    }
  }
}
"""
    program = _program(src)
    session = Session(program)
    ref = session.construct("F", [])
    assert session.invoke_entry(ref, "snap", []).return_value == VBool(True)


def test_step_limit_status():
    src = """library lim v1.0 {
  class L {
    ctor() {}
    method churn() -> Int {
      let i = 0;
      while (true) bound 1000000 {
        i = i + 1;
      }
      return i;
    }
  }
}
"""
    program = _program(src)
    session = Session(program, step_limit=500)
    ref = session.construct("L", [])
    outcome = session.invoke_entry(ref, "churn", [])
    assert outcome.status == "step-limit-exceeded"
    assert outcome.step_count == 500


def test_call_depth_cap_reports_limit_status():
    src = """library deep v1.0 {
  class D {
    ctor() {}
    method down(n: Int) -> Int {
      if (n < 1) {
        return 0;
      }
      return this.down(n - 1) + 1;
    }
  }
}
"""
    program = _program(src)
    session = Session(program)
    ref = session.construct("D", [])
    ok = session.invoke_entry(ref, "down", [VInt(50)])
    assert ok.status == "returned" and ok.return_value == VInt(50)
    deep = Session(program)
    ref2 = deep.construct("D", [])
    outcome = deep.invoke_entry(ref2, "down", [VInt(1000)])
    assert outcome.status == "step-limit-exceeded"


def test_outcome_serialization_deterministic():
    program = _program(COUNTER_SRC)

    def run() -> str:
        session = Session(program)
        ref = session.construct("Counter", [VInt(2)])
        outcome = session.invoke_entry(ref, "bump", [VInt(2)])
        return json.dumps(outcome.to_jsonable(), sort_keys=True)

    assert run() == run()


def test_snapshot_sections():
    src = """library snap v1.0 {
  class Box {
    field v: Int;
    ctor(v: Int) {
      this.v = v;
    }
  }
  class Entry {
    field base: Int;
    field unused: Int;
    ctor(base: Int) {
      this.base = base;
    }
    method fill(box: Box, k: Int) -> Int {
      box.v = this.base + k;
      return box.v;
    }
  }
}
"""
    program = _program(src)
    session = Session(program)
    box = session.construct("Box", [VInt(0)])
    entry = session.construct("Entry", [VInt(10)])
    args = [box, VInt(5)]
    outcome = session.invoke_entry(entry, "fill", args)
    snap = snapshot_state(outcome, ("Box", "Int"), entry, tuple(args))
    data = snap.to_jsonable()
    # section 1: the object-typed param, post-run
    assert [p["index"] for p in data["object_params"]] == [0]
    assert data["object_params"][0]["value"]["fields"]["v"] == {"t": "int", "v": 15}
    # section 2: only fields the method body reads through `this`
    assert [r["field"] for r in data["receiver_reads"]] == ["base"]
    assert data["receiver_reads"][0]["value"] == {"t": "int", "v": 10}
    # section 3: the result
    assert data["result"] == {"kind": "returned", "value": {"t": "int", "v": 15}}


def test_reference_identity_vs_bag_equality():
    program = _program(BAG_SRC)
    session = Session(program)
    a = session.construct("B", [])
    b = session.construct("B", [])
    assert values_equal(a, a, session.heap)
    assert not values_equal(a, b, session.heap)
    assert isinstance(a, VRef) and isinstance(b, VRef)
    assert not values_equal(VInt(1), VStr("1"), session.heap)
    assert values_equal(NULL, NULL, session.heap)
