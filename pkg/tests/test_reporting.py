"""Metrics, scoring, instrumentation, and report emission."""
import json
from fractions import Fraction

import pytest

from semconflict.conflicts import ApiRef, ConflictingPair, PathSet
from semconflict.diffexec import (
    KIND_OUTCOME,
    KIND_STATE,
    InconsistencyRecord,
    SCVerdict,
    StateDiff,
)
from semconflict.lang.values import VInt, VStr
from semconflict.mining import (
    InstancePool,
    InvocationContext,
    LiteralBinding,
    PoolEntry,
)
from semconflict.reporting import (
    ConfusionMatrix,
    Instrumentation,
    MetricSet,
    PairReport,
    build_report,
    compute_metrics,
    emit_report,
    measure_instrumentation,
    metrics_table,
    score_against_truth,
)
from semconflict.testgen import EntryStmt, LitStmt, NewStmt, PoolStmt, TestCase


# --------------------------------------------------------------------- metrics


def test_metrics_frozen_first_row():
    m = compute_metrics(ConfusionMatrix(57, 14, 136, 18))
    assert m.rounded() == {"precision": 0.803, "recall": 0.760,
                           "f_measure": 0.781}
    assert m.degenerate == ()


def test_metrics_frozen_second_row():
    m = compute_metrics(ConfusionMatrix(6, 2, 148, 69))
    assert m.rounded() == {"precision": 0.750, "recall": 0.080,
                           "f_measure": 0.145}


def test_metrics_degenerate_flagged():
    m = compute_metrics(ConfusionMatrix(0, 0, 10, 0))
    assert m.precision == 0.0 and m.recall == 0.0 and m.f_measure == 0.0
    assert set(m.degenerate) == {"precision", "recall", "f_measure"}


def test_metrics_match_rational_reference():
    cases = [(tp, fp, tn, fn)
             for tp in (0, 1, 6, 57)
             for fp in (0, 2, 14)
             for tn in (0, 10, 136)
             for fn in (0, 18, 69)]
    for tp, fp, tn, fn in cases:
        m = compute_metrics(ConfusionMatrix(tp, fp, tn, fn))
        p_ref = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
        r_ref = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
        f_ref = (2 * p_ref * r_ref / (p_ref + r_ref)) if p_ref + r_ref \
            else Fraction(0)
        assert abs(m.precision - float(p_ref)) < 1e-9
        assert abs(m.recall - float(r_ref)) < 1e-9
        assert abs(m.f_measure - float(f_ref)) < 1e-9


def test_confusion_matrix_validates():
    with pytest.raises(ValueError):
        ConfusionMatrix(-1, 0, 0, 0)
    assert ConfusionMatrix(1, 2, 3, 4).total == 10


def test_score_against_truth_buckets():
    labels = {"w1": True, "w2": True, "w3": False, "w4": False}
    cm = score_against_truth(
        {"w1": True, "w2": False, "w3": True, "w4": False}, labels)
    assert (cm.tp, cm.fn, cm.fp, cm.tn) == (1, 1, 1, 1)
    assert cm.total == 4

    perfect = score_against_truth({"w1": True, "w3": False}, labels)
    assert perfect.fp == 0 and perfect.fn == 0


def test_score_against_truth_requires_labels():
    with pytest.raises(ValueError, match="w9"):
        score_against_truth({"w9": True}, {"w1": True})


def test_metrics_table_layout():
    cm = ConfusionMatrix(57, 14, 136, 18)
    text = metrics_table([("corpus", cm, compute_metrics(cm))])
    lines = text.splitlines()
    assert len(lines) == 3
    assert "Precision" in lines[0] and "F-measure" in lines[0]
    assert "0.803" in lines[2] and "0.760" in lines[2] and "0.781" in lines[2]


# -------------------------------------------------------------- instrumentation


def _pool_with(entries, total):
    return InstancePool(entries, total, dn=5)


def _ctx(cls):
    return InvocationContext(cls, "ctor()", (), 1, ())


def test_instrumentation_invariants():
    with pytest.raises(ValueError):
        Instrumentation(5, 3, 1.0, (), {})
    with pytest.raises(ValueError):
        Instrumentation(1, 3, 1.0, (1.5,), {})
    with pytest.raises(ValueError):
        Instrumentation(1, 3, 1.0, (), {"C.ctor()": (3, 2)})


def test_measure_instrumentation_counts_seeded_objects():
    pool = _pool_with({"Client": [PoolEntry(_ctx("Client"))],
                       "Index": [PoolEntry(_ctx("Index"))]}, total=4)
    t1 = TestCase(
        (
            PoolStmt("v0", "Client", _ctx("Client")),
            NewStmt("v1", "Index", "ctor(Client)", ("v0",), ("Client",)),
            EntryStmt("v1", "Index", "go", (), ()),
        ),
        rng_seed=0,
    )
    t2 = TestCase(
        (
            LitStmt("v0", "Client", __import__("semconflict.lang.values",
                                               fromlist=["NULL"]).NULL),
            NewStmt("v1", "Index", "ctor(Client)", ("v0",), ("Client",)),
            EntryStmt("v1", "Index", "go", (), ()),
        ),
        rng_seed=0,
    )
    inst = measure_instrumentation(pool, [t1, t2])
    assert (inst.n_c, inst.n_t) == (2, 4)
    assert inst.n_i == 1.0
    assert inst.rp_over_no == (0.5, 0.0)
    assert inst.argu == {"Index.ctor(Client)": (1, 2)}
    payload = inst.to_jsonable()
    assert payload["pool"]["covered_classes"] == 2
    assert payload["ctor_args"]["Index.ctor(Client)"]["pool_seeded"] == 1


# ------------------------------------------------------------------- reporting


def _pair(n=1, kind="version"):
    shadowed = ApiRef("engine", "2.0", "Engine", f"m{n}(Int)->Int")
    loaded = ApiRef("engine", "1.0", "Engine", f"m{n}(Int)->Int")
    return ConflictingPair(shadowed, loaded, False, kind)


def _verdict(pair, is_sc, kinds=(KIND_STATE,), inconsistent=2, total=4):
    records = tuple(
        InconsistencyRecord(kind, (StateDiff("c", "result.value.v", 1, 2),),
                            supporting_tests=inconsistent)
        for kind in kinds
    )
    return SCVerdict(pair, is_sc, records if is_sc or inconsistent else (),
                     is_sc, inconsistent, total)


def _paths(pair):
    entry = ApiRef("app", "1.0", "App", "run(Int)->Int")
    return PathSet(
        original_paths=((entry, pair.shadowed),),
        actual_paths=((entry, pair.loaded),),
        dropped=0,
    )


def _test_case():
    return TestCase(
        (
            NewStmt("v0", "App", "ctor()", (), ()),
            LitStmt("v1", "Int", VInt(7)),
            EntryStmt("v0", "App", "run", ("Int",), ("v1",)),
        ),
        rng_seed=123,
    )


def test_report_four_sections_per_issue():
    pair = _pair()
    report = PairReport(
        verdict=_verdict(pair, True),
        paths=_paths(pair),
        tests=(_test_case(),),
    )
    trace = ({"library": "engine", "version": "1.0", "depth": 1,
              "decision": "loaded"},
             {"library": "engine", "version": "2.0", "depth": 2,
              "decision": "shadowed", "shadowed_by": "1.0"},
             {"library": "other", "version": "1.0", "depth": 1,
              "decision": "loaded"})
    doc = build_report([report], mediation_trace=trace)
    assert len(doc["issues"]) == 1
    issue = doc["issues"][0]
    assert set(issue) == {"root_cause", "pairs", "tests", "diffs"}
    assert issue["root_cause"]["shadowed_provider"] == "engine@2.0"
    assert issue["root_cause"]["loaded_provider"] == "engine@1.0"
    # only mediation rows about the involved providers appear
    assert {row["library"] for row in issue["root_cause"]["mediation"]} == {"engine"}
    assert issue["pairs"][0]["chains"]["original"] == [
        ["app@1.0:App.run(Int)->Int", "engine@2.0:Engine.m1(Int)->Int"]]
    assert issue["tests"][0]["cases"][0]["rng_seed"] == 123
    assert issue["diffs"][0]["records"][0]["kind"] == KIND_STATE
    assert doc["below_threshold"] == []
    assert doc["summary"] == {"pairs_evaluated": 1, "pairs_flagged": 1}


def test_report_groups_pairs_by_root_cause():
    p1, p2 = _pair(1), _pair(2)
    doc = build_report([
        PairReport(_verdict(p1, True), _paths(p1), (_test_case(),)),
        PairReport(_verdict(p2, True), _paths(p2), (_test_case(),)),
    ])
    assert len(doc["issues"]) == 1
    assert [row["pair"] for row in doc["issues"][0]["pairs"]] == [
        p1.pair_id, p2.pair_id]


def test_report_appendix_holds_below_threshold():
    pair = _pair()
    doc = build_report([
        PairReport(_verdict(pair, False, inconsistent=1, total=4)),
    ])
    assert doc["issues"] == []
    assert len(doc["below_threshold"]) == 1
    row = doc["below_threshold"][0]
    assert row["inconsistent_tests"] == 1 and row["total_tests"] == 4
    assert doc["summary"] == {"pairs_evaluated": 1, "pairs_flagged": 0}


def test_emit_report_deterministic_and_round_trips():
    pair = _pair()
    reports = [PairReport(_verdict(pair, True), _paths(pair), (_test_case(),))]
    pool = _pool_with({"App": [PoolEntry(_ctx("App"))]}, total=2)
    inst = measure_instrumentation(pool, [_test_case()])
    manifest = {"workspace": "demo", "seed": 42}
    one = emit_report(reports, (), inst, manifest)
    two = emit_report(reports, (), inst, manifest)
    assert one == two  # byte-identical
    parsed = json.loads(one)
    assert parsed == build_report(reports, (), inst, manifest)
    assert parsed["manifest"] == manifest


def test_report_empty_run_keeps_inventory():
    doc = build_report([])
    assert doc["issues"] == [] and doc["below_threshold"] == []
    assert doc["summary"] == {"pairs_evaluated": 0, "pairs_flagged": 0}
