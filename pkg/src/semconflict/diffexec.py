"""Differential execution of covering tests under both link configurations.

Each covering test replays twice with identical inputs: once against the
program as the build would load it, once with the shadowed provider forced
in.  The two snapshots are compared section by section: (a) object-typed
entry arguments, (b) receiver fields the entry method reads, (c) the result.
Divergences classify as variable-state (same status, different state or
value), test-outcome (one run returns where the other raises), or both.
A pair is reported as a semantic conflict only when more than one generated
test diverges.
"""
from __future__ import annotations

from dataclasses import dataclass

from .conflicts import ConflictingPair, original_config
from .lang.outcome import DEFAULT_STEP_LIMIT, StateSnapshot
from .resolver import ResolvedProgram, Workspace, resolve
from .testgen import TestCase, TestRun, execute_test

ABSENT = "<absent>"

KIND_STATE = "variable-state"
KIND_OUTCOME = "test-outcome"
KIND_BOTH = "both"


@dataclass(frozen=True)
class RunConfigs:
    """The two programs a test replays under."""

    actual: ResolvedProgram
    original: ResolvedProgram

    @staticmethod
    def for_pair(workspace: Workspace, pair: ConflictingPair) -> "RunConfigs":
        return RunConfigs(resolve(workspace), original_config(workspace, pair))


@dataclass(frozen=True)
class OutcomePair:
    test: TestCase
    actual: TestRun
    original: TestRun

    @property
    def statuses(self) -> tuple[str, str]:
        return (self.actual.outcome.status, self.original.outcome.status)


def run_both(
    test: TestCase,
    workspace: Workspace | None = None,
    pair: ConflictingPair | None = None,
    configs: RunConfigs | None = None,
    step_limit: int = DEFAULT_STEP_LIMIT,
) -> OutcomePair:
    """Replay one test under both configurations (pass prebuilt configs to
    avoid relinking per test)."""
    if configs is None:
        if workspace is None or pair is None:
            raise ValueError("need either configs or workspace+pair")
        configs = RunConfigs.for_pair(workspace, pair)
    return OutcomePair(
        test,
        execute_test(test, configs.actual, step_limit=step_limit),
        execute_test(test, configs.original, step_limit=step_limit),
    )


# ------------------------------------------------------------------ comparison


@dataclass(frozen=True)
class StateDiff:
    section: str  # a: object params | b: receiver reads | c: result
    path: str
    left: object  # actual-config side
    right: object  # original-config side

    def to_jsonable(self) -> dict:
        return {"section": self.section, "path": self.path,
                "left": self.left, "right": self.right}


def compare_states(
    a: StateSnapshot,
    b: StateSnapshot,
    canonicalize_bags: bool = False,
) -> list[StateDiff]:
    """Deep structural diff of two snapshots of the same test.

    Object graphs are compared over their serialized forms, which expand
    fields recursively and mark revisited objects, so cycles terminate.  Bags
    compare as whole values: in declaration order normally, in canonical
    sorted order when canonicalize_bags is set (a bag pair that differs only
    by internal order then stops diffing).
    """
    ja = a.to_jsonable(canonicalize_bags)
    jb = b.to_jsonable(canonicalize_bags)
    diffs: list[StateDiff] = []

    pa = {row["index"]: row["value"] for row in ja["object_params"]}
    pb = {row["index"]: row["value"] for row in jb["object_params"]}
    for index in sorted(set(pa) | set(pb)):
        _diff_value("a", f"param[{index}]", pa.get(index, ABSENT),
                    pb.get(index, ABSENT), diffs)

    ra = {row["field"]: row["value"] for row in ja["receiver_reads"]}
    rb = {row["field"]: row["value"] for row in jb["receiver_reads"]}
    for name in sorted(set(ra) | set(rb)):
        _diff_value("b", f"receiver.{name}", ra.get(name, ABSENT),
                    rb.get(name, ABSENT), diffs)

    _diff_value("c", "result", ja["result"], jb["result"], diffs)
    return diffs


def _diff_value(section: str, path: str, left, right,
                out: list[StateDiff]) -> None:
    if left == right:
        return
    if isinstance(left, dict) and isinstance(right, dict):
        if left.get("t") == "bag" or right.get("t") == "bag":
            out.append(StateDiff(section, path, left, right))
            return
        for key in sorted(set(left) | set(right)):
            _diff_value(section, f"{path}.{key}",
                        left.get(key, ABSENT), right.get(key, ABSENT), out)
        return
    if isinstance(left, list) and isinstance(right, list):
        if len(left) != len(right):
            out.append(StateDiff(section, path, left, right))
            return
        for i, (lv, rv) in enumerate(zip(left, right)):
            _diff_value(section, f"{path}[{i}]", lv, rv, out)
        return
    out.append(StateDiff(section, path, left, right))


# -------------------------------------------------------------- classification


@dataclass(frozen=True)
class TestInconsistency:
    """One test's divergence, if any."""

    test_index: int
    kind: str | None  # None when the two runs agree
    diffs: tuple[StateDiff, ...]

    @property
    def inconsistent(self) -> bool:
        return self.kind is not None


def compare_pair(index: int, pair_run: OutcomePair,
                 canonicalize_bags: bool = False) -> TestInconsistency:
    diffs = tuple(compare_states(pair_run.actual.snapshot,
                                 pair_run.original.snapshot,
                                 canonicalize_bags))
    if not diffs:
        return TestInconsistency(index, None, ())
    status_a, status_b = pair_run.statuses
    if status_a == status_b:
        kind = KIND_STATE
    elif any(d.section in ("a", "b") for d in diffs):
        kind = KIND_BOTH
    else:
        kind = KIND_OUTCOME
    return TestInconsistency(index, kind, diffs)


@dataclass(frozen=True)
class InconsistencyRecord:
    """Divergences of one kind aggregated across a pair's tests; diffs come
    from the first test that exhibited the kind."""

    kind: str
    diffs: tuple[StateDiff, ...]
    supporting_tests: int

    def to_jsonable(self) -> dict:
        return {"kind": self.kind, "supporting_tests": self.supporting_tests,
                "diffs": [d.to_jsonable() for d in self.diffs]}


@dataclass(frozen=True)
class SCVerdict:
    pair: ConflictingPair
    is_sc: bool
    records: tuple[InconsistencyRecord, ...]
    threshold_met: bool
    inconsistent_tests: int
    total_tests: int

    def to_jsonable(self) -> dict:
        return {
            "pair": self.pair.pair_id,
            "is_sc": self.is_sc,
            "threshold_met": self.threshold_met,
            "inconsistent_tests": self.inconsistent_tests,
            "total_tests": self.total_tests,
            "records": [r.to_jsonable() for r in self.records],
        }


_KIND_ORDER = {KIND_STATE: 0, KIND_OUTCOME: 1, KIND_BOTH: 2}


def classify(
    pair: ConflictingPair,
    outcome_pairs: list[OutcomePair],
    canonicalize_bags: bool = False,
) -> SCVerdict:
    """Aggregate per-test divergences into the pair's verdict.  A pair is a
    semantic conflict only when strictly more than one test diverged."""
    per_test = [compare_pair(i, op, canonicalize_bags)
                for i, op in enumerate(outcome_pairs)]
    by_kind: dict[str, list[TestInconsistency]] = {}
    for row in per_test:
        if row.inconsistent:
            by_kind.setdefault(row.kind, []).append(row)
    records = tuple(
        InconsistencyRecord(kind, by_kind[kind][0].diffs, len(by_kind[kind]))
        for kind in sorted(by_kind, key=_KIND_ORDER.__getitem__)
    )
    inconsistent = sum(1 for row in per_test if row.inconsistent)
    threshold_met = inconsistent > 1
    return SCVerdict(pair, threshold_met, records, threshold_met,
                     inconsistent, len(per_test))
