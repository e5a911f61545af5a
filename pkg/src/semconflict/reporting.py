"""Issue reports and evaluation metrics.

A report gathers, for every flagged pair: the root cause (which provider won
mediation and which was shadowed), the pair's invocation chains under both
configurations, the replayable covering tests, and the observed divergences.
Verdicts that did not meet the conflict threshold go to an appendix so a
reviewer can audit near-misses.  Metric computation keeps full precision
internally and rounds to three decimals only for presentation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from .conflicts import DiffSite, PathSet
from .diffexec import SCVerdict
from .mining import InstancePool
from .testgen import LitStmt, NewStmt, PoolStmt, TestCase

# ---------------------------------------------------------------------- metrics


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_jsonable(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


@dataclass(frozen=True)
class MetricSet:
    precision: float
    recall: float
    f_measure: float
    degenerate: tuple[str, ...] = ()  # metrics whose denominator was zero

    def rounded(self) -> dict:
        return {
            "precision": round(self.precision, 3),
            "recall": round(self.recall, 3),
            "f_measure": round(self.f_measure, 3),
        }

    def to_jsonable(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f_measure": self.f_measure,
            "rounded": self.rounded(),
            "degenerate": list(self.degenerate),
        }


def compute_metrics(cm: ConfusionMatrix) -> MetricSet:
    """Precision, recall, and their equal-weight harmonic mean.  A zero
    denominator defines the metric as 0 and flags it, so sweeps stay total."""
    degenerate: list[str] = []
    if cm.tp + cm.fp > 0:
        precision = cm.tp / (cm.tp + cm.fp)
    else:
        precision = 0.0
        degenerate.append("precision")
    if cm.tp + cm.fn > 0:
        recall = cm.tp / (cm.tp + cm.fn)
    else:
        recall = 0.0
        degenerate.append("recall")
    if precision + recall > 0:
        f_measure = 2 * precision * recall / (precision + recall)
    else:
        f_measure = 0.0
        degenerate.append("f_measure")
    return MetricSet(precision, recall, f_measure, tuple(degenerate))


def score_against_truth(predictions: dict[str, bool],
                        labels: dict[str, bool]) -> ConfusionMatrix:
    """Bucket per-subject predictions against ground truth.  Every predicted
    subject must be labeled."""
    missing = sorted(set(predictions) - set(labels))
    if missing:
        raise ValueError(f"no ground-truth label for: {', '.join(missing)}")
    tp = fp = tn = fn = 0
    for key, predicted in predictions.items():
        actual = labels[key]
        if predicted and actual:
            tp += 1
        elif predicted and not actual:
            fp += 1
        elif not predicted and actual:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, fp, tn, fn)


def metrics_table(rows: list[tuple[str, ConfusionMatrix, MetricSet]]) -> str:
    """Fixed-width text summary: one row per configuration."""
    header = f"{'subject':<24}{'TP':>5}{'FP':>5}{'TN':>5}{'FN':>5}" \
             f"{'Precision':>11}{'Recall':>9}{'F-measure':>11}"
    lines = [header, "-" * len(header)]
    for name, cm, metrics in rows:
        r = metrics.rounded()
        lines.append(
            f"{name:<24}{cm.tp:>5}{cm.fp:>5}{cm.tn:>5}{cm.fn:>5}"
            f"{r['precision']:>11.3f}{r['recall']:>9.3f}{r['f_measure']:>11.3f}"
        )
    return "\n".join(lines)


# --------------------------------------------------------------- instrumentation


@dataclass(frozen=True)
class Instrumentation:
    """Pool and seeding indicators observed over one run."""

    n_c: int  # classes with at least one mined context
    n_t: int  # instantiable classes total
    n_i: float  # mean contexts per covered class
    rp_over_no: tuple[float, ...]  # pool-seeded share of object setups, per test
    argu: dict[str, tuple[int, int]]  # ctor -> (pool-seeded args, object args)

    def __post_init__(self):
        if self.n_c > self.n_t:
            raise ValueError("covered classes cannot exceed total classes")
        for ratio in self.rp_over_no:
            if not 0.0 <= ratio <= 1.0:
                raise ValueError("per-test seeded ratio out of range")
        for seeded, total in self.argu.values():
            if seeded > total:
                raise ValueError("seeded args cannot exceed object args")

    def to_jsonable(self) -> dict:
        return {
            "pool": {"covered_classes": self.n_c, "total_classes": self.n_t,
                     "mean_contexts_per_covered_class": self.n_i},
            "seeded_object_ratio_per_test": list(self.rp_over_no),
            "ctor_args": {
                key: {"pool_seeded": seeded, "object_typed": total}
                for key, (seeded, total) in sorted(self.argu.items())
            },
        }


def measure_instrumentation(pool: InstancePool,
                            tests: list[TestCase]) -> Instrumentation:
    coverage = pool.coverage()
    ratios: list[float] = []
    argu: dict[str, list[int]] = {}
    for test in tests:
        pool_vars = {s.var for s in test.statements if isinstance(s, PoolStmt)}
        objects = 0
        for stmt in test.statements:
            if isinstance(stmt, (PoolStmt, NewStmt)):
                objects += 1
            elif isinstance(stmt, LitStmt) and stmt.type_tag not in (
                    "Int", "Str", "Bool", "Bag"):
                objects += 1  # null stand-in for an object
        ratios.append(len(pool_vars) / objects if objects else 0.0)
        for stmt in test.statements:
            if not isinstance(stmt, NewStmt):
                continue
            key = f"{stmt.class_name}.{stmt.ctor_sig}"
            row = argu.setdefault(key, [0, 0])
            for i, var in enumerate(stmt.arg_vars):
                if i < len(stmt.arg_tags) and stmt.arg_tags[i] in (
                        "Int", "Str", "Bool", "Bag"):
                    continue
                row[1] += 1
                if var in pool_vars:
                    row[0] += 1
    return Instrumentation(
        n_c=coverage["covered_classes"],
        n_t=coverage["total_classes"],
        n_i=coverage["mean_contexts_per_covered_class"],
        rp_over_no=tuple(ratios),
        argu={k: (s, t) for k, (s, t) in argu.items()},
    )


# -------------------------------------------------------------------- reporting


@dataclass(frozen=True)
class PairReport:
    """Everything the report needs about one evaluated pair."""

    verdict: SCVerdict
    paths: PathSet | None = None
    tests: tuple[TestCase, ...] = ()
    diff_sites: tuple[DiffSite, ...] = ()


def _chains(paths: PathSet | None) -> dict:
    if paths is None:
        return {"original": [], "actual": []}
    return {
        "original": [[str(ref) for ref in chain] for chain in paths.original_paths],
        "actual": [[str(ref) for ref in chain] for chain in paths.actual_paths],
    }


def _root_cause_key(report: PairReport) -> tuple:
    pair = report.verdict.pair
    return (pair.kind, pair.shadowed.library, pair.shadowed.version,
            pair.loaded.library, pair.loaded.version)


def build_report(
    pair_reports: list[PairReport],
    mediation_trace: tuple[dict, ...] = (),
    instrumentation: Instrumentation | None = None,
    manifest: dict | None = None,
) -> dict:
    """Assemble the full report document.  One issue per root cause; a root
    cause groups every flagged pair of the same shadowed/loaded providers."""
    flagged = [r for r in pair_reports if r.verdict.is_sc]
    others = [r for r in pair_reports if not r.verdict.is_sc]

    issues = []
    by_cause: dict[tuple, list[PairReport]] = {}
    for report in flagged:
        by_cause.setdefault(_root_cause_key(report), []).append(report)
    for key in sorted(by_cause):
        kind, shadow_lib, shadow_ver, load_lib, load_ver = key
        group = sorted(by_cause[key], key=lambda r: r.verdict.pair.pair_id)
        relevant = [row for row in mediation_trace
                    if row["library"] in (shadow_lib, load_lib)]
        issues.append({
            "root_cause": {
                "kind": kind,
                "shadowed_provider": f"{shadow_lib}@{shadow_ver}",
                "loaded_provider": f"{load_lib}@{load_ver}",
                "mediation": relevant,
            },
            "pairs": [
                {
                    "pair": r.verdict.pair.pair_id,
                    "shadowed_api": str(r.verdict.pair.shadowed),
                    "loaded_api": str(r.verdict.pair.loaded),
                    "superclass_fallback": r.verdict.pair.fallback_used,
                    "chains": _chains(r.paths),
                    "body_diff_sites": [d.to_jsonable() for d in r.diff_sites],
                }
                for r in group
            ],
            "tests": [
                {"pair": r.verdict.pair.pair_id,
                 "cases": [t.to_jsonable() for t in r.tests]}
                for r in group
            ],
            "diffs": [
                {"pair": r.verdict.pair.pair_id,
                 "records": [rec.to_jsonable() for rec in r.verdict.records]}
                for r in group
            ],
        })

    appendix = [
        {
            "pair": r.verdict.pair.pair_id,
            "inconsistent_tests": r.verdict.inconsistent_tests,
            "total_tests": r.verdict.total_tests,
            "records": [rec.to_jsonable() for rec in r.verdict.records],
        }
        for r in sorted(others, key=lambda r: r.verdict.pair.pair_id)
    ]

    document = {
        "issues": issues,
        "below_threshold": appendix,
        "summary": {
            "pairs_evaluated": len(pair_reports),
            "pairs_flagged": len(flagged),
        },
    }
    if instrumentation is not None:
        document["instrumentation"] = instrumentation.to_jsonable()
    if manifest is not None:
        document["manifest"] = manifest
    return document


def emit_report(
    pair_reports: list[PairReport],
    mediation_trace: tuple[dict, ...] = (),
    instrumentation: Instrumentation | None = None,
    manifest: dict | None = None,
) -> str:
    """Serialize the report deterministically (sorted keys, no timestamps):
    identical inputs give byte-identical documents."""
    document = build_report(pair_reports, mediation_trace, instrumentation,
                            manifest)
    return json.dumps(document, sort_keys=True, indent=2) + "\n"
